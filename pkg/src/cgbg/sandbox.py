"""Isolated execution of extracted programs against question test cases.

Each program gets its own child process (fresh interpreter, memory/CPU
rlimits, network calls blocked, scratch cwd). The child is reused across
that program's tests but replaced after any timeout, so a wedged
interpreter cannot poison later tests. The harness and child exchange
length-prefixed JSON frames over the child's standard streams.
"""

from __future__ import annotations

import math
import os
import selectors
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from .bank import Comparison, resolve_comparison
from .values import Value, multisets_equal, values_close, values_equal

if TYPE_CHECKING:
    from .bank import Question
    from .extraction import ExtractedProgram

RUNNER_PATH = Path(__file__).parent / "runner" / "py_runner.py"
INTERPRETER_ENV_VAR = "CGBG_SANDBOX_INTERPRETER"

FRAME_HEADER_LEN = 11
KILL_GRACE_S = 0.5


class SandboxError(RuntimeError):
    """Harness-internal failure (cannot spawn or talk to the child)."""


@dataclass
class ExecutionLimits:
    per_test_timeout_ms: int = 2000
    memory_cap_mb: int = 256
    total_program_timeout_ms: int = 20000

    def __post_init__(self):
        for name in ("per_test_timeout_ms", "memory_cap_mb", "total_program_timeout_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.total_program_timeout_ms < self.per_test_timeout_ms:
            raise ValueError("total_program_timeout_ms must be >= per_test_timeout_ms")


@dataclass
class RawTestOutcome:
    """Execution-only outcome, before any comparison against expected."""

    status: str  # ok | runtime_error | timeout | load_error | unserializable
    value: Value = None
    error_text: str | None = None
    duration_ms: int = 0


@dataclass
class TestRunResult:
    test_index: int
    status: str  # pass | wrong_output | runtime_error | timeout | load_error
    actual: Value = None
    has_actual: bool = False
    error_text: str | None = None
    duration_ms: int = 0


@dataclass
class ProgramVerdict:
    all_passed: bool
    results: list[TestRunResult] = field(default_factory=list)


def compare_values(actual: Value, expected: Value, comparison: Comparison | None) -> bool:
    """Compare per the test's declared mode (None resolves like the oracle)."""
    comparison = resolve_comparison(comparison, expected)
    if comparison.mode == "exact":
        return values_equal(actual, expected)
    if comparison.mode == "float_tolerance":
        return values_close(actual, expected, comparison.rel)
    if comparison.mode == "unordered_sequence":
        return multisets_equal(actual, expected)
    raise ValueError(f"unknown comparison mode {comparison.mode!r}")


def _interpreter_command(interpreter: Sequence[str] | None) -> list[str]:
    if interpreter:
        return list(interpreter)
    env_value = os.environ.get(INTERPRETER_ENV_VAR)
    if env_value:
        return shlex.split(env_value)
    return [sys.executable, "-I"]


class _DeadlineExpired(Exception):
    pass


class _Child:
    """One sandboxed child process plus its framing state."""

    def __init__(self, interpreter: Sequence[str]):
        self.scratch_dir = tempfile.mkdtemp(prefix="cgbg-sandbox-")
        os.chmod(self.scratch_dir, 0o500)  # no relative-path writes
        env = {
            "PATH": os.environ.get("PATH", ""),
            "LANG": os.environ.get("LANG", "C.UTF-8"),
            "HOME": self.scratch_dir,
            "PYTHONDONTWRITEBYTECODE": "1",
        }
        try:
            self.proc = subprocess.Popen(
                [*interpreter, str(RUNNER_PATH)],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                cwd=self.scratch_dir,
                env=env,
            )
        except OSError as exc:
            self._cleanup_scratch()
            raise SandboxError(f"cannot spawn sandbox child: {exc}") from exc
        os.set_blocking(self.proc.stdout.fileno(), False)
        self._buf = b""

    def send(self, obj: dict) -> bool:
        import json

        payload = json.dumps(obj, ensure_ascii=True).encode("utf-8")
        try:
            self.proc.stdin.write(b"%010d\n" % len(payload) + payload)
            self.proc.stdin.flush()
            return True
        except (BrokenPipeError, OSError, ValueError):
            return False

    def read_frame(self, deadline: float) -> dict | None:
        """One frame, or None on child EOF. Raises _DeadlineExpired."""
        import json

        fd = self.proc.stdout.fileno()
        sel = selectors.DefaultSelector()
        sel.register(fd, selectors.EVENT_READ)
        try:
            while True:
                frame = self._parse_buf()
                if frame is not _INCOMPLETE:
                    return json.loads(frame.decode("utf-8")) if frame is not None else None
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise _DeadlineExpired
                sel.select(remaining)
                try:
                    chunk = os.read(fd, 65536)
                except BlockingIOError:
                    continue
                if chunk == b"":
                    if self._parse_buf() is _INCOMPLETE:
                        return None
                    continue
                self._buf += chunk
        finally:
            sel.close()

    def _parse_buf(self):
        if len(self._buf) < FRAME_HEADER_LEN:
            return _INCOMPLETE
        try:
            length = int(self._buf[: FRAME_HEADER_LEN - 1])
        except ValueError:
            return None  # corrupt stream; treat as dead
        end = FRAME_HEADER_LEN + length
        if len(self._buf) < end:
            return _INCOMPLETE
        frame = self._buf[FRAME_HEADER_LEN:end]
        self._buf = self._buf[end:]
        return frame

    def kill(self):
        if self.proc.poll() is None:
            self.proc.kill()
        try:
            self.proc.wait(timeout=KILL_GRACE_S)
        except subprocess.TimeoutExpired:
            pass
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        self._cleanup_scratch()

    def close(self):
        self.send({"cmd": "exit"})
        try:
            self.proc.wait(timeout=0.2)
        except subprocess.TimeoutExpired:
            pass
        self.kill()

    def _cleanup_scratch(self):
        try:
            os.chmod(self.scratch_dir, 0o700)
            shutil.rmtree(self.scratch_dir, ignore_errors=True)
        except OSError:
            pass


_INCOMPLETE = object()


def _load_program(
    child: _Child, source: str, entry_point: str, limits: ExecutionLimits, deadline: float
) -> str | None:
    """Load source into the child. Returns an error string or None on success."""
    ok = child.send(
        {
            "source": source,
            "entry_point": entry_point,
            "memory_mb": limits.memory_cap_mb,
            "cpu_seconds": math.ceil(limits.total_program_timeout_ms / 1000) + 2,
        }
    )
    if not ok:
        return "child process died before load"
    try:
        reply = child.read_frame(deadline)
    except _DeadlineExpired:
        child.kill()
        return f"load timed out after {limits.per_test_timeout_ms} ms"
    if reply is None:
        return "child process exited during load"
    if not reply.get("ok"):
        return reply.get("error", "load failed")
    return None


def execute_entry_point(
    source: str,
    entry_point: str,
    args_list: Sequence[Sequence[Value]],
    limits: ExecutionLimits,
    interpreter: Sequence[str] | None = None,
) -> list[RawTestOutcome]:
    """Run ``entry_point(*args)`` for each args vector, in one sandbox child.

    A load failure short-circuits to a single load_error outcome. A per-test
    timeout kills the child; remaining tests continue in a fresh one. Once
    the total budget is spent, remaining tests are marked timeout unrun.
    """
    command = _interpreter_command(interpreter)
    overall_deadline = time.monotonic() + limits.total_program_timeout_ms / 1000
    per_test_s = limits.per_test_timeout_ms / 1000

    child = _Child(command)
    try:
        load_deadline = min(time.monotonic() + per_test_s, overall_deadline)
        load_error = _load_program(child, source, entry_point, limits, load_deadline)
        if load_error is not None:
            return [RawTestOutcome(status="load_error", error_text=load_error)]

        outcomes: list[RawTestOutcome] = []
        needs_respawn = False
        for args in args_list:
            now = time.monotonic()
            if now >= overall_deadline:
                outcomes.append(
                    RawTestOutcome(status="timeout", error_text="total program budget exhausted")
                )
                continue
            if needs_respawn:
                child.kill()
                child = _Child(command)
                load_deadline = min(time.monotonic() + per_test_s, overall_deadline)
                load_error = _load_program(child, source, entry_point, limits, load_deadline)
                if load_error is not None:
                    outcomes.append(
                        RawTestOutcome(
                            status="load_error", error_text=f"reload failed: {load_error}"
                        )
                    )
                    continue
                needs_respawn = False

            start = time.monotonic()
            deadline = min(start + per_test_s, overall_deadline)
            if not child.send({"args": list(args)}):
                outcomes.append(
                    RawTestOutcome(
                        status="runtime_error",
                        error_text="child process exited unexpectedly",
                        duration_ms=0,
                    )
                )
                needs_respawn = True
                continue
            try:
                reply = child.read_frame(deadline)
            except _DeadlineExpired:
                child.kill()
                elapsed = int((time.monotonic() - start) * 1000)
                outcomes.append(
                    RawTestOutcome(
                        status="timeout",
                        error_text=f"no result within {limits.per_test_timeout_ms} ms",
                        duration_ms=elapsed,
                    )
                )
                needs_respawn = True
                continue
            elapsed = int((time.monotonic() - start) * 1000)
            if reply is None:
                outcomes.append(
                    RawTestOutcome(
                        status="runtime_error",
                        error_text="child process exited unexpectedly (possibly out of memory)",
                        duration_ms=elapsed,
                    )
                )
                needs_respawn = True
                continue
            status = reply.get("status")
            if status == "ok":
                outcomes.append(
                    RawTestOutcome(status="ok", value=reply.get("value"), duration_ms=elapsed)
                )
            elif status == "unserializable":
                outcomes.append(
                    RawTestOutcome(
                        status="unserializable",
                        error_text=reply.get("error", "unserializable return"),
                        duration_ms=elapsed,
                    )
                )
            else:
                outcomes.append(
                    RawTestOutcome(
                        status="runtime_error",
                        error_text=reply.get("error", "execution failed"),
                        duration_ms=elapsed,
                    )
                )
        return outcomes
    finally:
        child.close()


def run_tests(
    program: "ExtractedProgram",
    question: "Question",
    limits: ExecutionLimits,
    interpreter: Sequence[str] | None = None,
) -> ProgramVerdict:
    """Execute a program against a question's oracle-completed tests."""
    missing = [i for i, t in enumerate(question.tests) if not t.has_expected]
    if missing:
        raise ValueError(
            f"question {question.id!r}: tests {missing} have no expected value; "
            "run compute_expected_outputs first"
        )
    outcomes = execute_entry_point(
        program.source,
        question.entry_point,
        [t.args for t in question.tests],
        limits,
        interpreter=interpreter,
    )
    if len(outcomes) == 1 and outcomes[0].status == "load_error" and len(question.tests) != 1:
        first = outcomes[0]
        return ProgramVerdict(
            all_passed=False,
            results=[
                TestRunResult(
                    test_index=0,
                    status="load_error",
                    error_text=first.error_text,
                    duration_ms=first.duration_ms,
                )
            ],
        )

    results: list[TestRunResult] = []
    for i, (test, outcome) in enumerate(zip(question.tests, outcomes)):
        if outcome.status == "ok":
            passed = compare_values(outcome.value, test.expected, test.comparison)
            results.append(
                TestRunResult(
                    test_index=i,
                    status="pass" if passed else "wrong_output",
                    actual=outcome.value,
                    has_actual=True,
                    duration_ms=outcome.duration_ms,
                )
            )
        elif outcome.status == "unserializable":
            results.append(
                TestRunResult(
                    test_index=i,
                    status="wrong_output",
                    error_text="unserializable return",
                    duration_ms=outcome.duration_ms,
                )
            )
        else:
            results.append(
                TestRunResult(
                    test_index=i,
                    status=outcome.status,
                    error_text=outcome.error_text,
                    duration_ms=outcome.duration_ms,
                )
            )
    all_passed = bool(results) and all(r.status == "pass" for r in results)
    return ProgramVerdict(all_passed=all_passed, results=results)
