"""Child-side test runner. Spawned by the harness, one process per program.

Protocol (over the original stdin/stdout, length-prefixed JSON frames):
  1. receive {"source", "entry_point", "memory_mb", "cpu_seconds"}
     -> reply {"ok": true} or {"ok": false, "error": ...}
  2. per test: receive {"args": [...]}
     -> reply {"status": "ok", "value": ...}
              | {"status": "error", "error": ...}
              | {"status": "unserializable", "error": ...}
     receive {"cmd": "exit"} -> terminate

Must stay standalone (stdlib only): it is executed by whatever interpreter
the harness is configured with, not necessarily the harness's own.
"""

import json
import os
import signal
import sys
import traceback

FRAME_HEADER_LEN = 11  # 10 decimal digits + newline
MAX_NESTING = 64


class Unserializable(Exception):
    pass


def _read_exact(fd, n):
    buf = b""
    while len(buf) < n:
        chunk = os.read(fd, n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def _read_frame(fd):
    header = _read_exact(fd, FRAME_HEADER_LEN)
    if header is None:
        return None
    payload = _read_exact(fd, int(header[:10]))
    if payload is None:
        return None
    return json.loads(payload.decode("utf-8"))


def _write_frame(fd, obj):
    payload = json.dumps(obj, ensure_ascii=True).encode("utf-8")
    os.write(fd, b"%010d\n" % len(payload) + payload)


def _apply_limits(memory_mb, cpu_seconds):
    try:
        import resource
    except ImportError:
        return
    if memory_mb:
        cap = int(memory_mb) * 1024 * 1024
        try:
            resource.setrlimit(resource.RLIMIT_AS, (cap, cap))
        except (ValueError, OSError):
            pass
    if cpu_seconds:
        try:
            resource.setrlimit(resource.RLIMIT_CPU, (int(cpu_seconds), int(cpu_seconds) + 1))
        except (ValueError, OSError):
            pass
    # Writes beyond this fail with EFBIG instead of killing the process.
    try:
        signal.signal(signal.SIGXFSZ, signal.SIG_IGN)
        resource.setrlimit(resource.RLIMIT_FSIZE, (8 << 20, 8 << 20))
    except (ValueError, OSError, AttributeError):
        pass


def _deny_network():
    import socket

    def _denied(*args, **kwargs):
        raise OSError("network access is disabled in the sandbox")

    socket.socket = _denied
    socket.create_connection = _denied
    socket.socketpair = _denied
    socket.fromfd = _denied
    socket.create_server = _denied


def _format_error(exc):
    parts = traceback.format_exception_only(type(exc), exc)
    return parts[-1].strip() if parts else type(exc).__name__


def _sanitize(value, depth=0):
    if depth > MAX_NESTING:
        raise Unserializable("return value nesting too deep")
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, (list, tuple)):
        return [_sanitize(v, depth + 1) for v in value]
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise Unserializable("mapping key %r is not a string" % (key,))
            out[key] = _sanitize(item, depth + 1)
        return out
    raise Unserializable("return type %s is not serializable" % type(value).__name__)


def main():
    in_fd = os.dup(0)
    out_fd = os.dup(1)
    devnull = os.open(os.devnull, os.O_RDWR)
    os.dup2(devnull, 0)
    os.dup2(devnull, 1)
    os.dup2(devnull, 2)

    setup = _read_frame(in_fd)
    if setup is None:
        return
    _apply_limits(setup.get("memory_mb"), setup.get("cpu_seconds"))
    _deny_network()

    namespace = {"__name__": "__graded__"}
    try:
        exec(compile(setup["source"], "<student>", "exec"), namespace)
    except BaseException as exc:
        _write_frame(out_fd, {"ok": False, "error": _format_error(exc)})
        return
    entry = namespace.get(setup["entry_point"])
    if not callable(entry):
        _write_frame(
            out_fd,
            {"ok": False, "error": "source does not define a callable %r" % setup["entry_point"]},
        )
        return
    _write_frame(out_fd, {"ok": True})

    while True:
        request = _read_frame(in_fd)
        if request is None or request.get("cmd") == "exit":
            return
        try:
            result = entry(*request["args"])
        except BaseException as exc:
            _write_frame(out_fd, {"status": "error", "error": _format_error(exc)})
            continue
        try:
            value = _sanitize(result)
        except Unserializable as exc:
            _write_frame(out_fd, {"status": "unserializable", "error": str(exc)})
            continue
        except RecursionError:
            _write_frame(out_fd, {"status": "unserializable", "error": "return value nesting too deep"})
            continue
        _write_frame(out_fd, {"status": "ok", "value": value})


if __name__ == "__main__":
    sys.exit(main())
