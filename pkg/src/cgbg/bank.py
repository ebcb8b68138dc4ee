"""Question bank: load, validate, serialize, and oracle-complete questions.

A question carries the reference source students are shown, the entry point
the harness calls, and test cases. Expected outputs are never hand-authored:
they are computed by executing the reference source in the same sandbox used
for grading, so the reference is the single source of truth.
"""

from __future__ import annotations

import json
import keyword
from dataclasses import dataclass, field, replace

from .values import InvalidValueError, Value, contains_float, validate_value

COMPARISON_MODES = ("exact", "float_tolerance", "unordered_sequence")

# Relative tolerance applied when a test with no declared comparison turns
# out to have a float expected value. Exact float equality would create
# spurious failures for questions like the list-average one.
DEFAULT_FLOAT_REL = 1e-6


class BankSchemaError(ValueError):
    """The bank file violates the schema; message names the offending field."""


class OracleError(RuntimeError):
    """Reference-source execution failed while computing expected outputs."""

    def __init__(self, question_id: str, test_index: int, detail: str):
        self.question_id = question_id
        self.test_index = test_index
        super().__init__(
            f"question {question_id!r}: reference execution failed on test "
            f"{test_index}: {detail}"
        )


@dataclass
class Comparison:
    mode: str
    rel: float | None = None

    def __post_init__(self):
        if self.mode not in COMPARISON_MODES:
            raise BankSchemaError(f"comparison.mode: unknown mode {self.mode!r}")
        if self.mode == "float_tolerance":
            if self.rel is None or not self.rel > 0:
                raise BankSchemaError("comparison.rel: must be a positive number")
        elif self.rel is not None:
            raise BankSchemaError(f"comparison.rel: not allowed for mode {self.mode!r}")


@dataclass
class TestCase:
    __test__ = False  # not a pytest class

    args: list[Value]
    expected: Value = None
    has_expected: bool = False
    comparison: Comparison | None = None  # None = resolved at oracle time


@dataclass
class Question:
    id: str
    title: str
    reference_source: str
    entry_point: str
    arity: int
    param_names: list[str]
    tests: list[TestCase]
    tags: list[str] = field(default_factory=list)


@dataclass
class QuestionBank:
    questions: list[Question]
    version: str = "1"

    def by_id(self) -> dict[str, Question]:
        return {q.id: q for q in self.questions}


@dataclass
class ValidationFinding:
    question_id: str
    message: str

    def __str__(self) -> str:
        return f"{self.question_id}: {self.message}"


def _require(mapping: dict, key: str, kind, where: str):
    if key not in mapping:
        raise BankSchemaError(f"{where}.{key}: missing required field")
    value = mapping[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise BankSchemaError(f"{where}.{key}: expected an integer")
    elif not isinstance(value, kind):
        raise BankSchemaError(f"{where}.{key}: expected {kind.__name__}")
    return value


def _parse_comparison(raw, where: str) -> Comparison | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise BankSchemaError(f"{where}.comparison: expected an object")
    mode = _require(raw, "mode", str, f"{where}.comparison")
    rel = raw.get("rel")
    if rel is not None and not isinstance(rel, (int, float)):
        raise BankSchemaError(f"{where}.comparison.rel: expected a number")
    try:
        return Comparison(mode=mode, rel=float(rel) if rel is not None else None)
    except BankSchemaError as exc:
        raise BankSchemaError(f"{where}.{exc}") from None


def _parse_test(raw, where: str) -> TestCase:
    if not isinstance(raw, dict):
        raise BankSchemaError(f"{where}: expected an object")
    args = _require(raw, "args", list, where)
    try:
        validate_value(args, f"{where}.args")
    except InvalidValueError as exc:
        raise BankSchemaError(str(exc)) from None
    has_expected = "expected" in raw
    expected = raw.get("expected")
    if has_expected:
        try:
            validate_value(expected, f"{where}.expected")
        except InvalidValueError as exc:
            raise BankSchemaError(str(exc)) from None
    return TestCase(
        args=args,
        expected=expected,
        has_expected=has_expected,
        comparison=_parse_comparison(raw.get("comparison"), where),
    )


def _parse_question(raw, where: str) -> Question:
    if not isinstance(raw, dict):
        raise BankSchemaError(f"{where}: expected an object")
    tests_raw = _require(raw, "tests", list, where)
    tags = raw.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise BankSchemaError(f"{where}.tags: expected a list of strings")
    param_names = _require(raw, "param_names", list, where)
    if not all(isinstance(p, str) for p in param_names):
        raise BankSchemaError(f"{where}.param_names: expected a list of strings")
    return Question(
        id=_require(raw, "id", str, where),
        title=_require(raw, "title", str, where),
        reference_source=_require(raw, "reference_source", str, where),
        entry_point=_require(raw, "entry_point", str, where),
        arity=_require(raw, "arity", int, where),
        param_names=list(param_names),
        tests=[_parse_test(t, f"{where}.tests[{i}]") for i, t in enumerate(tests_raw)],
        tags=list(tags),
    )


def bank_from_dict(data: dict) -> QuestionBank:
    if not isinstance(data, dict):
        raise BankSchemaError("bank: expected a top-level object")
    version = _require(data, "version", str, "bank")
    questions_raw = _require(data, "questions", list, "bank")
    questions = [
        _parse_question(q, f"questions[{i}]") for i, q in enumerate(questions_raw)
    ]
    seen: dict[str, int] = {}
    for i, q in enumerate(questions):
        if q.id in seen:
            raise BankSchemaError(
                f"questions[{i}].id: duplicate id {q.id!r} "
                f"(also used by questions[{seen[q.id]}])"
            )
        seen[q.id] = i
    return QuestionBank(questions=questions, version=version)


def load_question_bank(path) -> QuestionBank:
    """Load and structurally validate a bank file (UTF-8 JSON)."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BankSchemaError(f"{path}: not valid JSON: {exc}") from None
    bank = bank_from_dict(data)
    findings = validate_bank(bank)
    if findings:
        details = "; ".join(str(f) for f in findings)
        raise BankSchemaError(f"{path}: invalid bank: {details}")
    return bank


def bank_to_dict(bank: QuestionBank) -> dict:
    questions = []
    for q in bank.questions:
        tests = []
        for t in q.tests:
            item: dict = {"args": t.args}
            if t.has_expected:
                item["expected"] = t.expected
            if t.comparison is not None:
                comp: dict = {"mode": t.comparison.mode}
                if t.comparison.rel is not None:
                    comp["rel"] = t.comparison.rel
                item["comparison"] = comp
            tests.append(item)
        questions.append(
            {
                "id": q.id,
                "title": q.title,
                "reference_source": q.reference_source,
                "entry_point": q.entry_point,
                "arity": q.arity,
                "param_names": q.param_names,
                "tests": tests,
                "tags": q.tags,
            }
        )
    return {"version": bank.version, "questions": questions}


def save_question_bank(bank: QuestionBank, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bank_to_dict(bank), fh, indent=2, sort_keys=False)
        fh.write("\n")


def validate_bank(bank: QuestionBank) -> list[ValidationFinding]:
    """Check bank invariants. Empty result means the bank is valid."""
    findings: list[ValidationFinding] = []
    seen: set[str] = set()
    for q in bank.questions:
        if q.id in seen:
            findings.append(ValidationFinding(q.id, "duplicate question id"))
        seen.add(q.id)
        if not q.id:
            findings.append(ValidationFinding(q.id, "empty question id"))
        if not q.entry_point.isidentifier() or keyword.iskeyword(q.entry_point):
            findings.append(
                ValidationFinding(q.id, f"entry_point {q.entry_point!r} is not a valid identifier")
            )
        if q.arity < 0:
            findings.append(ValidationFinding(q.id, f"arity {q.arity} is negative"))
        if len(q.param_names) != q.arity:
            findings.append(
                ValidationFinding(
                    q.id,
                    f"param_names has {len(q.param_names)} entries but arity is {q.arity}",
                )
            )
        if not q.tests:
            findings.append(ValidationFinding(q.id, "no tests"))
        for i, t in enumerate(q.tests):
            if len(t.args) != q.arity:
                findings.append(
                    ValidationFinding(
                        q.id,
                        f"tests[{i}] has {len(t.args)} args but arity is {q.arity}",
                    )
                )
    return findings


def resolve_comparison(comparison: Comparison | None, expected: Value) -> Comparison:
    """Default rule for tests with no declared comparison mode."""
    if comparison is not None:
        return comparison
    if contains_float(expected):
        return Comparison(mode="float_tolerance", rel=DEFAULT_FLOAT_REL)
    return Comparison(mode="exact")


def compute_expected_outputs(question: Question, limits=None) -> Question:
    """Fill every test's expected value by running the reference source.

    Execution happens in the grading sandbox, so "the reference passes its
    own tests" holds by construction. Tests without a declared comparison
    get one resolved here (float tolerance iff the expected value contains
    a float). Returns a new Question; the input is left untouched.
    """
    from .sandbox import ExecutionLimits, execute_entry_point

    if limits is None:
        limits = ExecutionLimits()
    outcomes = execute_entry_point(
        question.reference_source,
        question.entry_point,
        [t.args for t in question.tests],
        limits,
    )
    tests: list[TestCase] = []
    for i, (test, outcome) in enumerate(zip(question.tests, outcomes)):
        if outcome.status != "ok":
            raise OracleError(question.id, i, outcome.error_text or outcome.status)
        try:
            validate_value(outcome.value, f"tests[{i}].expected")
        except InvalidValueError as exc:
            raise OracleError(question.id, i, str(exc)) from None
        tests.append(
            TestCase(
                args=test.args,
                expected=outcome.value,
                has_expected=True,
                comparison=resolve_comparison(test.comparison, outcome.value),
            )
        )
    return replace(question, tests=tests)


def complete_bank(bank: QuestionBank, limits=None) -> QuestionBank:
    """compute_expected_outputs across the whole bank."""
    return QuestionBank(
        questions=[compute_expected_outputs(q, limits) for q in bank.questions],
        version=bank.version,
    )
