"""Human-vs-CGBG agreement: confusion matrices, Cohen's kappa, leniency.

Positive class is "correct". A false positive is the lenient direction
(CGBG correct, human incorrect); a false negative is the strict direction.
Kappa is chance-corrected agreement: (p_o - p_e) / (1 - p_e).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from .grading import GradeDecision

LABELS = ("correct", "incorrect")

BUCKET_LOW = "low"
BUCKET_MODERATE = "moderate"
BUCKET_HIGH = "high"

_EPS = 1e-9


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def add(self, human_label: str, cgbg_label: str) -> None:
        human = human_label == "correct"
        cgbg = cgbg_label == "correct"
        if cgbg and human:
            self.tp += 1
        elif cgbg and not human:
            self.fp += 1
        elif not cgbg and human:
            self.fn += 1
        else:
            self.tn += 1

    def merged(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


@dataclass
class LabeledOutcome:
    question_id: str
    response_id: str
    strategy: str
    human_label: str
    cgbg_label: str

    def __post_init__(self):
        for name in ("human_label", "cgbg_label"):
            if getattr(self, name) not in LABELS:
                raise ValueError(f"{name} must be one of {LABELS}")


def cohens_kappa(m: ConfusionMatrix) -> float:
    """Chance-corrected agreement in [-1, 1].

    p_o = (tp+tn)/N; p_e sums the two raters' matched marginal products.
    The degenerate p_e = 1 case maps to 1 for perfect observed agreement,
    else 0.
    """
    n = m.total
    if n < 1:
        raise ValueError("confusion matrix is empty")
    p_o = (m.tp + m.tn) / n
    p_e = ((m.tp + m.fn) * (m.tp + m.fp) + (m.fp + m.tn) * (m.fn + m.tn)) / (n * n)
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def bucket_kappa(k: float) -> str:
    """low iff k <= 0.4; moderate iff 0.4 < k <= 0.6; high iff k > 0.6."""
    if not -1.0 - _EPS <= k <= 1.0 + _EPS:
        raise ValueError(f"kappa {k} outside [-1, 1]")
    if k <= 0.4:
        return BUCKET_LOW
    if k <= 0.6:
        return BUCKET_MODERATE
    return BUCKET_HIGH


def _degenerate(m: ConfusionMatrix) -> bool:
    # A rater used only one label; kappa carries no chance-corrected signal.
    return min(m.tp + m.fn, m.fp + m.tn, m.tp + m.fp, m.fn + m.tn) == 0


def _rate(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator > 0 else None


@dataclass
class QuestionAgreement:
    question_id: str
    matrix: ConfusionMatrix
    kappa: float
    bucket: str
    degenerate: bool


@dataclass
class StrategyAgreement:
    strategy: str
    matrix: ConfusionMatrix
    kappa: float
    fp_rate: float | None
    fn_rate: float | None
    per_question: list[QuestionAgreement] = field(default_factory=list)
    bucket_histogram: dict[str, int] = field(default_factory=dict)


@dataclass
class AgreementReport:
    per_strategy: dict[str, StrategyAgreement]
    n_outcomes: int


def build_report(outcomes: Sequence[LabeledOutcome]) -> AgreementReport:
    """Accumulate matrices overall and per (question, strategy).

    Per-question matrix cells always sum to the strategy's overall matrix.
    Duplicate (response, strategy) pairs are rejected.
    """
    seen: set[tuple[str, str]] = set()
    overall: dict[str, ConfusionMatrix] = {}
    per_question: dict[tuple[str, str], ConfusionMatrix] = {}
    for outcome in outcomes:
        key = (outcome.response_id, outcome.strategy)
        if key in seen:
            raise ValueError(f"duplicate outcome for response {key[0]!r}, strategy {key[1]!r}")
        seen.add(key)
        overall.setdefault(outcome.strategy, ConfusionMatrix()).add(
            outcome.human_label, outcome.cgbg_label
        )
        per_question.setdefault(
            (outcome.strategy, outcome.question_id), ConfusionMatrix()
        ).add(outcome.human_label, outcome.cgbg_label)

    per_strategy: dict[str, StrategyAgreement] = {}
    for strategy in sorted(overall):
        matrix = overall[strategy]
        questions = [
            QuestionAgreement(
                question_id=qid,
                matrix=q_matrix,
                kappa=cohens_kappa(q_matrix),
                bucket=bucket_kappa(cohens_kappa(q_matrix)),
                degenerate=_degenerate(q_matrix),
            )
            for (strat, qid), q_matrix in sorted(per_question.items())
            if strat == strategy
        ]
        histogram = {BUCKET_LOW: 0, BUCKET_MODERATE: 0, BUCKET_HIGH: 0}
        for q in questions:
            histogram[q.bucket] += 1
        per_strategy[strategy] = StrategyAgreement(
            strategy=strategy,
            matrix=matrix,
            kappa=cohens_kappa(matrix),
            fp_rate=_rate(matrix.fp, matrix.fp + matrix.tn),
            fn_rate=_rate(matrix.fn, matrix.tp + matrix.fn),
            per_question=questions,
            bucket_histogram=histogram,
        )
    return AgreementReport(per_strategy=per_strategy, n_outcomes=len(outcomes))


def outcomes_from_decisions(
    decisions: Iterable["GradeDecision"], human_labels: Mapping[str, str | None]
) -> list[LabeledOutcome]:
    """Join decisions with human labels; unlabeled responses are skipped."""
    outcomes = []
    for d in decisions:
        label = human_labels.get(d.response_id)
        if label is None:
            continue
        outcomes.append(
            LabeledOutcome(
                question_id=d.question_id,
                response_id=d.response_id,
                strategy=d.strategy,
                human_label=label,
                cgbg_label=d.verdict,
            )
        )
    return outcomes


DIRECTION_LENIENT = "lenient_fp"
DIRECTION_STRICT = "strict_fn"


@dataclass
class DisagreementCase:
    question_id: str
    response_id: str
    strategy: str
    direction: str  # lenient_fp | strict_fn
    response_text: str
    programs: list[str]


def disagreement_digest(
    outcomes: Sequence[LabeledOutcome],
    decisions: Iterable["GradeDecision"],
    response_texts: Mapping[str, str] | None = None,
) -> list[DisagreementCase]:
    """Audit trail of every human/CGBG disagreement with its evidence."""
    by_key = {(d.response_id, d.strategy): d for d in decisions}
    texts = response_texts or {}
    cases = []
    for outcome in outcomes:
        if outcome.human_label == outcome.cgbg_label:
            continue
        direction = (
            DIRECTION_LENIENT if outcome.cgbg_label == "correct" else DIRECTION_STRICT
        )
        decision = by_key.get((outcome.response_id, outcome.strategy))
        programs = []
        if decision is not None:
            programs = [p.source for p in decision.programs if p is not None]
        cases.append(
            DisagreementCase(
                question_id=outcome.question_id,
                response_id=outcome.response_id,
                strategy=outcome.strategy,
                direction=direction,
                response_text=texts.get(outcome.response_id, ""),
                programs=programs,
            )
        )
    cases.sort(key=lambda c: (c.question_id, c.direction, c.strategy, c.response_id))
    return cases


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _matrix_dict(m: ConfusionMatrix) -> dict:
    return {"tp": m.tp, "fp": m.fp, "fn": m.fn, "tn": m.tn}


def report_to_dict(report: AgreementReport) -> dict:
    """Machine-readable report, kappa at full precision."""
    return {
        "n_outcomes": report.n_outcomes,
        "strategies": {
            name: {
                "kappa": s.kappa,
                "matrix": _matrix_dict(s.matrix),
                "fp_rate": s.fp_rate,
                "fn_rate": s.fn_rate,
                "bucket_histogram": s.bucket_histogram,
                "per_question": [
                    {
                        "question_id": q.question_id,
                        "kappa": q.kappa,
                        "bucket": q.bucket,
                        "degenerate": q.degenerate,
                        "matrix": _matrix_dict(q.matrix),
                    }
                    for q in s.per_question
                ],
            }
            for name, s in report.per_strategy.items()
        },
    }


def _fmt_rate(rate: float | None) -> str:
    return "n/a" if rate is None else f"{rate:.2f}"


def report_to_markdown(
    report: AgreementReport, digest: Sequence[DisagreementCase] | None = None
) -> str:
    """Human-readable summary; kappa rendered to 2 decimals."""
    lines = ["# CGBG agreement report", ""]
    lines.append(f"Outcomes analyzed: {report.n_outcomes}")
    lines.append("")
    lines.append("## Overall agreement per strategy")
    lines.append("")
    lines.append("| strategy | kappa | tp | fp | fn | tn | fp_rate | fn_rate |")
    lines.append("|---|---|---|---|---|---|---|---|")
    for name, s in report.per_strategy.items():
        m = s.matrix
        lines.append(
            f"| {name} | {s.kappa:.2f} | {m.tp} | {m.fp} | {m.fn} | {m.tn} "
            f"| {_fmt_rate(s.fp_rate)} | {_fmt_rate(s.fn_rate)} |"
        )
    for name, s in report.per_strategy.items():
        lines.append("")
        lines.append(f"## Per-question agreement: {name}")
        lines.append("")
        hist = s.bucket_histogram
        lines.append(
            f"Buckets: {hist[BUCKET_LOW]} low, {hist[BUCKET_MODERATE]} moderate, "
            f"{hist[BUCKET_HIGH]} high."
        )
        lines.append("")
        lines.append("| question | kappa | bucket | tp | fp | fn | tn |")
        lines.append("|---|---|---|---|---|---|---|")
        for q in s.per_question:
            m = q.matrix
            flag = " (degenerate)" if q.degenerate else ""
            lines.append(
                f"| {q.question_id} | {q.kappa:.2f}{flag} | {q.bucket} "
                f"| {m.tp} | {m.fp} | {m.fn} | {m.tn} |"
            )
    if digest is not None:
        lines.append("")
        lines.append("## Disagreements")
        lines.append("")
        if not digest:
            lines.append("None.")
        for case in digest:
            label = "lenient (FP)" if case.direction == DIRECTION_LENIENT else "strict (FN)"
            lines.append(
                f"- **{case.question_id}** / {case.response_id} / {case.strategy}: {label}"
            )
            if case.response_text:
                lines.append(f'  - response: "{case.response_text}"')
            for program in case.programs[:1]:
                lines.append("  - generated program:\n\n```python\n" + program + "\n```")
    lines.append("")
    return "\n".join(lines)


def per_question_csv(report: AgreementReport) -> str:
    """Per-question rows for plotting."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        ["strategy", "question_id", "kappa", "bucket", "degenerate", "tp", "fp", "fn", "tn"]
    )
    for name, s in report.per_strategy.items():
        for q in s.per_question:
            m = q.matrix
            writer.writerow(
                [name, q.question_id, repr(q.kappa), q.bucket, q.degenerate, m.tp, m.fp, m.fn, m.tn]
            )
    return out.getvalue()


def report_to_json(report: AgreementReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)
