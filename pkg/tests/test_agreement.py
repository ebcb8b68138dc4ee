import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgbg.agreement import (
    BUCKET_HIGH,
    BUCKET_LOW,
    BUCKET_MODERATE,
    ConfusionMatrix,
    LabeledOutcome,
    bucket_kappa,
    build_report,
    cohens_kappa,
    disagreement_digest,
    outcomes_from_decisions,
    per_question_csv,
    report_to_dict,
    report_to_markdown,
)
from cgbg.extraction import ExtractedProgram
from cgbg.grading import GradeDecision, GradeTiming


def kappa_by_enumeration(m: ConfusionMatrix) -> float:
    """Independent oracle: expand the matrix into labeled pairs and compute
    observed/expected agreement by counting."""
    pairs = (
        [("correct", "correct")] * m.tp
        + [("incorrect", "correct")] * m.fp
        + [("correct", "incorrect")] * m.fn
        + [("incorrect", "incorrect")] * m.tn
    )
    n = len(pairs)
    p_o = sum(h == c for h, c in pairs) / n
    p_e = 0.0
    for label in ("correct", "incorrect"):
        p_h = sum(h == label for h, _ in pairs) / n
        p_c = sum(c == label for _, c in pairs) / n
        p_e += p_h * p_c
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


matrices = st.builds(
    ConfusionMatrix,
    tp=st.integers(0, 40),
    fp=st.integers(0, 40),
    fn=st.integers(0, 40),
    tn=st.integers(0, 40),
).filter(lambda m: m.total >= 1)


class TestCohensKappa:
    def test_perfect_agreement(self):
        assert cohens_kappa(ConfusionMatrix(tp=10, fp=0, fn=0, tn=10)) == 1.0

    def test_chance_level_agreement(self):
        assert cohens_kappa(ConfusionMatrix(tp=25, fp=25, fn=25, tn=25)) == 0.0

    def test_hand_computed_example(self):
        # N=50, p_o=0.7, p_e=0.5 -> kappa = 0.4
        m = ConfusionMatrix(tp=20, fp=5, fn=10, tn=15)
        assert abs(cohens_kappa(m) - 0.4) < 1e-12
        assert abs(kappa_by_enumeration(m) - 0.4) < 1e-12

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            cohens_kappa(ConfusionMatrix())

    def test_degenerate_all_tp(self):
        assert cohens_kappa(ConfusionMatrix(tp=7)) == 1.0

    def test_total_disagreement(self):
        assert cohens_kappa(ConfusionMatrix(fp=5, fn=5)) == -1.0

    @given(matrices)
    @settings(max_examples=300)
    def test_matches_enumeration_oracle(self, m):
        assert math.isclose(cohens_kappa(m), kappa_by_enumeration(m), abs_tol=1e-9)

    @given(matrices)
    @settings(max_examples=300)
    def test_rater_symmetry(self, m):
        transposed = ConfusionMatrix(tp=m.tp, fp=m.fn, fn=m.fp, tn=m.tn)
        assert math.isclose(cohens_kappa(m), cohens_kappa(transposed), abs_tol=1e-12)

    @given(matrices, st.integers(2, 9))
    @settings(max_examples=300)
    def test_scaling_invariance(self, m, c):
        scaled = ConfusionMatrix(tp=m.tp * c, fp=m.fp * c, fn=m.fn * c, tn=m.tn * c)
        assert math.isclose(cohens_kappa(m), cohens_kappa(scaled), abs_tol=1e-12)

    @given(matrices)
    @settings(max_examples=300)
    def test_label_swap_invariance(self, m):
        swapped = ConfusionMatrix(tp=m.tn, fp=m.fn, fn=m.fp, tn=m.tp)
        assert math.isclose(cohens_kappa(m), cohens_kappa(swapped), abs_tol=1e-12)

    @given(matrices)
    @settings(max_examples=300)
    def test_range(self, m):
        assert -1.0 - 1e-12 <= cohens_kappa(m) <= 1.0 + 1e-12


class TestBucketKappa:
    def test_boundaries(self):
        assert bucket_kappa(0.4) == BUCKET_LOW
        assert bucket_kappa(0.40000001) == BUCKET_MODERATE
        assert bucket_kappa(0.58) == BUCKET_MODERATE
        assert bucket_kappa(0.6) == BUCKET_MODERATE
        assert bucket_kappa(0.61) == BUCKET_HIGH
        assert bucket_kappa(0.8) == BUCKET_HIGH
        assert bucket_kappa(-1.0) == BUCKET_LOW

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            bucket_kappa(1.5)
        with pytest.raises(ValueError):
            bucket_kappa(-1.01)


def _outcome(rid, qid="q1", strategy="single_zero_temp", human="correct", cgbg="correct"):
    return LabeledOutcome(
        question_id=qid, response_id=rid, strategy=strategy, human_label=human, cgbg_label=cgbg
    )


class TestBuildReport:
    def test_full_agreement(self):
        outcomes = [
            _outcome("r1"),
            _outcome("r2", human="incorrect", cgbg="incorrect"),
            _outcome("r3", qid="q2"),
            _outcome("r4", qid="q2", human="incorrect", cgbg="incorrect"),
        ]
        report = build_report(outcomes)
        s = report.per_strategy["single_zero_temp"]
        assert s.kappa == 1.0
        assert s.fp_rate == 0.0
        assert s.fn_rate == 0.0
        assert all(q.bucket == BUCKET_HIGH for q in s.per_question)

    def test_leniency_signature(self):
        # 10 responses: humans accept 4; CGBG accepts those plus 4 others.
        outcomes = []
        for i in range(4):
            outcomes.append(_outcome(f"tp{i}"))
        for i in range(4):
            outcomes.append(_outcome(f"fp{i}", human="incorrect", cgbg="correct"))
        for i in range(2):
            outcomes.append(_outcome(f"tn{i}", human="incorrect", cgbg="incorrect"))
        s = build_report(outcomes).per_strategy["single_zero_temp"]
        assert (s.matrix.tp, s.matrix.fp, s.matrix.fn, s.matrix.tn) == (4, 4, 0, 2)
        assert s.matrix.fp > s.matrix.fn
        assert s.fp_rate == pytest.approx(4 / 6)
        assert s.fn_rate == 0.0

    def test_zero_denominator_rates_absent(self):
        s = build_report([_outcome("r1")]).per_strategy["single_zero_temp"]
        assert s.fp_rate is None  # no human-incorrect responses at all
        assert s.fn_rate == 0.0

    def test_duplicate_outcome_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            build_report([_outcome("r1"), _outcome("r1")])

    def test_same_response_under_two_strategies_allowed(self):
        report = build_report(
            [_outcome("r1"), _outcome("r1", strategy="best_of_five")]
        )
        assert set(report.per_strategy) == {"single_zero_temp", "best_of_five"}

    def test_identical_labels_identical_subreports(self):
        outcomes = []
        for strategy in ("single_zero_temp", "majority_of_five"):
            outcomes.extend(
                [
                    _outcome("r1", strategy=strategy),
                    _outcome("r2", strategy=strategy, human="incorrect", cgbg="correct"),
                ]
            )
        report = build_report(outcomes)
        a = report.per_strategy["single_zero_temp"]
        b = report.per_strategy["majority_of_five"]
        assert a.kappa == b.kappa
        assert a.matrix == b.matrix

    def test_conservation_per_question_sums_to_overall(self):
        outcomes = [
            _outcome("r1", qid="q1"),
            _outcome("r2", qid="q1", human="incorrect", cgbg="correct"),
            _outcome("r3", qid="q2", human="correct", cgbg="incorrect"),
            _outcome("r4", qid="q3", human="incorrect", cgbg="incorrect"),
        ]
        s = build_report(outcomes).per_strategy["single_zero_temp"]
        summed = ConfusionMatrix()
        for q in s.per_question:
            summed = summed.merged(q.matrix)
        assert summed == s.matrix

    def test_degenerate_question_flagged(self):
        outcomes = [_outcome("r1"), _outcome("r2", human="correct", cgbg="incorrect")]
        s = build_report(outcomes).per_strategy["single_zero_temp"]
        assert s.per_question[0].degenerate  # every human label "correct"
        assert s.per_question[0].kappa == 0.0


def _decision(rid, qid="q1", strategy="single_zero_temp", verdict="correct", source="def foo(): pass"):
    return GradeDecision(
        question_id=qid,
        response_id=rid,
        strategy=strategy,
        verdict=verdict,
        sample_verdicts=[verdict == "correct"],
        programs=[ExtractedProgram(source=source, detected_entry_point="foo")],
        extraction_errors=[None],
        verdicts_detail=[None],
        timing=GradeTiming(),
    )


class TestDigest:
    def test_lenient_and_strict_cases(self):
        outcomes = [
            _outcome("r_fp", human="incorrect", cgbg="correct"),
            _outcome("r_fn", human="correct", cgbg="incorrect"),
            _outcome("r_ok"),
        ]
        decisions = [
            _decision("r_fp", source="def foo(lst):\n  return sum(lst)/len(lst)"),
            _decision("r_fn", verdict="incorrect", source="literal"),
            _decision("r_ok"),
        ]
        texts = {"r_fp": "the sum divided by the length", "r_fn": "between y and z"}
        digest = disagreement_digest(outcomes, decisions, texts)
        assert len(digest) == 2
        by_direction = {c.direction: c for c in digest}
        assert "sum(lst)" in by_direction["lenient_fp"].programs[0]
        assert by_direction["lenient_fp"].response_text == "the sum divided by the length"
        assert by_direction["strict_fn"].programs == ["literal"]

    def test_no_disagreements(self):
        assert disagreement_digest([_outcome("r1")], [_decision("r1")]) == []

    def test_sorted_by_question_then_direction(self):
        outcomes = [
            _outcome("r2", qid="q2", human="correct", cgbg="incorrect"),
            _outcome("r1", qid="q1", human="incorrect", cgbg="correct"),
            _outcome("r3", qid="q1", human="correct", cgbg="incorrect"),
        ]
        decisions = [
            _decision("r2", qid="q2", verdict="incorrect"),
            _decision("r1", qid="q1"),
            _decision("r3", qid="q1", verdict="incorrect"),
        ]
        digest = disagreement_digest(outcomes, decisions)
        assert [(c.question_id, c.direction) for c in digest] == [
            ("q1", "lenient_fp"),
            ("q1", "strict_fn"),
            ("q2", "strict_fn"),
        ]


class TestOutcomesFromDecisions:
    def test_joins_labels_and_skips_unlabeled(self):
        decisions = [_decision("r1"), _decision("r2")]
        outcomes = outcomes_from_decisions(decisions, {"r1": "incorrect", "r2": None})
        assert len(outcomes) == 1
        assert outcomes[0].human_label == "incorrect"
        assert outcomes[0].cgbg_label == "correct"


class TestRendering:
    def _report(self):
        return build_report(
            [
                _outcome("r1"),
                _outcome("r2", human="incorrect", cgbg="correct"),
                _outcome("r3", qid="q2", human="incorrect", cgbg="incorrect"),
            ]
        )

    def test_markdown_two_decimal_kappa(self):
        markdown = report_to_markdown(self._report())
        assert "| single_zero_temp | " in markdown
        assert "0.40" in markdown  # overall kappa of this fixture

    def test_markdown_includes_digest(self):
        markdown = report_to_markdown(self._report(), digest=[])
        assert "None." in markdown

    def test_json_full_precision(self):
        data = report_to_dict(self._report())
        kappa = data["strategies"]["single_zero_temp"]["kappa"]
        assert abs(kappa - 0.4) < 1e-12

    def test_csv_rows(self):
        lines = per_question_csv(self._report()).strip().splitlines()
        assert lines[0].startswith("strategy,question_id,kappa")
        assert len(lines) == 3  # header + q1 + q2


def test_invalid_labels_rejected():
    with pytest.raises(ValueError):
        LabeledOutcome("q", "r", "s", human_label="right", cgbg_label="correct")
