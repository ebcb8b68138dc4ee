"""Batch-grade the shipped 30-response corpus and print the agreement report.

Uses the scripted mock gateway, so the run is offline and deterministic:
the same confusion matrices, kappas, and disagreement digest every time.

    python3 demos/03_agreement_report.py
"""

from cgbg import fixtures
from cgbg.agreement import (
    build_report,
    disagreement_digest,
    outcomes_from_decisions,
    report_to_markdown,
)
from cgbg.bank import complete_bank, load_question_bank
from cgbg.gateway import MockGateway
from cgbg.grading import best_of_five, grade_batch, majority_of_five, single_zero_temp
from cgbg.prompting import PromptTemplate
from cgbg.responses import ingest_responses
from cgbg.sandbox import ExecutionLimits

bank = complete_bank(load_question_bank(fixtures.bank_path()), ExecutionLimits())
records = ingest_responses(fixtures.responses_path()).records
gateway = MockGateway.from_file(fixtures.mock_script_path())

result = grade_batch(
    bank,
    records,
    [single_zero_temp(), majority_of_five(), best_of_five()],
    PromptTemplate(),
    gateway,
    ExecutionLimits(),
    parallelism=4,
)

labels = {r.response_id: r.human_label for r in records}
texts = {r.response_id: r.response_text for r in records}
outcomes = outcomes_from_decisions(result.decisions, labels)
report = build_report(outcomes)
digest = disagreement_digest(outcomes, result.decisions, texts)

print(report_to_markdown(report, digest))
