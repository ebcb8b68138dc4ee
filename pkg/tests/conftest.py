from __future__ import annotations

import pytest

from cgbg import fixtures
from cgbg.bank import QuestionBank, complete_bank, load_question_bank
from cgbg.sandbox import ExecutionLimits


@pytest.fixture(scope="session")
def fixture_bank() -> QuestionBank:
    return load_question_bank(fixtures.bank_path())


@pytest.fixture(scope="session")
def completed_bank(fixture_bank) -> QuestionBank:
    return complete_bank(fixture_bank, ExecutionLimits())


@pytest.fixture(scope="session")
def fast_limits() -> ExecutionLimits:
    return ExecutionLimits(
        per_test_timeout_ms=1500, memory_cap_mb=256, total_program_timeout_ms=8000
    )


@pytest.fixture
def average_question(completed_bank):
    return completed_bank.by_id()["q_average"]


@pytest.fixture
def substring_question(completed_bank):
    return completed_bank.by_id()["q_substring"]


@pytest.fixture
def parity_question(completed_bank):
    return completed_bank.by_id()["q_parity"]
