"""Shipped fixture corpus: question bank, response set, scripted completions.

The bank encodes the classic question set (list average, absolute value,
max of two, multiple-of check, list range, parity, substring slice, list
membership, sum of positives). The scripted completions and replay cache
are generated from mock_behaviors.json by scripts/make_fixtures.py and make
the whole grading pipeline runnable offline and deterministically.
"""

from pathlib import Path

_ROOT = Path(__file__).parent


def bank_path() -> Path:
    return _ROOT / "bank.json"


def default_template_path() -> Path:
    return _ROOT / "default_template.txt"


def responses_path() -> Path:
    return _ROOT / "responses.csv"


def mock_behaviors_path() -> Path:
    return _ROOT / "mock_behaviors.json"


def mock_script_path() -> Path:
    return _ROOT / "mock_script.json"


def replay_cache_dir() -> Path:
    return _ROOT / "replay_cache"
