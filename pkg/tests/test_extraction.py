import pytest
from hypothesis import given
from hypothesis import strategies as st

from cgbg.extraction import (
    ExtractedProgram,
    NoCodeFoundError,
    extract_code,
    normalize_entry_point,
)
from cgbg.sandbox import run_tests

# The exact mis-generation reported for the substring question.
PAPER_LITERAL = 'def foo(str):\n  return str[str.index("y")+1:str.index("z")]'


class TestExtractCode:
    def test_first_fenced_block_wins(self):
        text = (
            "Here you go:\n```\ndef foo(lst):\n  return sum(lst)/len(lst)\n```\nHope that helps"
        )
        program = extract_code(text)
        assert program.source == "def foo(lst):\n  return sum(lst)/len(lst)"
        assert program.detected_entry_point == "foo"

    def test_language_tagged_fence(self):
        program = extract_code("```python\ndef foo():\n    return 1\n```")
        assert program.source == "def foo():\n    return 1"

    def test_later_blocks_discarded(self):
        text = "```\ndef foo():\n    return 1\n```\nand a demo:\n```\nfoo()\n```"
        assert extract_code(text).source == "def foo():\n    return 1"

    def test_bare_definition_returned_unchanged(self):
        program = extract_code(PAPER_LITERAL)
        assert program.source == PAPER_LITERAL
        assert program.detected_entry_point == "foo"
        assert program.alias_applied is False

    def test_prose_then_definition_takes_def_to_end(self):
        text = "Sure, here's the code:\n\ndef foo(a, b):\n    return a + b\n"
        program = extract_code(text)
        assert program.source == "def foo(a, b):\n    return a + b"

    def test_refusal_raises(self):
        with pytest.raises(NoCodeFoundError):
            extract_code("I cannot write code for that.")

    def test_empty_fenced_block_is_no_code(self):
        with pytest.raises(NoCodeFoundError):
            extract_code("```\n\n```")

    def test_helper_definitions_kept(self):
        text = "```\nimport math\ndef helper(x):\n    return x\ndef foo(x):\n    return helper(x)\n```"
        program = extract_code(text)
        assert "import math" in program.source
        assert program.detected_entry_point == "helper"

    def test_entry_point_none_when_no_function(self):
        program = extract_code("```\nx = 1\n```")
        assert program.detected_entry_point is None

    def test_syntax_error_falls_back_to_regex(self):
        program = extract_code("def foo(:\n  return x")
        assert program.detected_entry_point == "foo"

    def test_origin_sample_index_recorded(self):
        assert extract_code("def foo(): pass", origin_sample_index=3).origin_sample_index == 3

    @given(st.text(max_size=200))
    def test_total_over_arbitrary_text(self, text):
        try:
            program = extract_code(text)
        except NoCodeFoundError:
            return
        assert program.source.strip()


class TestNormalizeEntryPoint:
    def test_matching_name_is_identity(self):
        program = extract_code("def foo():\n    return 1")
        assert normalize_entry_point(program, "foo") is program

    def test_mismatch_appends_alias(self):
        program = extract_code("def average(numbers):\n    return sum(numbers)/len(numbers)")
        normalized = normalize_entry_point(program, "foo")
        assert normalized.source.endswith("\nfoo = average")
        assert normalized.alias_applied

    def test_idempotent(self):
        program = extract_code("def average(x):\n    return x")
        once = normalize_entry_point(program, "foo")
        twice = normalize_entry_point(once, "foo")
        assert twice.source == once.source

    def test_no_entry_point_raises(self):
        program = ExtractedProgram(source="x = 1")
        with pytest.raises(NoCodeFoundError):
            normalize_entry_point(program, "foo")

    def test_alias_preserves_recursion(self, fast_limits, completed_bank):
        # A textual rename would break the self-recursive call; an alias
        # leaves it intact.
        source = (
            "def summit(lst):\n"
            "    if not lst:\n"
            "        return 0\n"
            "    return (lst[0] if lst[0] > 0 else 0) + summit(lst[1:])"
        )
        question = completed_bank.by_id()["q_sum_pos"]
        normalized = normalize_entry_point(extract_code(source), question.entry_point)
        assert run_tests(normalized, question, fast_limits).all_passed

    @pytest.mark.parametrize(
        "source",
        [
            "def mean(lst):\n    return sum(lst) / len(lst)",
            "def compute_average(lst):\n    return sum(lst) / len(lst)",
            "def foo(lst):\n    return sum(lst) / len(lst)",
        ],
    )
    def test_alias_preserves_behavior(self, source, fast_limits, completed_bank):
        question = completed_bank.by_id()["q_average"]
        normalized = normalize_entry_point(extract_code(source), question.entry_point)
        assert run_tests(normalized, question, fast_limits).all_passed
