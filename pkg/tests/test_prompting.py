import json

import pytest

from cgbg import fixtures
from cgbg.prompting import (
    RESPONSE_MARKER,
    Message,
    PromptError,
    PromptTemplate,
    build_codegen_prompt,
    load_template,
    render_template_preview,
)


class TestBuildPrompt:
    def test_signature_mode_names_entry_and_params(self, average_question):
        prompt = build_codegen_prompt(
            PromptTemplate(context_mode="signature"),
            average_question,
            "finding the average of a list",
        )
        assert [m.role for m in prompt] == ["system", "user"]
        assert "foo" in prompt[0].content
        assert "lst" in prompt[0].content
        assert prompt[1].content == "finding the average of a list"

    def test_none_mode_names_entry_point_but_not_params(self, average_question):
        prompt = build_codegen_prompt(
            PromptTemplate(context_mode="none"), average_question, "averages the list"
        )
        assert "foo" in prompt[0].content  # output contract still names it
        assert "lst" not in prompt[0].content

    def test_entry_point_only_mode(self, average_question):
        prompt = build_codegen_prompt(
            PromptTemplate(context_mode="entry_point_only"), average_question, "averages"
        )
        assert "must be named foo" in prompt[0].content
        assert "lst" not in prompt[0].content

    def test_response_passed_through_verbatim(self, average_question):
        raw = "  Finding  the\naverage!!  "
        prompt = build_codegen_prompt(PromptTemplate(), average_question, raw)
        assert prompt[1].content == raw

    def test_empty_response_rejected_after_trim(self, average_question):
        with pytest.raises(PromptError, match="empty"):
            build_codegen_prompt(PromptTemplate(), average_question, "   \n ")

    def test_unknown_placeholder_named(self, average_question):
        template = PromptTemplate(pre_prompt="Use {{x}} wisely.")
        with pytest.raises(PromptError, match=r"\{\{x\}\}"):
            build_codegen_prompt(template, average_question, "whatever")

    def test_deterministic(self, substring_question):
        template = PromptTemplate()
        a = build_codegen_prompt(template, substring_question, "slice between y and z")
        b = build_codegen_prompt(template, substring_question, "slice between y and z")
        assert a == b

    @pytest.mark.parametrize("mode", ["none", "entry_point_only", "signature"])
    def test_no_reference_body_or_test_literal_leaks(self, completed_bank, mode):
        template = PromptTemplate(context_mode=mode)
        for question in completed_bank.questions:
            prompt = build_codegen_prompt(template, question, "a plausible response")
            rendered = "\n".join(m.content for m in prompt)
            body_lines = [
                line.strip()
                for line in question.reference_source.splitlines()[1:]
                if len(line.strip()) > 3
            ]
            for line in body_lines:
                assert line not in rendered, (question.id, line)
            for test in question.tests:
                assert json.dumps(test.args) not in rendered
                assert json.dumps(test.expected) not in rendered


class TestTemplateValidation:
    def test_empty_pre_prompt_rejected(self):
        with pytest.raises(PromptError, match="pre_prompt"):
            PromptTemplate(pre_prompt="  ")

    def test_unknown_context_mode_rejected(self):
        with pytest.raises(PromptError, match="context_mode"):
            PromptTemplate(context_mode="everything")

    def test_output_contract_needs_exactly_one_entry_point(self):
        with pytest.raises(PromptError, match="exactly once"):
            PromptTemplate(output_contract="Write code.")
        with pytest.raises(PromptError, match="exactly once"):
            PromptTemplate(output_contract="{{entry_point}} and {{entry_point}}")

    def test_load_template_file(self, average_question):
        template = load_template(fixtures.default_template_path())
        prompt = build_codegen_prompt(template, average_question, "averaging")
        assert "Python" in prompt[0].content

    def test_template_file_placeholders_resolve(self, tmp_path, average_question):
        path = tmp_path / "custom.txt"
        path.write_text(
            "Target {{entry_point}} takes {{arity}} argument(s): {{param_names}}.",
            encoding="utf-8",
        )
        template = load_template(path, context_mode="none")
        prompt = build_codegen_prompt(template, average_question, "averaging")
        assert "Target foo takes 1 argument(s): lst." in prompt[0].content


class TestPreview:
    def test_signature_preview_contains_marker_and_signature(self, average_question):
        preview = render_template_preview(PromptTemplate(), average_question)
        assert RESPONSE_MARKER in preview
        assert "foo" in preview
        assert "lst" in preview

    def test_none_mode_preview_has_no_params(self, average_question):
        preview = render_template_preview(
            PromptTemplate(context_mode="none"), average_question
        )
        assert "lst" not in preview

    def test_unknown_placeholder_errors(self, average_question):
        template = PromptTemplate(pre_prompt="hello {{mystery}}")
        with pytest.raises(PromptError, match="mystery"):
            render_template_preview(template, average_question)


def test_message_is_plain_record():
    message = Message(role="system", content="hi")
    assert message.role == "system"
    assert message.content == "hi"
