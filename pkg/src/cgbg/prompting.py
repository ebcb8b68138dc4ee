"""Code-generation prompt assembly.

The system message is built from a pre-prompt, optional question context,
and an output contract naming the entry point. The student's response goes
into the user message verbatim: never rewritten, truncated, or corrected.
Reference source bodies and test cases are never included; grading the
explanation must not leak the answer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .bank import Question

CONTEXT_MODES = ("none", "entry_point_only", "signature")

RESPONSE_MARKER = "<<student response goes here>>"

DEFAULT_PRE_PROMPT = (
    "A student has described, in plain English, what a function does. "
    "Write a Python function that does exactly what the student describes. "
    "Base the code only on the student's description."
)

DEFAULT_OUTPUT_CONTRACT = (
    "Respond with a single Python definition of {{entry_point}} and nothing "
    "else: no explanation, no usage examples."
)

_PLACEHOLDER_RE = re.compile(r"\{\{\s*(\w+)\s*\}\}")
_ENTRY_POINT_PLACEHOLDER_RE = re.compile(r"\{\{\s*entry_point\s*\}\}")


class PromptError(ValueError):
    """Empty response or an unresolvable template placeholder."""


@dataclass
class Message:
    role: str  # system | user
    content: str


@dataclass
class PromptTemplate:
    pre_prompt: str = DEFAULT_PRE_PROMPT
    context_mode: str = "signature"
    output_contract: str = DEFAULT_OUTPUT_CONTRACT

    def __post_init__(self):
        if not self.pre_prompt.strip():
            raise PromptError("pre_prompt must be non-empty")
        if self.context_mode not in CONTEXT_MODES:
            raise PromptError(f"unknown context_mode {self.context_mode!r}")
        if len(_ENTRY_POINT_PLACEHOLDER_RE.findall(self.output_contract)) != 1:
            raise PromptError(
                "output_contract must mention the {{entry_point}} placeholder exactly once"
            )


def load_template(path, context_mode: str = "signature") -> PromptTemplate:
    """Template file = the pre-prompt text (placeholders allowed)."""
    with open(path, encoding="utf-8") as fh:
        return PromptTemplate(pre_prompt=fh.read().strip(), context_mode=context_mode)


def _context_text(mode: str) -> str:
    if mode == "none":
        return ""
    if mode == "entry_point_only":
        return "The function must be named {{entry_point}}."
    count = "{{arity}} parameter(s) named {{param_names}}"
    return f"The function must be named {{{{entry_point}}}} and take {count}."


def _substitute(text: str, question: "Question") -> str:
    fields = {
        "entry_point": question.entry_point,
        "param_names": ", ".join(question.param_names) if question.param_names else "(none)",
        "arity": str(question.arity),
    }

    def _replace(match: re.Match) -> str:
        name = match.group(1)
        if name not in fields:
            raise PromptError(f"unresolved template placeholder {{{{{name}}}}}")
        return fields[name]

    return _PLACEHOLDER_RE.sub(_replace, text)


def _system_text(template: PromptTemplate, question: "Question") -> str:
    parts = [template.pre_prompt]
    context = _context_text(template.context_mode)
    if context:
        parts.append(context)
    parts.append(template.output_contract)
    return _substitute("\n\n".join(parts), question)


def build_codegen_prompt(
    template: PromptTemplate, question: "Question", response_text: str
) -> list[Message]:
    """System message per template; user message = the response, verbatim."""
    if not response_text.strip():
        raise PromptError("student response is empty")
    return [
        Message(role="system", content=_system_text(template, question)),
        Message(role="user", content=response_text),
    ]


def render_template_preview(template: PromptTemplate, question: "Question") -> str:
    """Full resolved system text plus a marker where the response will go."""
    return f"{_system_text(template, question)}\n\n{RESPONSE_MARKER}"
