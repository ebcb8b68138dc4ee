"""Turn raw completion text into a runnable program.

Completions range from a bare function definition to prose wrapping one or
more fenced code blocks, to outright refusals. The first fenced block wins;
failing that, everything from the first function-definition line onward is
taken. Prose-only text is the one declared failure.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, replace

_FENCED_BLOCK_RE = re.compile(r"```[ \t]*[\w+-]*[ \t]*\r?\n?(.*?)```", re.DOTALL)
_DEF_LINE_RE = re.compile(r"^[ \t]*(?:async[ \t]+)?def[ \t]+\w+", re.MULTILINE)
_TOP_LEVEL_DEF_RE = re.compile(r"^(?:async[ \t]+)?def[ \t]+(\w+)", re.MULTILINE)


class NoCodeFoundError(ValueError):
    """The completion contained no code (prose or refusal)."""


@dataclass
class ExtractedProgram:
    source: str
    detected_entry_point: str | None = None
    alias_applied: bool = False
    origin_sample_index: int = 0


def _detect_entry_point(source: str) -> str | None:
    """Name of the first top-level function definition, if any."""
    try:
        tree = ast.parse(source)
    except SyntaxError:
        match = _TOP_LEVEL_DEF_RE.search(source)
        return match.group(1) if match else None
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            return node.name
    return None


def extract_code(completion_text: str, origin_sample_index: int = 0) -> ExtractedProgram:
    """Extract the program from a completion; raises NoCodeFoundError only."""
    match = _FENCED_BLOCK_RE.search(completion_text)
    if match:
        source = match.group(1).strip("\n")
    else:
        def_match = _DEF_LINE_RE.search(completion_text)
        if def_match is None:
            raise NoCodeFoundError("completion contains no code")
        line_start = completion_text.rfind("\n", 0, def_match.start()) + 1
        source = completion_text[line_start:].rstrip()
    if not source.strip():
        raise NoCodeFoundError("completion contains no code")
    return ExtractedProgram(
        source=source,
        detected_entry_point=_detect_entry_point(source),
        origin_sample_index=origin_sample_index,
    )


def normalize_entry_point(program: ExtractedProgram, expected: str) -> ExtractedProgram:
    """Make the program callable under ``expected``.

    A mismatched name gets an alias binding appended rather than a textual
    rename: renaming breaks self-recursive definitions and string literals
    that happen to contain the name. No-op when already normalized.
    """
    detected = program.detected_entry_point
    if detected is None:
        raise NoCodeFoundError("program has no detected entry point")
    if detected == expected:
        return program
    alias_line = f"{expected} = {detected}"
    if program.alias_applied and program.source.rstrip().endswith(alias_line):
        return program
    return replace(
        program,
        source=f"{program.source.rstrip()}\n{alias_line}",
        alias_applied=True,
    )
