"""Labeled student responses: the CSV corpus rows fed to batch grading."""

from __future__ import annotations

import csv
from dataclasses import dataclass

REQUIRED_COLUMNS = ("response_id", "question_id", "response_text", "human_label")


class IngestError(ValueError):
    """The responses file is unusable (missing columns, unreadable)."""


@dataclass
class ResponseRecord:
    response_id: str
    question_id: str
    response_text: str
    human_label: str | None = None  # correct | incorrect | None


@dataclass
class IngestResult:
    records: list[ResponseRecord]
    errors: list[str]


def _normalize_label(raw: str, row_num: int) -> tuple[str | None, str | None]:
    label = (raw or "").strip().lower()
    if label == "":
        return None, None
    if label in ("correct", "incorrect"):
        return label, None
    return None, f"row {row_num}: human_label {raw!r} is not correct/incorrect/blank"


def ingest_responses(path) -> IngestResult:
    """Parse the response CSV; bad rows are collected, not fatal.

    Header: response_id,question_id,response_text,human_label. Quoted
    multiline response text is supported; labels are case-insensitive and
    blank means unlabeled.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: empty file, no header row")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise IngestError(f"{path}: missing header columns: {', '.join(missing)}")

        records: list[ResponseRecord] = []
        errors: list[str] = []
        seen: set[str] = set()
        for row_num, row in enumerate(reader, start=2):
            response_id = (row.get("response_id") or "").strip()
            question_id = (row.get("question_id") or "").strip()
            response_text = row.get("response_text") or ""
            if not response_id:
                errors.append(f"row {row_num}: empty response_id")
                continue
            if response_id in seen:
                errors.append(f"row {row_num}: duplicate response_id {response_id!r}")
                continue
            if not question_id:
                errors.append(f"row {row_num}: empty question_id ({response_id!r})")
                continue
            if not response_text.strip():
                errors.append(f"row {row_num}: empty response_text ({response_id!r})")
                continue
            label, label_error = _normalize_label(row.get("human_label"), row_num)
            if label_error:
                errors.append(label_error)
                continue
            seen.add(response_id)
            records.append(
                ResponseRecord(
                    response_id=response_id,
                    question_id=question_id,
                    response_text=response_text,
                    human_label=label,
                )
            )
        return IngestResult(records=records, errors=errors)


def save_responses(records: list[ResponseRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REQUIRED_COLUMNS)
        for r in records:
            writer.writerow([r.response_id, r.question_id, r.response_text, r.human_label or ""])
