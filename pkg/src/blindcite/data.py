"""Paper records and the canonical CSV interchange format.

One row per paper, header required, columns in `CSV_COLUMNS` order.
``languages`` and ``pub_types`` are ``;``-separated lists, booleans are
``0``/``1``, a missing SJR weight is an empty field. UTF-8, ``.`` decimal
separator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ValidationError

SCORE_SUM_SLACK = 1e-9

CSV_COLUMNS = (
    "pmid",
    "year",
    "citations",
    "sjr",
    "mesh_count",
    "a_score",
    "c_score",
    "h_score",
    "title_len",
    "n_references",
    "ref_mean_age",
    "page_length",
    "languages",
    "clinical",
    "research",
    "access",
    "pub_types",
)


@dataclass(frozen=True)
class PaperRecord:
    """Raw covariates and responses for a single publication.

    ``sjr`` is the journal-rank-weighted citation total and may be absent
    (``None``); ``a_score``/``c_score``/``h_score`` are the proportions of
    the paper's indexing terms falling in the animal, molecular and human
    domains and must sum to at most 1.
    """

    pmid: str
    year: int
    citations: int
    sjr: float | None
    mesh_count: int
    a_score: float
    c_score: float
    h_score: float
    title_len: int
    n_references: int
    ref_mean_age: float
    page_length: float
    languages: tuple[str, ...]
    clinical: bool
    research: bool
    access: bool
    pub_types: frozenset[str] = field(default_factory=frozenset)

    def validate(self) -> None:
        """Check the record's invariants, raising ValidationError with the pmid."""
        problems = []
        if self.citations < 0:
            problems.append(f"citations must be >= 0, got {self.citations}")
        if self.sjr is not None and (not math.isfinite(self.sjr) or self.sjr < 0):
            problems.append(f"sjr must be >= 0 when present, got {self.sjr}")
        if self.mesh_count < 0:
            problems.append(f"mesh_count must be >= 0, got {self.mesh_count}")
        scores = (self.a_score, self.c_score, self.h_score)
        if any(not math.isfinite(s) or s < 0.0 or s > 1.0 for s in scores):
            problems.append(f"scores must lie in [0, 1], got {scores}")
        elif sum(scores) > 1.0 + SCORE_SUM_SLACK:
            problems.append(f"scores must sum to <= 1, got {sum(scores)}")
        if self.mesh_count == 0 and any(s != 0.0 for s in scores):
            problems.append("mesh_count = 0 requires all scores to be 0")
        if self.title_len < 1:
            problems.append(f"title_len must be >= 1, got {self.title_len}")
        if self.n_references < 0:
            problems.append(f"n_references must be >= 0, got {self.n_references}")
        if not math.isfinite(self.ref_mean_age) or self.ref_mean_age < 0:
            problems.append(f"ref_mean_age must be >= 0, got {self.ref_mean_age}")
        if not math.isfinite(self.page_length) or self.page_length <= 0:
            problems.append(f"page_length must be > 0, got {self.page_length}")
        if len(self.languages) == 0:
            problems.append("languages must be non-empty")
        if problems:
            raise ValidationError(f"record {self.pmid!r}: " + "; ".join(problems))


def _parse_bool(raw: str, column: str, where: str) -> bool:
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise ValidationError(f"{where}: column {column!r} must be 0 or 1, got {raw!r}")


def _parse_int(raw: str, column: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(
            f"{where}: column {column!r} must be an integer, got {raw!r}"
        ) from None


def _parse_float(raw: str, column: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ValidationError(
            f"{where}: column {column!r} must be numeric, got {raw!r}"
        ) from None
    if not math.isfinite(value):
        raise ValidationError(f"{where}: column {column!r} must be finite, got {raw!r}")
    return value


def _parse_list(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(";") if part.strip())


def record_from_row(row: dict[str, str], where: str = "row") -> PaperRecord:
    """Build and validate a PaperRecord from one CSV row (strings)."""
    missing = [c for c in CSV_COLUMNS if c not in row or row[c] is None]
    if missing:
        raise ValidationError(f"{where}: missing columns {missing}")
    sjr_raw = row["sjr"].strip()
    record = PaperRecord(
        pmid=row["pmid"].strip(),
        year=_parse_int(row["year"], "year", where),
        citations=_parse_int(row["citations"], "citations", where),
        sjr=None if sjr_raw == "" else _parse_float(sjr_raw, "sjr", where),
        mesh_count=_parse_int(row["mesh_count"], "mesh_count", where),
        a_score=_parse_float(row["a_score"], "a_score", where),
        c_score=_parse_float(row["c_score"], "c_score", where),
        h_score=_parse_float(row["h_score"], "h_score", where),
        title_len=_parse_int(row["title_len"], "title_len", where),
        n_references=_parse_int(row["n_references"], "n_references", where),
        ref_mean_age=_parse_float(row["ref_mean_age"], "ref_mean_age", where),
        page_length=_parse_float(row["page_length"], "page_length", where),
        languages=_parse_list(row["languages"]),
        clinical=_parse_bool(row["clinical"], "clinical", where),
        research=_parse_bool(row["research"], "research", where),
        access=_parse_bool(row["access"], "access", where),
        pub_types=frozenset(_parse_list(row["pub_types"])),
    )
    record.validate()
    return record


def read_records(path) -> list[PaperRecord]:
    """Read the canonical CSV into validated PaperRecords."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty file, header row required")
        extra = [c for c in reader.fieldnames if c not in CSV_COLUMNS]
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if extra or missing:
            raise ValidationError(
                f"{path}: header mismatch (missing {missing}, unexpected {extra})"
            )
        records = []
        for i, row in enumerate(reader, start=2):
            records.append(record_from_row(row, where=f"{path}:{i}"))
    return records


def _format_float(value: float) -> str:
    return f"{value:.17g}"


def record_to_row(record: PaperRecord) -> list[str]:
    return [
        record.pmid,
        str(record.year),
        str(record.citations),
        "" if record.sjr is None else _format_float(record.sjr),
        str(record.mesh_count),
        _format_float(record.a_score),
        _format_float(record.c_score),
        _format_float(record.h_score),
        str(record.title_len),
        str(record.n_references),
        _format_float(record.ref_mean_age),
        _format_float(record.page_length),
        ";".join(record.languages),
        "1" if record.clinical else "0",
        "1" if record.research else "0",
        "1" if record.access else "0",
        ";".join(sorted(record.pub_types)),
    ]


def write_records(path, records: Iterable[PaperRecord]) -> None:
    """Write PaperRecords as canonical CSV."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record_to_row(record))


def validate_records(records: Sequence[PaperRecord]) -> None:
    for record in records:
        record.validate()
