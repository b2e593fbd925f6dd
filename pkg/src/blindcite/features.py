"""Covariate construction and design-matrix encoding.

Turns raw `PaperRecord` rows into the numeric matrix shared by every
estimator in the package: continuous columns (optionally arsinh-scaled),
dummy blocks for the biomedical-triangle region, language rank, publication
year and publication types, and the chosen response column.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import SCORE_SUM_SLACK, PaperRecord
from .errors import ConfigError, ShapeError, ValidationError

#: Sum-of-scores threshold below which a record sits outside the triangle.
TAU_OUT = 1e-9

#: Language codes treated as English for the rank construction.
ENGLISH_CODES = frozenset({"eng", "en", "english"})

RESPONSE_KINDS = ("weighted_sjr", "citation_count")
TIERS = ("numeric", "icite", "complete")

#: Continuous covariates in fixed column order (after the intercept).
NUMERIC_COLUMNS = (
    "H Score",
    "A Score",
    "C Score",
    "Title",
    "References",
    "Age",
    "MeSH",
    "Length",
)

#: Count-like continuous columns that get the arsinh transform by default.
ARSINH_COLUMNS = frozenset({"Title", "References", "Age", "MeSH", "Length"})

ICITE_COLUMNS = (
    "Clinical",
    "Research",
    "Triangle ACH",
    "Triangle C",
    "Triangle H",
    "Triangle Outside",
    "Access",
    "Language 2",
    "Language 3",
)


def arsinh(x):
    """Inverse hyperbolic sine, ln(x + sqrt(x^2 + 1)).

    Monotone, odd and defined at zero, which makes it the log-like
    transform of choice for non-negative, zero-heavy quantities. Accepts
    scalars or arrays.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("arsinh requires finite input")
    out = np.arcsinh(arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def language_rank(languages: Sequence[str]) -> int:
    """Rank a paper's language list: 1 English only, 2 bilingual, 3 no English."""
    if len(languages) == 0:
        raise ValidationError("language list must be non-empty")
    is_english = [lang.strip().lower() in ENGLISH_CODES for lang in languages]
    if all(is_english):
        return 1
    if any(is_english):
        return 2
    return 3


class TriangleRegion(enum.Enum):
    """Subregion of the biomedical triangle; A is the dummy reference level."""

    A = "A"
    C = "C"
    H = "H"
    ACH = "ACH"
    OUTSIDE = "Outside"


def classify_triangle(a_score: float, c_score: float, h_score: float) -> TriangleRegion:
    """Locate a paper in the subdivided biomedical triangle.

    Scores are normalized to barycentric coordinates; a corner subtriangle
    wins when its coordinate exceeds 1/2, the central region when all three
    are at most 1/2. Points exactly on a region boundary therefore resolve to
    the central region first, which fixes the tie order ACH > A > C > H.
    Records whose scores sum below ``TAU_OUT`` sit outside the triangle.
    """
    scores = (a_score, c_score, h_score)
    if any(not math.isfinite(s) or s < 0.0 for s in scores):
        raise ValidationError(f"scores must be non-negative and finite, got {scores}")
    total = sum(scores)
    if total > 1.0 + SCORE_SUM_SLACK:
        raise ValidationError(f"scores must sum to <= 1, got {total}")
    if total < TAU_OUT:
        return TriangleRegion.OUTSIDE
    bary = [s / total for s in scores]
    if all(b <= 0.5 for b in bary):
        return TriangleRegion.ACH
    for region, b in zip((TriangleRegion.A, TriangleRegion.C, TriangleRegion.H), bary):
        if b > 0.5:
            return region
    raise AssertionError("unreachable: at most one barycentric coordinate exceeds 1/2")


@dataclass(frozen=True)
class EncodingConfig:
    """Response choice, model tier and transformation policy for encoding.

    ``tier`` selects the covariate set: ``numeric`` emits only the eight
    continuous columns, ``icite`` adds the binary and categorical metadata
    columns, ``complete`` adds publication-year and publication-type
    dummies on top. ``raw_predictors`` disables the default arsinh
    transform of the count-like continuous predictors.
    """

    response_kind: str = "weighted_sjr"
    tier: str = "complete"
    raw_predictors: bool = False

    def __post_init__(self) -> None:
        if self.response_kind not in RESPONSE_KINDS:
            raise ConfigError(
                f"response_kind must be one of {RESPONSE_KINDS}, got {self.response_kind!r}"
            )
        if self.tier not in TIERS:
            raise ConfigError(f"tier must be one of {TIERS}, got {self.tier!r}")


@dataclass(frozen=True)
class EncodingSchema:
    """Frozen column layout derived from a training corpus.

    Re-encoding new records against the same schema keeps column order and
    dummy levels identical, which is what prediction on unseen data needs.
    The year reference level is the earliest year seen.
    """

    config: EncodingConfig
    years: tuple[int, ...] = ()
    pub_types: tuple[str, ...] = ()

    @property
    def column_names(self) -> tuple[str, ...]:
        names = ["intercept", *NUMERIC_COLUMNS]
        if self.config.tier in ("icite", "complete"):
            names.extend(ICITE_COLUMNS)
        if self.config.tier == "complete":
            names.extend(f"Year {year}" for year in self.years[1:])
            names.extend(self.pub_types)
        return tuple(names)


@dataclass
class DesignMatrix:
    """Encoded feature matrix, response vector and column metadata.

    Arrays are frozen after construction and safe to share across threads.
    """

    x: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]
    response_kind: str
    intercept_col: int = 0
    schema: EncodingSchema | None = None

    def __post_init__(self) -> None:
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        n, p = self.x.shape
        if n == 0 or p < 1:
            raise ValidationError(f"design matrix must have n > 0, p >= 1, got {n}x{p}")
        if self.y.shape != (n,):
            raise ShapeError(f"response length {self.y.shape} does not match n = {n}")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise ValidationError("design matrix and response must be finite")
        if len(self.column_names) != p:
            raise ShapeError("column_names length does not match column count")
        if len(set(self.column_names)) != p:
            raise ValidationError("column names must be unique")
        if not np.all(self.x[:, self.intercept_col] == 1.0):
            raise ValidationError("intercept column must be all ones")
        self.x.flags.writeable = False
        self.y.flags.writeable = False

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def _response_rows(
    records: Sequence[PaperRecord], config: EncodingConfig
) -> list[PaperRecord]:
    """Validate records and drop the ones unusable for the chosen response."""
    if len(records) == 0:
        raise ValidationError("no records to encode")
    for record in records:
        record.validate()
    if config.response_kind == "weighted_sjr":
        kept = [r for r in records if r.sjr is not None]
        if not kept:
            raise ConfigError(
                "response 'weighted_sjr' needs records with an SJR weight; none present"
            )
        return kept
    return list(records)


def schema_from_records(
    records: Sequence[PaperRecord], config: EncodingConfig
) -> EncodingSchema:
    """Derive the dummy levels (years, publication types) from a corpus."""
    rows = _response_rows(records, config)
    years: tuple[int, ...] = ()
    pub_types: tuple[str, ...] = ()
    if config.tier == "complete":
        years = tuple(sorted({r.year for r in rows}))
        pub_types = tuple(sorted(set().union(*(r.pub_types for r in rows))))
        reserved = {"intercept", *NUMERIC_COLUMNS, *ICITE_COLUMNS} | {
            f"Year {y}" for y in years
        }
        clash = [t for t in pub_types if t in reserved]
        if clash:
            raise ValidationError(f"publication-type labels clash with columns: {clash}")
    return EncodingSchema(config=config, years=years, pub_types=pub_types)


def encode_records(
    records: Sequence[PaperRecord], schema: EncodingSchema
) -> DesignMatrix:
    """Encode records against a fixed schema (prediction-time entry point).

    Unknown publication-type labels are ignored (they were not part of the
    fitted model); a year outside the schema's levels is an error because
    dummy coding would silently alias it with the reference year.
    """
    config = schema.config
    rows = _response_rows(records, config)
    names = schema.column_names
    n, p = len(rows), len(names)
    transform = (lambda v: v) if config.raw_predictors else arsinh

    x = np.zeros((n, p), dtype=np.float64)
    y = np.zeros(n, dtype=np.float64)
    col = {name: j for j, name in enumerate(names)}
    year_levels = set(schema.years)
    pub_levels = set(schema.pub_types)

    for i, r in enumerate(rows):
        x[i, 0] = 1.0
        x[i, col["H Score"]] = r.h_score
        x[i, col["A Score"]] = r.a_score
        x[i, col["C Score"]] = r.c_score
        x[i, col["Title"]] = transform(float(r.title_len))
        x[i, col["References"]] = transform(float(r.n_references))
        x[i, col["Age"]] = transform(r.ref_mean_age)
        x[i, col["MeSH"]] = transform(float(r.mesh_count))
        x[i, col["Length"]] = transform(r.page_length)
        if config.tier in ("icite", "complete"):
            x[i, col["Clinical"]] = 1.0 if r.clinical else 0.0
            x[i, col["Research"]] = 1.0 if r.research else 0.0
            x[i, col["Access"]] = 1.0 if r.access else 0.0
            region = classify_triangle(r.a_score, r.c_score, r.h_score)
            if region is not TriangleRegion.A:
                x[i, col[f"Triangle {region.value}"]] = 1.0
            rank = language_rank(r.languages)
            if rank > 1:
                x[i, col[f"Language {rank}"]] = 1.0
        if config.tier == "complete":
            if r.year not in year_levels:
                raise ValidationError(
                    f"record {r.pmid!r}: year {r.year} not among the fitted levels "
                    f"{sorted(year_levels)}"
                )
            if r.year != schema.years[0]:
                x[i, col[f"Year {r.year}"]] = 1.0
            for label in r.pub_types:
                if label in pub_levels:
                    x[i, col[label]] = 1.0
        if config.response_kind == "weighted_sjr":
            y[i] = arsinh(r.sjr)
        else:
            y[i] = float(r.citations)

    return DesignMatrix(
        x=x,
        y=y,
        column_names=names,
        response_kind=config.response_kind,
        intercept_col=0,
        schema=schema,
    )


def build_design_matrix(
    records: Sequence[PaperRecord], config: EncodingConfig
) -> DesignMatrix:
    """Derive the schema from the records and encode them.

    Deterministic: identical inputs give bit-identical matrices and column
    orders. Records missing SJR are dropped for the weighted response and
    kept for the count response.
    """
    schema = schema_from_records(records, config)
    return encode_records(records, schema)


def split_train_test(
    records: Sequence[PaperRecord],
    train_fraction: float,
    seed: int,
) -> tuple[list[PaperRecord], list[PaperRecord]]:
    """Split records into train and test within each publication year.

    Per year, a uniformly random ``ceil(train_fraction * n_year)``-subset
    goes to train and the remainder to test. Uses the counter-based Philox
    generator, so a seed reproduces the same partition on any platform.
    """
    if len(records) == 0:
        raise ValidationError("cannot split an empty record list")
    if not (0.0 < train_fraction < 1.0):
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    by_year: dict[int, list[int]] = {}
    for idx, record in enumerate(records):
        by_year.setdefault(record.year, []).append(idx)
    train_idx: list[int] = []
    for year in sorted(by_year):
        indices = by_year[year]
        n_train = math.ceil(train_fraction * len(indices))
        order = rng.permutation(len(indices))
        train_idx.extend(indices[k] for k in order[:n_train])
    chosen = set(train_idx)
    train = [records[i] for i in sorted(chosen)]
    test = [records[i] for i in range(len(records)) if i not in chosen]
    return train, test
