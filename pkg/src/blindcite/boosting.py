"""Component-wise gradient boosting with simple linear base-learners.

Functional gradient descent on the empirical risk: each iteration fits
every base-learner to the negative gradient of the loss at the current
linear predictor, keeps the single best one by residual sum of squares and
takes a small step ``sl`` in its direction. Early stopping at ``m_stop``
iterations is the regularizer, tuned by subsampling cross-validation; the
fraction of iterations each learner wins is its selection probability.

Base-learners are one simple regression per design column plus a dedicated
intercept learner. Non-intercept columns are mean-centered and scaled to
unit variance internally so the RSS comparison is fair; reported
coefficients are mapped back to the original scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _kernels
from .errors import ConfigError, NumericalError, ShapeError, ValidationError
from .features import DesignMatrix
from .negbin import _check_counts, nb_log_pmf, nb_score_eta, profile_psi

LOSS_KINDS = ("squared_error", "negbin_nll")
PSI_POLICIES = ("fixed", "profile_each_iteration")


@dataclass(frozen=True)
class LossSpec:
    """Loss function driving the boosting updates.

    ``squared_error`` (0.5 * (y - eta)^2) serves the arsinh-scale weighted
    response; ``negbin_nll`` boosts the count model with mean exp(eta).
    For the count loss, ``psi_policy`` decides whether the dispersion stays
    at ``psi`` or is re-profiled by 1-D maximum likelihood after every
    iteration (``psi`` then only seeds the first iteration, default 1).
    """

    kind: str
    psi_policy: str = "profile_each_iteration"
    psi: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ConfigError(f"loss kind must be one of {LOSS_KINDS}, got {self.kind!r}")
        if self.psi_policy not in PSI_POLICIES:
            raise ConfigError(
                f"psi_policy must be one of {PSI_POLICIES}, got {self.psi_policy!r}"
            )
        if self.psi is not None and not (np.isfinite(self.psi) and self.psi > 0):
            raise ConfigError(f"psi must be positive, got {self.psi}")
        if self.kind == "negbin_nll" and self.psi_policy == "fixed" and self.psi is None:
            raise ConfigError("fixed psi_policy requires an explicit psi value")

    def initial_psi(self) -> float:
        return self.psi if self.psi is not None else 1.0


def negative_gradient(loss: LossSpec, y, eta, psi: float | None = None) -> np.ndarray:
    """Negative gradient of the loss in the linear predictor, elementwise.

    Squared error gives the plain residual y - eta; the count loss gives
    y - (y + psi) * exp(eta) / (exp(eta) + psi).
    """
    y = np.asarray(y, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if y.shape != eta.shape:
        raise ValidationError(f"y shape {y.shape} does not match eta shape {eta.shape}")
    if not np.all(np.isfinite(eta)) or not np.all(np.isfinite(y)):
        raise ValidationError("y and eta must be finite")
    if loss.kind == "squared_error":
        return y - eta
    psi_val = psi if psi is not None else loss.psi
    if psi_val is None:
        raise ConfigError("negbin negative gradient needs a psi value")
    return nb_score_eta(y, np.exp(eta), psi_val)


def fit_base_learner(u, x_j) -> tuple[float, float]:
    """Least-squares fit of one column to the negative gradient.

    Returns (coefficient, residual sum of squares).
    """
    u = np.asarray(u, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    if u.shape != x_j.shape:
        raise ValidationError("u and x_j must have matching shapes")
    sumsq = float(x_j @ x_j)
    if sumsq == 0.0:
        raise ValidationError("base-learner column is identically zero")
    b = float(u @ x_j) / sumsq
    resid = u - b * x_j
    return b, float(resid @ resid)


@dataclass(frozen=True)
class _LearnerSet:
    """Internal learner matrix plus the original-scale bookkeeping."""

    lt: np.ndarray  # (k, n), one learner per row
    colsumsq: np.ndarray  # (k,)
    columns: np.ndarray  # design column index per learner
    means: np.ndarray  # per design column; 0 where unused
    scales: np.ndarray  # per design column; 1 where unused


def _prepare_learners(
    x: np.ndarray, intercept_col: int, standardize: bool
) -> _LearnerSet:
    n, p = x.shape
    means = np.zeros(p)
    scales = np.ones(p)
    columns = []
    rows = []
    for j in range(p):
        col = x[:, j]
        if j == intercept_col:
            columns.append(j)
            rows.append(np.ones(n))
            continue
        sd = float(col.std())
        if sd == 0.0:
            continue  # zero-variance columns are excluded at setup
        if standardize:
            means[j] = float(col.mean())
            scales[j] = sd
            rows.append((col - means[j]) / scales[j])
        else:
            rows.append(col.astype(np.float64))
        columns.append(j)
    lt = np.ascontiguousarray(np.vstack(rows))
    colsumsq = np.einsum("ij,ij->i", lt, lt)
    return _LearnerSet(
        lt=lt,
        colsumsq=colsumsq,
        columns=np.asarray(columns, dtype=np.int64),
        means=means,
        scales=scales,
    )


def _transform_rows(x: np.ndarray, learners: _LearnerSet, intercept_col: int):
    """Encode new rows into the learner coordinate system (for held-out risk)."""
    rows = []
    for j in learners.columns:
        if j == intercept_col:
            rows.append(np.ones(x.shape[0]))
        else:
            rows.append((x[:, j] - learners.means[j]) / learners.scales[j])
    return np.ascontiguousarray(np.vstack(rows))


@dataclass(frozen=True)
class BoostingModel:
    """Recorded boosting path: selections, increments and risk curves.

    ``selections`` holds the winning design-column index per iteration and
    ``increments`` the base-learner coefficient (internal, standardized
    scale) it contributed; the aggregated model at any m is reconstructed
    from the two. ``train_risk[m]`` is the mean per-observation loss after
    m iterations, starting at the zero offset.
    """

    column_names: tuple[str, ...]
    intercept_col: int
    loss: LossSpec
    sl: float
    m_stop: int
    selections: np.ndarray
    increments: np.ndarray
    train_risk: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    standardized: bool
    offset: float = 0.0
    psi: float | None = None
    oob_risk: np.ndarray | None = None

    @property
    def p(self) -> int:
        return len(self.column_names)

    @property
    def coefficients(self) -> np.ndarray:
        return coefficients_at(self, self.m_stop)


def coefficients_at(model: BoostingModel, m: int, scale: str = "original") -> np.ndarray:
    """Aggregated coefficient vector after m iterations.

    ``scale="internal"`` stays in the standardized learner coordinates,
    where consecutive vectors differ in exactly one component by
    sl * increment; ``"original"`` maps back to the design-matrix scale
    (the intercept then absorbs the centering shifts).
    """
    if not 0 <= m <= model.m_stop:
        raise IndexError(f"m must lie in [0, {model.m_stop}], got {m}")
    if scale not in ("original", "internal"):
        raise ConfigError(f"unknown scale {scale!r}")
    g = np.zeros(model.p)
    np.add.at(g, model.selections[:m], model.sl * model.increments[:m])
    if scale == "internal":
        return g
    coef = g / model.scales
    coef[model.intercept_col] -= float(coef @ model.means)
    return coef


def predict_boost(model: BoostingModel, x_new: np.ndarray) -> np.ndarray:
    """Linear predictor of the boosted model on new rows."""
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 2 or x_new.shape[1] != model.p:
        raise ShapeError(
            f"x_new must have {model.p} columns matching the boosted model, "
            f"got shape {x_new.shape}"
        )
    return model.offset + x_new @ coefficients_at(model, model.m_stop)


def selection_probabilities(model: BoostingModel) -> dict[int, float]:
    """Fraction of iterations each design column won; sums to one."""
    counts: dict[int, int] = {}
    for j in model.selections:
        counts[int(j)] = counts.get(int(j), 0) + 1
    return {j: c / model.m_stop for j, c in sorted(counts.items())}


def _negbin_path(
    learners: _LearnerSet,
    y: np.ndarray,
    loss: LossSpec,
    sl: float,
    m_stop: int,
    lt_oob: np.ndarray | None = None,
    y_oob: np.ndarray | None = None,
):
    """Count-loss boosting loop; the learner scan runs in the kernel."""
    n = y.shape[0]
    psi = loss.initial_psi()
    profile = loss.psi_policy == "profile_each_iteration"
    eta = np.zeros(n)
    selections = np.empty(m_stop, dtype=np.int64)
    increments = np.empty(m_stop, dtype=np.float64)
    risk = np.empty(m_stop + 1, dtype=np.float64)
    risk[0] = -float(np.sum(nb_log_pmf(y, np.exp(eta), psi))) / n

    track_oob = lt_oob is not None
    if track_oob:
        eta_oob = np.zeros(y_oob.shape[0])
        risk_oob = np.empty(m_stop + 1, dtype=np.float64)
        risk_oob[0] = -float(np.sum(nb_log_pmf(y_oob, np.exp(eta_oob), psi))) / len(y_oob)

    for m in range(m_stop):
        mu = np.exp(eta)
        u = nb_score_eta(y, mu, psi)
        j, b = _kernels.scan_learners(learners.lt, u, learners.colsumsq)
        eta += sl * b * learners.lt[j]
        if profile:
            psi, _ = profile_psi(y, np.exp(eta), psi)
        risk[m + 1] = -float(np.sum(nb_log_pmf(y, np.exp(eta), psi))) / n
        if not np.isfinite(risk[m + 1]):
            raise NumericalError(f"non-finite boosting risk at iteration {m + 1}")
        selections[m] = j
        increments[m] = b
        if track_oob:
            eta_oob += sl * b * lt_oob[j]
            risk_oob[m + 1] = (
                -float(np.sum(nb_log_pmf(y_oob, np.exp(eta_oob), psi))) / len(y_oob)
            )

    if track_oob:
        return selections, increments, risk, risk_oob, psi
    return selections, increments, risk, None, psi


def _run_path(
    learners: _LearnerSet,
    y: np.ndarray,
    loss: LossSpec,
    sl: float,
    m_stop: int,
    lt_oob: np.ndarray | None = None,
    y_oob: np.ndarray | None = None,
):
    if loss.kind == "squared_error":
        out = _kernels.squared_path(learners.lt, y, sl, m_stop, lt_oob, y_oob)
        if lt_oob is not None:
            sel, inc, risk, risk_oob = out
        else:
            sel, inc, risk = out
            risk_oob = None
        if not np.all(np.isfinite(risk)):
            bad = int(np.argmax(~np.isfinite(risk)))
            raise NumericalError(f"non-finite boosting risk at iteration {bad}")
        return sel, inc, risk, risk_oob, None
    return _negbin_path(learners, y, loss, sl, m_stop, lt_oob, y_oob)


def boost(
    dm: DesignMatrix,
    loss: LossSpec,
    sl: float = 0.1,
    m_stop: int = 100,
    standardize: bool = True,
) -> BoostingModel:
    """Run m_stop boosting iterations from the zero offset.

    Per iteration: compute the negative gradient at the current predictor,
    fit every base-learner to it, select the one with the smallest residual
    sum of squares (lowest column index wins ties) and move the predictor
    by sl times its fit. The default sl of 0.1 is the conventional step
    length; sufficiently large m_stop drives squared-error boosting to the
    least-squares solution.
    """
    if not (0.0 < sl <= 1.0):
        raise ConfigError(f"step length must lie in (0, 1], got {sl}")
    if m_stop < 1:
        raise ConfigError(f"m_stop must be >= 1, got {m_stop}")
    if loss.kind == "negbin_nll":
        if dm.response_kind != "citation_count":
            raise ConfigError("negbin_nll boosting expects the citation_count response")
        _check_counts(dm.y)
    learners = _prepare_learners(dm.x, dm.intercept_col, standardize)
    sel_learner, inc, risk, _, psi = _run_path(learners, dm.y, loss, sl, m_stop)
    return BoostingModel(
        column_names=dm.column_names,
        intercept_col=dm.intercept_col,
        loss=loss,
        sl=sl,
        m_stop=m_stop,
        selections=learners.columns[sel_learner],
        increments=inc,
        train_risk=risk,
        means=learners.means,
        scales=learners.scales,
        standardized=standardize,
        psi=psi,
    )


@dataclass(frozen=True)
class SubsampleCVResult:
    """Out-of-bag tuning of the stopping iteration.

    ``oob_curves[f, m]`` is fold f's mean held-out loss after m iterations;
    ``fold_optima`` are the per-fold argmins and ``m_opt`` their rounded
    mean (never below 1, so the chosen model performs at least one
    iteration).
    """

    m_opt: int
    fold_optima: np.ndarray
    oob_curves: np.ndarray
    fit_indices: list[np.ndarray]

    @property
    def folds(self) -> int:
        return self.oob_curves.shape[0]


def subsample_cv(
    dm: DesignMatrix,
    loss: LossSpec,
    sl: float = 0.1,
    m_grid_max: int = 5000,
    folds: int = 10,
    subsample_fraction: float = 0.5,
    seed: int = 0,
    standardize: bool = True,
) -> SubsampleCVResult:
    """Choose the stopping iteration by repeated subsampling.

    Each fold draws ``subsample_fraction`` of the rows without replacement
    as its fit set, boosts to ``m_grid_max`` and records the mean loss on
    the held-out remainder at every iteration. The per-fold optimum is the
    argmin of that curve and the overall ``m_opt`` the rounded average of
    the fold optima. Folds use independently spawned counter-based
    generators, so results do not depend on execution order.
    """
    if folds < 2:
        raise ConfigError(f"need at least 2 folds, got {folds}")
    if m_grid_max < 1:
        raise ConfigError(f"m_grid_max must be >= 1, got {m_grid_max}")
    if not (0.0 < subsample_fraction < 1.0):
        raise ConfigError(
            f"subsample_fraction must lie in (0, 1), got {subsample_fraction}"
        )
    n = dm.n
    n_fit = math.ceil(subsample_fraction * n)
    seeds = np.random.SeedSequence(seed).spawn(folds)
    curves = np.empty((folds, m_grid_max + 1))
    optima = np.empty(folds, dtype=np.int64)
    fit_indices: list[np.ndarray] = []
    for f in range(folds):
        if n_fit < 2 or n - n_fit < 1:
            raise ConfigError(
                f"fold {f}: subsample of {n_fit} rows out of {n} leaves no usable split"
            )
        rng = np.random.Generator(np.random.Philox(seeds[f]))
        perm = rng.permutation(n)
        fit_idx = np.sort(perm[:n_fit])
        oob_idx = np.sort(perm[n_fit:])
        x_fit = dm.x[fit_idx]
        learners = _prepare_learners(x_fit, dm.intercept_col, standardize)
        lt_oob = _transform_rows(dm.x[oob_idx], learners, dm.intercept_col)
        _, _, _, risk_oob, _ = _run_path(
            learners, dm.y[fit_idx], loss, sl, m_grid_max, lt_oob, dm.y[oob_idx]
        )
        curves[f] = risk_oob
        optima[f] = int(np.argmin(risk_oob))
        fit_indices.append(fit_idx)
    m_opt = max(1, int(math.floor(float(optima.mean()) + 0.5)))
    return SubsampleCVResult(
        m_opt=m_opt, fold_optima=optima, oob_curves=curves, fit_indices=fit_indices
    )
