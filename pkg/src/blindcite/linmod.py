"""Ordinary least squares for the arsinh-transformed weighted-citation model.

The response is E(y_i) = x_i' beta with y on the arsinh scale. Estimation
uses a column-pivoted QR decomposition rather than the normal equations;
inference is the classical OLS output (standard errors, t tests against the
Student t with n - p degrees of freedom, overall F test against the
intercept-only model).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats

from .errors import ConfigError, NumericalError, ShapeError, ValidationError
from .features import DesignMatrix


@dataclass(frozen=True)
class LinearEffect:
    """Dual reading of an arsinh-arsinh coefficient.

    For large predictor values the model behaves like log-log, so the
    coefficient is a percent change per percent; for small values it acts
    like an untransformed linear model, units per unit. Both readings share
    the same number.
    """

    percent_effect_large_x: float
    unit_effect_small_x: float


@dataclass(frozen=True)
class FittedLinearModel:
    """OLS estimate with frequentist inference statistics."""

    beta: np.ndarray
    sigma_hat: float
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r2: float
    adj_r2: float
    f_stat: float
    f_pvalue: float
    df_model: int
    df_resid: int
    n: int
    column_names: tuple[str, ...]

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def rss(self) -> float:
        # consistency identity: sigma_hat^2 * df_resid = residual sum of squares
        return self.sigma_hat**2 * self.df_resid

    @property
    def sigma_mle(self) -> float:
        """Maximum-likelihood residual scale (divisor n, not n - p)."""
        return float(np.sqrt(self.rss / self.n))


def fit_ols(dm: DesignMatrix) -> FittedLinearModel:
    """Fit the linear model by column-pivoted QR.

    Requires ``dm.response_kind == "weighted_sjr"`` and n > p. A numerically
    rank-deficient matrix raises NumericalError naming the dependent
    columns. The decomposition is deterministic for fixed inputs, so
    repeated fits are bit-stable.
    """
    if dm.response_kind != "weighted_sjr":
        raise ConfigError(
            f"fit_ols expects the weighted_sjr response, got {dm.response_kind!r}"
        )
    x, y = dm.x, dm.y
    n, p = x.shape
    if n <= p:
        raise NumericalError(f"need n > p for OLS inference, got n = {n}, p = {p}")

    q, r, piv = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(n, p) * np.finfo(np.float64).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < p:
        dependent = [dm.column_names[j] for j in piv[rank:]]
        raise NumericalError(
            f"design matrix is numerically rank deficient (rank {rank} < {p}); "
            f"dependent columns: {dependent}"
        )

    qty = q.T @ y
    beta_piv = scipy.linalg.solve_triangular(r, qty)
    beta = np.empty(p)
    beta[piv] = beta_piv

    resid = y - x @ beta
    rss = float(resid @ resid)
    df_resid = n - p
    sigma2 = rss / df_resid

    # (X'X)^{-1} = P R^{-1} R^{-T} P' from the pivoted factorization
    r_inv = scipy.linalg.solve_triangular(r, np.eye(p))
    xtx_inv_piv = r_inv @ r_inv.T
    var_beta = np.empty(p)
    var_beta[piv] = sigma2 * np.diag(xtx_inv_piv)
    std_errors = np.sqrt(var_beta)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(std_errors > 0, beta / std_errors, np.inf * np.sign(beta))
    p_values = 2.0 * stats.t.sf(np.abs(t_stats), df_resid)

    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df_resid
    df_model = p - 1
    if df_model > 0 and rss > 0:
        f_stat = ((tss - rss) / df_model) / (rss / df_resid)
        f_pvalue = float(stats.f.sf(f_stat, df_model, df_resid))
    elif df_model > 0:
        f_stat, f_pvalue = np.inf, 0.0
    else:
        f_stat, f_pvalue = np.nan, np.nan

    return FittedLinearModel(
        beta=beta,
        sigma_hat=float(np.sqrt(sigma2)),
        std_errors=std_errors,
        t_stats=t_stats,
        p_values=p_values,
        r2=r2,
        adj_r2=adj_r2,
        f_stat=float(f_stat),
        f_pvalue=float(f_pvalue),
        df_model=df_model,
        df_resid=df_resid,
        n=n,
        column_names=dm.column_names,
    )


def predict_lm(
    model: FittedLinearModel, x_new: np.ndarray, raw_scale: bool = False
) -> np.ndarray:
    """Linear predictions on the arsinh scale.

    ``raw_scale=True`` back-transforms with sinh; note that sinh of the
    conditional mean is a biased point prediction of the raw response.
    """
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 2 or x_new.shape[1] != model.p:
        raise ShapeError(
            f"x_new must have {model.p} columns matching the fitted model, "
            f"got shape {x_new.shape}"
        )
    mu = x_new @ model.beta
    return np.sinh(mu) if raw_scale else mu


def interpret_lm_coefficient(beta_j: float) -> LinearEffect:
    """Dual interpretation of a single coefficient; see LinearEffect."""
    if not np.isfinite(beta_j):
        raise ValidationError(f"coefficient must be finite, got {beta_j}")
    return LinearEffect(
        percent_effect_large_x=float(beta_j), unit_effect_small_x=float(beta_j)
    )
