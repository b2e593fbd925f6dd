"""Negative binomial regression for citation counts.

Counts follow NB(mu_i, psi) in the NB2 parameterization, variance
mu + mu^2/psi, with log link mu_i = exp(x_i' alpha). Small psi means strong
overdispersion. Estimation alternates iteratively reweighted least squares
for alpha at fixed psi with a safeguarded Newton maximization of the
profile likelihood in log psi; standard errors come from the joint observed
information at the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import digamma, gammaln, polygamma

from .errors import ConfigError, NumericalError, ShapeError, ValidationError
from .features import DesignMatrix

_PSI_MIN = 1e-8
_PSI_MAX = 1e12
_ETA_CAP = 500.0  # keeps exp(eta) finite during intermediate iterations


def _check_counts(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ShapeError("count response must be one-dimensional")
    if not np.all(np.isfinite(y)) or np.any(y < 0) or np.any(y != np.floor(y)):
        raise ValidationError("count response must be non-negative integers")
    return y


def nb_log_pmf(y: np.ndarray, mu: np.ndarray, psi: float) -> np.ndarray:
    """Pointwise NB2 log probability mass, stable via log-gamma.

    No factorial overflow: everything runs through gammaln, so counts up to
    1e6 and beyond are fine.
    """
    return (
        gammaln(y + psi)
        - gammaln(psi)
        - gammaln(y + 1.0)
        + psi * (np.log(psi) - np.log(psi + mu))
        + y * (np.log(mu) - np.log(psi + mu))
    )


def nb_nll(y, mu, psi: float) -> float:
    """Total negative log-likelihood of counts under NB2 means ``mu``."""
    y = _check_counts(y)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != y.shape:
        raise ShapeError(f"mu shape {mu.shape} does not match y shape {y.shape}")
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
        raise ValidationError("mu must be strictly positive and finite")
    if not np.isfinite(psi) or psi <= 0:
        raise ValidationError(f"psi must be strictly positive, got {psi}")
    return float(-np.sum(nb_log_pmf(y, mu, psi)))


def nb_score_eta(y: np.ndarray, mu: np.ndarray, psi: float) -> np.ndarray:
    """Per-observation derivative of the log-likelihood in the linear predictor."""
    return y - (y + psi) * mu / (mu + psi)


def _dll_dpsi(y: np.ndarray, mu: np.ndarray, psi: float) -> float:
    terms = (
        digamma(y + psi)
        - digamma(psi)
        + np.log(psi)
        + 1.0
        - np.log(psi + mu)
        - (y + psi) / (psi + mu)
    )
    return float(np.sum(terms))


def _d2ll_dpsi2(y: np.ndarray, mu: np.ndarray, psi: float) -> float:
    terms = (
        polygamma(1, y + psi)
        - polygamma(1, psi)
        + 1.0 / psi
        - 1.0 / (psi + mu)
        - (mu - y) / (psi + mu) ** 2
    )
    return float(np.sum(terms))


def nb_nll_gradient(x: np.ndarray, y, alpha: np.ndarray, psi: float) -> np.ndarray:
    """Gradient of the total NLL in (alpha, log psi), length p + 1."""
    y = _check_counts(y)
    x = np.asarray(x, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    mu = np.exp(x @ alpha)
    grad_alpha = -x.T @ nb_score_eta(y, mu, psi)
    grad_logpsi = -psi * _dll_dpsi(y, mu, psi)
    return np.concatenate([grad_alpha, [grad_logpsi]])


def profile_psi(y: np.ndarray, mu: np.ndarray, psi0: float) -> tuple[float, float]:
    """Maximize the likelihood over psi at fixed means.

    Safeguarded Newton in log psi: steps are clamped, fall back to a fixed
    gradient step when the curvature has the wrong sign, and backtrack
    whenever the likelihood would decrease. Returns (psi, log-likelihood).
    """
    t = float(np.log(np.clip(psi0, _PSI_MIN, _PSI_MAX)))
    t_min, t_max = np.log(_PSI_MIN), np.log(_PSI_MAX)
    ll = -nb_nll(y, mu, float(np.exp(t)))
    for _ in range(100):
        psi = float(np.exp(t))
        g_psi = _dll_dpsi(y, mu, psi)
        g = psi * g_psi
        h = psi**2 * _d2ll_dpsi2(y, mu, psi) + g
        if abs(g) < 1e-10 * (1.0 + abs(ll)):
            break
        step = -g / h if h < 0 else np.sign(g) * 0.5
        step = float(np.clip(step, -2.0, 2.0))
        for _ in range(40):
            t_new = float(np.clip(t + step, t_min, t_max))
            ll_new = -nb_nll(y, mu, float(np.exp(t_new)))
            if ll_new >= ll - 1e-12:
                break
            step *= 0.5
        if abs(t_new - t) < 1e-13:
            t, ll = t_new, max(ll_new, ll)
            break
        t, ll = t_new, ll_new
    return float(np.exp(t)), ll


def _weighted_lstsq(x: np.ndarray, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    coef, _, _, _ = np.linalg.lstsq(sw[:, None] * x, sw * z, rcond=None)
    return coef


def _irls(
    x: np.ndarray,
    y: np.ndarray,
    psi: float,
    alpha: np.ndarray,
    weight_fn,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> tuple[np.ndarray, np.ndarray, float]:
    """IRLS for a log-link mean model with step halving.

    ``weight_fn(mu)`` supplies the working weights; the working response is
    the usual eta + (y - mu) / mu. The likelihood never decreases.
    """
    eta = np.clip(x @ alpha, -_ETA_CAP, _ETA_CAP)
    mu = np.exp(eta)
    ll = -nb_nll(y, mu, psi)
    for _ in range(max_iter):
        w = weight_fn(mu)
        z = eta + (y - mu) / mu
        proposal = _weighted_lstsq(x, z, w)
        direction = proposal - alpha
        lam = 1.0
        for _ in range(40):
            candidate = alpha + lam * direction
            eta_c = np.clip(x @ candidate, -_ETA_CAP, _ETA_CAP)
            mu_c = np.exp(eta_c)
            ll_c = -np.sum(nb_log_pmf(y, mu_c, psi))
            if np.isfinite(ll_c) and ll_c >= ll - 1e-12:
                break
            lam *= 0.5
        delta = float(np.max(np.abs(lam * direction)))
        alpha, eta, mu = candidate, eta_c, mu_c
        improved = ll_c - ll
        ll = float(ll_c)
        if delta < tol * (1.0 + float(np.max(np.abs(alpha)))) or improved < 1e-12 * (
            1.0 + abs(ll)
        ):
            break
    return alpha, mu, ll


@dataclass(frozen=True)
class FittedNegBinModel:
    """Maximum-likelihood NB2 regression estimate."""

    alpha: np.ndarray
    psi: float
    log_lik: float
    std_errors: np.ndarray
    z_stats: np.ndarray
    p_values: np.ndarray
    psi_std_error: float
    n: int
    converged: bool
    iterations: int
    column_names: tuple[str, ...]
    ll_path: tuple[float, ...] = ()  # log-likelihood after each outer iteration

    @property
    def p(self) -> int:
        return self.alpha.shape[0]


def _wald_errors(
    x: np.ndarray, y: np.ndarray, mu: np.ndarray, psi: float
) -> tuple[np.ndarray, float]:
    """Standard errors from the joint observed information in (alpha, psi)."""
    p = x.shape[1]
    w_aa = (y + psi) * mu * psi / (mu + psi) ** 2
    block_aa = x.T @ (w_aa[:, None] * x)
    cross = -x.T @ (mu * (y - mu) / (mu + psi) ** 2)
    d_pp = -_d2ll_dpsi2(y, mu, psi)
    info = np.zeros((p + 1, p + 1))
    info[:p, :p] = block_aa
    info[:p, p] = cross
    info[p, :p] = cross
    info[p, p] = d_pp
    try:
        cov = np.linalg.inv(info)
        diag = np.diag(cov)
        if np.any(diag < 0):
            raise np.linalg.LinAlgError
        return np.sqrt(diag[:p]), float(np.sqrt(diag[p]))
    except np.linalg.LinAlgError:
        # boundary optimum (psi huge on equidispersed data): fall back to the
        # alpha block and report an uninformative dispersion error
        cov_a = np.linalg.pinv(block_aa)
        return np.sqrt(np.abs(np.diag(cov_a))), float("inf")


def fit_negbin(dm: DesignMatrix, max_outer: int = 200) -> FittedNegBinModel:
    """Joint maximum likelihood for (alpha, psi).

    Alternates full IRLS passes for alpha at fixed psi with the 1-D profile
    Newton update of psi until the log-likelihood moves by less than 1e-8
    and the relative parameter change drops below 1e-6. A fit that exhausts
    ``max_outer`` iterations is returned with ``converged=False`` rather
    than raised, so callers can inspect the diagnostics.
    """
    if dm.response_kind != "citation_count":
        raise ConfigError(
            f"fit_negbin expects the citation_count response, got {dm.response_kind!r}"
        )
    x = dm.x
    y = _check_counts(dm.y)
    n, p = x.shape
    if n <= p + 1:
        raise NumericalError(f"need n > p + 1, got n = {n}, p = {p}")
    if np.all(y == 0):
        raise NumericalError("degenerate fit: response is identically zero")

    # Poisson IRLS gives starting means; method of moments on its residuals
    # seeds the dispersion
    alpha0 = np.zeros(p)
    alpha0[dm.intercept_col] = np.log(max(float(y.mean()), 0.1))
    alpha, mu, _ = _irls(x, y, 1e10, alpha0, weight_fn=lambda m: m)
    denom = float(np.sum((y - mu) ** 2 - mu))
    psi = float(np.sum(mu**2) / denom) if denom > 0 else 100.0
    psi = float(np.clip(psi, 0.01, 1e6))

    ll = -nb_nll(y, np.exp(np.clip(x @ alpha, -_ETA_CAP, _ETA_CAP)), psi)
    converged = False
    iterations = 0
    ll_path = []
    for outer in range(1, max_outer + 1):
        iterations = outer
        prev_ll = ll
        prev_params = np.concatenate([alpha, [np.log(psi)]])
        alpha, mu, ll = _irls(
            x, y, psi, alpha, weight_fn=lambda m: m * psi / (m + psi)
        )
        psi, ll = profile_psi(y, mu, psi)
        ll_path.append(float(ll))
        params = np.concatenate([alpha, [np.log(psi)]])
        rel_change = float(
            np.max(np.abs(params - prev_params)) / (1.0 + np.max(np.abs(params)))
        )
        if abs(ll - prev_ll) < 1e-8 and rel_change < 1e-6:
            converged = True
            break

    std_errors, psi_se = _wald_errors(x, y, mu, psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_stats = np.where(std_errors > 0, alpha / std_errors, np.inf * np.sign(alpha))
    p_values = 2.0 * stats.norm.sf(np.abs(z_stats))

    return FittedNegBinModel(
        alpha=alpha,
        psi=psi,
        log_lik=float(ll),
        std_errors=std_errors,
        z_stats=z_stats,
        p_values=p_values,
        psi_std_error=psi_se,
        n=n,
        converged=converged,
        iterations=iterations,
        column_names=dm.column_names,
        ll_path=tuple(ll_path),
    )


def predict_nb(model: FittedNegBinModel, x_new: np.ndarray) -> np.ndarray:
    """Expected counts exp(x' alpha); strictly positive."""
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 2 or x_new.shape[1] != model.p:
        raise ShapeError(
            f"x_new must have {model.p} columns matching the fitted model, "
            f"got shape {x_new.shape}"
        )
    return np.exp(x_new @ model.alpha)


def interpret_nb_coefficient(alpha_j: float) -> float:
    """Percent change in the expected count per unit increase: 100 (e^a - 1)."""
    if not np.isfinite(alpha_j):
        raise ValidationError(f"coefficient must be finite, got {alpha_j}")
    return float(100.0 * np.expm1(alpha_j))
