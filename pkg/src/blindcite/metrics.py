"""Performance criteria for train and test evaluation.

Likelihood criteria (NLL, AIC, BIC) are reported on training data only;
held-out quality is judged by the prediction errors MSEP and MAE. Lower is
better for all of them. Natural logarithms throughout; the parameter count
k includes the scale parameter (sigma for the linear model, psi for the
count model) on top of the coefficients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .boosting import BoostingModel, predict_boost
from .errors import ConfigError, ShapeError
from .features import DesignMatrix
from .linmod import FittedLinearModel, predict_lm
from .negbin import FittedNegBinModel, nb_nll, predict_nb


def aic(k: int, log_lik: float) -> float:
    """Akaike information criterion, 2k - 2 log L."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return 2.0 * k - 2.0 * log_lik


def bic(n_train: int, k: int, log_lik: float) -> float:
    """Bayesian information criterion, ln(n_train) k - 2 log L."""
    if n_train < 2:
        raise ConfigError(f"n_train must be >= 2, got {n_train}")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return float(np.log(n_train)) * k - 2.0 * log_lik


def _paired(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1 or y.size == 0:
        raise ShapeError(
            f"y and yhat must be equal-length non-empty vectors, got {y.shape} and {yhat.shape}"
        )
    return y, yhat


def msep(y, yhat) -> float:
    """Mean squared error of prediction."""
    y, yhat = _paired(y, yhat)
    return float(np.mean((y - yhat) ** 2))


def mae(y, yhat) -> float:
    """Mean absolute error."""
    y, yhat = _paired(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def gaussian_nll(y, mu, sigma: float) -> float:
    """Total Gaussian negative log-likelihood at fixed scale sigma."""
    y, mu = _paired(y, mu)
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    rss = float(np.sum((y - mu) ** 2))
    n = y.size
    return 0.5 * n * np.log(2.0 * np.pi * sigma**2) + rss / (2.0 * sigma**2)


@dataclass(frozen=True)
class EvaluationReport:
    """One split's metric block; likelihood criteria are train-only."""

    split_label: str
    n: int
    nll: float
    msep: float
    mae: float
    k: int
    aic: float | None = None
    bic: float | None = None
    r2: float | None = None
    adj_r2: float | None = None


def _lm_quantities(model: FittedLinearModel, dm: DesignMatrix):
    mu = predict_lm(model, dm.x)
    # a perfect fit has sigma_mle = 0; keep the likelihood defined
    sigma = max(model.sigma_mle, np.finfo(np.float64).tiny ** 0.5)
    nll = gaussian_nll(dm.y, mu, sigma)
    return mu, nll, model.p + 1  # coefficients plus sigma


def _nb_quantities(model: FittedNegBinModel, dm: DesignMatrix):
    nu = predict_nb(model, dm.x)
    nll = nb_nll(dm.y, nu, model.psi)
    return nu, nll, model.p + 1  # coefficients plus psi


def _boost_quantities(model: BoostingModel, dm: DesignMatrix, sigma: float | None):
    eta = predict_boost(model, dm.x)
    if model.loss.kind == "squared_error":
        yhat = eta
        nll = gaussian_nll(dm.y, eta, sigma)
    else:
        yhat = np.exp(eta)
        nll = nb_nll(dm.y, yhat, model.psi)
    k = max(1, len(np.unique(model.selections)))
    return yhat, nll, k


def evaluate(
    model, train: DesignMatrix, test: DesignMatrix | None
) -> tuple[EvaluationReport, EvaluationReport | None]:
    """Score a fitted model on its training matrix and an optional test matrix.

    The train report carries NLL, AIC, BIC (and R2 for the linear model);
    the test report only NLL, MSEP and MAE. Count models are scored on the
    raw count scale against the predicted means. Boosted models use the
    same likelihoods as their maximum-likelihood counterparts but carry no
    information criteria, since boosting has no classical parameter count.
    """
    if isinstance(model, FittedLinearModel):
        mu, train_nll, k = _lm_quantities(model, train)
        resid = train.y - mu
        tss = float(np.sum((train.y - train.y.mean()) ** 2))
        rss = float(resid @ resid)
        r2 = 1.0 - rss / tss if tss > 0 else 1.0
        adj_r2 = 1.0 - (1.0 - r2) * (train.n - 1) / (train.n - model.p)
        train_report = EvaluationReport(
            split_label="train",
            n=train.n,
            nll=train_nll,
            msep=msep(train.y, mu),
            mae=mae(train.y, mu),
            k=k,
            aic=aic(k, -train_nll),
            bic=bic(train.n, k, -train_nll),
            r2=r2,
            adj_r2=adj_r2,
        )
        predict = lambda dm: _lm_quantities(model, dm)[:2]
    elif isinstance(model, FittedNegBinModel):
        nu, train_nll, k = _nb_quantities(model, train)
        train_report = EvaluationReport(
            split_label="train",
            n=train.n,
            nll=train_nll,
            msep=msep(train.y, nu),
            mae=mae(train.y, nu),
            k=k,
            aic=aic(k, -train_nll),
            bic=bic(train.n, k, -train_nll),
        )
        predict = lambda dm: _nb_quantities(model, dm)[:2]
    elif isinstance(model, BoostingModel):
        sigma = None
        if model.loss.kind == "squared_error":
            eta = predict_boost(model, train.x)
            sigma = float(np.sqrt(np.mean((train.y - eta) ** 2)))
            if sigma == 0.0:
                sigma = np.finfo(np.float64).tiny**0.5
        yhat, train_nll, k = _boost_quantities(model, train, sigma)
        r2 = adj_r2 = None
        if model.loss.kind == "squared_error":
            tss = float(np.sum((train.y - train.y.mean()) ** 2))
            rss = float(np.sum((train.y - yhat) ** 2))
            r2 = 1.0 - rss / tss if tss > 0 else 1.0
        train_report = EvaluationReport(
            split_label="train",
            n=train.n,
            nll=train_nll,
            msep=msep(train.y, yhat),
            mae=mae(train.y, yhat),
            k=k,
            r2=r2,
            adj_r2=adj_r2,
        )
        predict = lambda dm: _boost_quantities(model, dm, sigma)[:2]
    else:
        raise ConfigError(f"cannot evaluate model of type {type(model).__name__}")

    if test is None or test.n == 0:
        warnings.warn("empty test set: test report omitted", stacklevel=2)
        return train_report, None
    if test.p != train.p:
        raise ShapeError("test matrix columns do not match the train matrix")
    yhat_test, test_nll = predict(test)
    test_report = EvaluationReport(
        split_label="test",
        n=test.n,
        nll=test_nll,
        msep=msep(test.y, yhat_test),
        mae=mae(test.y, yhat_test),
        k=train_report.k,
    )
    return train_report, test_report
