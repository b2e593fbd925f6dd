"""Machine-readable (CSV) and aligned-text report rendering.

Coefficient tables carry significance stars at the 0.1 / 0.05 / 0.01
levels; performance tables show a train and a test block with ``-`` for
criteria that are train-only. CSV output keeps full float precision so
downstream tooling can round-trip values exactly.
"""

from __future__ import annotations

import csv
import io

import numpy as np
from scipy.stats import norm

from .boosting import BoostingModel, selection_probabilities
from .linmod import FittedLinearModel
from .metrics import EvaluationReport
from .negbin import FittedNegBinModel


def significance_stars(p_value: float) -> str:
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.1:
        return "*"
    return ""


def _full(x: float) -> str:
    return f"{x:.17g}"


def coefficient_rows(model) -> list[tuple[str, float, float, float, float]]:
    """(term, estimate, std error, statistic, p) rows, psi last for counts."""
    if isinstance(model, FittedLinearModel):
        stats_ = zip(model.column_names, model.beta, model.std_errors, model.t_stats, model.p_values)
        return [tuple(row) for row in stats_]
    if isinstance(model, FittedNegBinModel):
        rows = [
            tuple(row)
            for row in zip(
                model.column_names, model.alpha, model.std_errors, model.z_stats, model.p_values
            )
        ]
        if np.isfinite(model.psi_std_error) and model.psi_std_error > 0:
            z = model.psi / model.psi_std_error
            p = float(2.0 * norm.sf(abs(z)))
        else:
            z, p = float("nan"), float("nan")
        rows.append(("psi", model.psi, model.psi_std_error, z, p))
        return rows
    raise TypeError(f"no coefficient table for {type(model).__name__}")


def coefficient_csv(model) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["term", "estimate", "std_error", "t", "p", "stars"])
    for term, est, se, stat, p in coefficient_rows(model):
        writer.writerow(
            [term, _full(est), _full(se), _full(stat), _full(p), significance_stars(p)]
        )
    return out.getvalue()


def coefficient_text(model) -> str:
    stat_label = "t" if isinstance(model, FittedLinearModel) else "z"
    rows = coefficient_rows(model)
    width = max(len("term"), *(len(r[0]) for r in rows))
    lines = [
        f"{'term':<{width}}  {'estimate':>12}  {'std error':>12}  {stat_label:>10}  {'p':>8}"
    ]
    for term, est, se, stat, p in rows:
        stars = significance_stars(p)
        lines.append(
            f"{term:<{width}}  {est:>12.3f}  {se:>12.3f}  {stat:>10.2f}  {p:>8.3g} {stars}"
        )
    if isinstance(model, FittedLinearModel):
        lines.append("")
        lines.append(f"observations        {model.n}")
        lines.append(f"residual std. error {model.sigma_hat:.3f}")
        lines.append(f"R2                  {model.r2:.3f}")
        lines.append(f"adjusted R2         {model.adj_r2:.3f}")
        lines.append(
            f"F statistic         {model.f_stat:.1f} on {model.df_model} and "
            f"{model.df_resid} df (p = {model.f_pvalue:.3g})"
        )
    else:
        lines.append("")
        lines.append(f"observations        {model.n}")
        lines.append(f"log-likelihood      {model.log_lik:.3f}")
        lines.append(f"converged           {model.converged} ({model.iterations} iterations)")
    lines.append("")
    lines.append("significance: *** p<0.01, ** p<0.05, * p<0.1")
    return "\n".join(lines) + "\n"


_METRIC_ORDER = ("NLL", "R2", "Adj. R2", "AIC", "BIC", "MSEP", "MAE")


def _metric_value(report: EvaluationReport | None, name: str) -> float | None:
    if report is None:
        return None
    return {
        "NLL": report.nll,
        "R2": report.r2,
        "Adj. R2": report.adj_r2,
        "AIC": report.aic,
        "BIC": report.bic,
        "MSEP": report.msep,
        "MAE": report.mae,
    }[name]


def performance_csv(train: EvaluationReport, test: EvaluationReport | None) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "train", "test"])
    for name in _METRIC_ORDER:
        tr = _metric_value(train, name)
        te = _metric_value(test, name)
        writer.writerow(
            [name, "" if tr is None else _full(tr), "" if te is None else _full(te)]
        )
    return out.getvalue()


def performance_text(train: EvaluationReport, test: EvaluationReport | None) -> str:
    lines = [f"{'metric':<10}{'train':>16}{'test':>16}"]
    for name in _METRIC_ORDER:
        cells = []
        for value in (_metric_value(train, name), _metric_value(test, name)):
            cells.append("-" if value is None else f"{value:.4f}")
        lines.append(f"{name:<10}{cells[0]:>16}{cells[1]:>16}")
    n_test = "-" if test is None else str(test.n)
    lines.append(f"{'n':<10}{train.n:>16}{n_test:>16}")
    return "\n".join(lines) + "\n"


def selection_csv(model: BoostingModel) -> str:
    """Selection probabilities, most frequently chosen component first."""
    probs = selection_probabilities(model)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["component", "count", "probability"])
    ordered = sorted(probs.items(), key=lambda item: (-item[1], item[0]))
    for col, prob in ordered:
        count = int(round(prob * model.m_stop))
        writer.writerow([model.column_names[col], count, _full(prob)])
    return out.getvalue()


def path_csv(model: BoostingModel) -> str:
    """Per-iteration record: selected component, increment, training risk."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["m", "component", "coefficient_increment", "train_risk"])
    for m in range(model.m_stop):
        writer.writerow(
            [
                m + 1,
                model.column_names[int(model.selections[m])],
                _full(model.sl * model.increments[m]),
                _full(model.train_risk[m + 1]),
            ]
        )
    return out.getvalue()


def cv_curves_csv(curves: np.ndarray) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["fold", "m", "oob_risk"])
    for f in range(curves.shape[0]):
        for m in range(curves.shape[1]):
            writer.writerow([f, m, _full(curves[f, m])])
    return out.getvalue()
