"""Pure-numpy reference implementation of the boosting hot loops.

Mirrors the compiled extension in `_core.pyx`. Both backends implement the
same selection contract: the winning learner maximizes b_j^2 * ||x_j||^2
(equivalently minimizes the residual sum of squares), first index wins
ties, and the residual vector is updated in place iteration by iteration.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def scan_learners(lt: np.ndarray, u: np.ndarray, colsumsq: np.ndarray):
    """Best single-column least-squares fit to ``u``.

    ``lt`` holds one learner per row (k x n). Returns (index, coefficient).
    """
    s = lt @ u
    b = s / colsumsq
    j = int(np.argmax(b * s))
    return j, float(b[j])


def squared_path(
    lt: np.ndarray,
    y: np.ndarray,
    sl: float,
    m_stop: int,
    lt_oob: np.ndarray | None = None,
    y_oob: np.ndarray | None = None,
):
    """Full squared-error boosting path from a zero offset.

    Returns (selections, increments, train_risk) where train_risk[m] is the
    mean loss 0.5 * (y - eta)^2 after m iterations (index 0 is the offset
    fit). When an out-of-bag matrix is supplied a fourth array with the
    held-out risk curve is appended.
    """
    n = y.shape[0]
    k = lt.shape[0]
    colsumsq = np.einsum("ij,ij->i", lt, lt)
    r = y.astype(np.float64, copy=True)
    selections = np.empty(m_stop, dtype=np.int64)
    increments = np.empty(m_stop, dtype=np.float64)
    risk = np.empty(m_stop + 1, dtype=np.float64)
    risk[0] = 0.5 * float(r @ r) / n

    track_oob = lt_oob is not None
    if track_oob:
        r_oob = y_oob.astype(np.float64, copy=True)
        n_oob = y_oob.shape[0]
        risk_oob = np.empty(m_stop + 1, dtype=np.float64)
        risk_oob[0] = 0.5 * float(r_oob @ r_oob) / n_oob

    for m in range(m_stop):
        s = lt @ r
        b = s / colsumsq
        j = int(np.argmax(b * s))
        step = sl * b[j]
        r -= step * lt[j]
        selections[m] = j
        increments[m] = b[j]
        risk[m + 1] = 0.5 * float(r @ r) / n
        if track_oob:
            r_oob -= step * lt_oob[j]
            risk_oob[m + 1] = 0.5 * float(r_oob @ r_oob) / n_oob

    if track_oob:
        return selections, increments, risk, risk_oob
    return selections, increments, risk
