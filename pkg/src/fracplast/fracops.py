"""L1 finite-difference kernels for Caputo derivatives on uniform grids.

All operations work on sample series u_0..u_m taken at t_k = k*dt. The L1
scheme evaluates the order-beta Caputo derivative at the newest grid point
as a weighted sum of backward differences; the weights

    d_j = (j+1)^(1-beta) - j^(1-beta)

are shared by the implicit value, the history term, and the frozen trial
value, so they are generated once per (beta, n) pair and reused.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "l1_weights",
    "history_term",
    "caputo_l1",
    "caputo_trial",
    "caputo_analytic_power",
]


def _check_order(beta: float) -> float:
    beta = float(beta)
    if not 0.0 <= beta <= 1.0 or math.isnan(beta):
        raise ValueError(f"fractional order must lie in [0, 1], got {beta!r}")
    return beta


def l1_weights(beta: float, n: int) -> np.ndarray:
    """Return the L1 convolution weights d_0..d_n for order ``beta``.

    The closed endpoints beta = 0 and beta = 1 are accepted here so the
    Hookean/Newtonian limit checks can exercise them; model-level
    validation restricts simulation runs to the open interval.
    """
    beta = _check_order(beta)
    n = int(n)
    if n < 0:
        raise ValueError(f"weight count must be nonnegative, got {n}")
    j = np.arange(n + 1, dtype=float)
    lag = j ** (1.0 - beta)
    # 0^(1-beta) = 0 by continuity from inside the interval; numpy's
    # 0^0 = 1 would zero out d_0 at the Newtonian endpoint
    lag[0] = 0.0
    return (j + 1.0) ** (1.0 - beta) - lag


def _history_dot(weights: np.ndarray, deltas: np.ndarray) -> float:
    """Weighted history sum over consecutive differences, newest difference
    paired with d_1. ``deltas[k] = u_{k+1} - u_k`` in chronological order."""
    m = deltas.shape[0]
    if m == 0:
        return 0.0
    return float(np.dot(weights[1 : m + 1], deltas[::-1]))


def history_term(u, weights: np.ndarray) -> float:
    """Memory part of the L1 value at the newest point of ``u``.

    For a series u_0..u_{n+1} this is sum_{j=1..n} d_j (u_{n+1-j} - u_{n-j});
    the newest sample u_{n+1} itself does not enter. Returns 0 for n = 0.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] < 2:
        raise ValueError("series must be one-dimensional with length >= 2")
    n = u.shape[0] - 2
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] < n + 1:
        raise ValueError(
            f"need at least {n + 1} weights for a series of length {n + 2}, "
            f"got {weights.shape[0]}"
        )
    return _history_dot(weights, np.diff(u[: n + 1]))


def caputo_l1(u, beta: float, dt: float) -> float:
    """L1 value of the order-``beta`` Caputo derivative at the newest point.

    Computes [u_{n+1} - u_n + history] / (dt^beta * Gamma(2 - beta)) over
    the full series u_0..u_{n+1}. Exact for linear-in-t data up to rounding.
    """
    beta = _check_order(beta)
    if not dt > 0.0:
        raise ValueError(f"step size must be positive, got {dt!r}")
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] < 2:
        raise ValueError("series must be one-dimensional with length >= 2")
    n = u.shape[0] - 2
    d = l1_weights(beta, n)
    head = u[-1] - u[-2]
    hist = _history_dot(d, np.diff(u[:-1]))
    return (head + hist) / (dt ** beta * math.gamma(2.0 - beta))


def caputo_trial(u, beta: float, dt: float) -> float:
    """L1 Caputo value one step ahead with the series frozen at its last value.

    Equivalent to ``caputo_l1`` on ``u`` extended by a repeated last sample:
    the newest backward difference vanishes and only the history survives.
    A length-1 series has no history yet and returns 0.
    """
    beta = _check_order(beta)
    if not dt > 0.0:
        raise ValueError(f"step size must be positive, got {dt!r}")
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] < 1:
        raise ValueError("series must be one-dimensional with length >= 1")
    n = u.shape[0] - 1
    if n == 0:
        return 0.0
    d = l1_weights(beta, n)
    hist = _history_dot(d, np.diff(u))
    return hist / (dt ** beta * math.gamma(2.0 - beta))


def caputo_analytic_power(t: float, p: float, beta: float) -> float:
    """Exact Caputo derivative of t^p: Gamma(p+1)/Gamma(p+1-beta) * t^(p-beta).

    Reference oracle for kernel tests; not used by the model itself.
    """
    beta = _check_order(beta)
    p = float(p)
    if not p > 0.0:
        raise ValueError(f"exponent must be positive, got {p!r}")
    t = float(t)
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t!r}")
    if t == 0.0:
        return 0.0
    return math.gamma(p + 1.0) / math.gamma(p + 1.0 - beta) * t ** (p - beta)
