"""Damaged fractional visco-elasto-plastic constitutive update.

One step of the return mapping, driven by the new total strain target:

1. freeze the internal variables and form the trial stress from the L1
   value of the visco-elastic strain history (the newest candidate
   increment included, all plastic flow frozen);
2. evaluate the trial yield value; if nonpositive the step is elastic;
3. otherwise solve the scalar closure for the plastic slip increment
   (the Caputo derivatives of the increment collapse to their d_0 terms
   because the increment vanishes before the current step), return the
   stress to the yield surface, and update plastic strain and hardening;
4. recompute the stored visco-elastic energy on the updated increments
   and drive the damage variable by its release rate through a Newton
   iteration with a closed-form quadratic fallback.

Damage enters stress and yield at the previous step's value; the updated
value only acts from the next step on (semi-implicit coupling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import EnergyEvaluator, damage_energy_release, hankel_weights
from .fracops import l1_weights

__all__ = [
    "MaterialParams",
    "MaterialFailure",
    "StateHistory",
    "trial_state",
    "plastic_slip_increment",
    "stress_update",
    "damage_newton",
    "yield_function",
    "yield_from_resistance",
    "step",
]

# - damage at or past this cutoff means the material cannot carry load;
#   runs end with a failed status instead of limping on with 1/(1-D) blowup
FAILURE_CUTOFF = 1.0 - 1e-8

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class MaterialParams:
    """Pseudo-constant pair set defining one material.

    ``E_pseudo``/``beta_E`` govern the visco-elastic element,
    ``K_pseudo``/``beta_K`` the visco-plastic hardening element; ``H`` is
    the classical linear hardening modulus, ``tau_Y`` the yield stress,
    and ``S``/``s_exp`` scale the damage driving term.
    """

    E_pseudo: float
    beta_E: float
    K_pseudo: float
    beta_K: float
    H: float
    tau_Y: float
    S: float
    s_exp: float

    def __post_init__(self):
        for name in ("E_pseudo", "K_pseudo", "tau_Y", "S", "s_exp"):
            v = float(getattr(self, name))
            if not v > 0.0:
                raise ValueError(f"{name} must be positive, got {v!r}")
            object.__setattr__(self, name, v)
        h = float(self.H)
        if not h >= 0.0:
            raise ValueError(f"H must be nonnegative, got {h!r}")
        object.__setattr__(self, "H", h)
        for name in ("beta_E", "beta_K"):
            b = float(getattr(self, name))
            # open interval: simulation-facing orders exclude the limits
            if not 0.0 < b < 1.0:
                raise ValueError(
                    f"{name} must lie strictly inside (0, 1), got {b!r}")
            object.__setattr__(self, name, b)


class MaterialFailure(Exception):
    """Damage reached the failure cutoff; the run stops gracefully.

    ``step_index`` is the 1-based step at which failure occurred (the row
    that could not be completed), when known.
    """

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class StateHistory:
    """Per-step series of the constitutive state, starting from a zero row.

    Series: ``eps_total``, ``eps_ve``, ``eps_vp``, ``alpha``,
    ``gamma_increments``, ``D``, ``tau``, ``Y_ve``, ``f_trial``. After n
    completed steps each has length n+1; row 0 is all zeros (virgin
    material at rest). ``eps_total`` is stored as the float sum
    eps_ve + eps_vp so the kinematic split is exact bitwise.

    ``append`` enforces the structural invariants (exact strain split,
    nonnegative slip, monotone damage below 1, nonpositive energy release)
    and raises RuntimeError on violation; those indicate a bug in the
    caller, not bad user input.

    The object also caches the L1 and energy weight tables per fractional
    order, regrown geometrically, so per-step evaluations stay O(n).
    """

    _SERIES = ("eps_total", "eps_ve", "eps_vp", "alpha", "gamma_increments",
               "D", "tau", "Y_ve", "f_trial")

    def __init__(self, capacity: int = 256):
        capacity = max(int(capacity), 2)
        self._cap = capacity
        self._len = 1
        self._data = {name: np.zeros(capacity) for name in self._SERIES}
        # consecutive differences of eps_ve and alpha, maintained so the
        # history sums need no per-step re-differencing
        self._dve = np.zeros(capacity - 1)
        self._dalpha = np.zeros(capacity - 1)
        self._l1_cache: dict[float, np.ndarray] = {}
        self._hankel_cache: dict[float, np.ndarray] = {}

    # -- series access ------------------------------------------------

    def __len__(self) -> int:
        return self._len

    @property
    def n_steps(self) -> int:
        """Number of completed steps (rows beyond the initial zero row)."""
        return self._len - 1

    def _view(self, name: str) -> np.ndarray:
        v = self._data[name][: self._len].view()
        v.setflags(write=False)
        return v

    @property
    def eps_total(self) -> np.ndarray:
        return self._view("eps_total")

    @property
    def eps_ve(self) -> np.ndarray:
        return self._view("eps_ve")

    @property
    def eps_vp(self) -> np.ndarray:
        return self._view("eps_vp")

    @property
    def alpha(self) -> np.ndarray:
        return self._view("alpha")

    @property
    def gamma_increments(self) -> np.ndarray:
        return self._view("gamma_increments")

    @property
    def D(self) -> np.ndarray:
        return self._view("D")

    @property
    def tau(self) -> np.ndarray:
        return self._view("tau")

    @property
    def Y_ve(self) -> np.ndarray:
        return self._view("Y_ve")

    @property
    def f_trial(self) -> np.ndarray:
        return self._view("f_trial")

    # -- growth and caches ---------------------------------------------

    def _grow(self) -> None:
        new_cap = self._cap * 2
        for name in self._SERIES:
            arr = np.zeros(new_cap)
            arr[: self._len] = self._data[name][: self._len]
            self._data[name] = arr
        for attr in ("_dve", "_dalpha"):
            arr = np.zeros(new_cap - 1)
            arr[: self._len - 1] = getattr(self, attr)[: self._len - 1]
            setattr(self, attr, arr)
        self._cap = new_cap

    def l1_weights_for(self, beta: float, n: int) -> np.ndarray:
        """Cached d_0..d_m with m >= n; regrown geometrically."""
        cached = self._l1_cache.get(beta)
        if cached is None or cached.shape[0] < n + 1:
            size = max(2 * (n + 1), 64)
            cached = l1_weights(beta, size - 1)
            self._l1_cache[beta] = cached
        return cached

    def hankel_weights_for(self, beta: float, n: int) -> np.ndarray:
        """Cached b_0..b_{2m} with m >= n; regrown geometrically."""
        cached = self._hankel_cache.get(beta)
        if cached is None or cached.shape[0] < 2 * n + 1:
            size = max(2 * (n + 1), 64)
            cached = hankel_weights(beta, size - 1)
            self._hankel_cache[beta] = cached
        return cached

    # -- mutation -------------------------------------------------------

    def append(self, eps_ve: float, eps_vp: float, alpha: float,
               dgamma: float, D: float, tau: float, Y_ve: float,
               f_trial: float) -> None:
        k = self._len
        if k >= self._cap:
            self._grow()
        prev_alpha = self._data["alpha"][k - 1]
        prev_D = self._data["D"][k - 1]
        if dgamma < 0.0:
            raise RuntimeError(f"negative slip increment {dgamma!r}")
        if alpha != prev_alpha + dgamma:
            raise RuntimeError("hardening variable out of sync with slip")
        if not prev_D <= D < 1.0:
            raise RuntimeError(
                f"damage must be monotone in [0, 1): {prev_D!r} -> {D!r}")
        if Y_ve > 0.0:
            raise RuntimeError(f"positive energy release rate {Y_ve!r}")
        eps_total = eps_ve + eps_vp
        d = self._data
        d["eps_total"][k] = eps_total
        d["eps_ve"][k] = eps_ve
        d["eps_vp"][k] = eps_vp
        d["alpha"][k] = alpha
        d["gamma_increments"][k] = dgamma
        d["D"][k] = D
        d["tau"][k] = tau
        d["Y_ve"][k] = Y_ve
        d["f_trial"][k] = f_trial
        self._dve[k - 1] = eps_ve - d["eps_ve"][k - 1]
        self._dalpha[k - 1] = alpha - prev_alpha
        self._len = k + 1

    def ve_increments(self) -> np.ndarray:
        """Chronological visco-elastic strain increments (length n_steps)."""
        v = self._dve[: self._len - 1].view()
        v.setflags(write=False)
        return v


def _l1_prefactor(beta: float, dt: float) -> float:
    return 1.0 / (dt ** beta * math.gamma(2.0 - beta))


def _history_sum(weights: np.ndarray, deltas: np.ndarray, n: int) -> float:
    """sum_{j=1..n} d_j * deltas[n-j] (newest difference pairs with d_1)."""
    if n == 0:
        return 0.0
    return float(np.dot(weights[1 : n + 1], deltas[n - 1 :: -1]))


def trial_state(history: StateHistory, params: MaterialParams,
                eps_next: float, dt: float) -> tuple[float, float]:
    """Trial stress and trial yield value for the next strain target.

    The trial freezes plastic flow: the visco-elastic series keeps its
    recorded increments and gains the candidate head eps_next - eps_vp_n -
    eps_ve_n, while the hardening series is frozen at its last value so
    only its history term survives.
    """
    if not dt > 0.0:
        raise ValueError(f"step size must be positive, got {dt!r}")
    n = history.n_steps
    D_n = history.D[n]
    eps_ve_n = history.eps_ve[n]
    eps_vp_n = history.eps_vp[n]
    alpha_n = history.alpha[n]

    dE = history.l1_weights_for(params.beta_E, n + 1)
    gE = _l1_prefactor(params.beta_E, dt)
    head = (eps_next - eps_vp_n) - eps_ve_n
    hist_ve = _history_sum(dE, history._dve, n)
    tau_trial = (1.0 - D_n) * params.E_pseudo * (head + hist_ve) * gE

    dK = history.l1_weights_for(params.beta_K, n + 1)
    gK = _l1_prefactor(params.beta_K, dt)
    hist_alpha = _history_sum(dK, history._dalpha, n)
    resistance = params.K_pseudo * hist_alpha * gK + params.H * alpha_n
    f_trial = abs(tau_trial) - (1.0 - D_n) * (params.tau_Y + resistance)
    return tau_trial, f_trial


def plastic_slip_increment(f_trial: float, D_n: float,
                           params: MaterialParams, dt: float) -> float:
    """Closure for the plastic slip increment at a yielding step.

    The yield residual is linear in the increment because every memory
    operator acting on a quantity that vanishes up to the current step
    keeps only its newest-difference weight (d_0 = 1). Hence

        dgamma = f_trial / ((1-D_n) (E gE + K gK + H)),

    with gX the L1 prefactor 1/(dt^beta Gamma(2-beta)) for each order.
    """
    if not f_trial > 0.0:
        raise ValueError(
            f"plastic branch requires a positive trial yield value, "
            f"got {f_trial!r}")
    if D_n >= 1.0:
        raise MaterialFailure(f"damage {D_n!r} at or past total failure")
    if not 0.0 <= D_n:
        raise ValueError(f"damage must lie in [0, 1), got {D_n!r}")
    gE = _l1_prefactor(params.beta_E, dt)
    gK = _l1_prefactor(params.beta_K, dt)
    denom = (1.0 - D_n) * (params.E_pseudo * gE + params.K_pseudo * gK
                           + params.H)
    return f_trial / denom


def stress_update(tau_trial: float, delta_gamma: float, D_n: float,
                  params: MaterialParams, dt: float) -> float:
    """Return the stress to the yield surface along the trial direction.

    |tau| shrinks by (1-D_n) E dgamma gE and the sign never flips (the
    slip increment solved from the yield residual cannot overshoot).
    """
    if delta_gamma < 0.0:
        raise ValueError(f"slip increment must be >= 0, got {delta_gamma!r}")
    if delta_gamma == 0.0:
        return tau_trial
    if tau_trial == 0.0:
        raise ValueError("plastic correction with zero trial stress")
    gE = _l1_prefactor(params.beta_E, dt)
    sign = 1.0 if tau_trial > 0.0 else -1.0
    return tau_trial - sign * (1.0 - D_n) * params.E_pseudo * delta_gamma * gE


def damage_newton(D_n: float, delta_gamma: float, Y_ve_next: float, S: float,
                  s_exp: float, tol: float = NEWTON_TOL,
                  max_iter: int = NEWTON_MAX_ITER) -> float:
    """Advance damage by its release-rate driven increment.

    Solves P(D) = D - D_n - (dgamma / (1-D)) (-Y/S)^s = 0 for D in
    [D_n, 1), iterating D <- D - P / (1 + (dgamma/(1-D)^2) (-Y/S)^s) from
    the guess D_n. The slope used keeps the iteration inside the bracket
    and contracts toward the smaller root of the equivalent quadratic;
    convergence requires both |P| <= tol and the first-order root-distance
    estimate |P| / P' <= tol/2, so the result tracks the closed-form root
    to the same tolerance. The quadratic is

        D^2 - (1+D_n) D + (D_n + dgamma (-Y/S)^s) = 0;

    if the loop has not met |P| <= tol after ``max_iter`` passes the
    closed-form root is used directly. A nonnegative discriminant with a
    root at or past the failure cutoff, or a negative discriminant (more
    driving than the remaining integrity can absorb), raises
    MaterialFailure.
    """
    if not 0.0 <= D_n < 1.0:
        raise ValueError(f"damage must lie in [0, 1), got {D_n!r}")
    if delta_gamma < 0.0:
        raise ValueError(f"slip increment must be >= 0, got {delta_gamma!r}")
    if Y_ve_next > 0.0:
        raise ValueError(
            f"energy release rate must be <= 0, got {Y_ve_next!r}")
    if not S > 0.0:
        raise ValueError(f"S must be positive, got {S!r}")
    if delta_gamma == 0.0:
        return D_n

    drive = delta_gamma * (-Y_ve_next / S) ** s_exp
    D = D_n
    converged = False
    for _ in range(max_iter):
        rem = 1.0 - D
        P = D - D_n - drive / rem
        # the damped iteration approaches the root from below, where the
        # true slope P' = 1 - drive/rem^2 is positive; requiring
        # |P| <= (tol/2) * P' bounds the distance to the root itself by
        # tol with first-order slack, not just the residual
        deriv = 1.0 - drive / rem ** 2
        if abs(P) <= tol and deriv > 0.0 and abs(P) <= 0.5 * tol * deriv:
            converged = True
            break
        slope = 1.0 + drive / rem ** 2
        D = D - P / slope
        if D < D_n:
            D = D_n
        elif D > 1.0 - 1e-12:
            D = 1.0 - 1e-12
    if not converged:
        disc = (1.0 - D_n) ** 2 - 4.0 * drive
        if disc < 0.0:
            raise MaterialFailure(
                "damage equation has no admissible root (discriminant "
                f"{disc:.3e} < 0)")
        D = ((1.0 + D_n) - math.sqrt(disc)) / 2.0
    if D >= FAILURE_CUTOFF:
        raise MaterialFailure(f"damage {D:.12f} reached the failure cutoff")
    return D


def yield_function(tau: float, alpha_series, D: float,
                   params: MaterialParams, dt: float) -> float:
    """Yield value f = |tau| - (1-D) (tau_Y + K * L1(alpha) + H * alpha).

    ``alpha_series`` is the full hardening series including the newest
    value; its L1 Caputo value supplies the memory part of the resistance.
    """
    from .fracops import caputo_l1

    alpha_series = np.asarray(alpha_series, dtype=float)
    if alpha_series.shape[0] >= 2:
        mem = caputo_l1(alpha_series, params.beta_K, dt)
    else:
        mem = 0.0
    resistance = params.K_pseudo * mem + params.H * float(alpha_series[-1])
    return yield_from_resistance(tau, resistance, D, params.tau_Y)


def yield_from_resistance(tau: float, resistance: float, damage: float,
                          tau_Y: float) -> float:
    """Yield value in resistance form: |tau| - (1-damage) (tau_Y + R).

    Jointly convex in (tau, R): an absolute value plus a linear term.
    """
    return abs(tau) - (1.0 - damage) * (tau_Y + resistance)


def step(history: StateHistory, eps_next: float, params: MaterialParams,
         dt: float, evaluator: EnergyEvaluator | None = None) -> StateHistory:
    """Advance the state by one step toward the strain target ``eps_next``.

    Elastic steps keep the internal variables and store the trial stress;
    plastic steps run the full return mapping. The energy release rate is
    evaluated on the updated visco-elastic increments every step (the
    damage update consumes it only when slip occurred, but the recorded
    series is total either way).

    ``evaluator`` may carry a planned fft evaluation for a known grid
    size; without one the route follows the current history length
    (fft past 256 steps, direct below).

    Raises MaterialFailure (with the failing 1-based step index) when the
    damage update hits the failure cutoff; the history is left at the last
    completed step.
    """
    n = history.n_steps
    tau_trial, f_trial = trial_state(history, params, eps_next, dt)
    D_n = history.D[n]

    if f_trial <= 0.0:
        dgamma = 0.0
        tau_next = tau_trial
        eps_vp_next = history.eps_vp[n]
        alpha_next = history.alpha[n]
    else:
        dgamma = plastic_slip_increment(f_trial, D_n, params, dt)
        tau_next = stress_update(tau_trial, dgamma, D_n, params, dt)
        sign = 1.0 if tau_trial > 0.0 else -1.0
        eps_vp_next = history.eps_vp[n] + sign * dgamma
        alpha_next = history.alpha[n] + dgamma
    eps_ve_next = eps_next - eps_vp_next

    # updated visco-elastic increments, newest last
    m = n + 1
    deltas = np.empty(m)
    deltas[:n] = history._dve[:n]
    deltas[n] = eps_ve_next - history.eps_ve[n]
    if evaluator is not None:
        Y_next = evaluator.energy_release(deltas)
    else:
        mode = "fft" if m > 256 else "direct"
        weights = history.hankel_weights_for(params.beta_E, m - 1)
        Y_next = damage_energy_release(deltas[::-1], params.beta_E,
                                       params.E_pseudo, dt, mode=mode,
                                       weights=weights)

    if dgamma > 0.0:
        try:
            D_next = damage_newton(D_n, dgamma, Y_next, params.S,
                                   params.s_exp)
        except MaterialFailure as failure:
            failure.step_index = m
            raise
    else:
        D_next = D_n

    history.append(eps_ve=eps_ve_next, eps_vp=eps_vp_next, alpha=alpha_next,
                   dgamma=dgamma, D=D_next, tau=tau_next, Y_ve=Y_next,
                   f_trial=f_trial)
    return history
