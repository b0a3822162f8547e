"""Strain programs, full-run simulation, error metrics, and timing.

Everything here is deterministic: a configuration fully determines the
run, so repeated runs produce bit-identical histories (wall time aside).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .energy import EnergyEvaluator, free_energy_trajectory
from .plasticity import MaterialFailure, MaterialParams, StateHistory, step

__all__ = [
    "TimeGrid",
    "LinearRamp",
    "QuadraticRamp",
    "Sinusoid",
    "TriangleWave",
    "strain_at",
    "RunReport",
    "simulate",
    "relative_error",
    "convergence_order",
    "BenchmarkResult",
    "benchmark_complexity",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of N steps over [0, T]; t_n = n * dt with dt = T/N."""

    T: float
    N: int

    def __post_init__(self):
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "N", int(self.N))
        if not self.T > 0.0:
            raise ValueError(f"final time must be positive, got {self.T!r}")
        if self.N < 1:
            raise ValueError(f"step count must be >= 1, got {self.N!r}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt


@dataclass(frozen=True)
class LinearRamp:
    """eps(t) = rate * t."""
    rate: float


@dataclass(frozen=True)
class QuadraticRamp:
    """eps(t) = (t / T)^2 over the horizon T."""
    T: float


@dataclass(frozen=True)
class Sinusoid:
    """eps(t) = amplitude * sin(omega * t), omega in rad/s."""
    amplitude: float
    omega: float


@dataclass(frozen=True)
class TriangleWave:
    """Constant-rate loading/unloading cycles.

    eps(t) = (2 amplitude / pi) * asin(sin(2 pi omega t)); the slope
    magnitude is 4 * amplitude * omega everywhere off the turning points.
    """
    amplitude: float
    omega: float


LoadProgram = LinearRamp | QuadraticRamp | Sinusoid | TriangleWave


def strain_at(program: LoadProgram, t):
    """Evaluate a load program at time(s) t (scalar or array)."""
    t = np.asarray(t, dtype=float)
    if isinstance(program, LinearRamp):
        out = program.rate * t
    elif isinstance(program, QuadraticRamp):
        out = (t / program.T) ** 2
    elif isinstance(program, Sinusoid):
        out = program.amplitude * np.sin(program.omega * t)
    elif isinstance(program, TriangleWave):
        out = (2.0 * program.amplitude / math.pi) * np.arcsin(
            np.sin(2.0 * math.pi * program.omega * t))
    else:
        raise TypeError(f"unknown load program {program!r}")
    return float(out) if out.ndim == 0 else out


@dataclass
class RunReport:
    """Outcome of one simulation.

    On failure, ``history`` holds every completed row and ``failed_step``
    the 1-based step that could not complete. ``final_damage`` reports the
    failure cutoff value 1.0 for failed runs so damage comparisons across
    runs remain well defined.
    """

    history: StateHistory
    grid: TimeGrid
    wall_time: float
    failed_step: int | None = None

    @property
    def status(self) -> str:
        if self.failed_step is None:
            return "completed"
        return f"failed_at_step({self.failed_step})"

    @property
    def completed(self) -> bool:
        return self.failed_step is None

    @property
    def final_damage(self) -> float:
        if self.failed_step is not None:
            return 1.0
        return float(self.history.D[-1])


def simulate(params: MaterialParams, grid: TimeGrid, program: LoadProgram,
             energy_mode: str = "auto") -> RunReport:
    """Drive the constitutive update over the grid with the given program.

    Strain targets are the program values at t_1..t_N. A material failure
    ends the run gracefully with the partial history.
    """
    if energy_mode not in ("auto", "direct", "fft"):
        raise ValueError(
            f"energy mode must be 'auto', 'direct' or 'fft', "
            f"got {energy_mode!r}")
    targets = strain_at(program, grid.times()[1:])
    evaluator = EnergyEvaluator(params.beta_E, params.E_pseudo, grid.dt,
                                grid.N, mode=energy_mode)
    history = StateHistory(capacity=min(grid.N + 1, 1 << 14))
    failed_step = None
    start = time.perf_counter()
    dt = grid.dt
    try:
        for k in range(grid.N):
            step(history, float(targets[k]), params, dt, evaluator=evaluator)
    except MaterialFailure as failure:
        failed_step = failure.step_index
    wall = time.perf_counter() - start
    return RunReport(history=history, grid=grid, wall_time=wall,
                     failed_step=failed_step)


def relative_error(reference, approx) -> float:
    """Max-norm error of a coarse series against a nested finer reference.

    The approx grid must be an integer coarsening of the reference grid;
    the difference is taken at the shared points and scaled by the
    max-norm of the full reference series.
    """
    reference = np.asarray(reference, dtype=float)
    approx = np.asarray(approx, dtype=float)
    if reference.ndim != 1 or approx.ndim != 1:
        raise ValueError("series must be one-dimensional")
    nr = reference.shape[0] - 1
    na = approx.shape[0] - 1
    if nr < 1 or na < 1:
        raise ValueError("series must cover at least one step")
    if nr % na != 0:
        raise ValueError(
            f"approx grid ({na} steps) is not a coarsening of the "
            f"reference grid ({nr} steps)")
    stride = nr // na
    diff = float(np.max(np.abs(reference[::stride] - approx)))
    scale = float(np.max(np.abs(reference)))
    if diff == 0.0:
        return 0.0
    if scale == 0.0:
        raise ValueError("reference series is identically zero")
    return diff / scale


def convergence_order(err_coarse: float, err_fine: float) -> float:
    """Observed order log2(err_coarse / err_fine) between step halvings."""
    if not err_coarse > 0.0 or not err_fine > 0.0:
        raise ValueError(
            "orders need strictly positive errors on both grids "
            f"(got {err_coarse!r}, {err_fine!r}); zero error means the "
            "series matched exactly")
    return math.log2(err_coarse / err_fine)


@dataclass
class BenchmarkResult:
    """Median trajectory-evaluation times per size, plus the log-log slope."""

    mode: str
    sizes: list[int]
    median_seconds: list[float] = field(default_factory=list)
    slope: float | None = None


def benchmark_complexity(sizes, mode: str, trials: int = 3,
                         beta: float = 0.5) -> BenchmarkResult:
    """Time full free-energy trajectories of a quadratic ramp per size.

    Runs one discarded warm-up evaluation per size (which also absorbs
    one-time compilation for the direct route), then ``trials`` timed
    evaluations, reporting the median. Thread pools are pinned to one
    worker while timing so the fit sees single-core scaling. The slope is
    a least-squares fit of log2(time) against log2(N); with a single size
    it is omitted.
    """
    sizes = [int(n) for n in sizes]
    if not sizes:
        raise ValueError("need at least one size")
    if any(n < 1 for n in sizes):
        raise ValueError(f"sizes must be >= 1, got {sizes}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly ascending, got {sizes}")
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if mode not in ("direct", "fft"):
        raise ValueError(f"mode must be 'direct' or 'fft', got {mode!r}")

    result = BenchmarkResult(mode=mode, sizes=sizes)
    with threadpool_limits(limits=1):
        for n in sizes:
            t = np.arange(n + 1) / n
            eps = t * t
            dt = 1.0 / n
            free_energy_trajectory(eps, beta, 100.0, dt, mode=mode)
            laps = []
            for _ in range(trials):
                t0 = time.perf_counter()
                free_energy_trajectory(eps, beta, 100.0, dt, mode=mode)
                laps.append(time.perf_counter() - t0)
            result.median_seconds.append(float(np.median(laps)))
    if len(sizes) >= 2:
        result.slope = float(np.polyfit(np.log2(sizes),
                                        np.log2(result.median_seconds), 1)[0])
    return result
