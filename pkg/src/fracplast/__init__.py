"""1-D fractional visco-elasto-plasticity with memory-dependent damage.

The package is organized along the data flow of a strain-driven run:

* :mod:`fracplast.fracops` -- L1 kernels for Caputo derivatives on uniform
  grids (weights, history terms, trial-state values).
* :mod:`fracplast.energy` -- discrete fractional free energy as a Hankel
  quadratic form over strain increments, with a direct and an FFT route,
  and the damage energy release rate built on it.
* :mod:`fracplast.plasticity` -- the damaged return-mapping step: trial
  state, plastic slip closure, stress update, Newton damage update.
* :mod:`fracplast.driver` -- load programs, full-run simulation,
  error/order metrics, and the complexity timing harness.
* :mod:`fracplast.cli` -- the ``fracplast`` command line front end.
"""

from .fracops import caputo_l1, caputo_trial, history_term, l1_weights
from .energy import (
    EnergyEvaluator,
    damage_energy_release,
    free_energy_direct,
    free_energy_fft,
    free_energy_trajectory,
    hankel_weights,
    psi_quadratic_exact,
)
from .plasticity import MaterialFailure, MaterialParams, StateHistory, step
from .driver import (
    LinearRamp,
    QuadraticRamp,
    RunReport,
    Sinusoid,
    TimeGrid,
    TriangleWave,
    benchmark_complexity,
    convergence_order,
    relative_error,
    simulate,
    strain_at,
)

__version__ = "0.1.0"

__all__ = [
    "l1_weights",
    "history_term",
    "caputo_l1",
    "caputo_trial",
    "hankel_weights",
    "EnergyEvaluator",
    "free_energy_direct",
    "free_energy_fft",
    "free_energy_trajectory",
    "damage_energy_release",
    "psi_quadratic_exact",
    "MaterialParams",
    "MaterialFailure",
    "StateHistory",
    "step",
    "TimeGrid",
    "LinearRamp",
    "QuadraticRamp",
    "Sinusoid",
    "TriangleWave",
    "strain_at",
    "simulate",
    "RunReport",
    "relative_error",
    "convergence_order",
    "benchmark_complexity",
    "__version__",
]
