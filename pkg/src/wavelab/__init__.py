"""wavelab: a numerical laboratory for the 1D damped wave equation
u_tt - u_xx + V(x) u + a(x) u_t = 0 with compactly supported data.

Simulates with an energy-stable leapfrog scheme on the light cone,
verifies the multiplier-weight positivity certificates, and measures
total-energy decay rates.
"""

from ._kernels import NUMBA_ENABLED, backend
from .analysis import (DecayFit, RegimeComparison, convergence_order,
                       fit_decay_exponent, regime_comparison)
from .energy import (EnergyTrace, G_functional, dissipation_residual,
                     identity_residual, stepper_energy, total_energy,
                     uniform_bound_check, weighted_data_norm_J0)
from .multiplier import (CertificateReport, CoercivityResult, MultiplierWeights,
                         Regime, WeightValues, coercivity_check,
                         eval_certificate_functionals, eval_weights,
                         select_parameters, verify_certificate)
from .profiles import (DampingProfile, PotentialProfile, TabulationRangeError,
                       ValidationReport, eval_damping, eval_potential,
                       validate_assumptions)
from .solver import (Grid, HypothesisError, InitialData, NumericalError,
                     SimulationState, StateCollector, build_grid,
                     dalembert_reference, simulate, step)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "backend",
    "DecayFit", "RegimeComparison", "convergence_order", "fit_decay_exponent",
    "regime_comparison",
    "EnergyTrace", "G_functional", "dissipation_residual", "identity_residual",
    "stepper_energy", "total_energy", "uniform_bound_check", "weighted_data_norm_J0",
    "CertificateReport", "CoercivityResult", "MultiplierWeights", "Regime",
    "WeightValues", "coercivity_check", "eval_certificate_functionals",
    "eval_weights", "select_parameters", "verify_certificate",
    "DampingProfile", "PotentialProfile", "TabulationRangeError", "ValidationReport",
    "eval_damping", "eval_potential", "validate_assumptions",
    "Grid", "HypothesisError", "InitialData", "NumericalError", "SimulationState",
    "StateCollector", "build_grid", "dalembert_reference", "simulate", "step",
    "__version__",
]
