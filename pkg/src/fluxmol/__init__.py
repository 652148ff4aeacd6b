"""Numerical laboratory for the flux-driven fluxonium molecule qubit.

Static circuit diagonalization, frequency-lattice quasi-energy solving,
coherence-rate estimation, double-sweet-spot location, single-qubit gate
optimization, and ancilla readout shifts, with closed-form four-level
theory and a one-period propagator as independent cross-checks.
"""

__version__ = "0.1.0"

from fluxmol.circuit import (
    BasisConfig,
    CircuitParams,
    StaticSpectrum,
    static_spectrum,
)
from fluxmol.coherence import NoiseModel, RateReport, shot_noise, total_report
from fluxmol.config import ConfigError, RunConfig, load_config
from fluxmol.floquet import DriveParams, FloquetSolution, fold, solve_floquet
from fluxmol.fourlevel import FourLevelParams, gvv_effective_hamiltonian, sweet_lines_analytic
from fluxmol.gates import GatePulse, monochromatic_baseline, optimize_pulse
from fluxmol.model import DrivenModel, driven_model
from fluxmol.readout import AncillaFluxoniumModel, coupled_shift_ed, effective_lambda_g
from fluxmol.sweetspot import SweepGrid, SweetSpotResult, find_double_sweet_spot

__all__ = [
    "__version__",
    "BasisConfig",
    "CircuitParams",
    "StaticSpectrum",
    "static_spectrum",
    "NoiseModel",
    "RateReport",
    "shot_noise",
    "total_report",
    "ConfigError",
    "RunConfig",
    "load_config",
    "DriveParams",
    "FloquetSolution",
    "fold",
    "solve_floquet",
    "FourLevelParams",
    "gvv_effective_hamiltonian",
    "sweet_lines_analytic",
    "GatePulse",
    "monochromatic_baseline",
    "optimize_pulse",
    "DrivenModel",
    "driven_model",
    "AncillaFluxoniumModel",
    "coupled_shift_ed",
    "effective_lambda_g",
    "SweepGrid",
    "SweetSpotResult",
    "find_double_sweet_spot",
]
