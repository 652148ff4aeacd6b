"""Convenience driver tying the static circuit solve to the driven solver.

A ``DrivenModel`` caches the expensive pieces (oscillator-basis operators,
static eigenbasis, projected flux/charge matrices) so that the lattice can
be re-solved cheaply across a grid of drive amplitudes and frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fluxmol.circuit import (
    BasisConfig,
    CircuitParams,
    OperatorSet,
    StaticSpectrum,
    build_operators,
    classify_low_levels,
    diagonalize_static,
    project,
)
from fluxmol.floquet import (
    DriveParams,
    FloquetSolution,
    build_k,
    fourier_components,
    label_states,
    solve_floquet,
)

__all__ = ["DrivenModel", "driven_model"]

DEFAULT_N = 50
DEFAULT_M = 39
DEFAULT_N_OSC = 60


@dataclass
class DrivenModel:
    """Static solution plus projected operators, ready for repeated driving."""

    params: CircuitParams
    basis: BasisConfig
    ops: OperatorSet
    spec: StaticSpectrum
    N: int
    projected: dict[str, np.ndarray] = field(default_factory=dict)

    def op(self, name: str) -> np.ndarray:
        """N x N matrix of a named circuit operator in the static eigenbasis."""
        if name not in self.projected:
            self.projected[name] = project(self.ops.all_named()[name], self.spec, self.N)
        return self.projected[name]

    def solve(
        self,
        A: float,
        Omega: float,
        M: int = DEFAULT_M,
        phase_convention: str = "sine",
        label: bool = True,
        mode: str = "auto",
    ) -> FloquetSolution:
        """Solve the driven problem at one (A, Omega) point and label states."""
        drive = DriveParams(A=A, Omega=Omega, phase_convention=phase_convention)
        fh = fourier_components(self.op("phi_D"), _with_delta_e(self.spec, self.params), drive, self.N)
        sol = solve_floquet(build_k(fh, M, Omega), n_states=self.N, mode=mode)
        if label:
            label_states(sol, self.spec, phi_C_N=self.op("phi_C"))
        return sol


def _with_delta_e(spec: StaticSpectrum, params: CircuitParams) -> StaticSpectrum:
    if not hasattr(spec, "delta_E"):
        spec.delta_E = params.delta_E
    return spec


def driven_model(
    params: CircuitParams | None = None,
    N: int = DEFAULT_N,
    n_osc: int = DEFAULT_N_OSC,
    use_cache: bool = True,
) -> DrivenModel:
    """Build operators, diagonalize (or load from cache), and wrap for driving."""
    from fluxmol.cache import cache_spectrum, load_spectrum
    from fluxmol.circuit import table_params

    params = params or table_params()
    basis = BasisConfig(n_osc=n_osc)
    ops = build_operators(params, basis)
    spec = load_spectrum(params, basis, N) if use_cache else None
    if spec is None:
        spec = classify_low_levels(diagonalize_static(ops, N), ops)
        if use_cache:
            cache_spectrum(params, basis, N, spec)
    spec.delta_E = params.delta_E
    return DrivenModel(params=params, basis=basis, ops=ops, spec=spec, N=N)
