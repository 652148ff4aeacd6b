"""Frequency lattice vs the one-period propagator, folding, and symmetries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxmol.floquet import (
    DriveParams,
    build_k,
    fold,
    fourier_components,
    label_states,
    propagator_eigenphases,
    propagator_oracle,
    solve_floquet,
)


def _lattice_quasi(model, A, Omega, M=31, mode="auto"):
    drive = DriveParams(A=A, Omega=Omega)
    fh = fourier_components(model.op("phi_D"), model.spec, drive, model.N)
    return solve_floquet(build_k(fh, M, Omega), n_states=model.N, mode=mode)


@pytest.mark.parametrize("N_name", ["model4", "model8"])
def test_propagator_oracle(N_name, rng, request):
    model = request.getfixturevalue(N_name)
    N = model.N
    worst = 0.0
    for _ in range(10):
        A = float(rng.uniform(0.05, 0.4))
        Omega = float(rng.uniform(1.3, 1.7))
        drive = DriveParams(A=A, Omega=Omega)
        sol = _lattice_quasi(model, A, Omega)
        U = propagator_oracle(model.spec, drive, N, model.op("phi_D"), model.params.delta_E)
        eps = propagator_eigenphases(U, Omega)
        got = np.sort(fold(sol.quasi_energies, Omega))
        worst = max(worst, float(np.max(np.abs(got - eps)) / Omega))
    assert worst < 1e-8


def test_undriven_limit(model12):
    """A = 0: quasi-energies are the static energies folded into the zone."""
    Omega = 1.52
    sol = _lattice_quasi(model12, 0.0, Omega, M=41)
    expected = np.sort(fold(model12.spec.energies, Omega))
    assert np.allclose(np.sort(fold(sol.quasi_energies, Omega)), expected, atol=1e-9)


def test_sine_cosine_equivalence(model8):
    """The two drive phase conventions differ by a time shift only."""
    qs = model8.solve(0.25, 1.5, M=25, phase_convention="sine", label=False).quasi_energies
    qc = model8.solve(0.25, 1.5, M=25, phase_convention="cosine", label=False).quasi_energies
    assert np.allclose(np.sort(qs), np.sort(qc), atol=1e-10)


def test_dense_vs_interior(model8):
    dense = _lattice_quasi(model8, 0.2, 1.5, M=21, mode="dense")
    interior = _lattice_quasi(model8, 0.2, 1.5, M=21, mode="interior")
    assert np.allclose(np.sort(dense.quasi_energies), np.sort(interior.quasi_energies), atol=1e-10)


@given(e=st.floats(-100, 100, allow_nan=False), Omega=st.floats(0.5, 5.0))
@settings(max_examples=200, deadline=None)
def test_folding_idempotent_and_in_zone(e, Omega):
    f1 = fold(e, Omega)
    assert -Omega / 2 <= f1 < Omega / 2
    assert fold(f1, Omega) == pytest.approx(f1, abs=1e-12)
    # translation symmetry of the fold
    assert fold(e + 3 * Omega, Omega) == pytest.approx(f1, abs=1e-9)


def test_spectral_translation_symmetry(model4):
    """The extended spectrum contains each quasi-energy shifted by any k Omega."""
    Omega = 1.5
    drive = DriveParams(A=0.2, Omega=Omega)
    fh = fourier_components(model4.op("phi_D"), model4.spec, drive, 4)
    K = build_k(fh, 31, Omega)
    evals = np.linalg.eigvalsh(K.matrix.toarray())
    sol = solve_floquet(K, n_states=4)
    for e in sol.quasi_energies:
        for k in (-2, -1, 1, 2):
            assert np.min(np.abs(evals - (e + k * Omega))) < 1e-9


def test_zone_state_count(model12):
    """Exactly N zone representatives with unit extended-space norm."""
    sol = _lattice_quasi(model12, 0.15, 1.5, M=41)
    assert sol.n_states == 12
    norms = np.sum(np.abs(sol.phi) ** 2, axis=(0, 1))
    assert np.allclose(norms, 1.0, atol=1e-9)


def test_labeling_weights(model30):
    from tests.conftest import A_STAR, OMEGA_STAR

    sol = model30.solve(A_STAR, OMEGA_STAR, M=27)
    lab = model30.spec.labels
    w1 = sol.static_weights(sol.labels["1"])
    assert w1[lab["f"]] > 0.9
    w0 = sol.static_weights(sol.labels["0"])
    assert w0[lab["g"]] + w0[lab["e"]] > 0.9
    for name in ("E0", "E1"):
        we = sol.static_weights(sol.labels[name])
        assert we[lab["h"]] > 0.3
    # erasure pair ordered by quasi-energy
    assert sol.quasi_energies[sol.labels["E0"]] <= sol.quasi_energies[sol.labels["E1"]]


def test_truncation_flag_on_small_m(model12):
    """A Fourier window too small for the static bandwidth is flagged."""
    sol = _lattice_quasi(model12, 0.0, 1.52, M=9)
    assert sol.n_states < 12 or np.any(sol.truncation_suspect)


def test_gauge_fixed_phase(model30):
    from tests.conftest import A_STAR, OMEGA_STAR

    from fluxmol.floquet import time_averaged_element

    sol = model30.solve(A_STAR, OMEGA_STAR, M=27)
    el = time_averaged_element(sol, model30.op("phi_C"), sol.labels["0"], sol.labels["1"], k=1)
    assert abs(el.imag) < 1e-9 * max(abs(el), 1e-30)
    assert el.real > 0
