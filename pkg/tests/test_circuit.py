"""Static circuit: operator algebra, limits with closed forms, labeling."""

import numpy as np
import pytest

from fluxmol.circuit import (
    BasisConfig,
    CircuitParams,
    build_operators,
    diagonalize_static,
    hermiticity_defect,
    project,
    static_spectrum,
    table_params,
)


@pytest.fixture(scope="module")
def ops():
    return build_operators(table_params(), BasisConfig(n_osc=40))


def test_operators_hermitian(ops):
    for name, op in ops.all_named().items():
        assert hermiticity_defect(op) < 1e-12, name


def test_canonical_commutator(ops):
    """[phi, n] = i per mode, exact away from the truncation edge."""
    comm = (ops.phi_L @ ops.n_L - ops.n_L @ ops.phi_L).toarray()
    n_osc = ops.basis.n_osc
    block = comm.reshape(n_osc, n_osc, n_osc, n_osc)[: n_osc - 1, :, : n_osc - 1, :]
    eye = np.einsum("ij,kl->ikjl", np.eye(n_osc - 1), np.eye(n_osc))
    assert np.allclose(block, 1j * eye, atol=1e-12)


def test_uncoupled_harmonic_limit():
    """E_J = 0, E_L' = 0: two independent oscillators, freq sqrt(8 E_C E_L)."""
    with pytest.warns(UserWarning):
        p = CircuitParams(E_C=0.7, E_J=1e-12, E_L=0.4, E_L_prime=0.0)
    ops = build_operators(p, BasisConfig(n_osc=30))
    spec = diagonalize_static(ops, 6)
    w = np.sqrt(8.0 * p.E_C * p.E_L)
    # ladder sums n_L w + n_R w above the ground state
    expected = np.sort([i * w + j * w for i in range(3) for j in range(3)])[:6]
    assert np.allclose(spec.energies, expected, atol=1e-6)


def test_coupled_harmonic_normal_modes():
    """E_J = 0: normal modes at sqrt(8 E_C (E_L +- E_L'/2))."""
    with pytest.warns(UserWarning):
        p = CircuitParams(E_C=0.7, E_J=1e-12, E_L=0.4, E_L_prime=0.2, phi_C0=0.0)
    ops = build_operators(p, BasisConfig(n_osc=35))
    spec = diagonalize_static(ops, 4)
    wp = np.sqrt(8.0 * p.E_C * (p.E_L + 0.5 * p.E_L_prime))
    wm = np.sqrt(8.0 * p.E_C * (p.E_L - 0.5 * p.E_L_prime))
    expected = np.sort([0.0, wm, wp, 2 * wm])
    assert np.allclose(spec.energies, expected, atol=1e-5)


def test_ground_energy_shift(ops):
    spec = diagonalize_static(ops, 6)
    assert spec.energies[0] == 0.0
    assert np.all(np.diff(spec.energies) >= 0)
    assert spec.ground_energy < 0  # deep wells at half flux


def test_half_flux_parity(ops):
    """At the half-flux idle point eigenstates carry no mean displaced flux."""
    spec = diagonalize_static(ops, 4)
    phi_c = np.diag(project(ops.phi_C, spec)).real
    # the lowest doublet states are reflection eigenstates: <phi_C> = pi each
    assert np.allclose(phi_c[:2], np.pi, atol=1e-6)
    # the upper doublet states map onto each other, so only the pair mean is pinned
    assert phi_c[2] + phi_c[3] == pytest.approx(2 * np.pi, abs=1e-6)
    phi_d = np.diag(project(ops.phi_D, spec)).real
    assert np.allclose(phi_d[:2], 0.0, atol=1e-6)
    assert phi_d[2] + phi_d[3] == pytest.approx(0.0, abs=1e-6)


def test_classification_and_scalars():
    _, spec = static_spectrum(table_params(), BasisConfig(n_osc=60), 8)
    assert spec.labels["g"] == 0
    assert set(spec.labels) == {"g", "e", "h", "f"}
    assert spec.scalars["eps"] == pytest.approx(0.0437, rel=0.02)
    assert spec.scalars["R"] == pytest.approx(1.148, rel=0.02)
    # the near-degenerate doublets: delta << Delta ~ mu
    assert spec.scalars["delta"] < 0.01
    assert abs(spec.scalars["Delta"] - spec.scalars["mu"]) < 0.01


def test_basis_convergence():
    """eps and R stable against the oscillator cutoff."""
    vals = {}
    for n_osc in (50, 70):
        _, spec = static_spectrum(table_params(), BasisConfig(n_osc=n_osc), 6)
        vals[n_osc] = (spec.scalars["eps"], spec.scalars["R"])
    assert vals[50][0] == pytest.approx(vals[70][0], rel=2e-3)
    assert vals[50][1] == pytest.approx(vals[70][1], rel=2e-3)


def test_projection_orthonormality(ops):
    spec = diagonalize_static(ops, 10)
    zero = project(ops.phi_L * 0.0, spec)
    assert np.allclose(zero, 0.0)
    gram = spec.vectors.conj().T @ spec.vectors
    assert np.allclose(gram, np.eye(10), atol=1e-10)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        CircuitParams(E_C=-0.1, E_J=3.9, E_L=0.4, E_L_prime=0.2)
    with pytest.raises(ValueError):
        BasisConfig(n_osc=1)
