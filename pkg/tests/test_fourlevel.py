"""Reduced four-level theory: lattice sums, dressed bases, sweet lines."""

import numpy as np
import pytest
from scipy.special import jv

from fluxmol.circuit import BasisConfig, static_spectrum, table_params
from fluxmol.fourlevel import (
    FourLevelParams,
    NormalizedDrive,
    amplitude_dispersion,
    amplitude_scale,
    f_plus_minus,
    f_plus_minus_prime,
    gvv_effective_hamiltonian,
    qubit_frequency_analytic,
    sweet_line_C,
    sweet_line_D,
    sweet_lines_analytic,
    xyzw_eigenbasis,
)


@pytest.fixture(scope="module")
def p4():
    params = table_params()
    _, spec = static_spectrum(params, BasisConfig(n_osc=60), 8)
    return FourLevelParams.from_spectrum(spec, params)


def test_lattice_sums_at_zero():
    """f_+(0) = f_-(0) = -1: only the k = 1 term survives at zero drive."""
    fp, fm = f_plus_minus(0.0)
    assert fp == pytest.approx(-1.0, abs=1e-14)
    assert fm == pytest.approx(-1.0, abs=1e-14)


def test_lattice_sums_cutoff_stability():
    for z0 in (0.3, 1.0, 2.5):
        assert f_plus_minus(z0, 50) == pytest.approx(f_plus_minus(z0, 80), abs=1e-13)


def test_lattice_sum_derivatives_match_finite_difference():
    h = 1e-6
    for z0 in (0.2, 0.8, 1.7):
        fp_p, fm_p = f_plus_minus(z0 + h)
        fp_m, fm_m = f_plus_minus(z0 - h)
        dfp, dfm = f_plus_minus_prime(z0)
        assert dfp == pytest.approx((fp_p - fp_m) / (2 * h), abs=1e-7)
        assert dfm == pytest.approx((fm_p - fm_m) / (2 * h), abs=1e-7)


def _single_level_lattice(E, a, b, Omega, n_side):
    """Fourier-lattice matrix of H(t) = E + a cos(Omega t) + b cos(2 Omega t)."""
    ks = np.arange(-n_side, n_side + 1)
    K = np.diag(E + ks * Omega).astype(float)
    for i, k in enumerate(ks):
        if i + 1 < len(ks):
            K[i, i + 1] = K[i + 1, i] = a / 2.0
        if i + 2 < len(ks):
            K[i, i + 2] = K[i + 2, i] = b / 2.0
    return ks, K


def test_dressed_basis_matches_direct_lattice_diagonalization():
    """The Bessel-series coefficients are exact single-level eigenvectors.

    For one level driven by a cos(Omega t) + b cos(2 Omega t) the lattice
    eigenvalues are E + n Omega and the eigenvector components carry the
    J_m(b / 2 Omega) J_{k - n - 2m}(+-a / Omega) series used for the dressed
    x / y sectors; with a = 0 only the two-photon ladder remains (z sector).
    """
    Omega, E, z0, z1, n = 1.3, 0.27, 0.9, 0.35, 2
    # tridiagonal recurrence gives components J_{k-n}(-a/Omega): the x sector
    # (series in -z0) therefore pairs with a = +z0 Omega, y with -z0 Omega,
    # and the two-photon ladder carries b = -2 z1 Omega
    a, b = z0 * Omega, -2.0 * z1 * Omega
    n_side = 40
    basis = xyzw_eigenbasis(z0, z1, n, fourier_range=n_side)

    ks, K = _single_level_lattice(E, a, b, Omega, n_side)
    evals, evecs = np.linalg.eigh(K)
    target = E + n * Omega
    # interior eigenvalues land exactly on the photon ladder
    interior = np.abs(ks) <= n_side - 15
    for m in ks[interior]:
        assert np.min(np.abs(evals - (E + m * Omega))) < 1e-9

    vec = evecs[:, np.argmin(np.abs(evals - target))]
    for sector in ("x", "y"):
        ana = basis[sector].astype(float)
        sign_a = a if sector == "x" else -a
        _, Ka = _single_level_lattice(E, sign_a, b, Omega, n_side)
        ea, va = np.linalg.eigh(Ka)
        v = va[:, np.argmin(np.abs(ea - target))]
        if np.dot(v, ana) < 0:
            v = -v
        assert np.max(np.abs(v - ana)) < 1e-9
    # z sector: no one-photon coupling
    _, Kz = _single_level_lattice(E, 0.0, b, Omega, n_side)
    ez, vz = np.linalg.eigh(Kz)
    v = vz[:, np.argmin(np.abs(ez - target))]
    ana = basis["z"].astype(float)
    if np.dot(v, ana) < 0:
        v = -v
    assert np.max(np.abs(v - ana)) < 1e-9


def test_dressed_basis_normalization():
    basis = xyzw_eigenbasis(0.7, 0.2, 0, fourier_range=40)
    for sector in ("x", "y", "z", "w"):
        assert np.linalg.norm(basis[sector]) == pytest.approx(1.0, abs=1e-10)


def test_sweet_lines_at_zero_drive(p4):
    """At z0 = 0 the brackets collapse to the undriven transition energies."""
    # bd(0) = 3 - 3 - 1 + R/2 + 1 - R/2 = 0, so Omega_D(0) = Delta
    assert sweet_line_D(p4, 0.0) == pytest.approx(p4.Delta, abs=1e-12)
    # bc(0) = 1 - 1 + 1 + R/2 - 1 + R/2 = R, so Omega_C(0) = mu - Delta eps^2 R
    assert sweet_line_C(p4, 0.0) == pytest.approx(
        p4.mu - p4.Delta * p4.eps**2 * p4.R, abs=1e-12
    )


def test_analytic_crossing_location(p4):
    lines = sweet_lines_analytic(p4, np.linspace(0.0, 2.5, 120))
    assert lines.crossing is not None
    z0s, ws = lines.crossing
    assert z0s == pytest.approx(1.2704, abs=0.02)
    assert ws == pytest.approx(1.5227, abs=0.002)
    # the crossing sits on both lines
    assert sweet_line_D(p4, z0s) == pytest.approx(sweet_line_C(p4, z0s), abs=1e-9)


def test_drive_normalization_roundtrip(p4):
    Omega = 1.52
    A0 = amplitude_scale(p4, Omega)
    d = NormalizedDrive.from_amplitude(p4, 0.3, Omega)
    assert d.z0 == pytest.approx(0.3 / A0)
    assert d.z1 > 0


def test_amplitude_dispersion_matches_finite_difference(p4):
    """Closed-form d eps_01 / dA agrees with differencing the frequency."""
    Omega = 1.52
    A0 = amplitude_scale(p4, Omega)
    for A in (0.08, 0.2):
        h = 1e-6
        fd = (
            qubit_frequency_analytic(p4, (A + h) / A0, Omega)
            - qubit_frequency_analytic(p4, (A - h) / A0, Omega)
        ) / (2 * h)
        # the closed form is d(eps_01)/dA; the frequency above is eps_10
        assert amplitude_dispersion(p4, A / A0, Omega) == pytest.approx(-fd, abs=1e-6)


def test_effective_hamiltonian_structure(p4):
    res = gvv_effective_hamiltonian(p4, 0.8, 1.52, n=1)
    for G in (res.G0, res.G1, res.G2):
        assert np.allclose(G, G.T.conj())
    # eigenvalues ascending and consistent with the stored split
    assert np.all(np.diff(res.eigenvalues) >= 0)
    full = sorted([res.comp_energy, *res.erasure_energies])
    assert np.allclose(np.sort(res.eigenvalues), full, atol=1e-12)
    # analytic eigenvectors diagonalize G through second order in eps
    G = res.G0 + p4.eps * res.G1 + p4.eps**2 * res.G2
    for j in range(3):
        v = res.eigvecs[:, j]
        ray = v.conj() @ G @ v
        resid = np.linalg.norm(G @ v - ray * v)
        assert resid < 10 * p4.eps**2
