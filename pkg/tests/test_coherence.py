"""Noise model, golden-rule rates, and dephasing estimators."""

import numpy as np
import pytest
import scipy.constants as const
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxmol.coherence import (
    NoiseModel,
    dephasing_rate_amplitude,
    dephasing_rate_flux,
    depolarization,
    erasure_rates,
    finite_difference_dispersion,
    q_cap,
    q_ind,
    s_capacitive,
    s_inductive,
    second_order_shift,
    shot_noise,
    static_depolarization,
)

NOISE = NoiseModel()


@given(st.floats(min_value=0.05, max_value=50.0), st.floats(min_value=0.005, max_value=0.3))
@settings(max_examples=60, deadline=None)
def test_detailed_balance(omega, T):
    """S(w)/S(-w) = exp(hbar w / k_B T) for both bath flavors."""
    noise = NoiseModel(T=T)
    x = const.hbar * omega * 1e9 / (const.k * T)
    if x > 500:  # avoid overflow in the reference exponential
        return
    for s, E in ((s_inductive, 0.4), (s_capacitive, 0.7)):
        ratio = s(omega, E, noise) / s(-omega, E, noise)
        assert ratio == pytest.approx(np.exp(x), rel=1e-10)


def test_quality_factor_anchors():
    """Q models reproduce their reference points."""
    w_ind = 2 * np.pi * 0.5  # angular GHz
    assert q_ind(w_ind, NOISE) == pytest.approx(NOISE.Q_ind_ref, rel=1e-12)
    w_cap = 2 * np.pi * 6.0
    assert q_cap(w_cap, NOISE) == pytest.approx(NOISE.Q_cap_ref, rel=1e-12)
    # capacitive power law: halving the frequency raises Q by 2^0.7
    assert q_cap(w_cap / 2, NOISE) == pytest.approx(NOISE.Q_cap_ref * 2**0.7, rel=1e-12)


def test_spectral_density_positive_and_symmetric_kernel():
    for w in (0.3, 1.0, 7.0):
        assert s_inductive(w, 0.4, NOISE) > 0
        assert s_inductive(-w, 0.4, NOISE) > 0
        assert s_inductive(w, 0.4, NOISE) > s_inductive(-w, 0.4, NOISE)


def test_shot_noise_anchor():
    """n kappa / (1 + kappa^2 / chi^2) at the quoted readout parameters."""
    rate = shot_noise(1e-4, 6e6, 0.65e6)
    assert rate == pytest.approx(6.9547, abs=0.05)
    assert shot_noise(0.0, 6e6, 0.65e6) == 0.0
    with pytest.raises(ValueError):
        shot_noise(-1.0, 6e6, 0.65e6)


def test_dephasing_rate_scalings():
    assert dephasing_rate_flux(0.0, NOISE) == 0.0
    assert dephasing_rate_flux(1e-6, NOISE) == pytest.approx(
        2 * np.pi * 1e3 * NOISE.log_factor()
    )
    # amplitude channel carries no logarithmic multiplier
    assert dephasing_rate_amplitude(1e-6) == pytest.approx(2 * np.pi * 1e3)
    assert NOISE.log_factor() > 1.0


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(T=-1.0)
    with pytest.raises(ValueError):
        NoiseModel(A_phi_C=-1e-6)
    with pytest.raises(ValueError):
        NoiseModel(omega_ir=1e10, omega_uv=1e9)


@pytest.fixture(scope="module")
def sol30(model30):
    from tests.conftest import A_STAR, OMEGA_STAR

    return model30.solve(A_STAR, OMEGA_STAR, M=27)


def test_second_order_shift_matches_finite_difference(model30):
    """Perturbative flux curvature agrees with a quadratic fit of eps_10.

    Run away from the sweet spot so the curvature is large, and with a
    displacement well inside the quasi-degenerate doublet's convergence
    radius.  The operator susceptibility converts to flux curvature
    through the inductive coupling constant.
    """
    from fluxmol.coherence import flux_coupling_constant
    from fluxmol.floquet import fold
    from fluxmol.model import driven_model

    A, Omega = 0.10, 1.515
    sol = model30.solve(A, Omega, M=27)
    d1, d2, flags = second_order_shift(sol, model30.op("phi_D"))
    c = flux_coupling_constant(model30.params, "D")
    h = 3e-4  # radians of flux
    vals = []
    for s in (-1, 0, 1):
        p = model30.params.displaced(d_phi_D=s * h)
        m = driven_model(p, N=model30.N, n_osc=model30.basis.n_osc)
        s2 = m.solve(A, Omega, M=27)
        vals.append(fold(s2.eps_10 - sol.eps_10, Omega))
    fd1 = (vals[2] - vals[0]) / (2 * h)
    fd2 = (vals[2] - 2 * vals[1] + vals[0]) / h**2
    # first order vanishes by the half-flux reflection symmetry
    assert abs(-c * d1) < 1e-8
    assert abs(fd1) < 1e-8
    assert c**2 * d2 == pytest.approx(fd2, rel=0.01)


def test_finite_difference_dispersion_channels(model30, sol30):
    from tests.conftest import A_STAR, OMEGA_STAR

    d, _ = finite_difference_dispersion(
        model30, A_STAR, OMEGA_STAR, "ac", 1e-4, M=27, base_sol=sol30
    )
    assert d >= 0.0
    assert finite_difference_dispersion(
        model30, A_STAR, OMEGA_STAR, "ac", 0.0, M=27, base_sol=sol30
    ) == (0.0, [])
    with pytest.raises(ValueError):
        finite_difference_dispersion(
            model30, A_STAR, OMEGA_STAR, "bogus", 1e-6, M=27, base_sol=sol30
        )


def test_golden_rule_rates_at_operating_point(model30, sol30):
    """Rates are finite, positive, and stable against the k-window."""
    g1 = depolarization(sol30, model30, NOISE, k_range=9)
    g1_wide = depolarization(sol30, model30, NOISE, k_range=11)
    assert g1 > 0
    assert g1 == pytest.approx(g1_wide, rel=1e-3)
    ge, be = erasure_rates(sol30, model30, NOISE, k_range=9)
    assert ge > 0
    assert 0.0 <= be <= 1.0
    # leakage out of the protected pair dominates direct depolarization
    assert ge > g1


def test_static_baseline_rate(model30):
    """The undriven parent pair decays much faster than the driven qubit."""
    g_static = static_depolarization(model30, NOISE, "g", "f")
    assert g_static > 100.0  # Hz; the protected pair is orders below this
