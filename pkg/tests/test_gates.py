"""Gate pulses: solve/fidelity machinery and the single-tone baseline."""

import numpy as np
import pytest

from tests.conftest import A_STAR, OMEGA_STAR

from fluxmol.gates import (
    GatePulse,
    gate_fidelity,
    gate_floquet_solve,
    monochromatic_baseline,
)


@pytest.fixture(scope="module")
def ref30(model30):
    return model30.solve(A_STAR, OMEGA_STAR, M=27)


def test_pulse_validation():
    with pytest.raises(ValueError):
        GatePulse(x={("Q", 1, 0.0): 1e-3})
    with pytest.raises(ValueError):
        GatePulse(x={("C", 0, np.pi / 2): 1e-3})  # sine tone at zero frequency
    with pytest.raises(ValueError):
        GatePulse(x={("C", 5, 0.0): 1e-3}, m_g=3)
    with pytest.raises(ValueError):
        GatePulse(x={("C", 1, 0.0): np.nan})
    p = GatePulse(x={("C", 1, 0.0): 2e-3, ("D", 2, np.pi / 2): -1e-3})
    assert p.amplitude("C", 1, 0.0) == 2e-3
    assert p.amplitude("D", 3, 0.0) == 0.0
    assert p.max_amplitude == 2e-3
    # 13 free coefficients once the primary tone is pinned
    assert len(GatePulse.free_keys(3, ("C", 1, 0.0))) == 13


def test_zero_pulse_is_z_like(model30, ref30):
    """With no tones the pair just precesses: pure Z, splitting eps_10."""
    eig = gate_floquet_solve(
        model30, A_STAR, OMEGA_STAR, GatePulse(), M=27, reference=ref30
    )
    rep = gate_fidelity(eig)
    assert eig.omega_g == pytest.approx(abs(ref30.eps_10), abs=1e-9)
    assert abs(rep.c_z) ** 2 > 0.999
    assert abs(rep.c_x) ** 2 + abs(rep.c_y) ** 2 < 1e-3
    assert rep.fidelity < 1.0 + 1e-9


def test_fidelity_unitary_bound():
    from fluxmol.gates import GateEigensystem

    # a perfectly unitary overlap block gives F = 1 and zero leakage
    M = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    eig = GateEigensystem(overlap=M, omega_g=1e-3, quasi_energies=(0.0, 1e-3), pulse=GatePulse())
    rep = gate_fidelity(eig)
    assert rep.fidelity == pytest.approx(1.0, abs=1e-12)
    assert rep.leakage == pytest.approx(0.0, abs=1e-12)
    assert abs(rep.c_x) == pytest.approx(1.0, abs=1e-12)
    # erasure floor from an explicit leakage rate
    rep2 = gate_fidelity(eig, gamma_e=2000.0)
    assert rep2.erasure_floor == pytest.approx(1.0 - np.exp(-2000.0 * rep2.gate_time))


def test_harmonics_must_fit_truncation(model30, ref30):
    with pytest.raises(ValueError):
        gate_floquet_solve(
            model30, A_STAR, OMEGA_STAR, GatePulse(m_g=15), M=27, reference=ref30
        )


def test_baseline_axis_selectivity(model30, ref30):
    """The tuned single tone rotates about its programmed axis."""
    rep_x = monochromatic_baseline(
        model30, A_STAR, OMEGA_STAR, A_STAR / 45, axis="X", M=27, reference=ref30
    )
    assert abs(rep_x.c_x) ** 2 > 0.99
    assert abs(rep_x.c_x) ** 2 > 10 * (abs(rep_x.c_y) ** 2 + abs(rep_x.c_z) ** 2)
    assert rep_x.omega_g > 0
    assert rep_x.gate_time < 5e-6

    rep_y = monochromatic_baseline(
        model30, A_STAR, OMEGA_STAR, A_STAR / 45, axis="Y", M=27, reference=ref30
    )
    assert abs(rep_y.c_y) ** 2 > 0.99


def test_baseline_untuned_fails_against_splitting(model30, ref30):
    """Without frequency tuning the idle splitting wins: Z-dominated."""
    rep = monochromatic_baseline(
        model30,
        A_STAR,
        OMEGA_STAR,
        A_STAR / 450,  # coupling well below eps_10
        axis="X",
        M=27,
        reference=ref30,
        tune_frequency=False,
    )
    assert abs(rep.c_x) ** 2 < 0.5


def test_waveform_sampling():
    from fluxmol.gates import sample_waveforms

    pulse = GatePulse(x={("C", 1, 0.0): 1e-3, ("D", 2, np.pi / 2): 5e-4}, delta_Omega=1e-3)
    t, wc, wd = sample_waveforms(pulse, A_STAR, OMEGA_STAR, n_samples=256)
    assert len(t) == len(wc) == len(wd) == 256
    # the differential waveform carries the base drive; C only the weak tone
    assert np.max(np.abs(wd)) > np.max(np.abs(wc))
    assert np.max(np.abs(wd)) == pytest.approx(2 * np.pi * A_STAR, rel=0.01)
    assert np.all(np.isfinite(wc)) and np.all(np.isfinite(wd))
