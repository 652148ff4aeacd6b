"""Decoherence figures of merit for the driven qubit.

Covers perturbative flux susceptibilities of the qubit quasi-frequency,
finite-difference dispersions against flux and drive-amplitude offsets,
1/f dephasing rates, golden-rule depolarization and leakage ("erasure")
rates against inductive and capacitive baths, and resonator shot-noise
dephasing.

Unit boundary: circuit energies are in GHz (ordinary frequency); spectral
densities take angular frequency in rad/ns (2 pi x GHz) and return rates
per ns, converted to Hz once at the edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.constants as const
from scipy.special import kv

from fluxmol.floquet import FloquetSolution, fold

__all__ = [
    "NoiseModel",
    "SusceptibilityReport",
    "RateReport",
    "second_order_shift",
    "finite_difference_dispersion",
    "dephasing_rate_flux",
    "golden_rule_rate",
    "depolarization",
    "erasure_rates",
    "shot_noise",
    "total_report",
]

#: denominators below this (GHz) mark a quasi-degeneracy in perturbation sums
RESONANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class NoiseModel:
    """Bath and 1/f-noise parameters.

    Flux-noise amplitudes are in units of the flux quantum; ``A_ac`` is a
    relative drive-amplitude noise.  Cutoffs and integration time are in SI
    (rad/s and s).  Quality-factor models: inductive referenced to 500e6 at
    0.5 GHz with a Bessel-K temperature kernel, capacitive 1e6 at 6 GHz
    with a 0.7 power law.
    """

    A_phi_C: float = 1e-6
    A_phi_D: float = 1e-6
    A_ac: float = 1e-8
    T: float = 0.015  # K
    omega_uv: float = 2 * np.pi * 1.5e9  # rad/s
    omega_ir: float = 2 * np.pi * 1.0  # rad/s
    t_int: float = 10e-6  # s
    Q_ind_ref: float = 500e6
    Q_ind_ref_freq: float = 0.5e9  # Hz
    Q_cap_ref: float = 1e6
    Q_cap_ref_freq: float = 6e9  # Hz
    Q_cap_exponent: float = 0.7
    n_bar: float = 1e-4
    kappa: float = 6e6  # Hz
    chi: float = 0.65e6  # Hz

    def __post_init__(self):
        if not (self.omega_uv > self.omega_ir > 0):
            raise ValueError("need omega_uv > omega_ir > 0")
        if self.T <= 0:
            raise ValueError("temperature must be positive")
        if min(self.A_phi_C, self.A_phi_D, self.A_ac) < 0:
            raise ValueError("noise amplitudes must be non-negative")

    def log_factor(self) -> float:
        """The 1/f dephasing multiplier sqrt(2 ln^2(uv/ir) + 4 ln^2(ir t))."""
        return np.sqrt(
            2.0 * np.log(self.omega_uv / self.omega_ir) ** 2
            + 4.0 * np.log(self.omega_ir * self.t_int) ** 2
        )


def _therm_ratio(omega_ghz_angular: float, T: float) -> float:
    """hbar omega / k_B T with omega given in rad/ns (angular GHz)."""
    return const.hbar * omega_ghz_angular * 1e9 / (const.k * T)


def q_ind(omega: float, noise: NoiseModel) -> float:
    """Inductive quality factor at angular-GHz frequency omega."""
    x = abs(_therm_ratio(omega, noise.T))
    x_ref = _therm_ratio(2 * np.pi * noise.Q_ind_ref_freq / 1e9, noise.T)
    return noise.Q_ind_ref * (
        kv(0, x_ref / 2) * np.sinh(x_ref / 2) / (kv(0, x / 2) * np.sinh(x / 2))
    )


def q_cap(omega: float, noise: NoiseModel) -> float:
    """Capacitive quality factor at angular-GHz frequency omega."""
    return noise.Q_cap_ref * (2 * np.pi * noise.Q_cap_ref_freq / (abs(omega) * 1e9)) ** noise.Q_cap_exponent


def s_inductive(omega: float, E_L: float, noise: NoiseModel) -> float:
    """Flux-coupled bath spectral density (per-mode inductive energy E_L, GHz).

    Takes angular-GHz omega, returns a rate prefactor in 1/ns; the
    asymmetric thermal kernel coth(|x|/2)/(1 + e^{-x}) obeys detailed
    balance S(w)/S(-w) = exp(hbar w / kT).
    """
    x = _therm_ratio(omega, noise.T)
    return 2 * np.pi * 2 * E_L / q_ind(omega, noise) / np.tanh(abs(x) / 2) / (1 + np.exp(-x))


def s_capacitive(omega: float, E_C: float, noise: NoiseModel) -> float:
    """Charge-coupled bath spectral density (per-mode charging energy E_C, GHz)."""
    x = _therm_ratio(omega, noise.T)
    return 2 * np.pi * 2 * 8 * E_C / q_cap(omega, noise) / np.tanh(abs(x) / 2) / (1 + np.exp(-x))


@dataclass
class SusceptibilityReport:
    """First/second-order flux susceptibilities and finite-difference dispersions."""

    delta1_C: float = np.nan
    delta1_D: float = np.nan
    delta2_C: float = np.nan
    delta2_D: float = np.nan
    disp_C: float = np.nan  # |d eps_10| at the flux-noise excursion, GHz
    disp_D: float = np.nan
    disp_ac: float = np.nan
    flags: list[str] = field(default_factory=list)


@dataclass
class RateReport:
    """All decoherence rates (Hz) and their reciprocal times (s)."""

    gamma_phi_D: float = 0.0
    gamma_phi_C: float = 0.0
    gamma_phi_ac: float = 0.0
    gamma_phi_chi: float = 0.0
    gamma_1: float = 0.0
    gamma_e: float = 0.0
    beta_e: float = np.nan
    flags: list[str] = field(default_factory=list)

    @property
    def gamma_phi(self) -> float:
        return self.gamma_phi_D + self.gamma_phi_C + self.gamma_phi_ac

    @property
    def T_1(self) -> float:
        return 1.0 / self.gamma_1 if self.gamma_1 > 0 else np.inf

    @property
    def T_phi(self) -> float:
        return 1.0 / self.gamma_phi if self.gamma_phi > 0 else np.inf

    @property
    def T_e(self) -> float:
        return 1.0 / self.gamma_e if self.gamma_e > 0 else np.inf


def _fourier_element(sol: FloquetSolution, op: np.ndarray, a: int, b: int, k: int) -> complex:
    """Period-averaged <a| op e^{i k Omega t} |b> by Fourier contraction."""
    pa, pb = sol.phi[:, :, a], sol.phi[:, :, b]
    M = sol.M
    if abs(k) >= M:
        raise ValueError(f"harmonic k = {k} exceeds Fourier truncation (M = {M})")
    if k >= 0:
        return complex(np.sum(np.conj(pa[: M - k]) * (pb[k:] @ op.T)))
    return complex(np.sum(np.conj(pa[-k:]) * (pb[: M + k] @ op.T)))


def second_order_shift(
    sol: FloquetSolution,
    op: np.ndarray,
    k_range: int | None = None,
) -> tuple[float, float, list[str]]:
    """First- and second-order susceptibility of eps_10 to a static operator.

    Second-order perturbation theory in the extended frequency-lattice
    space: the sum runs over (quasi-eigenstate, photon-sector) pairs with
    denominators eps_t - eps_a - k Omega, the self term excluded.  Delta2
    follows the second-derivative convention, d^2 eps_10 / d phi^2 = twice
    the perturbative sum.  Returns (Delta1, Delta2, flags); near-zero
    denominators attach a resonance flag but never raise.
    """
    if not sol.labels:
        raise ValueError("solution must be labeled first")
    op = np.asarray(op)
    kmax = sol.mbar - 2 if k_range is None else k_range
    M, S = sol.M, sol.n_states
    # B[m, :, a] = op |phi_{m, a}>; mel[k, a] = sum_m <phi_{m, t}| B_{m+k, a}>
    B = np.einsum("ij,mjs->mis", op, sol.phi)
    flags: list[str] = []
    d1 = {}
    d2 = {}
    for name in ("0", "1"):
        t = sol.labels[name]
        conj_t = np.conj(sol.phi[:, :, t])
        mel = np.empty((2 * kmax + 1, S), dtype=complex)
        for i, k in enumerate(range(-kmax, kmax + 1)):
            if k >= 0:
                mel[i] = np.sum(conj_t[: M - k, :, None] * B[k:], axis=(0, 1))
            else:
                mel[i] = np.sum(conj_t[-k:, :, None] * B[: M + k], axis=(0, 1))
        den = (
            sol.quasi_energies[t]
            - sol.quasi_energies[None, :]
            - np.arange(-kmax, kmax + 1)[:, None] * sol.Omega
        )
        w = np.abs(mel) ** 2
        keep = w > 1e-32
        keep[kmax, t] = False  # the diverging self term
        resonant = keep & (np.abs(den) < RESONANCE_FLOOR)
        for i, a in zip(*np.nonzero(resonant)):
            flags.append(
                f"resonant denominator {den[i, a]:.2e} GHz in sector "
                f"(state {a}, k {i - kmax}) for |{name}>"
            )
        keep &= den != 0.0
        d1[name] = float(mel[kmax, t].real)
        d2[name] = 2.0 * float(np.sum(w[keep] / den[keep]))
    return d1["1"] - d1["0"], d2["1"] - d2["0"], flags


def _solve_point(model, A, Omega, M, mode):
    sol = model.solve(A, Omega, M=M, mode=mode)
    return sol


def finite_difference_dispersion(
    model,
    A: float,
    Omega: float,
    channel: str,
    excursion: float,
    M: int | None = None,
    mode: str = "auto",
    base_sol: FloquetSolution | None = None,
) -> tuple[float, list[str]]:
    """|eps'_10 - eps_10| after displacing one noise channel.

    ``channel`` is "C" or "D" (static flux offset, excursion in units of
    the flux quantum) or "ac" (relative drive-amplitude offset).  The
    displaced problem is re-solved from scratch with label tracking; a
    labeling ambiguity in either solve flags the result.
    """
    from fluxmol.model import DEFAULT_M, DrivenModel, driven_model

    M = M or DEFAULT_M
    if excursion == 0.0:
        return 0.0, []
    if base_sol is None:
        base_sol = model.solve(A, Omega, M=M, mode=mode)
    if channel in ("C", "D"):
        d_phi = 2 * np.pi * excursion
        shifted_params = model.params.displaced(
            d_phi_C=d_phi if channel == "C" else 0.0,
            d_phi_D=d_phi if channel == "D" else 0.0,
        )
        shifted = driven_model(shifted_params, N=model.N, n_osc=model.basis.n_osc)
        sol2 = shifted.solve(A, Omega, M=M, mode=mode)
    elif channel == "ac":
        sol2 = model.solve(A * (1.0 + excursion), Omega, M=M, mode=mode)
    else:
        raise ValueError(f"unknown channel {channel!r}")
    flags = [f for f in base_sol.flags + sol2.flags if "ambiguity" in f]
    if flags:
        flags = [f"label tracking across {channel} displacement: " + flags[0]]
    d = float(abs(fold(sol2.eps_10 - base_sol.eps_10, Omega)))
    return d, flags


def flux_coupling_constant(params, channel: str) -> float:
    """|dH/d phi_ext| prefactor mapping operator susceptibilities to flux.

    Expanding the inductive energy around the offset fluxes gives
    dH/d phi_C0 = -(2 E_L + E_L') (phi_C - phi_C0) and
    dH/d phi_D0 = -(E_L/2 - E_L'/4) phi_D, both up to identity terms that
    cancel in energy differences.  First-order susceptibilities scale by
    -c, second-order (and curvatures) by c^2.
    """
    if channel == "C":
        return 2.0 * params.E_L + params.E_L_prime
    if channel == "D":
        return 0.5 * params.E_L - 0.25 * params.E_L_prime
    raise ValueError(f"unknown flux channel {channel!r}")


def dephasing_rate_flux(dispersion_ghz: float, noise: NoiseModel) -> float:
    """1/f flux dephasing rate (Hz) from a frequency dispersion in GHz.

    The dispersion is already evaluated at the channel's noise amplitude;
    the logarithmic-divergence multiplier carries the cutoff dependence.
    """
    return 2 * np.pi * 1e9 * abs(dispersion_ghz) * noise.log_factor()


def dephasing_rate_amplitude(dispersion_ghz: float) -> float:
    """Drive-amplitude dephasing rate (Hz): no logarithmic multiplier."""
    return 2 * np.pi * 1e9 * abs(dispersion_ghz)


def golden_rule_rate(
    sol: FloquetSolution,
    op: np.ndarray,
    spectral_density,
    from_state: int,
    to_state: int,
    k_range: int | None = None,
) -> float:
    """One-directional golden-rule rate (Hz) between quasi-eigenstates.

    Gamma = sum_k S(eps_from - eps_to + k Omega) |<to| op e^{i k Omega t}
    |from>|^2 with the period average done by Fourier contraction;
    ``spectral_density`` takes angular-GHz frequency and returns 1/ns.
    """
    op = np.asarray(op)
    kmax = sol.mbar - 2 if k_range is None else k_range
    if kmax > sol.mbar:
        raise ValueError(f"k_range {kmax} exceeds Fourier truncation {sol.mbar}")
    gap = sol.quasi_energies[from_state] - sol.quasi_energies[to_state]
    total = 0.0
    for k in range(-kmax, kmax + 1):
        mel = _fourier_element(sol, op, to_state, from_state, k)
        if abs(mel) < 1e-18:
            continue
        omega = 2 * np.pi * (gap + k * sol.Omega)
        if omega == 0.0:
            continue
        total += spectral_density(omega) * abs(mel) ** 2
    return total * 1e9  # 1/ns -> Hz


def _bath_channels(model, noise: NoiseModel):
    """(operator, spectral density) pairs for the four local noise channels."""
    p = model.params
    return [
        (model.op("phi_L"), lambda w: s_inductive(w, p.E_L, noise)),
        (model.op("phi_R"), lambda w: s_inductive(w, p.E_L, noise)),
        (model.op("n_L"), lambda w: s_capacitive(w, p.E_C, noise)),
        (model.op("n_R"), lambda w: s_capacitive(w, p.E_C, noise)),
    ]


def depolarization(sol: FloquetSolution, model, noise: NoiseModel, k_range=None) -> float:
    """Total |0> <-> |1> golden-rule rate (Hz) over all four bath channels."""
    a, b = sol.labels["0"], sol.labels["1"]
    total = 0.0
    for op, s in _bath_channels(model, noise):
        total += golden_rule_rate(sol, op, s, a, b, k_range)
        total += golden_rule_rate(sol, op, s, b, a, k_range)
    return total


def erasure_rates(sol: FloquetSolution, model, noise: NoiseModel, k_range=None) -> tuple[float, float]:
    """(Gamma_e, beta_e): total leakage rate out of the computational pair.

    Both directions between each computational state and each leakage
    state are counted; beta_e is the fraction carried by the "aligned"
    pairs (0, E0) and (1, E1).
    """
    pair_rate = {}
    for s_name in ("0", "1"):
        for e_name in ("E0", "E1"):
            a, b = sol.labels[s_name], sol.labels[e_name]
            r = 0.0
            for op, s in _bath_channels(model, noise):
                r += golden_rule_rate(sol, op, s, a, b, k_range)
                r += golden_rule_rate(sol, op, s, b, a, k_range)
            pair_rate[(s_name, e_name)] = r
    gamma_e = sum(pair_rate.values())
    beta_e = (pair_rate[("0", "E0")] + pair_rate[("1", "E1")]) / gamma_e if gamma_e > 0 else np.nan
    return gamma_e, beta_e


def shot_noise(n_bar: float, kappa: float, chi: float) -> float:
    """Resonator photon shot-noise dephasing rate n kappa / (1 + kappa^2/chi^2)."""
    if n_bar < 0 or kappa <= 0:
        raise ValueError("need n_bar >= 0 and kappa > 0")
    if chi == 0.0:
        return 0.0
    return n_bar * kappa / (1.0 + (kappa / chi) ** 2)


def total_report(
    model,
    A: float,
    Omega: float,
    noise: NoiseModel | None = None,
    M: int | None = None,
    mode: str = "auto",
    k_range: int | None = None,
) -> tuple[RateReport, SusceptibilityReport]:
    """All decoherence rates at one operating point.

    Runs the base solve plus one displaced solve per noise channel, then
    assembles dephasing (flux C/D with the log factor, amplitude without),
    depolarization, erasure, and shot-noise rates.
    """
    from fluxmol.model import DEFAULT_M

    noise = noise or NoiseModel()
    M = M or DEFAULT_M
    sol = model.solve(A, Omega, M=M, mode=mode)
    sus = SusceptibilityReport()
    sus.delta1_C, sus.delta2_C, f_c = second_order_shift(sol, model.op("phi_C"))
    sus.delta1_D, sus.delta2_D, f_d = second_order_shift(sol, model.op("phi_D"))
    sus.flags += f_c + f_d

    rep = RateReport()
    sus.disp_C, fl = finite_difference_dispersion(
        model, A, Omega, "C", noise.A_phi_C, M=M, mode=mode, base_sol=sol
    )
    rep.flags += fl
    sus.disp_D, fl = finite_difference_dispersion(
        model, A, Omega, "D", noise.A_phi_D, M=M, mode=mode, base_sol=sol
    )
    rep.flags += fl
    sus.disp_ac, fl = finite_difference_dispersion(
        model, A, Omega, "ac", noise.A_ac, M=M, mode=mode, base_sol=sol
    )
    rep.flags += fl

    rep.gamma_phi_C = dephasing_rate_flux(sus.disp_C, noise)
    rep.gamma_phi_D = dephasing_rate_flux(sus.disp_D, noise)
    rep.gamma_phi_ac = dephasing_rate_amplitude(sus.disp_ac)
    rep.gamma_phi_chi = shot_noise(noise.n_bar, noise.kappa, noise.chi)
    rep.gamma_1 = depolarization(sol, model, noise, k_range)
    rep.gamma_e, rep.beta_e = erasure_rates(sol, model, noise, k_range)
    rep.flags += sus.flags
    return rep, sus


def static_depolarization(model, noise: NoiseModel, a: str = "g", b: str = "f") -> float:
    """Undriven golden-rule depolarization rate (Hz) between two static levels.

    Baseline for comparing the driven qubit against its parent static pair.
    """
    ia, ib = model.spec[a], model.spec[b]
    gap = model.spec.energies[ia] - model.spec.energies[ib]
    total = 0.0
    p = model.params
    channels = [
        (model.op("phi_L"), lambda w: s_inductive(w, p.E_L, noise)),
        (model.op("phi_R"), lambda w: s_inductive(w, p.E_L, noise)),
        (model.op("n_L"), lambda w: s_capacitive(w, p.E_C, noise)),
        (model.op("n_R"), lambda w: s_capacitive(w, p.E_C, noise)),
    ]
    for op, s in channels:
        mel = op[ib, ia]
        w = 2 * np.pi * gap
        total += (s(w) + s(-w)) * abs(mel) ** 2
    return total * 1e9
