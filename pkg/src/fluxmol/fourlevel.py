"""Closed-form four-level Floquet theory of the driven fluxonium molecule.

Nearly-degenerate (Van Vleck style) perturbation theory in the well-mixing
parameter eps gives Bessel-function eigenbases for the zeroth-order lattice
blocks, an effective 3x3 Hamiltonian for each resonant triplet, analytic
sweet lines for both flux channels, the qubit frequency, and its amplitude
dispersion.  Everything here is a fast predictor and an independent check
on the frequency-lattice numerics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

from fluxmol.circuit import CircuitParams, StaticSpectrum

__all__ = [
    "FourLevelParams",
    "NormalizedDrive",
    "GVVResult",
    "SweetLines",
    "f_plus_minus",
    "f_plus_minus_prime",
    "xyzw_eigenbasis",
    "gvv_effective_hamiltonian",
    "sweet_lines_analytic",
    "qubit_frequency_analytic",
    "amplitude_dispersion",
]

_TERM_FLOOR = 1e-15


@dataclass(frozen=True)
class FourLevelParams:
    """Scalars of the reduced four-level model (energies in GHz)."""

    delta: float
    Delta: float
    mu: float
    eps: float
    R: float
    phi0: float
    delta_E: float

    def __post_init__(self):
        if abs(self.r - self.R * self.eps**2) > 1e-10:
            raise ValueError("inconsistent scalars: r must equal R * eps^2")

    @property
    def r(self) -> float:
        return self.delta / self.Delta

    @classmethod
    def from_spectrum(cls, spec: StaticSpectrum, params: CircuitParams) -> "FourLevelParams":
        s = spec.scalars
        return cls(
            delta=s["delta"],
            Delta=s["Delta"],
            mu=s["mu"],
            eps=s["eps"],
            R=s["R"],
            phi0=s["phi0"],
            delta_E=params.delta_E,
        )


@dataclass(frozen=True)
class NormalizedDrive:
    """Dimensionless drive amplitudes z0 = A/A0 and z1 = (A/A1)^2."""

    z0: float
    z1: float
    A0: float
    A1: float

    @classmethod
    def from_amplitude(cls, p: FourLevelParams, A: float, Omega: float) -> "NormalizedDrive":
        A0 = 2.0 * Omega / (np.pi * p.phi0 * np.sqrt(1.0 + 2.0 * p.eps**2) * p.delta_E)
        A1 = np.sqrt(4.0 * Omega / (np.pi**2 * p.phi0 * p.delta_E))
        return cls(z0=A / A0, z1=(A / A1) ** 2, A0=A0, A1=A1)


def amplitude_scale(p: FourLevelParams, Omega: float) -> float:
    """A0, the drive amplitude at which z0 = 1."""
    return 2.0 * Omega / (np.pi * p.phi0 * np.sqrt(1.0 + 2.0 * p.eps**2) * p.delta_E)


def f_plus_minus(z0: float, k_cutoff: int = 50) -> tuple[float, float]:
    """The lattice sums f_+ and f_-.

    f_pm = -sum_{k != 0} J_{1-k}(z0) J_{k-1}(pm z0) / k, truncated once the
    Bessel products fall below 1e-15.
    """
    if k_cutoff < 25:
        raise ValueError("k_cutoff must be at least 25")
    ks = np.concatenate([np.arange(-k_cutoff, 0), np.arange(1, k_cutoff + 1)])
    a = jv(1 - ks, z0)
    terms_p = -a * jv(ks - 1, z0) / ks
    terms_m = -a * jv(ks - 1, -z0) / ks
    keep_p = np.abs(terms_p) >= _TERM_FLOOR
    keep_m = np.abs(terms_m) >= _TERM_FLOOR
    return float(terms_p[keep_p].sum()), float(terms_m[keep_m].sum())


def f_plus_minus_prime(z0: float, k_cutoff: int = 50) -> tuple[float, float]:
    """Derivatives of f_+ and f_- with respect to z0 (via J' recurrence)."""
    ks = np.concatenate([np.arange(-k_cutoff, 0), np.arange(1, k_cutoff + 1)])

    def dj(n, x):
        return 0.5 * (jv(n - 1, x) - jv(n + 1, x))

    a = jv(1 - ks, z0)
    da = dj(1 - ks, z0)
    fp = -np.sum((da * jv(ks - 1, z0) + a * dj(ks - 1, z0)) / ks)
    fm = -np.sum((da * jv(ks - 1, -z0) - a * dj(ks - 1, -z0)) / ks)
    return float(fp), float(fm)


def xyzw_eigenbasis(
    z0: float,
    z1: float,
    n: int,
    fourier_range: int = 40,
    low_amplitude: bool = False,
) -> dict[str, np.ndarray]:
    """Fourier coefficients of the dressed |x,n>, |y,n>, |z,n>, |w,n> states.

    Returns, for each sector, the coefficient on the bare lattice site k for
    k in [-fourier_range, fourier_range].  With ``low_amplitude`` the z1 sum
    collapses to its m = 0 term.
    """
    if fourier_range < 1:
        raise ValueError("fourier_range must be positive")
    ks = np.arange(-fourier_range, fourier_range + 1)
    if low_amplitude:
        ms = np.array([0])
    else:
        m_max = 2
        while abs(jv(m_max, z1)) > _TERM_FLOOR and m_max < 60:
            m_max += 1
        ms = np.arange(-m_max, m_max + 1)

    jm = jv(ms, z1)
    x = np.zeros_like(ks, dtype=float)
    y = np.zeros_like(x)
    z = np.zeros_like(x)
    w = np.zeros_like(x)
    for m, jmv in zip(ms, jm):
        x += jmv * jv(ks - n - 2 * m, -z0)
        y += jmv * jv(ks - n - 2 * m, z0)
        idx = np.nonzero(ks == 2 * m + n)[0]
        if idx.size:
            z[idx[0]] += jmv
            w[idx[0]] += jmv
    return {"x": x, "y": y, "z": z, "w": w, "k": ks}


@dataclass
class GVVResult:
    """Effective 3x3 Hamiltonian data for the resonant triplet at index n."""

    G0: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    eigvecs: np.ndarray  # columns e0, e1, e2 (analytic forms, normalized)
    alpha1: float
    alpha2: float
    comp_energy: float  # quasi-energy of the |0> branch (GHz)
    w_energy: float  # quasi-energy of the |1> branch, mu + (n-1) Omega
    erasure_energies: np.ndarray  # the two remaining eigenvalues of G
    eigenvalues: np.ndarray  # all three eigenvalues of G^(<=2), ascending


def gvv_effective_hamiltonian(
    p: FourLevelParams, z0: float, Omega: float, n: int = 1, z1: float = 0.0
) -> GVVResult:
    """Effective Hamiltonian of the triplet span{x(n), y(n), z(n-1)}.

    Only the zeroth order in the two-photon amplitude z1 is kept; callers
    should keep z1 small (a warning is emitted above 0.05).
    """
    if z1 > 0.05:
        import warnings

        warnings.warn(f"z1 = {z1:.3g} beyond the low-amplitude regime", stacklevel=2)
    eps, R, Delta, mu = p.eps, p.R, p.Delta, p.mu
    fp, fm = f_plus_minus(z0)
    j0 = jv(0, 2.0 * z0)
    j1 = jv(1, z0)

    G0 = np.diag([n * Omega, n * Omega, Delta + (n - 1) * Omega])
    G1 = Delta * j1 * np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, -1.0, 0.0]])
    d = (R / 2.0 + 1.0) + fm
    o = (1.0 - R / 2.0) * j0 + fp
    G2 = Delta * np.array([[d, o, 0.0], [o, d, 0.0], [0.0, 0.0, -2.0 * (1.0 + fm)]])
    G = G0 + eps * G1 + eps**2 * G2

    if j1 != 0.0:
        alpha1 = (
            eps * ((R - 2.0) * j0 + R + 2.0 * (3.0 * fm - fp + 3.0))
            + 2.0 * (Omega / Delta - 1.0) / eps
        ) / (8.0 * j1)
    else:
        alpha1 = np.inf
    alpha2 = np.sqrt(alpha1**2 + 0.5) if np.isfinite(alpha1) else np.inf

    e0 = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    if np.isfinite(alpha1):
        e1 = np.array([alpha1 - alpha2, alpha2 - alpha1, 1.0])
        e2 = np.array([alpha1 + alpha2, -alpha1 - alpha2, 1.0])
        e1 /= np.linalg.norm(e1)
        e2 /= np.linalg.norm(e2)
    else:
        e1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
        e2 = np.array([0.0, 0.0, 1.0])

    evals = np.linalg.eigvalsh(G)
    comp_energy = float(e0 @ G @ e0)
    erasure = np.array(sorted(evals, key=lambda v: abs(v - comp_energy))[1:])
    return GVVResult(
        G0=G0,
        G1=G1,
        G2=G2,
        eigvecs=np.column_stack([e0, e1, e2]),
        alpha1=float(alpha1),
        alpha2=float(alpha2),
        comp_energy=comp_energy,
        w_energy=mu + (n - 1) * Omega,
        erasure_energies=np.sort(erasure),
        eigenvalues=evals,
    )


def _sweet_brackets(p: FourLevelParams, z0: float) -> tuple[float, float]:
    fp, fm = f_plus_minus(z0)
    j0 = jv(0, 2.0 * z0)
    bd = 3.0 + 3.0 * fm + fp + p.R / 2.0 + j0 * (1.0 - p.R / 2.0)
    bc = 1.0 + fm - fp + p.R / 2.0 - j0 * (1.0 - p.R / 2.0)
    return bd, bc


def sweet_line_D(p: FourLevelParams, z0: float) -> float:
    """Drive frequency zeroing the differential-flux curvature at this z0."""
    bd, _ = _sweet_brackets(p, z0)
    return p.Delta - p.Delta * p.eps**2 * bd


def sweet_line_C(p: FourLevelParams, z0: float) -> float:
    """Drive frequency zeroing the common-flux curvature at this z0."""
    _, bc = _sweet_brackets(p, z0)
    return p.mu - p.Delta * p.eps**2 * bc


@dataclass
class SweetLines:
    z0_grid: np.ndarray
    Omega_D: np.ndarray
    Omega_C: np.ndarray
    crossing: tuple[float, float] | None  # (z0*, Omega*) or None


def sweet_lines_analytic(p: FourLevelParams, z0_grid: np.ndarray) -> SweetLines:
    """Both analytic sweet lines over a z0 grid, plus their lowest crossing."""
    z0_grid = np.asarray(z0_grid, dtype=float)
    od = np.array([sweet_line_D(p, z) for z in z0_grid])
    oc = np.array([sweet_line_C(p, z) for z in z0_grid])
    diff = od - oc
    crossing = None
    for i in range(len(z0_grid) - 1):
        if diff[i] == 0.0:
            crossing = (float(z0_grid[i]), float(od[i]))
            break
        if diff[i] * diff[i + 1] < 0.0:
            zs = brentq(
                lambda z: sweet_line_D(p, z) - sweet_line_C(p, z),
                z0_grid[i],
                z0_grid[i + 1],
                xtol=1e-12,
            )
            crossing = (float(zs), float(sweet_line_D(p, zs)))
            break
    return SweetLines(z0_grid=z0_grid, Omega_D=od, Omega_C=oc, crossing=crossing)


def qubit_frequency_analytic(p: FourLevelParams, z0: float, Omega: float) -> float:
    """Analytic qubit frequency in the low-amplitude four-level theory."""
    fp, fm = f_plus_minus(z0)
    bracket = 1.0 + fm + fp + p.R / 2.0 + jv(0, 2.0 * z0) * (1.0 - p.R / 2.0)
    return p.mu - Omega - p.Delta * p.eps**2 * bracket


def amplitude_dispersion(p: FourLevelParams, z0: float, Omega: float) -> float:
    """d(eps_01)/dA at fixed Omega, from the closed-form qubit frequency.

    Differentiating the analytic frequency through z0 = A/A0 gives
    (Delta/A0) [eps^2 (f+' + f-') + (r - 2 eps^2) J_1(2 z0)], the quoted
    structure with its prefactor made explicit.  Note the 01 (not 10) sign.
    """
    fpp, fmp = f_plus_minus_prime(z0)
    A0 = amplitude_scale(p, Omega)
    return (p.Delta / A0) * (
        p.eps**2 * (fpp + fmp) + (p.r - 2.0 * p.eps**2) * jv(1, 2.0 * z0)
    )
