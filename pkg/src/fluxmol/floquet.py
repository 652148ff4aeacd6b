"""Frequency-lattice quasi-energy solver for the driven circuit.

The time-periodic problem is mapped onto a static block-banded operator K
with K_{ij} = Htilde_{i-j} + j Omega delta_{ij} over Fourier block indices
j in [-Mbar, Mbar].  Quasi-energies are reported folded to the central zone
[-Omega/2, Omega/2); one representative eigenvector per physical state is
kept, resolved into its Fourier components.

Units: energies in GHz (ordinary frequency, h = 1), time in ns, so phases
evolve as exp(-2 pi i E t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from fluxmol.circuit import OperatorSet, StaticSpectrum, project

__all__ = [
    "DriveParams",
    "FourierHamiltonian",
    "FloquetOperator",
    "FloquetSolution",
    "fold",
    "fourier_components",
    "build_k",
    "solve_floquet",
    "label_states",
    "propagator_oracle",
]

MAX_LATTICE_DIM = 600_000


@dataclass(frozen=True)
class DriveParams:
    """Monochromatic differential-flux drive, amplitude in units of Phi0."""

    A: float
    Omega: float  # GHz, ordinary frequency
    phase_convention: str = "sine"  # "sine" or "cosine"

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("drive amplitude must be non-negative")
        if self.Omega <= 0:
            raise ValueError("drive frequency must be positive")
        if self.phase_convention not in ("sine", "cosine"):
            raise ValueError("phase_convention must be 'sine' or 'cosine'")

    @property
    def period(self) -> float:
        """Drive period in ns."""
        return 1.0 / self.Omega


def fold(e, Omega: float):
    """Fold (quasi-)energies into the central zone [-Omega/2, Omega/2)."""
    return e - Omega * np.floor(np.asarray(e) / Omega + 0.5)


@dataclass
class FourierHamiltonian:
    """Fourier components Htilde_k of the driven Hamiltonian, N-level basis.

    Only k >= 0 is stored; Htilde_{-k} = Htilde_k^dagger.
    """

    components: dict[int, np.ndarray]
    N: int
    delta_E: float

    def component(self, k: int) -> np.ndarray:
        if k >= 0:
            return self.components.get(k, np.zeros((self.N, self.N), dtype=complex))
        return self.components.get(-k, np.zeros((self.N, self.N), dtype=complex)).conj().T

    @property
    def bandwidth(self) -> int:
        return max((k for k, m in self.components.items() if np.any(m)), default=0)


def fourier_components(
    ops: OperatorSet | np.ndarray,
    spec: StaticSpectrum,
    drive: DriveParams,
    N: int,
) -> FourierHamiltonian:
    """Fourier components of the flux-driven Hamiltonian in the static eigenbasis.

    ``ops`` may be the full operator set or a pre-projected N x N phi_D matrix.
    The drive enters the inductive terms only:

        H(t) = H_dc - (dE/4) phi_d(t) phi_D + (dE/8) phi_d(t)^2

    with phi_d(t) = 2 pi A sin/cos(Omega t) and dE = 2 E_L - E_L'.
    """
    if spec.n_levels < N:
        raise ValueError(f"spectrum holds {spec.n_levels} levels, need {N}")
    if isinstance(ops, OperatorSet):
        phi_d_n = project(ops.phi_D, spec, N)
        delta_e = ops.params.delta_E
    else:
        phi_d_n = np.asarray(ops)[:N, :N]
        delta_e = getattr(spec, "delta_E", None)
        if delta_e is None:
            raise ValueError("pass an OperatorSet or a spectrum carrying delta_E")
    A, eye = drive.A, np.eye(N)
    h0 = np.diag(spec.energies[:N]).astype(complex)
    h0 += (np.pi**2 * A**2 * delta_e / 4.0) * eye
    if drive.phase_convention == "cosine":
        h1 = -(np.pi * A * delta_e / 4.0) * phi_d_n.astype(complex)
        h2 = (np.pi**2 * A**2 * delta_e / 8.0) * eye.astype(complex)
    else:  # sine
        h1 = 1j * (np.pi * A * delta_e / 4.0) * phi_d_n
        h2 = -(np.pi**2 * A**2 * delta_e / 8.0) * eye.astype(complex)
    return FourierHamiltonian(components={0: h0, 1: h1, 2: h2}, N=N, delta_E=delta_e)


@dataclass
class FloquetOperator:
    """The block-banded lattice operator K and its shape metadata."""

    matrix: sp.csr_matrix
    N: int
    M: int
    Omega: float

    @property
    def mbar(self) -> int:
        return (self.M - 1) // 2

    @property
    def dim(self) -> int:
        return self.N * self.M

    def block_index(self, j: int) -> slice:
        """Column/row slice of Fourier block j in [-mbar, mbar]."""
        i = j + self.mbar
        return slice(i * self.N, (i + 1) * self.N)


def build_k(fh: FourierHamiltonian, M: int, Omega: float) -> FloquetOperator:
    """Assemble K_{ij} = Htilde_{i-j} + j Omega delta_{ij}."""
    if M < 5 or M % 2 == 0:
        raise ValueError("M must be odd and at least 5")
    N = fh.N
    if N * M > MAX_LATTICE_DIM:
        raise MemoryError(f"lattice dimension {N * M} exceeds budget {MAX_LATTICE_DIM}")
    mbar = (M - 1) // 2
    j_vals = np.arange(-mbar, mbar + 1)
    blocks = []
    for k in range(-fh.bandwidth, fh.bandwidth + 1):
        hk = fh.component(k)
        if not np.any(hk):
            continue
        # block (i, j) holds Htilde_{i-j}; scipy offset d puts blocks at j = i + d
        band = sp.diags(np.ones(M - abs(k)), offsets=-k)
        blocks.append(sp.kron(band, sp.csr_matrix(hk)))
    blocks.append(sp.kron(sp.diags(j_vals * Omega), sp.identity(N)))
    K = sp.csr_matrix(sum(blocks))
    return FloquetOperator(matrix=K, N=N, M=M, Omega=Omega)


@dataclass
class FloquetSolution:
    """Central-zone quasi-eigenstates, Fourier-resolved.

    ``phi[n, :, a]`` is the Fourier-block-n component (over static levels)
    of quasi-eigenstate a; quasi-energies live in [-Omega/2, Omega/2).
    """

    quasi_energies: np.ndarray  # (S,)
    phi: np.ndarray  # (M, N, S)
    Omega: float
    N: int
    M: int
    interior_weight: np.ndarray = None
    truncation_suspect: np.ndarray = None
    labels: dict[str, int] = field(default_factory=dict)
    eps_10: float | None = None
    eps_10_branch: int | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def n_states(self) -> int:
        return len(self.quasi_energies)

    @property
    def mbar(self) -> int:
        return (self.M - 1) // 2

    def vector(self, a: int) -> np.ndarray:
        """Extended-space eigenvector of state a, shape (M * N,)."""
        return self.phi[:, :, a].reshape(-1)

    def static_weights(self, a: int) -> np.ndarray:
        """Time-averaged weight of state a on each static level."""
        return np.sum(np.abs(self.phi[:, :, a]) ** 2, axis=0)

    def __getitem__(self, label: str) -> int:
        return self.labels[label]


def _interior_weight(phi: np.ndarray, margin: int) -> np.ndarray:
    w = np.sum(np.abs(phi) ** 2, axis=1)  # (M, S)
    total = w.sum(axis=0)
    if margin <= 0:
        return np.ones_like(total)
    return w[margin:-margin].sum(axis=0) / total


def _interior_eigsh(K_csc, k: int, Omega: float):
    """Shift-invert Lanczos at the zone center, nudging the shift off
    exact eigenvalues (a singular factorization at sigma = 0 happens at
    A = 0 whenever a static level sits on a lattice rung)."""
    sigma = 0.0
    for _ in range(4):
        try:
            evals, evecs = spla.eigsh(K_csc, k=k, sigma=sigma, which="LM")
            order = np.argsort(evals)
            return evals[order], evecs[:, order]
        except spla.ArpackNoConvergence as err:
            raise RuntimeError(f"interior eigensolver failed to converge: {err}") from err
        except RuntimeError as err:
            if "singular" not in str(err):
                raise
            sigma += 1e-7 * Omega
    raise RuntimeError("interior eigensolver: factorization singular at all trial shifts")


def solve_floquet(
    K: FloquetOperator,
    n_states: int | None = None,
    mode: str = "auto",
) -> FloquetSolution:
    """Quasi-energies and Fourier-resolved quasi-eigenstates of K.

    One representative per physical state is returned: the eigenvector whose
    raw eigenvalue lies in the central zone (block-shifted copies sit at
    offsets of Omega and are excluded automatically).  ``mode`` selects the
    full dense spectrum or interior-targeting Lanczos ("dense", "interior",
    "auto").
    """
    N, M, Omega = K.N, K.M, K.Omega
    want = N if n_states is None else n_states
    if mode == "auto":
        mode = "dense" if K.dim <= 600 else "interior"

    half = Omega / 2.0
    if mode == "dense":
        evals, evecs = np.linalg.eigh(K.matrix.toarray())
    elif mode == "interior":
        k = min(want + 16, K.dim - 2)
        evals, evecs = _interior_eigsh(K.matrix.tocsc(), k, Omega)
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    in_zone = (evals >= -half) & (evals < half)
    evals, evecs = evals[in_zone], evecs[:, in_zone]
    if mode == "interior" and len(evals) < want:
        # zone population short of target: widen the Lanczos window once
        k = min(2 * want + 32, K.dim - 2)
        evals, evecs = _interior_eigsh(K.matrix.tocsc(), k, Omega)
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        in_zone = (evals >= -half) & (evals < half)
        evals, evecs = evals[in_zone], evecs[:, in_zone]

    phi = evecs.reshape(M, N, -1)
    margin = min(2, K.mbar - 1)
    interior = _interior_weight(phi, margin)
    sol = FloquetSolution(
        quasi_energies=evals,
        phi=phi,
        Omega=Omega,
        N=N,
        M=M,
        interior_weight=interior,
        truncation_suspect=interior < 0.99,
    )
    if len(evals) < want:
        sol.flags.append(f"central zone holds {len(evals)} states, expected {want}")
    return sol


def _time_averaged_element(
    sol: FloquetSolution, op: np.ndarray, a: int, b: int, k: int
) -> complex:
    """Period average of <a| op e^{i k Omega t} |b> via Fourier contraction."""
    pa, pb = sol.phi[:, :, a], sol.phi[:, :, b]
    M = sol.M
    if k >= 0:
        lo, hi = 0, M - k
        return np.sum(np.conj(pa[lo:hi]) * (pb[k:] @ op.T))
    return np.sum(np.conj(pa[-k:]) * (pb[: M + k] @ op.T))


def time_averaged_element(sol, op, a, b, k=0) -> complex:
    return _time_averaged_element(sol, np.asarray(op), a, b, k)


def label_states(
    sol: FloquetSolution,
    spec: StaticSpectrum,
    phi_C_N: np.ndarray | None = None,
) -> FloquetSolution:
    """Identify |0>, |1>, |E0>, |E1> by time-averaged static-state overlaps.

    |1> maximizes weight on f; |0> maximizes g/e weight with minimal h
    admixture; the erasure pair carries the mixed g/e-h character, ordered
    by quasi-energy.  When ``phi_C_N`` is given, the relative phase of |1>
    is fixed so the k = 1 period-averaged common-flux element from |0> is
    real positive (the gate-axis phase reference).
    """
    need = {"g", "e", "h", "f"}
    if not need <= spec.labels.keys():
        raise ValueError("static spectrum must be classified first")
    W = np.stack([sol.static_weights(a) for a in range(sol.n_states)])  # (S, 4-ish)
    wg, we = W[:, spec["g"]], W[:, spec["e"]]
    wh, wf = W[:, spec["h"]], W[:, spec["f"]]

    def argmax_with_margin(score, taken):
        s = score.copy()
        s[list(taken)] = -np.inf
        a = int(np.argmax(s))
        s[a] = -np.inf
        runner = float(np.max(s))
        return a, runner

    taken: set[int] = set()
    one, run1 = argmax_with_margin(wf, taken)
    taken.add(one)
    zero, run0 = argmax_with_margin(wg + we - wh, taken)
    taken.add(zero)
    eh_score = wh + 0.5 * (wg + we)
    ea, _ = argmax_with_margin(eh_score, taken)
    taken.add(ea)
    eb, _ = argmax_with_margin(eh_score, taken)
    e_lo, e_hi = sorted((ea, eb), key=lambda a: sol.quasi_energies[a])

    sol.labels = {"1": one, "0": zero, "E0": e_lo, "E1": e_hi}
    if run1 > 0.99 * wf[one]:
        sol.flags.append("labeling ambiguity: two candidates for |1> within 1%")
    score0 = (wg + we - wh)[zero]
    if score0 > 0 and run0 > 0.99 * score0:
        sol.flags.append("labeling ambiguity: two candidates for |0> within 1%")

    eps10 = float(fold(sol.quasi_energies[one] - sol.quasi_energies[zero], sol.Omega))
    raw = sol.quasi_energies[one] - sol.quasi_energies[zero]
    sol.eps_10 = eps10
    sol.eps_10_branch = int(np.floor(raw / sol.Omega + 0.5))

    # gauge: pin |1>'s phase to the k = 1 common-flux element from |0>
    if phi_C_N is not None:
        p = _time_averaged_element(sol, np.asarray(phi_C_N), sol.labels["0"], one, 1)
        if abs(p) > 1e-14:
            sol.phi[:, :, one] *= np.conj(p) / abs(p)
    return sol


def _drive_waveform(drive: DriveParams, delta_e: float):
    """Returns phi_d(t) with t in ns."""
    two_pi_a = 2.0 * np.pi * drive.A
    w = 2.0 * np.pi * drive.Omega
    if drive.phase_convention == "cosine":
        return lambda t: two_pi_a * np.cos(w * t)
    return lambda t: two_pi_a * np.sin(w * t)


def propagator_oracle(
    spec: StaticSpectrum,
    drive: DriveParams,
    N: int,
    phi_d_n: np.ndarray,
    delta_e: float,
    tolerance: float = 1e-11,
) -> np.ndarray:
    """One-period propagator of the N-level driven Hamiltonian.

    Independent verification path: adaptive high-order integration of the
    Schrodinger equation i dU/dt = 2 pi H(t) U over one period, never the
    lattice.  Use small N (<= 32 advised).
    """
    if N > 32:
        import warnings

        warnings.warn(f"propagator oracle with N = {N} > 32 will be slow", stacklevel=2)
    h0 = np.diag(spec.energies[:N]).astype(complex)
    v = np.asarray(phi_d_n)[:N, :N].astype(complex)
    phi_d = _drive_waveform(drive, delta_e)

    def rhs(t, y):
        u = y.reshape(N, N)
        pd = phi_d(t)
        h = h0 + (-(delta_e / 4.0) * pd) * v + (delta_e / 8.0 * pd**2) * np.eye(N)
        return (-2j * np.pi * (h @ u)).reshape(-1)

    res = solve_ivp(
        rhs,
        (0.0, drive.period),
        np.eye(N, dtype=complex).reshape(-1),
        method="DOP853",
        rtol=tolerance,
        atol=tolerance,
    )
    if not res.success:
        raise RuntimeError(f"propagator integration failed: {res.message}")
    U = res.y[:, -1].reshape(N, N)
    defect = np.linalg.norm(U.conj().T @ U - np.eye(N))
    if defect > 1e4 * tolerance:
        raise RuntimeError(f"propagator unitarity defect {defect:.3e}")
    return U


def propagator_eigenphases(U: np.ndarray, Omega: float) -> np.ndarray:
    """Folded quasi-energies from the one-period propagator, ascending."""
    lam = np.linalg.eigvals(U)
    eps = -np.angle(lam) * Omega / (2.0 * np.pi)
    return np.sort(fold(eps, Omega))
