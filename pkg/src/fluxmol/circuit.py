"""Two-mode fluxonium-molecule circuit in a truncated oscillator product basis.

The circuit Hamiltonian is

    H = 4 E_C (n_L^2 + n_R^2) + (E_L/2)(phibar_L^2 + phibar_R^2)
        + (E_L'/2) phibar_L phibar_R - E_J (cos phi_L + cos phi_R)

with phibar_j = phi_j - phi_j^ext.  All energies are ordinary (non-angular)
frequencies in GHz with h = 1; angular frequencies appear only inside
spectral-density formulas elsewhere in the package.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "CircuitParams",
    "BasisConfig",
    "OperatorSet",
    "StaticSpectrum",
    "ClassificationError",
    "build_operators",
    "diagonalize_static",
    "classify_low_levels",
    "static_spectrum",
]

HERMITICITY_TOL = 1e-12
#: |matrix element| below this fraction of phi0 counts as decoupled.
DECOUPLED_FRACTION = 1e-2
#: refuse product bases beyond this dimension (memory budget)
MAX_DIM = 40_000


class ClassificationError(RuntimeError):
    """Low-level state labeling failed; carries the 4x4 phi_D matrix."""

    def __init__(self, message: str, phi_d_matrix: np.ndarray):
        super().__init__(message)
        self.phi_d_matrix = phi_d_matrix


class CapacityError(MemoryError):
    pass


@dataclass(frozen=True)
class CircuitParams:
    """Static circuit energies (GHz) and external offset fluxes (radians)."""

    E_C: float
    E_J: float
    E_L: float
    E_L_prime: float
    phi_C0: float = np.pi
    phi_D0: float = 0.0

    def __post_init__(self):
        for name in ("E_C", "E_J", "E_L"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.E_L_prime < 0:
            raise ValueError("E_L_prime must be non-negative")
        if not self.protected_regime:
            warnings.warn(
                "circuit outside the protected regime (need E_L < E_J and E_C < E_J)",
                stacklevel=2,
            )

    @property
    def protected_regime(self) -> bool:
        return self.E_L < self.E_J and self.E_C < self.E_J

    @property
    def delta_E(self) -> float:
        """Differential drive coupling energy 2 E_L - E_L' (GHz)."""
        return 2.0 * self.E_L - self.E_L_prime

    def displaced(self, d_phi_C: float = 0.0, d_phi_D: float = 0.0) -> "CircuitParams":
        return replace(self, phi_C0=self.phi_C0 + d_phi_C, phi_D0=self.phi_D0 + d_phi_D)


def table_params() -> CircuitParams:
    """Reference circuit parameter set used throughout the test suite."""
    return CircuitParams(E_C=0.7, E_J=3.9, E_L=0.4, E_L_prime=0.20667)


@dataclass(frozen=True)
class BasisConfig:
    """Truncated harmonic-oscillator product basis, n_osc levels per mode."""

    n_osc: int
    x0: float | None = None

    def __post_init__(self):
        if self.n_osc < 2:
            raise ValueError("n_osc must be at least 2")
        if self.x0 is not None and self.x0 <= 0:
            raise ValueError("x0 must be positive")

    def oscillator_length(self, params: CircuitParams) -> float:
        x0 = (8.0 * params.E_C / params.E_L) ** 0.25
        if self.x0 is not None and not np.isclose(self.x0, x0, rtol=1e-9):
            raise ValueError(f"x0={self.x0} inconsistent with circuit params (expect {x0})")
        return x0

    @property
    def dim(self) -> int:
        return self.n_osc**2


@dataclass
class OperatorSet:
    """Flux/charge operators and the static Hamiltonian, all sparse CSR."""

    params: CircuitParams
    basis: BasisConfig
    phi_L: sp.csr_matrix
    phi_R: sp.csr_matrix
    n_L: sp.csr_matrix
    n_R: sp.csr_matrix
    cos_phi_L: sp.csr_matrix
    cos_phi_R: sp.csr_matrix
    H_dc: sp.csr_matrix

    @property
    def phi_C(self) -> sp.csr_matrix:
        return 0.5 * (self.phi_L + self.phi_R)

    @property
    def phi_D(self) -> sp.csr_matrix:
        return self.phi_R - self.phi_L

    @property
    def dim(self) -> int:
        return self.phi_L.shape[0]

    def hamiltonian_at(self, phi_C: float, phi_D: float) -> sp.csr_matrix:
        """Static Hamiltonian at arbitrary external offset fluxes."""
        return _assemble_hamiltonian(self, phi_C, phi_D)

    def all_named(self) -> dict[str, sp.csr_matrix]:
        return {
            "phi_L": self.phi_L,
            "phi_R": self.phi_R,
            "n_L": self.n_L,
            "n_R": self.n_R,
            "phi_C": self.phi_C,
            "phi_D": self.phi_D,
            "cos_phi_L": self.cos_phi_L,
            "cos_phi_R": self.cos_phi_R,
            "H_dc": self.H_dc,
        }


def _single_mode_ops(n_osc: int, x0: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-mode phi, n and cos(phi) matrices in the number basis."""
    root = np.sqrt(np.arange(1, n_osc))
    a = np.diag(root, k=1)
    phi = (x0 / np.sqrt(2.0)) * (a + a.T)
    n = (1j / (np.sqrt(2.0) * x0)) * (a.T - a)
    # cos(phi) from the spectral decomposition of phi: exactly the cosine of
    # the truncated flux operator, so exp(i phi) stays unitary in the basis.
    evals, evecs = np.linalg.eigh(phi)
    cos_phi = (evecs * np.cos(evals)) @ evecs.T
    return phi, n, cos_phi


def _assemble_hamiltonian(ops: OperatorSet, phi_C: float, phi_D: float) -> sp.csr_matrix:
    p = ops.params
    o_L = phi_C - 0.5 * phi_D
    o_R = phi_C + 0.5 * phi_D
    eye = sp.identity(ops.dim, format="csr")
    pbL = ops.phi_L - o_L * eye
    pbR = ops.phi_R - o_R * eye
    H = (
        4.0 * p.E_C * (ops.n_L @ ops.n_L + ops.n_R @ ops.n_R)
        + 0.5 * p.E_L * (pbL @ pbL + pbR @ pbR)
        + 0.5 * p.E_L_prime * (pbL @ pbR)
        - p.E_J * (ops.cos_phi_L + ops.cos_phi_R)
    )
    return sp.csr_matrix(H)


def build_operators(params: CircuitParams, basis: BasisConfig) -> OperatorSet:
    """Assemble all two-mode operators and the static Hamiltonian.

    Single-mode blocks are dense; two-mode operators are sparse Kronecker
    products (phi and n are tridiagonal per mode, cos(phi) dense per mode).
    """
    if basis.dim > MAX_DIM:
        raise CapacityError(
            f"product basis dimension {basis.dim} exceeds budget {MAX_DIM}"
        )
    x0 = basis.oscillator_length(params)
    phi1, n1, cos1 = _single_mode_ops(basis.n_osc, x0)
    eye1 = sp.identity(basis.n_osc, format="csr")
    phi1_s = sp.csr_matrix(phi1)
    n1_s = sp.csr_matrix(n1)
    cos1_s = sp.csr_matrix(cos1)

    ops = OperatorSet(
        params=params,
        basis=basis,
        phi_L=sp.kron(phi1_s, eye1, format="csr"),
        phi_R=sp.kron(eye1, phi1_s, format="csr"),
        n_L=sp.kron(n1_s, eye1, format="csr"),
        n_R=sp.kron(eye1, n1_s, format="csr"),
        cos_phi_L=sp.kron(cos1_s, eye1, format="csr"),
        cos_phi_R=sp.kron(eye1, cos1_s, format="csr"),
        H_dc=None,  # filled below
    )
    ops.H_dc = _assemble_hamiltonian(ops, params.phi_C0, params.phi_D0)
    return ops


def hermiticity_defect(m: sp.spmatrix | np.ndarray) -> float:
    m = sp.csr_matrix(m)
    num = spla.norm(m - m.getH())
    den = spla.norm(m)
    return num / den if den > 0 else num


@dataclass
class StaticSpectrum:
    """Low-energy eigenpairs of H_dc, ground energy shifted to zero."""

    energies: np.ndarray  # (N,) ascending, GHz, E[0] == 0
    vectors: np.ndarray  # (dim, N), columns orthonormal, phase-fixed
    ground_energy: float  # raw ground energy before the shift (GHz)
    labels: dict[str, int] = field(default_factory=dict)  # g/e/f/h -> index
    scalars: dict[str, float] = field(default_factory=dict)  # delta, Delta, mu, ...

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def __getitem__(self, label: str) -> int:
        return self.labels[label]


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude coefficient of each column real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        pivot = out[k, j]
        if pivot != 0:
            out[:, j] *= np.conj(pivot) / abs(pivot)
    if np.allclose(out.imag, 0.0, atol=1e-14) if np.iscomplexobj(out) else False:
        out = out.real
    return out


def diagonalize_static(ops: OperatorSet, N: int) -> StaticSpectrum:
    """Lowest N eigenpairs of H_dc via sparse shift-invert Lanczos."""
    if N > ops.dim:
        raise ValueError(f"requested {N} levels from a dimension-{ops.dim} basis")
    H = ops.H_dc
    if N >= ops.dim - 1:
        evals, evecs = np.linalg.eigh(H.toarray())
        evals, evecs = evals[:N], evecs[:, :N]
    else:
        # plain Lanczos beats shift-invert here: the LU of H_dc fills in badly
        evals, evecs = spla.eigsh(H.tocsc(), k=N, which="SA")
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]

    scale = max(abs(evals[0]), abs(evals[-1]), 1.0)
    # Lanczos only loosely orthogonalizes within (near-)degenerate clusters;
    # re-orthonormalize each cluster so the invariance checks below are fair.
    start = 0
    for stop in range(1, N + 1):
        if stop == N or evals[stop] - evals[stop - 1] > 1e-7 * scale:
            if stop - start > 1:
                q, _ = np.linalg.qr(evecs[:, start:stop])
                evecs[:, start:stop] = q
            start = stop

    residual = np.linalg.norm(H @ evecs - evecs * evals, axis=0)
    if np.any(residual > 1e-8 * scale):
        raise RuntimeError(
            f"eigensolver residuals too large: max {residual.max():.3e} "
            f"(tolerance {1e-8 * scale:.3e})"
        )
    gram = evecs.conj().T @ evecs
    if not np.allclose(gram, np.eye(N), atol=1e-10):
        raise RuntimeError("eigenvectors not orthonormal to 1e-10")

    evecs = _fix_phases(evecs)
    return StaticSpectrum(
        energies=evals - evals[0],
        vectors=evecs,
        ground_energy=float(evals[0]),
    )


def project(op: sp.spmatrix, spec: StaticSpectrum, N: int | None = None) -> np.ndarray:
    """Project an operator into the lowest-N static eigenbasis (dense N x N)."""
    V = spec.vectors if N is None else spec.vectors[:, :N]
    return np.asarray(V.conj().T @ (op @ V))


def classify_low_levels(spec: StaticSpectrum, ops: OperatorSet) -> StaticSpectrum:
    """Label g, e, h, f among the four lowest states and fill derived scalars.

    The f state is the one decoupled from the other three under phi_D;
    e is the state phi0-coupled to the ground state; h is the remainder.
    """
    if spec.n_levels < 4:
        raise ValueError("need at least four levels to classify")
    pd = project(ops.phi_D, spec, 4)
    pd = np.real_if_close(pd, tol=1e6)
    off = np.abs(pd - np.diag(np.diag(pd)))
    phi0_scale = off.max()
    decoupled = [i for i in range(1, 4) if off[i].max() < DECOUPLED_FRACTION * phi0_scale]
    if len(decoupled) != 1:
        raise ClassificationError(
            f"expected exactly one decoupled state among levels 1-3, found {decoupled}",
            pd,
        )
    f = decoupled[0]
    rest = [i for i in range(1, 4) if i != f]
    # e couples to g with the dominant element phi0
    e = max(rest, key=lambda i: off[0, i])
    h = next(i for i in rest if i != e)
    if off[0, e] < DECOUPLED_FRACTION * phi0_scale:
        raise ClassificationError("no state phi0-coupled to the ground state", pd)

    phi0 = abs(pd[0, e])
    eps = abs(pd[e, h]) / (np.sqrt(2.0) * phi0)
    delta = float(spec.energies[e])
    Delta = float(spec.energies[h])
    mu = float(spec.energies[f])
    r = delta / Delta
    spec.labels = {"g": 0, "e": e, "h": h, "f": f}
    spec.scalars = {
        "delta": delta,
        "Delta": Delta,
        "mu": mu,
        "phi0": phi0,
        "eps": eps,
        "r": r,
        "R": r / eps**2,
    }
    return spec


def static_spectrum(
    params: CircuitParams, basis: BasisConfig, N: int
) -> tuple[OperatorSet, StaticSpectrum]:
    """Build operators, diagonalize, and classify in one call."""
    ops = build_operators(params, basis)
    spec = classify_low_levels(diagonalize_static(ops, N), ops)
    return ops, spec
