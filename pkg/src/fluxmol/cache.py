"""Content-addressed cache for static spectra.

Diagonalizing the circuit is the most expensive reusable step; results
are stored as .npz files keyed by a SHA-256 hash of the canonical
serialization of (circuit parameters, basis, level count).  A corrupt
entry is recomputed and overwritten with a warning, never trusted.
"""

from __future__ import annotations

import hashlib
import os
import warnings
from pathlib import Path

import numpy as np

from fluxmol.circuit import BasisConfig, CircuitParams, StaticSpectrum

__all__ = ["cache_dir", "cache_key", "cache_spectrum", "load_spectrum"]

ENV_VAR = "FLUXMOL_CACHE_DIR"


def cache_dir() -> Path:
    root = os.environ.get(ENV_VAR) or os.path.join(
        os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache")), "fluxmol"
    )
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cache_key(params: CircuitParams, basis: BasisConfig, N: int) -> str:
    """SHA-256 of the canonical parameter serialization."""
    canon = "|".join(
        f"{name}={getattr(params, name)!r}"
        for name in ("E_C", "E_J", "E_L", "E_L_prime", "phi_C0", "phi_D0")
    )
    canon += f"|n_osc={basis.n_osc}|x0={basis.x0!r}|N={N}"
    return hashlib.sha256(canon.encode()).hexdigest()


def _entry_path(key: str) -> Path:
    return cache_dir() / f"spectrum-{key}.npz"


def load_spectrum(params: CircuitParams, basis: BasisConfig, N: int) -> StaticSpectrum | None:
    """Cached spectrum, or None on a miss; corrupt entries count as misses."""
    path = _entry_path(cache_key(params, basis, N))
    if not path.exists():
        return None
    try:
        with np.load(path, allow_pickle=False) as data:
            energies = data["energies"]
            vectors = data["vectors"]
            ground = float(data["ground_energy"])
            label_names = [str(s) for s in data["label_names"]]
            label_idx = data["label_indices"]
            scalar_names = [str(s) for s in data["scalar_names"]]
            scalar_vals = data["scalar_values"]
        if len(energies) != N or vectors.shape[1] != N:
            raise ValueError("shape mismatch")
    except Exception as err:  # corrupt or stale entry
        warnings.warn(f"corrupt cache entry {path.name}: {err}; recomputing", stacklevel=2)
        path.unlink(missing_ok=True)
        return None
    return StaticSpectrum(
        energies=energies,
        vectors=vectors,
        ground_energy=ground,
        labels=dict(zip(label_names, (int(i) for i in label_idx))),
        scalars=dict(zip(scalar_names, (float(v) for v in scalar_vals))),
    )


def cache_spectrum(params: CircuitParams, basis: BasisConfig, N: int, spec: StaticSpectrum) -> str:
    """Store a spectrum; returns the cache key."""
    key = cache_key(params, basis, N)
    path = _entry_path(key)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(
        tmp,
        energies=spec.energies,
        vectors=spec.vectors,
        ground_energy=np.float64(spec.ground_energy),
        label_names=np.array(list(spec.labels.keys())),
        label_indices=np.array(list(spec.labels.values()), dtype=int),
        scalar_names=np.array(list(spec.scalars.keys())),
        scalar_values=np.array(list(spec.scalars.values()), dtype=float),
    )
    os.replace(tmp, path)
    return key
