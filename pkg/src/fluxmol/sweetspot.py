"""Zero loci of the flux susceptibilities and the double sweet spot.

The qubit quasi-frequency's second-order flux susceptibilities D2_C(A, W)
and D2_D(A, W) each vanish along a line in the drive plane; where the two
lines cross, the qubit is simultaneously (to second order) insensitive to
both common- and differential-mode flux noise.  This module traces the
loci column-by-column in drive amplitude, refines roots by bisection,
locates the crossing, and sweeps circuit parameters to map its drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fluxmol.coherence import second_order_shift

__all__ = [
    "SweepGrid",
    "SweetSpotResult",
    "SusceptibilityEvaluator",
    "trace_zero_locus",
    "find_double_sweet_spot",
    "parameter_drift_sweep",
]


@dataclass(frozen=True)
class SweepGrid:
    """Rectangular (A, Omega) search grid with per-point lattice cutoffs."""

    A_min: float = 0.0
    A_max: float = 0.40
    dA: float = 0.005
    Omega_min: float = 1.46
    Omega_max: float = 1.54
    dOmega: float = 0.25e-3  # GHz
    M: int = 39

    def __post_init__(self):
        if self.dA <= 0 or self.dOmega <= 0:
            raise ValueError("grid steps must be positive")
        if self.A_max < self.A_min or self.Omega_max <= self.Omega_min:
            raise ValueError("grid ranges must be non-empty")

    @property
    def A_values(self) -> np.ndarray:
        n = int(round((self.A_max - self.A_min) / self.dA)) + 1
        return self.A_min + self.dA * np.arange(n)

    @property
    def Omega_values(self) -> np.ndarray:
        n = int(round((self.Omega_max - self.Omega_min) / self.dOmega)) + 1
        return self.Omega_min + self.dOmega * np.arange(n)

    def snap(self, A: float, Omega: float) -> tuple[float, float]:
        """Nearest grid point."""
        a = self.A_min + self.dA * round((A - self.A_min) / self.dA)
        w = self.Omega_min + self.dOmega * round((Omega - self.Omega_min) / self.dOmega)
        return a, w


class SusceptibilityEvaluator:
    """Memoized (D2_C, D2_D, resonance-flag) evaluation over the drive plane."""

    def __init__(self, model, M: int = 39, mode: str = "auto"):
        self.model = model
        self.M = M
        self.mode = mode
        self.cache: dict[tuple[float, float], tuple[float, float, bool]] = {}
        self.n_solves = 0

    def __call__(self, A: float, Omega: float) -> tuple[float, float, bool]:
        key = (round(A, 12), round(Omega, 12))
        if key not in self.cache:
            sol = self.model.solve(A, Omega, M=self.M, mode=self.mode)
            _, d2c, fc = second_order_shift(sol, self.model.op("phi_C"))
            _, d2d, fd = second_order_shift(sol, self.model.op("phi_D"))
            flagged = bool(fc or fd) or any("ambiguity" in f for f in sol.flags)
            self.cache[key] = (d2c, d2d, flagged)
            self.n_solves += 1
        return self.cache[key]

    def channel(self, A: float, Omega: float, j: str) -> tuple[float, bool]:
        d2c, d2d, flagged = self(A, Omega)
        return (d2c if j == "C" else d2d), flagged


def _bisect_root(evaluator, A, w_lo, w_hi, f_lo, f_hi, j, tol):
    """Bisect D2_j(A, .) between a bracketing pair down to tol in Omega."""
    while w_hi - w_lo > tol:
        w_mid = 0.5 * (w_lo + w_hi)
        f_mid, flagged = evaluator.channel(A, w_mid, j)
        if flagged:
            # step off the resonance rather than trusting the sign
            w_mid += 0.05 * (w_hi - w_lo)
            f_mid, flagged = evaluator.channel(A, w_mid, j)
            if flagged:
                break
        if f_lo * f_mid <= 0.0:
            w_hi, f_hi = w_mid, f_mid
        else:
            w_lo, f_lo = w_mid, f_mid
    return 0.5 * (w_lo + w_hi)


def _column_root(evaluator, A, omegas, j, flags, window=None):
    """Lowest-Omega sign change of D2_j along one amplitude column.

    With ``window = (lo, hi)`` indices, only that slice of the column is
    scanned (warm start from the neighboring column); resonance-flagged
    cells are skipped, never used as bracket endpoints.
    """
    idx = range(len(omegas)) if window is None else range(window[0], window[1])
    prev = None  # (omega, value)
    for i in idx:
        val, flagged = evaluator.channel(A, omegas[i], j)
        if flagged:
            flags.append((A, omegas[i]))
            continue
        if prev is not None and prev[1] * val <= 0.0 and prev[1] != val:
            tol = 1e-3 * (omegas[1] - omegas[0])
            return _bisect_root(evaluator, A, prev[0], omegas[i], prev[1], val, j, tol)
        prev = (omegas[i], val)
    return None


def _analytic_hint(model, A: float, channel: str) -> float | None:
    """Low-order four-level prediction for the locus Omega at amplitude A."""
    try:
        from fluxmol.fourlevel import (
            FourLevelParams,
            amplitude_scale,
            sweet_line_C,
            sweet_line_D,
        )

        p = FourLevelParams.from_spectrum(model.spec, model.params)
        z0 = A / amplitude_scale(p, p.Delta)
        line = sweet_line_D if channel == "D" else sweet_line_C
        return float(line(p, z0))
    except Exception:
        return None


def trace_zero_locus(
    model,
    grid: SweepGrid,
    channel: str,
    evaluator: SusceptibilityEvaluator | None = None,
    window_cells: int = 6,
    hint: float | None = None,
) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Polyline of D2_channel = 0 over the grid, one root per A column.

    The first column searches around ``hint`` (by default the four-level
    analytic prediction, falling back to a full scan); subsequent columns
    search a window around the previous root, likewise widening to a full
    scan if the root escapes.  Resonance-flagged cells are skipped, never
    used as brackets.  Returns (polyline (n, 2) of (A, Omega), flagged
    points).  No sign change anywhere -> empty polyline.
    """
    if channel not in ("C", "D"):
        raise ValueError("channel must be 'C' or 'D'")
    evaluator = evaluator or SusceptibilityEvaluator(model, M=grid.M)
    omegas = grid.Omega_values
    flags: list[tuple[float, float]] = []
    points = []
    if hint is None:
        hint = _analytic_hint(model, grid.A_values[0], channel)
    prev_idx = None
    if hint is not None and omegas[0] <= hint <= omegas[-1]:
        prev_idx = int(np.searchsorted(omegas, hint))
    for A in grid.A_values:
        root = None
        if prev_idx is not None:
            lo = max(0, prev_idx - window_cells)
            hi = min(len(omegas), prev_idx + window_cells + 1)
            root = _column_root(evaluator, A, omegas, channel, flags, window=(lo, hi))
        if root is None:
            root = _column_root(evaluator, A, omegas, channel, flags)
        if root is not None:
            points.append((A, root))
            prev_idx = int(np.searchsorted(omegas, root))
        else:
            prev_idx = None
    return np.asarray(points).reshape(-1, 2), flags


@dataclass
class SweetSpotResult:
    """Traced loci, the crossing (if any), and search provenance."""

    locus_C: np.ndarray
    locus_D: np.ndarray
    crossing: tuple[float, float] | None
    grid_point: tuple[float, float] | None
    flags: list[tuple[float, float]] = field(default_factory=list)
    min_gap: float | None = None  # GHz, when loci never cross
    n_solves: int = 0
    refinement_converged: bool = True


def _polyline_crossing(pa: np.ndarray, pb: np.ndarray) -> tuple[float, float] | None:
    """Lowest-A crossing of two column-aligned polylines, by interpolation."""
    A_common = np.intersect1d(pa[:, 0], pb[:, 0])
    if len(A_common) < 2:
        return None
    wa = np.interp(A_common, pa[:, 0], pa[:, 1])
    wb = np.interp(A_common, pb[:, 0], pb[:, 1])
    diff = wa - wb
    for i in range(len(A_common) - 1):
        if diff[i] == 0.0:
            return float(A_common[i]), float(wa[i])
        if diff[i] * diff[i + 1] < 0.0:
            t = diff[i] / (diff[i] - diff[i + 1])
            A = A_common[i] + t * (A_common[i + 1] - A_common[i])
            return float(A), float(np.interp(A, pa[:, 0], pa[:, 1]))
    return None


def _secant_refine(evaluator, A0, w0, dA, dw, max_iter=12):
    """2-D secant (Broyden) iteration on (D2_C, D2_D) from a bracketed start."""
    x = np.array([A0, w0])
    f = np.array(evaluator(x[0], x[1])[:2])
    # initial Jacobian from forward differences at the grid scale
    J = np.empty((2, 2))
    fa = np.array(evaluator(x[0] + dA, x[1])[:2])
    fw = np.array(evaluator(x[0], x[1] + dw)[:2])
    J[:, 0] = (fa - f) / dA
    J[:, 1] = (fw - f) / dw
    converged = False
    # converged when the residual is tiny against the susceptibility swing
    # across one grid cell (the locus-sharpness scale)
    scale = np.abs(J[:, 0]) * dA + np.abs(J[:, 1]) * dw + 1e-12
    for _ in range(max_iter):
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            break
        step = np.clip(step, [-2 * dA, -2 * dw], [2 * dA, 2 * dw])
        x_new = x + step
        f_new = np.array(evaluator(x_new[0], x_new[1])[:2])
        if np.all(np.abs(f_new) < 1e-4 * scale):
            x, f = x_new, f_new
            converged = True
            break
        df = f_new - f
        ds = x_new - x
        denom = ds @ ds
        if denom > 0:
            J += np.outer(df - J @ ds, ds) / denom
        x, f = x_new, f_new
    return float(x[0]), float(x[1]), converged


def find_double_sweet_spot(
    model,
    grid: SweepGrid,
    evaluator: SusceptibilityEvaluator | None = None,
) -> SweetSpotResult:
    """Trace both loci, intersect them, and refine the crossing.

    The crossing estimate from the polylines is polished by a 2-D secant
    iteration on the susceptibility pair; the nearest grid point is
    reported alongside the refined value.  Disjoint loci return no
    crossing plus the minimum inter-locus gap.
    """
    evaluator = evaluator or SusceptibilityEvaluator(model, M=grid.M)
    locus_C, flags_C = trace_zero_locus(model, grid, "C", evaluator)
    locus_D, flags_D = trace_zero_locus(model, grid, "D", evaluator)
    flags = flags_C + [f for f in flags_D if f not in flags_C]
    result = SweetSpotResult(
        locus_C=locus_C, locus_D=locus_D, crossing=None, grid_point=None, flags=flags
    )
    if len(locus_C) == 0 or len(locus_D) == 0:
        result.n_solves = evaluator.n_solves
        return result
    guess = _polyline_crossing(locus_C, locus_D)
    if guess is None:
        A_common = np.intersect1d(locus_C[:, 0], locus_D[:, 0])
        if len(A_common):
            gap = np.abs(
                np.interp(A_common, locus_C[:, 0], locus_C[:, 1])
                - np.interp(A_common, locus_D[:, 0], locus_D[:, 1])
            )
            result.min_gap = float(np.min(gap))
        result.n_solves = evaluator.n_solves
        return result
    A, w, converged = _secant_refine(evaluator, guess[0], guess[1], grid.dA, grid.dOmega)
    result.crossing = (A, w)
    result.grid_point = grid.snap(A, w)
    result.refinement_converged = converged
    result.n_solves = evaluator.n_solves
    return result


def parameter_drift_sweep(
    base_params,
    parameter: str,
    fractional_steps,
    grid: SweepGrid,
    N: int = 50,
    n_osc: int = 60,
    noise=None,
    seed_spot: tuple[float, float] | None = None,
) -> list[dict]:
    """Sweet-spot drift under fractional changes of one circuit parameter.

    For each step q the crossing is re-located with a local grid seeded
    from the previous spot; each row reports fractional changes of A* and
    Omega* and the summed flux dephasing rate at the new spot.  A lost
    crossing is recorded as a row with ``found = False``.
    """
    from fluxmol.coherence import NoiseModel, dephasing_rate_flux, finite_difference_dispersion
    from fluxmol.model import driven_model

    if parameter not in ("E_J", "E_L_prime"):
        raise ValueError("swept parameter must be 'E_J' or 'E_L_prime'")
    if np.max(np.abs(fractional_steps)) > 0.10 + 1e-12:
        raise ValueError("fractional steps limited to +-10%")
    noise = noise or NoiseModel()

    rows = []
    prev_spot = seed_spot
    base_spot = None
    for q in fractional_steps:
        value = getattr(base_params, parameter) * (1.0 + q)
        from dataclasses import replace

        params = replace(base_params, **{parameter: value})
        model = driven_model(params, N=N, n_osc=n_osc)
        local = grid
        if prev_spot is not None:
            local = SweepGrid(
                A_min=max(grid.A_min, prev_spot[0] - 8 * grid.dA),
                A_max=min(grid.A_max, prev_spot[0] + 8 * grid.dA),
                dA=grid.dA,
                Omega_min=max(grid.Omega_min, prev_spot[1] - 10 * grid.dOmega),
                Omega_max=min(grid.Omega_max, prev_spot[1] + 10 * grid.dOmega),
                dOmega=grid.dOmega,
                M=grid.M,
            )
        res = find_double_sweet_spot(model, local)
        if res.crossing is None and prev_spot is not None:
            res = find_double_sweet_spot(model, grid)  # widen once
        row = {"q": float(q), "parameter": parameter, "found": res.crossing is not None}
        if res.crossing is not None:
            A, w = res.crossing
            if q == 0.0 or base_spot is None:
                base_spot = base_spot or (A, w)
            row["A_star"] = A
            row["Omega_star"] = w
            row["dA_frac"] = A / base_spot[0] - 1.0
            row["dOmega_frac"] = w / base_spot[1] - 1.0
            dC, _ = finite_difference_dispersion(model, A, w, "C", noise.A_phi_C, M=grid.M)
            dD, _ = finite_difference_dispersion(model, A, w, "D", noise.A_phi_D, M=grid.M)
            row["gamma_phi_flux"] = dephasing_rate_flux(dC, noise) + dephasing_rate_flux(dD, noise)
            prev_spot = (A, w)
        rows.append(row)
    return rows
