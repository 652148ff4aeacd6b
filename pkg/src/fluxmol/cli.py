"""Command-line front end: pipeline stages, artifacts, and parallel sweeps.

Every subcommand reads a declarative key=value config (all keys optional,
units in key names), runs one analysis stage, prints a human summary, and
writes diff-friendly artifacts: CSV payloads plus a JSON sidecar carrying
provenance (config hash, cutoffs, code version, wall time).  Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from fluxmol import __version__
from fluxmol.config import ConfigError, RunConfig, dump_config, load_config

__all__ = ["main", "sweep_runner"]


class NumericalFailure(RuntimeError):
    """Raised when a stage cannot produce a result; carries solver flags."""

    def __init__(self, message: str, flags=()):
        super().__init__(message)
        self.flags = list(flags)


def _g17(x) -> str:
    """17-significant-digit float formatting: bit-exact round trips."""
    if isinstance(x, float) or isinstance(x, np.floating):
        return f"{float(x):.17g}"
    return str(x)


def _config_hash(config: RunConfig) -> str:
    return hashlib.sha256(dump_config(config).encode()).hexdigest()


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_g17(v) for v in row) + "\n")


def write_artifact(out: Path, name: str, kind: str, config: RunConfig, payload: dict, t0: float) -> Path:
    """JSON sidecar with provenance; returns the sidecar path."""
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "kind": kind,
        "provenance": {
            "config_hash": _config_hash(config),
            "config": config.as_dict(),
            "cutoffs": {"N": config["N"], "M": config["M"], "n_osc": config["n_osc"]},
            "version": __version__,
            "wall_time_s": round(time.monotonic() - t0, 3),
        },
        "payload": payload,
    }
    path = out / f"{name}.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    raise TypeError(f"not JSON serializable: {type(x)}")


def _build_model(config: RunConfig):
    from fluxmol.model import driven_model

    return driven_model(config.circuit_params(), N=config["N"], n_osc=config["n_osc"])


# ---------------------------------------------------------------------------
# parallel sweep machinery


_WORKER_STATE: dict = {}


def _worker_init(values: dict):
    """Build the per-process model once; workers only read it."""
    config = RunConfig(values=values)
    _WORKER_STATE["config"] = config
    _WORKER_STATE["model"] = _build_model(config)


def _map_point(task):
    """One coherence-map cell: flux-dephasing estimate from susceptibilities."""
    idx, A, Omega = task
    from fluxmol.coherence import (
        dephasing_rate_flux,
        flux_coupling_constant,
        second_order_shift,
    )

    config, model = _WORKER_STATE["config"], _WORKER_STATE["model"]
    noise = config.noise_model()
    try:
        sol = model.solve(A, Omega, M=config["M"])
        flags = list(sol.flags)
        rate = 0.0
        for channel, amp in (("C", noise.A_phi_C), ("D", noise.A_phi_D)):
            d1, d2, fl = second_order_shift(sol, model.op(f"phi_{channel}"))
            flags += fl
            c = flux_coupling_constant(model.params, channel)
            a_rad = 2 * np.pi * amp
            rate += dephasing_rate_flux(
                abs(-c * d1 * a_rad + 0.5 * c**2 * d2 * a_rad**2), noise
            )
        return idx, float(rate), sorted(set(flags))
    except Exception as exc:  # per-point failures are recorded, not fatal
        return idx, float("nan"), [f"error: {exc}"]


def sweep_runner(config: RunConfig, points: list[tuple[float, float]], workers: int | None = None):
    """Evaluate map points in parallel; merged output independent of workers.

    Returns rows [(A, Omega, value, flags_str)] in the order of ``points``.
    """
    workers = workers or config["workers"]
    tasks = [(i, a, w) for i, (a, w) in enumerate(points)]
    results: dict[int, tuple[float, list[str]]] = {}
    if workers <= 1:
        _worker_init(dict(config.values))
        for t in tasks:
            idx, value, flags = _map_point(t)
            results[idx] = (value, flags)
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_worker_init, initargs=(dict(config.values),)
        ) as pool:
            for idx, value, flags in pool.map(_map_point, tasks, chunksize=4):
                results[idx] = (value, flags)
    if all(np.isnan(results[i][0]) for i in results) and results:
        raise NumericalFailure(
            "all sweep points failed", [f for i in results for f in results[i][1]]
        )
    return [
        (a, w, results[i][0], ";".join(results[i][1])) for i, a, w in tasks
    ]


# ---------------------------------------------------------------------------
# subcommands


def cmd_static(config: RunConfig, out: Path) -> int:
    t0 = time.monotonic()
    model = _build_model(config)
    spec = model.spec
    print(f"static spectrum: N = {spec.n_levels}, ground energy {_g17(spec.ground_energy)} GHz")
    print(f"  eps = {spec.scalars['eps']:.6f}   R = {spec.scalars['R']:.6f}")
    inv = {v: k for k, v in spec.labels.items()}
    rows = []
    for i, e in enumerate(spec.energies[: min(8, spec.n_levels)]):
        label = inv.get(i, "")
        print(f"  level {i:2d}  {e:12.6f} GHz  {label}")
    for i, e in enumerate(spec.energies):
        rows.append((i, e, inv.get(i, "")))
    write_csv(out / "static_spectrum.csv", ["index", "energy_GHz", "label"], rows)
    write_artifact(
        out, "static_spectrum", "static-spectrum", config,
        {"scalars": dict(spec.scalars), "labels": dict(spec.labels)}, t0,
    )
    return 0


def cmd_floquet(config: RunConfig, out: Path) -> int:
    t0 = time.monotonic()
    model = _build_model(config)
    A, Omega = config["A"], config["Omega_GHz"]
    sol = model.solve(A, Omega, M=config["M"], phase_convention=config["phase_convention"])
    print(f"quasi-energies at A = {A}, Omega = {Omega} GHz (zone width {Omega} GHz):")
    rows = []
    for name in ("0", "1", "E0", "E1"):
        idx = sol.labels[name]
        print(f"  |{name}>  {sol.quasi_energies[idx]:+.9f} GHz")
    for idx in range(sol.n_states):
        names = [n for n, i in sol.labels.items() if i == idx]
        rows.append((idx, sol.quasi_energies[idx], names[0] if names else ""))
    print(f"  eps_10 = {sol.eps_10 * 1e6:+.3f} kHz   flags: {sol.flags or 'none'}")
    write_csv(out / "floquet_summary.csv", ["index", "quasi_energy_GHz", "label"], rows)
    write_artifact(
        out, "floquet_summary", "floquet-solution-summary", config,
        {"A": A, "Omega_GHz": Omega, "eps_10_GHz": sol.eps_10, "flags": sol.flags}, t0,
    )
    if any("ambiguity" in f or "truncation" in f for f in sol.flags):
        print("warning: solution flags raised; inspect artifact", file=sys.stderr)
    return 0


def cmd_coherence_map(config: RunConfig, out: Path, workers: int | None) -> int:
    t0 = time.monotonic()
    grid = config.sweep_grid()
    points = [(float(a), float(w)) for a in grid.A_values for w in grid.Omega_values]
    print(f"flux-dephasing map: {len(grid.A_values)} x {len(grid.Omega_values)} grid, "
          f"{workers or config['workers']} worker(s)")
    rows = sweep_runner(config, points, workers)
    write_csv(out / "coherence_map.csv", ["A", "Omega_GHz", "value", "flags"], rows)
    finite = [r[2] for r in rows if np.isfinite(r[2])]
    best = rows[int(np.nanargmin([r[2] if np.isfinite(r[2]) else np.inf for r in rows]))]
    print(f"  {len(finite)}/{len(rows)} points finite; minimum {best[2]:.3g} Hz "
          f"at A = {best[0]}, Omega = {best[1]} GHz")
    write_artifact(
        out, "coherence_map", "coherence-map", config,
        {"grid": {"A": list(grid.A_values), "Omega_GHz": list(grid.Omega_values)},
         "minimum": {"A": best[0], "Omega_GHz": best[1], "value_Hz": best[2]}}, t0,
    )
    return 0


def cmd_sweet_spot(config: RunConfig, out: Path) -> int:
    from fluxmol.sweetspot import find_double_sweet_spot

    t0 = time.monotonic()
    model = _build_model(config)
    grid = config.sweep_grid()
    res = find_double_sweet_spot(model, grid)
    for name, locus in (("C", res.locus_C), ("D", res.locus_D)):
        write_csv(out / f"locus_{name}.csv", ["A", "Omega_GHz", "value", "flags"],
                  [(a, w, 0.0, "") for a, w in locus])
    payload = {
        "crossing": res.crossing,
        "grid_point": res.grid_point,
        "refinement_converged": res.refinement_converged,
        "n_solves": res.n_solves,
        "min_gap_GHz": res.min_gap,
        "flagged_cells": res.flags,
    }
    write_artifact(out, "sweet_spot", "sweet-spot", config, payload, t0)
    if res.crossing is None:
        raise NumericalFailure(
            "zero-dispersion loci do not cross on this grid",
            [f"min inter-locus gap {res.min_gap} GHz"] + [str(f) for f in res.flags],
        )
    A, w = res.crossing
    print(f"double sweet spot: A* = {_g17(A)}, Omega* = {_g17(w)} GHz "
          f"(grid point {res.grid_point}, {res.n_solves} solves)")
    return 0


def cmd_gate_opt(config: RunConfig, out: Path) -> int:
    from fluxmol.gates import gate_fidelity, monochromatic_baseline, optimize_pulse, sample_waveforms

    t0 = time.monotonic()
    model = _build_model(config)
    A, Omega, axis = config["A"], config["Omega_GHz"], config["gate_axis"].upper()
    pulse, rep = optimize_pulse(
        model, A, Omega, config["A_gate"], axis=axis, m_g=config["m_g"],
        budget=config["gate_budget"], seed=config["seed"], M=config["M"],
    )
    base = monochromatic_baseline(model, A, Omega, config["A_gate"], axis=axis, M=config["M"])
    print(f"{axis} gate at A_gate = {config['A_gate']}:")
    print(f"  optimized   F = {rep.fidelity:.6f}  t = {rep.gate_time * 1e9:.0f} ns  "
          f"|c_{axis.lower()}| = {abs(rep.axis_coefficient(axis.lower())):.6f}")
    print(f"  single-tone F = {base.fidelity:.6f}  t = {base.gate_time * 1e9:.0f} ns")
    t_ns, phi_c, phi_d = sample_waveforms(pulse, A, Omega)
    write_csv(out / "gate_waveform_phi_C.csv", ["t_ns", "phi_C_rad"], zip(t_ns, phi_c))
    write_csv(out / "gate_waveform_phi_D.csv", ["t_ns", "phi_D_rad"], zip(t_ns, phi_d))
    payload = {
        "axis": axis,
        "tones": {f"{j},{k},{theta:.10g}": x for (j, k, theta), x in pulse.x.items()},
        "delta_Omega_GHz": pulse.delta_Omega,
        "fidelity": rep.fidelity,
        "gate_time_s": rep.gate_time,
        "leakage": rep.leakage,
        "baseline_fidelity": base.fidelity,
        "baseline_gate_time_s": base.gate_time,
        "flags": rep.flags,
    }
    write_artifact(out, "gate_report", "gate-report", config, payload, t0)
    return 0


def cmd_readout(config: RunConfig, out: Path) -> int:
    from fluxmol.readout import (
        AncillaQubitModel,
        centered_phi_C,
        coupled_shift_ed,
        effective_lambda_g,
        perturbative_shift,
        transverse_g,
    )

    t0 = time.monotonic()
    model = _build_model(config)
    A, Omega = config["A"], config["Omega_GHz"]
    anc = config.ancilla_model()
    lam, g, omega_q, residual, flags = effective_lambda_g(anc)
    longitudinal = abs(anc.phi_q) > 1e-6
    if longitudinal:
        qm = AncillaQubitModel(omega_q=omega_q, g=g, lam=lam, coupling="longitudinal")
        print(f"ancilla (phi_q = {anc.phi_q:.4f}): lambda = {lam:.4f}, "
              f"g = {g * 1e3:.4f} MHz, omega_q = {omega_q:.4f} GHz")
    else:
        g, omega_q = transverse_g(anc)
        qm = AncillaQubitModel(omega_q=omega_q, g=g, lam=0.5, coupling="transverse")
        print(f"ancilla (phi_q = 0): transverse g = {g * 1e6:.1f} kHz, omega_q = {omega_q:.4f} GHz")
    sol = model.solve(A, Omega, M=config["M"])
    pert = perturbative_shift(sol, qm, centered_phi_C(model))
    ed = coupled_shift_ed(model, A, Omega, anc, n_anc=config["n_anc"], M=config["M"])
    print("  state   perturbative      coupled-ED")
    for name in ("0", "1", "E0", "E1"):
        print(f"  |{name:>2}>  {pert.shifts[name] * 1e6:+12.3f} kHz  {ed.shifts[name] * 1e6:+12.3f} kHz")
    print(f"  logical degeneracy ratio (ED): {ed.logical_degeneracy_ratio:.3e}")
    payload = {
        "lambda": lam, "g_GHz": g, "omega_q_GHz": omega_q,
        "transverse_residual": residual,
        "perturbative_shifts_GHz": pert.shifts,
        "ed_shifts_GHz": ed.shifts,
        "logical_degeneracy_ratio": ed.logical_degeneracy_ratio,
        "flags": flags + pert.flags + ed.flags,
    }
    write_artifact(out, "readout_report", "readout-report", config, payload, t0)
    return 0


def cmd_sweep(config: RunConfig, out: Path, parameter: str, steps: list[float]) -> int:
    from fluxmol.sweetspot import parameter_drift_sweep

    t0 = time.monotonic()
    grid = config.sweep_grid()
    seed_spot = None
    if config["A"] > 0:
        seed_spot = (config["A"], config["Omega_GHz"])
    rows = parameter_drift_sweep(
        config.circuit_params(), parameter, steps, grid,
        N=config["N"], n_osc=config["n_osc"], noise=config.noise_model(), seed_spot=seed_spot,
    )
    header = ["q", "found", "A_star", "Omega_star_GHz", "dA_frac", "dOmega_frac", "gamma_phi_flux_Hz"]
    csv_rows = []
    for row in rows:
        csv_rows.append((
            row["q"], int(row["found"]),
            row.get("A_star", float("nan")), row.get("Omega_star", float("nan")),
            row.get("dA_frac", float("nan")), row.get("dOmega_frac", float("nan")),
            row.get("gamma_phi_flux", float("nan")),
        ))
        status = (f"A* = {row['A_star']:.4f}, Omega* = {row['Omega_star']:.6f}"
                  if row["found"] else "crossing lost")
        print(f"  {parameter} {row['q']:+.3f}: {status}")
    write_csv(out / "drift_table.csv", header, csv_rows)
    write_artifact(out, "drift_table", "sweep-table", config,
                   {"parameter": parameter, "rows": rows}, t0)
    if not any(r["found"] for r in rows):
        raise NumericalFailure("no sweep step located a crossing")
    return 0


def cmd_verify(config: RunConfig, out: Path) -> int:
    """Fast oracle suites; exits nonzero on any failure."""
    from fluxmol.coherence import shot_noise, s_inductive
    from fluxmol.floquet import (
        DriveParams,
        build_k,
        fold,
        fourier_components,
        propagator_eigenphases,
        propagator_oracle,
        solve_floquet,
    )
    from fluxmol.fourlevel import FourLevelParams, amplitude_scale, gvv_effective_hamiltonian
    from fluxmol.model import driven_model

    failures: list[str] = []

    def check(name: str, ok: bool, detail: str = ""):
        print(f"  [{'ok' if ok else 'FAIL'}] {name}" + (f"  {detail}" if detail else ""))
        if not ok:
            failures.append(name)

    params = config.circuit_params()
    rng = np.random.default_rng(config["seed"])

    # propagator oracle at small truncations
    for N in (4, 8):
        model = driven_model(params, N=N, n_osc=60, use_cache=False)
        phi_d = model.op("phi_D")
        worst = 0.0
        for _ in range(5):
            A = float(rng.uniform(0.05, 0.4))
            Omega = float(rng.uniform(1.3, 1.7))
            drive = DriveParams(A=A, Omega=Omega)
            sol = solve_floquet(
                build_k(fourier_components(phi_d, model.spec, drive, N), 31, Omega), n_states=N
            )
            U = propagator_oracle(model.spec, drive, N, phi_d, params.delta_E)
            eps = propagator_eigenphases(U, Omega)
            got = np.sort(fold(sol.quasi_energies, Omega))
            worst = max(worst, float(np.max(np.abs(got - eps)) / Omega))
        check(f"propagator oracle N={N}", worst < 1e-8, f"worst {worst:.2e}")

    # 4-level effective-Hamiltonian consistency near resonance
    model4 = driven_model(params, N=4, n_osc=60, use_cache=False)
    p4 = FourLevelParams.from_spectrum(model4.spec, params)
    tol = 5 * p4.eps**3 * p4.Delta
    worst = 0.0
    for z0 in (0.6, 1.0, 1.4):
        for Omega in (0.99 * p4.Delta, 1.01 * p4.Delta):
            A = z0 * amplitude_scale(p4, Omega)
            gvv = gvv_effective_hamiltonian(p4, z0, Omega)
            sol = model4.solve(A, Omega, M=31, label=False)
            # the DC part of the quadratic drive term shifts every
            # quasi-energy by dE (pi A)^2 / 4; the effective model omits it
            dc = p4.delta_E * (np.pi * A) ** 2 / 4.0
            num = np.sort(fold(sol.quasi_energies - dc, Omega))
            ana = np.sort(fold(np.append(gvv.eigenvalues, gvv.w_energy), Omega))
            diff = np.abs(num - ana)
            diff = np.minimum(diff, Omega - diff)  # circular distance in the zone
            worst = max(worst, float(np.max(diff)))
    check("4-level effective Hamiltonian", worst < tol, f"worst {worst:.2e} (tol {tol:.2e})")

    # detailed balance of the bath spectral density
    from scipy import constants as const

    noise = config.noise_model()
    w = 2 * np.pi * 0.8
    x = const.hbar * w * 1e9 / (const.k * noise.T)
    ratio = s_inductive(w, params.E_L, noise) / s_inductive(-w, params.E_L, noise)
    check("detailed balance S(w)/S(-w) = e^x", abs(ratio - np.exp(x)) < 1e-10 * np.exp(x))

    # shot-noise closed form
    check("shot noise closed form", abs(shot_noise(1e-4, 6e6, 0.65e6) - 6.9547) < 0.05)

    # phase-convention equivalence
    m = driven_model(params, N=8, n_osc=60, use_cache=False)
    qs = m.solve(0.2, 1.5, M=21, phase_convention="sine", label=False).quasi_energies
    qc = m.solve(0.2, 1.5, M=21, phase_convention="cosine", label=False).quasi_energies
    check("sine/cosine drive equivalence",
          float(np.max(np.abs(np.sort(qs) - np.sort(qc)))) < 1e-10)

    if failures:
        print(f"verify: {len(failures)} suite(s) failed", file=sys.stderr)
        return 1
    print("verify: all oracle suites passed")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxmol", description="Driven two-fluxonium qubit analysis pipeline"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument("--workers", type=int, help="parallel worker count")
    common.add_argument("--cutoff-n", type=int, dest="cutoff_n", help="static levels kept (N)")
    common.add_argument("--cutoff-m", type=int, dest="cutoff_m", help="Fourier modes kept (M, odd)")
    common.add_argument("--seed", type=int, help="random seed")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("static", "floquet", "coherence-map", "sweet-spot", "gate-opt", "readout", "verify"):
        sub.add_parser(name, parents=[common])
    sweep = sub.add_parser("sweep", parents=[common])
    sweep.add_argument("--parameter", default="E_J", choices=("E_J", "E_L_prime"))
    sweep.add_argument("--steps", default="-0.1,-0.05,0.0,0.05,0.1",
                       help="comma-separated fractional parameter steps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = config.override(
            workers=args.workers, N=args.cutoff_n, M=args.cutoff_m, seed=args.seed
        )
    except ConfigError as exc:
        loc = f" (line {exc.line})" if getattr(exc, "line", None) else ""
        key = f" key {exc.key!r}" if getattr(exc, "key", None) else ""
        print(f"config error{loc}{key}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out or config["out_dir"])
    try:
        if args.command == "static":
            return cmd_static(config, out)
        if args.command == "floquet":
            return cmd_floquet(config, out)
        if args.command == "coherence-map":
            return cmd_coherence_map(config, out, args.workers)
        if args.command == "sweet-spot":
            return cmd_sweet_spot(config, out)
        if args.command == "gate-opt":
            return cmd_gate_opt(config, out)
        if args.command == "readout":
            return cmd_readout(config, out)
        if args.command == "sweep":
            steps = [float(s) for s in args.steps.split(",") if s.strip()]
            return cmd_sweep(config, out, args.parameter, steps)
        if args.command == "verify":
            return cmd_verify(config, out)
        raise AssertionError(f"unhandled command {args.command}")
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        for flag in exc.flags:
            print(f"  flag: {flag}", file=sys.stderr)
        return 3
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
