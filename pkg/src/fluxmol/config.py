"""Declarative key = value run configuration with units in the key names.

The format is deliberately flat and explicit: one ``key = value`` pair per
line, ``#`` comments, and every dimensionful key carries its unit as a
suffix (``E_C_GHz``, ``T_K``, ``kappa_Hz``), making unit bugs visible at
the configuration boundary.  Unknown keys and malformed values are
reported with their line numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "dump_config"]


class ConfigError(ValueError):
    """Configuration problem, carrying file/line/field diagnostics."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        loc = f" (line {line}" + (f", key {key!r})" if key else ")") if line else ""
        super().__init__(message + loc)


def _positive(x):
    return x > 0


def _non_negative(x):
    return x >= 0


def _odd_min5(x):
    return x >= 5 and x % 2 == 1


# key -> (type, validator or None, default)
SCHEMA = {
    # circuit
    "E_C_GHz": (float, _positive, 0.7),
    "E_J_GHz": (float, _positive, 3.9),
    "E_L_GHz": (float, _positive, 0.4),
    "E_L_prime_GHz": (float, _positive, 0.20667),
    "phi_C0_rad": (float, None, np.pi),
    "phi_D0_rad": (float, None, 0.0),
    # basis and cutoffs
    "n_osc": (int, _positive, 60),
    "N": (int, lambda x: x >= 4, 50),
    "M": (int, _odd_min5, 39),
    # drive / operating point
    "A": (float, _non_negative, 0.0),
    "Omega_GHz": (float, _positive, 1.52),
    "phase_convention": (str, lambda s: s in ("sine", "cosine"), "sine"),
    # sweep grid
    "A_min": (float, _non_negative, 0.05),
    "A_max": (float, _non_negative, 0.40),
    "dA": (float, _positive, 0.005),
    "Omega_min_GHz": (float, _positive, 1.46),
    "Omega_max_GHz": (float, _positive, 1.54),
    "dOmega_GHz": (float, _positive, 0.25e-3),
    # noise model
    "A_phi_C_Phi0": (float, _non_negative, 1e-6),
    "A_phi_D_Phi0": (float, _non_negative, 1e-6),
    "A_ac_rel": (float, _non_negative, 1e-8),
    "T_K": (float, _positive, 0.015),
    "omega_uv_rad_s": (float, _positive, 2 * np.pi * 1.5e9),
    "omega_ir_rad_s": (float, _positive, 2 * np.pi * 1.0),
    "t_int_s": (float, _positive, 10e-6),
    "n_bar": (float, _non_negative, 1e-4),
    "kappa_Hz": (float, _positive, 6e6),
    "chi_Hz": (float, None, 0.65e6),
    # gates
    "A_gate": (float, _positive, 3.2e-4),
    "gate_axis": (str, lambda s: s.upper() in ("X", "Y"), "X"),
    "m_g": (int, lambda x: x >= 1, 3),
    "gate_budget": (int, _positive, 2000),
    # ancilla
    "anc_E_J_GHz": (float, _positive, 5.2),
    "anc_E_C_GHz": (float, _positive, 0.4),
    "anc_E_L_GHz": (float, _positive, 0.2),
    "phi_q_rad": (float, None, 0.1 * np.pi),
    "g_q_GHz": (float, None, 0.4e-3),
    "n_anc": (int, lambda x: 2 <= x <= 6, 3),
    # run control
    "workers": (int, _positive, 1),
    "seed": (int, _non_negative, 0),
    "out_dir": (str, None, "out"),
}


@dataclass
class RunConfig:
    """Validated configuration; values indexed by schema key."""

    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def __getitem__(self, key: str):
        if key not in SCHEMA:
            raise KeyError(f"unknown config key {key!r}")
        return self.values.get(key, SCHEMA[key][2])

    def override(self, **kwargs) -> "RunConfig":
        vals = dict(self.values)
        for k, v in kwargs.items():
            if v is None:
                continue
            if k not in SCHEMA:
                raise ConfigError(f"unknown config key {k!r}", key=k)
            vals[k] = _coerce(k, v, None)
        return RunConfig(values=vals, source=self.source)

    def circuit_params(self):
        from fluxmol.circuit import CircuitParams

        return CircuitParams(
            E_C=self["E_C_GHz"],
            E_J=self["E_J_GHz"],
            E_L=self["E_L_GHz"],
            E_L_prime=self["E_L_prime_GHz"],
            phi_C0=self["phi_C0_rad"],
            phi_D0=self["phi_D0_rad"],
        )

    def noise_model(self):
        from fluxmol.coherence import NoiseModel

        return NoiseModel(
            A_phi_C=self["A_phi_C_Phi0"],
            A_phi_D=self["A_phi_D_Phi0"],
            A_ac=self["A_ac_rel"],
            T=self["T_K"],
            omega_uv=self["omega_uv_rad_s"],
            omega_ir=self["omega_ir_rad_s"],
            t_int=self["t_int_s"],
            n_bar=self["n_bar"],
            kappa=self["kappa_Hz"],
            chi=self["chi_Hz"],
        )

    def sweep_grid(self):
        from fluxmol.sweetspot import SweepGrid

        return SweepGrid(
            A_min=self["A_min"],
            A_max=self["A_max"],
            dA=self["dA"],
            Omega_min=self["Omega_min_GHz"],
            Omega_max=self["Omega_max_GHz"],
            dOmega=self["dOmega_GHz"],
            M=self["M"],
        )

    def ancilla_model(self):
        from fluxmol.readout import AncillaFluxoniumModel

        return AncillaFluxoniumModel(
            E_J=self["anc_E_J_GHz"],
            E_C=self["anc_E_C_GHz"],
            E_L=self["anc_E_L_GHz"],
            phi_q=self["phi_q_rad"],
            g_q=self["g_q_GHz"],
        )

    def as_dict(self) -> dict:
        return {k: self[k] for k in SCHEMA}


def _coerce(key: str, raw, line: int | None):
    typ, check, _ = SCHEMA[key]
    try:
        value = typ(raw) if not isinstance(raw, typ) else raw
        if typ is int and isinstance(raw, str) and "." in raw:
            raise ValueError("not an integer")
    except (TypeError, ValueError) as err:
        raise ConfigError(f"cannot parse {raw!r} as {typ.__name__}: {err}", line, key) from err
    if check is not None and not check(value):
        raise ConfigError(f"value {value!r} fails validation", line, key)
    return value


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse and schema-validate a key = value configuration text."""
    values: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno, key)
        values[key] = _coerce(key, raw, lineno)
    return RunConfig(values=values, source=source)


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), source=path)


def dump_config(config: RunConfig) -> str:
    """Canonical serialization (17 significant digits), hash- and diff-stable."""
    lines = []
    for key in sorted(SCHEMA):
        v = config[key]
        lines.append(f"{key} = {v:.17g}" if isinstance(v, float) else f"{key} = {v}")
    return "\n".join(lines) + "\n"
