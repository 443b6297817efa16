"""INI experiment configs and the bundled figure presets.

Energies are in units of ``J`` and times in units of ``1/J``.  Dephasing
rates are given as ``gamma / J_eff``.  Example::

    [run]
    command = noon

    [experiment]
    L = 5
    M = 2
    U = 5

    [edge_unlocked]
    beta_prime = auto

    [split_impurity]
    beta_scaled = 0.789
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ConfigError
from .lattice_model import (
    edge_unlock_field,
    edge_unlocked,
    even_chain,
    even_chain_scheme,
    minimal_engineered,
    minimal_engineering_fields,
    optimal_end_coupling,
    split_impurity,
    splitting_field_asymptotic,
)
from .protocols import ExperimentConfig, optimize_split_field

__all__ = ["RunSpec", "parse_config", "parse_text", "load_preset", "list_presets", "COMMANDS"]

COMMANDS = (
    "transfer",
    "unlock-opt",
    "noon",
    "split-opt",
    "fringes",
    "quench-fringes",
    "fisher",
    "dephasing-sweep",
    "effective-dump",
)

# section -> {key: type}; "auto" is accepted wherever the type is "field"
SCHEMA = {
    "run": {"command": "str"},
    "experiment": {"L": "int", "M": "int", "U": "float", "J": "float", "gamma": "float", "t_max": "float",
                   "scan_steps": "int", "onsite": "str"},
    "edge_unlocked": {"beta_prime": "field"},
    "split_impurity": {"beta": "field", "alpha": "float", "beta_scaled": "float", "site": "int"},
    "minimal_engineered": {"J0": "field", "beta1": "field", "beta2": "field", "variant": "str"},
    "even_chain": {"corrected": "bool"},
    "sweep": {"U_values": "floats", "L_values": "ints", "gammas": "floats", "phi_min": "float",
              "phi_max": "float", "phi_points": "int", "order": "int", "literal_phase": "bool"},
}
REQUIRED = {"experiment": ("L", "M", "U")}


def _convert(section: str, key: str, raw: str, kind: str):
    where = f"[{section}] {key}"
    raw = raw.strip()
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "field":
            return "auto" if raw.lower() == "auto" else float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            return tuple(float(x) for x in raw.replace(",", " ").split())
        if kind == "ints":
            return tuple(int(x) for x in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {kind}") from None
    raise AssertionError(kind)


@dataclass(frozen=True)
class RunSpec:
    """Validated config: typed sections, resolved lazily into experiments."""

    sections: dict
    command: str | None = None
    echo: dict = field(default_factory=dict)

    @property
    def experiment(self) -> dict:
        return self.sections["experiment"]

    @property
    def sweep(self) -> dict:
        return self.sections.get("sweep", {})

    def U_values(self) -> tuple[float, ...]:
        return self.sweep.get("U_values", (self.experiment["U"],))

    def L_values(self) -> tuple[int, ...]:
        return self.sweep.get("L_values", (self.experiment["L"],))

    def phis(self) -> np.ndarray:
        s = self.sweep
        return np.linspace(s.get("phi_min", -np.pi), s.get("phi_max", np.pi), s.get("phi_points", 361))

    def build(self, U: float | None = None, L: int | None = None, split: bool = True) -> ExperimentConfig:
        """Concrete experiment, optionally at another ``U`` or ``L``; ``auto`` fields are resolved here."""
        e = self.experiment
        U = e["U"] if U is None else U
        L = e["L"] if L is None else L
        M, J = e["M"], e.get("J", 1.0)
        cfg = ExperimentConfig(
            L, M, U, J,
            gamma=0.0,
            t_max=e.get("t_max"),
            scan_steps=e.get("scan_steps", 2000),
            onsite=e.get("onsite", "n(n-1)"),
        )
        try:
            cfg = cfg.with_schemes(*self._fixed_schemes(cfg))
            if split and "split_impurity" in self.sections:
                cfg = cfg.with_schemes(self._split(cfg))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def gamma(self, cfg: ExperimentConfig) -> float:
        """Absolute dephasing rate from the configured ``gamma / J_eff``."""
        return self.experiment.get("gamma", 0.0) * cfg.J_eff()

    def _fixed_schemes(self, cfg: ExperimentConfig):
        s = self.sections
        M, J, U, L = cfg.M, cfg.J, cfg.U, cfg.L
        out = []
        if "edge_unlocked" in s:
            b = s["edge_unlocked"].get("beta_prime", "auto")
            out.append(edge_unlocked(edge_unlock_field(M, J, U) if b == "auto" else b))
        if "minimal_engineered" in s:
            m = s["minimal_engineered"]
            J0 = m.get("J0", "auto")
            if J0 == "auto":
                ratio, _ = optimal_end_coupling(L)
                J0 = J * ratio ** (1.0 / M)
            b1, b2 = minimal_engineering_fields(M, J, J0, U, variant=m.get("variant", "derived"))
            b1 = b1 if m.get("beta1", "auto") == "auto" else m["beta1"]
            b2 = b2 if m.get("beta2", "auto") == "auto" else m["beta2"]
            out.append(minimal_engineered(J0, b1, b2))
        if "even_chain" in s:
            J_mid, b1, b2 = even_chain_scheme(J, U, corrected=s["even_chain"].get("corrected", True))
            out.append(even_chain(J_mid, b1, b2))
        return out

    def _split(self, cfg: ExperimentConfig):
        sp = self.sections["split_impurity"]
        site = sp.get("site")
        M, J, U = cfg.M, cfg.J, cfg.U
        given = [k for k in ("beta", "alpha", "beta_scaled") if k in sp]
        if len(given) > 1:
            raise ConfigError(f"[split_impurity]: give only one of beta, alpha, beta_scaled (got {', '.join(given)})")
        if "alpha" in sp:
            beta = sp["alpha"] * abs(J) ** M / U ** (M - 1)
        elif "beta_scaled" in sp:
            beta = sp["beta_scaled"] * splitting_field_asymptotic(M, J, U)
        elif sp.get("beta", "auto") == "auto":
            beta = optimize_split_field(cfg, site=site).beta
        else:
            beta = sp["beta"]
        return split_impurity(beta, site)


def _from_parser(cp: configparser.ConfigParser) -> RunSpec:
    sections, echo = {}, {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        typed = {}
        for key, raw in cp.items(name):
            if key not in SCHEMA[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            typed[key] = _convert(name, key, raw, SCHEMA[name][key])
        sections[name] = typed
        echo[name] = dict(cp.items(name))
    for name, keys in REQUIRED.items():
        if name not in sections:
            raise ConfigError(f"missing section [{name}]")
        for k in keys:
            if k not in sections[name]:
                raise ConfigError(f"missing required key {k!r} in [{name}]")
    _validate(sections)
    command = sections.get("run", {}).get("command")
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"[run] command must be one of {', '.join(COMMANDS)}, got {command!r}")
    return RunSpec(sections, command, echo)


def _validate(sections: dict) -> None:
    e = sections["experiment"]
    if e["M"] not in (1, 2, 3):
        raise ConfigError(f"[experiment] M must be one of 1, 2, 3, got {e['M']}")
    if e["L"] < 2:
        raise ConfigError(f"[experiment] L must be >= 2, got {e['L']}")
    if e["U"] < 0:
        raise ConfigError(f"[experiment] U must be >= 0 (U/J is a repulsive interaction), got {e['U']}")
    if e.get("gamma", 0.0) < 0:
        raise ConfigError(f"[experiment] gamma must be >= 0, got {e['gamma']}")
    if e.get("onsite", "n(n-1)") not in ("n(n-1)", "n(n+1)"):
        raise ConfigError(f"[experiment] onsite must be n(n-1) or n(n+1), got {e['onsite']!r}")
    s = sections.get("sweep", {})
    if any(U <= 0 for U in s.get("U_values", ())):
        raise ConfigError("[sweep] U_values must be positive")
    if any(g < 0 for g in s.get("gammas", ())):
        raise ConfigError("[sweep] gammas must be >= 0")
    if s.get("phi_points", 2) < 2:
        raise ConfigError("[sweep] phi_points must be >= 2")
    variant = sections.get("minimal_engineered", {}).get("variant", "derived")
    if variant not in ("printed", "derived"):
        raise ConfigError(f"[minimal_engineered] variant must be printed or derived, got {variant!r}")


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (L, M, U, J0)
    return cp


def parse_text(text: str) -> RunSpec:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return _from_parser(cp)


def parse_config(path) -> RunSpec:
    """Read and validate an INI config file.

    Raises
    ------
    ConfigError
        Missing file, unknown section or key, missing required key, bad
        value type, or a violated constraint.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text)


def list_presets() -> list[str]:
    root = resources.files("boundnoon") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> RunSpec:
    root = resources.files("boundnoon") / "presets"
    path = root / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return parse_text(path.read_text(encoding="utf-8"))
