"""INI run configuration for the command-line front end.

Sections
--------
[model]         r, lambda, alpha, x_star
[premium]       mapping = drift | rate  (default for every scheme)
[welfare]       delta, m_cost, subsidy_rate_mode = literal | dimensional
[sim]           n_paths, t_max, seed, escape_level (optional), workers (optional)
[grid]          values = comma list, or x_min, x_max, points
[scheme NAME]   type = uninsured | insured | subsidised | barrier
                kappa, theta, theta_star, barrier, mapping, r_ins, x_star_ins,
                label, and any [model] key to override it for this scheme
[laplace]       deltas = comma list
[expected_time] r_values = comma list; axis = x | barrier; x = fixed capital
                (barrier axis); barrier_values or b_min, b_max, b_points
[optimize]      target = theta | barrier; scheme = NAME (default: first)
[validate]      x_values, deltas, quantities = psi, laplace, subsidy
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from typing import Dict, List

import numpy as np

from .model import ModelParams, SchemeSpec, SimConfig
from .welfare import SubsidyRateMode, WelfareParams

__all__ = ["ConfigError", "SchemeEntry", "RunConfig", "load_config", "parse_grid", "KEY_REFERENCE"]

KEY_REFERENCE = __doc__.split("Sections\n--------\n", 1)[1]

_MODEL_KEYS = {"r": "r", "lambda": "lam", "alpha": "alpha", "x_star": "x_star"}
_SCHEME_KEYS = {
    "type", "kappa", "theta", "theta_star", "barrier", "mapping", "r_ins", "x_star_ins", "label",
} | set(_MODEL_KEYS)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class SchemeEntry:
    """A scheme together with the model parameters it is evaluated under."""

    name: str
    params: ModelParams
    scheme: SchemeSpec
    recipe: Dict[str, str]

    @property
    def label(self) -> str:
        return self.scheme.label

    def rebuild(self, params: ModelParams, **changes: float) -> "SchemeEntry":
        """Same recipe under different model parameters (premium mapping re-applied)."""
        recipe = dict(self.recipe)
        recipe.update({k: str(v) for k, v in changes.items()})
        p = _override(params, recipe)
        return SchemeEntry(self.name, p, _build_scheme(self.name, p, recipe), recipe)


@dataclass
class RunConfig:
    model: ModelParams
    schemes: List[SchemeEntry]
    welfare: WelfareParams
    sim: SimConfig
    x_grid: List[float]
    output_dir: str = "."
    emit_plots: bool = False
    sections: Dict[str, Dict[str, str]] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, str]:
        return self.sections.get(name, {})


def parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}: {exc}") from None


def parse_grid(text: str) -> List[float]:
    """``a,b,c`` as listed, or ``start:stop:points`` evenly spaced."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must look like start:stop:points")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad grid {text!r}: {exc}") from None
        return _linspace(lo, hi, n)
    return parse_floats(text)


def _linspace(lo, hi, n):
    if n < 1:
        raise ConfigError("grid needs at least one point")
    # round to 12 digits so the grid prints exactly as it is evaluated
    return [float(f"{v:.12g}") for v in np.linspace(lo, hi, n)]


def _num(section, key, default=None, cast=float):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from None


def _override(base: ModelParams, recipe: Dict[str, str]) -> ModelParams:
    changes = {}
    for key, attr in _MODEL_KEYS.items():
        if key in recipe:
            changes[attr] = _num(recipe, key)
    try:
        return replace(base, **changes) if changes else base
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build_scheme(name: str, params: ModelParams, sec: Dict[str, str]) -> SchemeSpec:
    unknown = set(sec) - _SCHEME_KEYS
    if unknown:
        raise ConfigError(f"scheme {name!r}: unknown keys {sorted(unknown)}")
    kind = sec.get("type", "").strip().lower()
    label = sec.get("label", name)
    mapping = sec.get("mapping", "drift").strip().lower()
    explicit = {}
    for key in ("r_ins", "x_star_ins"):
        if key in sec:
            explicit[key] = _num(sec, key)
    try:
        if kind == "uninsured":
            scheme = SchemeSpec.uninsured(params, label=label)
        elif kind == "insured":
            scheme = SchemeSpec.insured(
                params, _num(sec, "kappa"), _num(sec, "theta"), mapping, label=label, **explicit)
        elif kind == "subsidised":
            scheme = SchemeSpec.subsidised(
                params, _num(sec, "kappa"), _num(sec, "theta"), _num(sec, "theta_star"), mapping,
                label=label, **explicit)
        elif kind == "barrier":
            scheme = SchemeSpec.barrier_scheme(
                params, _num(sec, "kappa"), _num(sec, "theta"), _num(sec, "barrier"), mapping,
                label=label, **explicit)
        else:
            raise ConfigError(f"scheme {name!r}: type must be uninsured/insured/subsidised/barrier")
        scheme.validate(params)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"scheme {name!r}: {exc}") from None
    return scheme


def load_config(path: str) -> RunConfig:
    """Read and validate a run configuration."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not cp.has_section("model"):
        raise ConfigError("missing [model] section")
    m = dict(cp["model"])
    try:
        model = ModelParams(_num(m, "r"), _num(m, "lambda"), _num(m, "alpha"), _num(m, "x_star"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    default_mapping = cp.get("premium", "mapping", fallback="drift").strip().lower()
    entries = []
    for sec_name in cp.sections():
        if not sec_name.startswith("scheme "):
            continue
        name = sec_name[len("scheme "):].strip()
        recipe = dict(cp[sec_name])
        recipe.setdefault("mapping", default_mapping)
        params = _override(model, recipe)
        entries.append(SchemeEntry(name, params, _build_scheme(name, params, recipe), recipe))
    labels = [e.label for e in entries]
    if len(set(labels)) != len(labels):
        raise ConfigError("scheme labels must be unique")

    w = dict(cp["welfare"]) if cp.has_section("welfare") else {}
    try:
        mode = SubsidyRateMode(w.get("subsidy_rate_mode", "literal").strip().lower())
        welfare = WelfareParams(_num(w, "delta", 0.9), _num(w, "m_cost", 8.0), mode)
    except ValueError as exc:
        raise ConfigError(f"[welfare]: {exc}") from None

    s = dict(cp["sim"]) if cp.has_section("sim") else {}
    try:
        sim = SimConfig(
            n_paths=_num(s, "n_paths", 100_000, int),
            t_max=_num(s, "t_max", 200.0),
            seed=_num(s, "seed", 20240101, int),
            escape_level=float(s["escape_level"]) if "escape_level" in s else None,
            workers=int(s["workers"]) if "workers" in s else None,
        )
    except ValueError as exc:
        raise ConfigError(f"[sim]: {exc}") from None

    g = dict(cp["grid"]) if cp.has_section("grid") else {}
    if "values" in g:
        grid = parse_floats(g["values"])
    else:
        crit = max([e.scheme.critical_capital(e.params) for e in entries] or [model.x_star])
        lo = _num(g, "x_min", crit)
        grid = _linspace(lo, _num(g, "x_max", lo + 9.0), _num(g, "points", 181, int))
    sections = {name: dict(cp[name]) for name in cp.sections()}
    return RunConfig(model, entries, welfare, sim, grid, sections=sections)
