"""Experiment configuration: a flat sectioned key/value format (JSON accepted
as an alternative), schema validation per experiment kind, and a canonical
content hash.

Example::

    [experiment]
    kind = davie
    seed = 20240811
    out = runs/davie
    jobs = 2

    [davie]
    field = sign
    shifts = 0.05, 0.1, 0.2, 0.4
    n_paths = 100000
    n_steps = 1000

Parameter keys live in a section named after the kind. Unknown keys and
out-of-range values are rejected with one message per violation. ``out`` and
``jobs`` affect where and how work runs, not what is computed, so they are
excluded from the config hash.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import dataclass, field as dc_field

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "KINDS",
    "parse_config",
    "parse_config_file",
    "serialize_config",
    "config_hash",
]

_U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Raised with every violation found, one per line."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n" + "\n".join(f"  - {v}" for v in self.violations))


@dataclass(frozen=True)
class _Param:
    kind: str  # int | float | str | bool | int_list | float_list
    default: object
    lo: float | None = None
    hi: float | None = None
    choices: tuple | None = None


_FIELD_CHOICES = ("one", "coordinate", "sign", "inv-abs-clip")

KIND_SCHEMAS: dict[str, dict[str, _Param]] = {
    "verify-finite": {
        "depth": _Param("int", 3, lo=1, hi=5),
        "branching": _Param("int", 2, lo=2, hi=4),
        "n_processes": _Param("int", 50, lo=1, hi=100000),
        "p_list": _Param("int_list", [1, 2, 3], lo=1, hi=6),
        "lambda_list": _Param("float_list", [0.3], lo=1e-9, hi=100.0),
        "process_kind": _Param("str", "gaussian",
                               choices=("gaussian", "walk", "uniform", "integers", "heavy")),
        "random_transitions": _Param("bool", True),
        "enumeration_cap": _Param("int", 10**6, lo=1, hi=10**9),
    },
    "rho-grid": {
        "field": _Param("str", "sign", choices=_FIELD_CHOICES),
        "grid_times": _Param("float_list", [0.25, 0.5, 0.75, 1.0], lo=0.0, hi=100.0),
        "n_outer": _Param("int", 64, lo=2, hi=100000),
        "n_inner": _Param("int", 256, lo=2, hi=10**7),
        "steps_per_unit": _Param("int", 256, lo=1, hi=10**6),
        "proxy": _Param("str", "max", choices=("max", "quantile")),
    },
    "jn-check": {
        "depth": _Param("int", 3, lo=1, hi=5),
        "branching": _Param("int", 2, lo=2, hi=4),
        "n_processes": _Param("int", 50, lo=1, hi=100000),
        "p_list": _Param("int_list", [1, 2, 3], lo=1, hi=6),
        "process_kind": _Param("str", "gaussian",
                               choices=("gaussian", "walk", "uniform", "integers", "heavy")),
        "random_transitions": _Param("bool", True),
        "enumeration_cap": _Param("int", 10**6, lo=1, hi=10**9),
    },
    "davie": {
        "field": _Param("str", "sign", choices=_FIELD_CHOICES),
        "shifts": _Param("float_list", [0.05, 0.1, 0.2, 0.4], lo=1e-6, hi=10.0),
        "n_paths": _Param("int", 100000, lo=2, hi=10**7),
        "n_steps": _Param("int", 1000, lo=1, hi=10**6),
        "moments": _Param("int_list", [2, 4], lo=2, hi=8),
    },
    "quadrature": {
        "field": _Param("str", "sign", choices=_FIELD_CHOICES),
        "ns": _Param("int_list", [8, 16, 32, 64, 128, 256], lo=1, hi=10**6),
        "n_outer": _Param("int", 64, lo=2, hi=100000),
        "n_inner": _Param("int", 256, lo=2, hi=10**7),
        "anchor_times": _Param("float_list", [0.0, 0.25, 0.5, 0.75], lo=0.0, hi=1.0),
        "fine_per_block": _Param("int", 4, lo=1, hi=1024),
    },
    "tamed-em": {
        "drift": _Param("str", "sign", choices=("zero", "sign", "neg-linear", "const")),
        "sigma": _Param("float", 1.0, lo=0.0, hi=100.0),
        "x0": _Param("float", 0.0, lo=-1e6, hi=1e6),
        "ns": _Param("int_list", [8, 16, 32, 64, 128, 256], lo=1, hi=10**6),
        "fine_factor": _Param("int", 64, lo=2, hi=4096),
        "n_paths": _Param("int", 2000, lo=2, hi=10**6),
        "taming_scale": _Param("float", 1.0, lo=1e-6, hi=1e6),
        "taming_exponent": _Param("float", 0.5, lo=1e-6, hi=0.5),
        "taming_log_power": _Param("float", 1.0, lo=0.0, hi=10.0),
        "ellipticity_bound": _Param("float", 4.0, lo=1.0, hi=1e6),
    },
}

KINDS = tuple(KIND_SCHEMAS)


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    out: str = "runs"
    jobs: int = 1
    params: dict = dc_field(default_factory=dict)

    def param(self, name: str):
        return self.params[name]


def _coerce(name: str, spec: _Param, raw, violations: list[str]):
    def fail(msg):
        violations.append(f"{name}: {msg} (got {raw!r})")
        return None

    def one(v, kind):
        if kind == "int":
            if isinstance(v, bool):
                raise ValueError
            if isinstance(v, int):
                return v
            if isinstance(v, float) and v.is_integer():
                return int(v)
            if isinstance(v, str):
                return int(v.strip())
            raise ValueError
        if kind == "float":
            if isinstance(v, bool):
                raise ValueError
            if isinstance(v, (int, float)):
                return float(v)
            if isinstance(v, str):
                return float(v.strip())
            raise ValueError
        raise ValueError

    if spec.kind == "bool":
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, str) and raw.strip().lower() in ("true", "false", "yes", "no", "1", "0"):
            return raw.strip().lower() in ("true", "yes", "1")
        return fail("expected a boolean")
    if spec.kind == "str":
        if not isinstance(raw, str):
            return fail("expected a string")
        val = raw.strip()
        if spec.choices and val not in spec.choices:
            return fail(f"must be one of {list(spec.choices)}")
        return val
    if spec.kind in ("int", "float"):
        try:
            val = one(raw, spec.kind)
        except (ValueError, TypeError):
            return fail(f"expected {spec.kind}")
        if spec.lo is not None and val < spec.lo or spec.hi is not None and val > spec.hi:
            return fail(f"must lie in [{spec.lo}, {spec.hi}]")
        return val
    if spec.kind in ("int_list", "float_list"):
        base = spec.kind[:-5]
        if isinstance(raw, str):
            parts = [p for p in (s.strip() for s in raw.split(",")) if p]
        elif isinstance(raw, (list, tuple)):
            parts = list(raw)
        else:
            return fail("expected a comma-separated list")
        try:
            vals = [one(p, base) for p in parts]
        except (ValueError, TypeError):
            return fail(f"expected a list of {base}s")
        if not vals:
            return fail("list must be nonempty")
        bad = [v for v in vals
               if (spec.lo is not None and v < spec.lo) or (spec.hi is not None and v > spec.hi)]
        if bad:
            return fail(f"entries must lie in [{spec.lo}, {spec.hi}]; offending: {bad}")
        return vals
    raise AssertionError(spec.kind)


def _build(kind, seed_raw, out_raw, jobs_raw, raw_params: dict) -> ExperimentConfig:
    violations: list[str] = []
    if kind not in KIND_SCHEMAS:
        raise ConfigError([f"kind: must be one of {list(KINDS)} (got {kind!r})"])
    schema = KIND_SCHEMAS[kind]
    if seed_raw is None:
        violations.append("seed: required")
        seed = 0
    else:
        seed = _coerce("seed", _Param("int", 0, lo=0, hi=_U64_MAX), seed_raw, violations)
    out = out_raw if out_raw is not None else "runs"
    if not isinstance(out, str) or not out.strip():
        violations.append(f"out: expected a nonempty path (got {out!r})")
        out = "runs"
    jobs = 1
    if jobs_raw is not None:
        jobs = _coerce("jobs", _Param("int", 1, lo=1, hi=256), jobs_raw, violations)
    params = {}
    for name, spec in schema.items():
        if name in raw_params:
            val = _coerce(name, spec, raw_params[name], violations)
            params[name] = spec.default if val is None else val
        else:
            params[name] = spec.default if not isinstance(spec.default, list) else list(spec.default)
    for name in raw_params:
        if name not in schema:
            violations.append(f"{name}: unknown key for kind {kind!r} "
                              f"(known: {sorted(schema)})")
    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(kind=kind, seed=seed, out=out.strip(), jobs=jobs, params=params)


def parse_config(text: str) -> ExperimentConfig:
    """Parse sectioned key/value text, or a JSON object if text starts with '{'."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"json: {exc}"]) from exc
        if not isinstance(doc, dict):
            raise ConfigError(["json: top level must be an object"])
        known_top = {"kind", "seed", "out", "jobs", "params"}
        extra = sorted(set(doc) - known_top)
        if extra:
            raise ConfigError([f"{k}: unknown top-level key (known: {sorted(known_top)})"
                               for k in extra])
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(["params: must be an object"])
        return _build(doc.get("kind"), doc.get("seed"), doc.get("out"), doc.get("jobs"), params)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc
    if "experiment" not in cp:
        raise ConfigError(["missing [experiment] section"])
    exp = dict(cp["experiment"])
    kind = exp.pop("kind", None)
    seed = exp.pop("seed", None)
    out = exp.pop("out", None)
    jobs = exp.pop("jobs", None)
    violations = [f"{k}: unknown key in [experiment] (known: kind, seed, out, jobs)"
                  for k in sorted(exp)]
    if kind is None:
        violations.append("kind: required")
    if violations:
        raise ConfigError(violations)
    kind = kind.strip()
    params = {}
    for section in cp.sections():
        if section == "experiment":
            continue
        if section != kind:
            raise ConfigError([f"[{section}]: unexpected section; parameters for kind "
                               f"{kind!r} belong in [{kind}]"])
        params.update(dict(cp[section]))
    return _build(kind, seed, out, jobs, params)


def parse_config_file(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical sectioned text; parse(serialize(c)) == c."""
    buf = io.StringIO()
    buf.write("[experiment]\n")
    buf.write(f"kind = {config.kind}\n")
    buf.write(f"seed = {config.seed}\n")
    buf.write(f"out = {config.out}\n")
    buf.write(f"jobs = {config.jobs}\n\n")
    buf.write(f"[{config.kind}]\n")
    for name in KIND_SCHEMAS[config.kind]:
        buf.write(f"{name} = {_format_value(config.params[name])}\n")
    return buf.getvalue()


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonicalized science-relevant content (kind, seed, params)."""
    doc = {"kind": config.kind, "seed": config.seed,
           "params": {k: config.params[k] for k in sorted(config.params)}}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
