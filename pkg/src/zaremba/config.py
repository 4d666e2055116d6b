"""Run configuration: TOML schema, validation and a canonical emitter.

The emitter writes sections and keys in schema order with ``repr`` floats, so
``emit(parse(emit(cfg)))`` is byte-identical to ``emit(cfg)``.
"""

from __future__ import annotations

import copy
import json
import math
import re
import sys
from typing import Any, Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

import numpy as np

from .flow import FlowOptions
from .geometry import (
    DOMAIN_DIMS,
    DampingField,
    Domain,
    MetricField,
    make_damping,
    make_domain,
    make_partition,
)
from .symbol import PhasePoint

__all__ = ["ConfigError", "SCHEMA", "parse", "loads", "load", "emit", "RunConfig", "defaults"]


class ConfigError(ValueError):
    pass


# (type, default); type is one of float, int, str, bool, "vec", "mat", "points"
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "domain": {
        "catalog_id": (str, "disc"),
        "center": ("vec", None),
        "radius": (float, None),
        "a": (float, None),
        "b": (float, None),
        "x0": (float, None),
        "x1": (float, None),
        "y0": (float, None),
        "y1": (float, None),
        "r_in": (float, None),
        "r_out": (float, None),
        "dim": (int, None),
        "r_corner": (float, None),
    },
    "metric": {
        "kind": (str, "euclidean"),
        "matrix": ("mat", None),
        "p0": (float, None),
    },
    "damping": {
        "kind": (str, "zero"),
        "value": (float, None),
        "width": (float, None),
        "center": ("vec", None),
        "radius": (float, None),
        "r_in": (float, None),
        "r_out": (float, None),
        "axis": (int, None),
        "lo": (float, None),
        "hi": (float, None),
    },
    "partition": {
        "kind": (str, "none"),
        "normal": ("vec", None),
        "offset": (float, None),
    },
    "flow": {
        "rtol": (float, 1e-12),
        "atol": (float, 1e-14),
        "tol_event": (float, None),
        "tol_char": (float, 1e-8),
        "eps_glance": (float, None),
        "s_probe": (float, 1e-2),
        "k_max": (int, 6),
        "max_events": (int, 10000),
        "horizon": (float, 8.0),
        "a_min": (float, 1e-12),
        "gamma_policy": (str, "terminate"),
    },
    "solver": {
        "resolution": (int, 200),
        "dt": (float, 0.01),
        "T": (float, 40.0),
        "modes": (int, 200),
    },
    "scan": {
        "mu_min": (float, -50.0),
        "mu_max": (float, 50.0),
        "mu_step": (float, 0.5),
        "method": (str, "lanczos"),
    },
    "seeds": {
        "resolution": (int, 8),
        "n_dir": (int, 8),
        "boundary": (int, 0),
        "n_R": (int, 4),
        "gamma": (int, 0),
        "seed": (int, 0),
        "points": ("points", None),
    },
    "output": {
        "dir": (str, "out"),
        "record_samples": (bool, True),
    },
}

POSITIVE = {
    ("flow", "rtol"),
    ("flow", "atol"),
    ("flow", "tol_event"),
    ("flow", "tol_char"),
    ("flow", "eps_glance"),
    ("flow", "s_probe"),
    ("flow", "horizon"),
    ("flow", "a_min"),
    ("solver", "dt"),
    ("solver", "T"),
    ("scan", "mu_step"),
}

CHOICES = {
    ("domain", "catalog_id"): {"interval", "halfspace", "rectangle", "disc", "disc_exterior", "annulus", "ball3"},
    ("metric", "kind"): {"euclidean", "constant"},
    ("damping", "kind"): {"zero", "constant", "ball", "annulus", "strip"},
    ("partition", "kind"): {"none", "linear"},
    ("flow", "gamma_policy"): {"terminate", "continue-hyperbolic"},
    ("scan", "method"): {"lanczos", "power", "dense"},
}

POINT_KEYS = ("kind", "x", "xi")


def defaults() -> Dict[str, Dict[str, Any]]:
    return {sec: {k: d for k, (_, d) in keys.items() if d is not None} for sec, keys in SCHEMA.items()}


def _line_of(text: Optional[str], key: str) -> str:
    if not text:
        return ""
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=|^\s*\[+\s*" + re.escape(key) + r"\s*\]+")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return f" (line {i})"
    return ""


def _coerce(sec, key, typ, val, text):
    where = f"{sec}.{key}{_line_of(text, key)}"
    if typ is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        val = float(val)
        if not math.isfinite(val):
            raise ConfigError(f"{where}: must be finite")
        return val
    if typ is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{where}: expected an integer")
        return val
    if typ is str:
        if not isinstance(val, str):
            raise ConfigError(f"{where}: expected a string")
        return val
    if typ is bool:
        if not isinstance(val, bool):
            raise ConfigError(f"{where}: expected a boolean")
        return val
    if typ == "vec":
        if not isinstance(val, list) or not val or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in val):
            raise ConfigError(f"{where}: expected a list of numbers")
        return [float(v) for v in val]
    if typ == "mat":
        if not isinstance(val, list) or not val:
            raise ConfigError(f"{where}: expected a list of rows")
        return [_coerce(sec, key, "vec", row, text) for row in val]
    if typ == "points":
        if not isinstance(val, list):
            raise ConfigError(f"{where}: expected an array of tables")
        out = []
        for p in val:
            if not isinstance(p, dict):
                raise ConfigError(f"{where}: expected an array of tables")
            extra = set(p) - set(POINT_KEYS)
            if extra:
                k = sorted(extra)[0]
                raise ConfigError(f"unknown key {sec}.points.{k}{_line_of(text, k)}")
            if set(p) != set(POINT_KEYS):
                raise ConfigError(f"{where}: each point needs kind, x and xi")
            if p["kind"] not in ("interior", "boundary", "interface"):
                raise ConfigError(f"{where}: bad point kind {p['kind']!r}")
            out.append({"kind": p["kind"], "x": _coerce(sec, "x", "vec", p["x"], text), "xi": _coerce(sec, "xi", "vec", p["xi"], text)})
        return out
    raise AssertionError(typ)


def parse(data: Dict[str, Any], text: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """Validate a decoded mapping and fill defaults."""
    cfg = defaults()
    for sec, body in data.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]{_line_of(text, sec)}")
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec}] must be a table")
        for key, val in body.items():
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}{_line_of(text, key)}")
            typ = SCHEMA[sec][key][0]
            cfg[sec][key] = _coerce(sec, key, typ, val, text)
    for sec, key in POSITIVE:
        if key in cfg[sec] and not cfg[sec][key] > 0:
            raise ConfigError(f"{sec}.{key}{_line_of(text, key)}: must be strictly positive")
    for (sec, key), allowed in CHOICES.items():
        if cfg[sec][key] not in allowed:
            raise ConfigError(f"{sec}.{key}{_line_of(text, key)}: {cfg[sec][key]!r} not in {sorted(allowed)}")
    for key in ("resolution", "modes"):
        if cfg["solver"][key] < 1:
            raise ConfigError(f"solver.{key}: must be >= 1")
    if cfg["scan"]["mu_max"] < cfg["scan"]["mu_min"]:
        raise ConfigError("scan.mu_max must be >= scan.mu_min")
    return cfg


def loads(text: str) -> Dict[str, Dict[str, Any]]:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    return parse(data, text)


def load(path) -> Dict[str, Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def _fmt(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, int):
        return str(val)
    if isinstance(val, float):
        return repr(val)
    if isinstance(val, str):
        return json.dumps(val)
    if isinstance(val, list):
        return "[" + ", ".join(_fmt(v) for v in val) + "]"
    raise TypeError(type(val))


def emit(cfg: Dict[str, Dict[str, Any]]) -> str:
    lines: List[str] = []
    for sec, keys in SCHEMA.items():
        body = cfg.get(sec, {})
        if lines:
            lines.append("")
        lines.append(f"[{sec}]")
        for key, (typ, _) in keys.items():
            if key in body and typ != "points":
                lines.append(f"{key} = {_fmt(body[key])}")
        if "points" in keys and body.get("points"):
            for p in body["points"]:
                lines.append("")
                lines.append(f"[[{sec}.points]]")
                for k in POINT_KEYS:
                    lines.append(f"{k} = {_fmt(p[k])}")
    return "\n".join(lines) + "\n"


class RunConfig:
    """Typed view over a validated configuration mapping."""

    def __init__(self, cfg: Dict[str, Dict[str, Any]]):
        self.cfg = copy.deepcopy(cfg)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls(load(path))

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls(loads(text))

    def emit(self) -> str:
        return emit(self.cfg)

    @property
    def dim(self) -> int:
        d = self.cfg["domain"]
        cid = d["catalog_id"]
        if cid == "halfspace":
            return int(d.get("dim", 2))
        return DOMAIN_DIMS[cid]

    def domain(self) -> Domain:
        d = {k: v for k, v in self.cfg["domain"].items() if k != "catalog_id"}
        p = self.cfg["partition"]
        try:
            part = make_partition(p["kind"], self.dim, p.get("normal"), p.get("offset", 0.0))
            return make_domain(self.cfg["domain"]["catalog_id"], d, part)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"domain/partition: {exc}") from exc

    def metric(self) -> MetricField:
        m = self.cfg["metric"]
        p0 = m.get("p0")
        if m["kind"] == "euclidean":
            if p0 is None:
                return MetricField.euclidean(self.dim)
            return MetricField(self.dim, constant=np.eye(self.dim), zeroth_order=_ConstantFn(p0))
        if "matrix" not in m:
            raise ConfigError("metric.matrix is required for kind = \"constant\"")
        M = np.array(m["matrix"], dtype=float)
        if M.shape != (self.dim, self.dim):
            raise ConfigError("metric.matrix has the wrong shape")
        metric = MetricField(self.dim, constant=M, zeroth_order=None if p0 is None else _ConstantFn(p0))
        try:
            metric.validate(np.zeros((1, self.dim)))
        except ValueError as exc:
            raise ConfigError(f"metric.matrix: {exc}") from exc
        return metric

    def damping(self) -> DampingField:
        d = dict(self.cfg["damping"])
        kind = d.pop("kind")
        try:
            return make_damping(kind, d)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"damping: missing or bad parameter {exc}") from exc

    def flow_options(self, gamma_policy: Optional[str] = None) -> FlowOptions:
        f = self.cfg["flow"]
        return FlowOptions(
            rtol=f["rtol"],
            atol=f["atol"],
            tol_event=f.get("tol_event"),
            tol_char=f["tol_char"],
            eps_glance=f.get("eps_glance"),
            s_probe=f["s_probe"],
            k_max=f["k_max"],
            max_events=f["max_events"],
            r_corner=self.cfg["domain"].get("r_corner"),
            gamma_policy=gamma_policy or f["gamma_policy"],
            record_samples=self.cfg["output"]["record_samples"],
        )

    def points(self) -> List[PhasePoint]:
        return [PhasePoint(p["kind"], p["x"], p["xi"]) for p in self.cfg["seeds"].get("points", [])]


class _ConstantFn:
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, x):
        return self.value
