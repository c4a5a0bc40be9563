"""Scenario files: YAML documents whose physical quantities carry mandatory unit suffixes.

A scenario names exactly one experiment and the parameters it needs, for
example::

    experiment: boundary-table
    rows:
      - label: 5 GHz
        frequency: 5 GHz
        ris: {size: 0.5 m}
        receiver: {size: 0.1 m}

Parsing collects every problem in the file (missing fields, bad or missing
units, out-of-range values) before reporting, each with its line number.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
import yaml

from .core_em import SignalParams
from .errors import StarRisError

EXPERIMENTS = {
    "boundary-table": "Near/far-field boundary and reactive radius for a list of carriers and apertures",
    "scaling-sweep": "Received power versus element count for several element sizes, with log-log slopes",
    "gain-vs-distance": "Single-user gain bound versus distance, optionally checked against the kernel eigenvalue",
    "multiuser-sumrate": "PS, REG and SEG per-user gains and sum rate versus surface size",
    "hybrid-coverage": "Indoor coverage rasters without window, with an open window and with a STAR-RIS",
    "hybrid-angle-sweep": "Indoor and outdoor gains versus user angle with and without a STAR-RIS",
}

UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "km": 1e3},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "angle": {"deg": math.pi / 180, "rad": 1.0},
    "area": {"m^2": 1.0, "cm^2": 1e-4, "mm^2": 1e-6},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9, "pW": 1e-12},
    "decibel": {"dB": 1.0},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z][A-Za-z0-9^]*)\s*$")


class ScenarioIssue(StarRisError):
    """One problem found in a scenario file."""

    kind = "Error"

    def __init__(self, path: tuple, message: str, line: Optional[int] = None):
        self.path = path
        self.message = message
        self.line = line
        super().__init__(str(self))

    @property
    def field_name(self) -> str:
        return ".".join(str(p) for p in self.path) or "<root>"

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.kind} in '{self.field_name}': {self.message}"


class MissingField(ScenarioIssue):
    kind = "MissingField"


class UnitError(ScenarioIssue):
    kind = "UnitError"


class RangeError(ScenarioIssue):
    kind = "RangeError"


class ScenarioInvalid(StarRisError):
    """A scenario failed validation; ``issues`` lists every problem found."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


_MISSING = object()


def _node_lines(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _node_lines(v, path + (key,), out)
            out[path + (key,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _node_lines(v, path + (i,), out)
    return out


class Validator:
    """Typed accessors over the raw YAML tree that record issues instead of raising."""

    def __init__(self, data, lines: dict):
        self.data = data
        self.lines = lines
        self.issues: list = []

    def line(self, path) -> Optional[int]:
        path = tuple(path)
        while path not in self.lines and path:
            path = path[:-1]
        return self.lines.get(path)

    def fail(self, cls, path, message):
        self.issues.append(cls(tuple(path), message, self.line(path)))

    def get(self, path):
        cur = self.data
        for p in path:
            if isinstance(p, int):
                if not isinstance(cur, list) or p >= len(cur):
                    return _MISSING
                cur = cur[p]
            else:
                if not isinstance(cur, dict) or p not in cur:
                    return _MISSING
                cur = cur[p]
        return cur

    def has(self, path) -> bool:
        return self.get(path) is not _MISSING

    def _require(self, path, default):
        v = self.get(path)
        if v is _MISSING or v is None:
            if default is _MISSING:
                self.fail(MissingField, path, "required field is missing")
            return _MISSING
        return v

    def quantity(self, path, kind: str, default=_MISSING, positive=True, lo=None, hi=None):
        """Parse ``"<number> <unit>"`` into SI; returns None on failure."""
        path = tuple(path)
        raw = self._require(path, default)
        if raw is _MISSING:
            return None if default is _MISSING else default
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            self.fail(UnitError, path, f"value {raw!r} needs a unit, one of {sorted(UNITS[kind])}")
            return None
        m = _QUANTITY.match(str(raw))
        if not m:
            self.fail(UnitError, path, f"cannot read {raw!r} as '<number> <unit>'")
            return None
        unit = m.group(2)
        if unit not in UNITS[kind]:
            self.fail(UnitError, path, f"unit '{unit}' is not a {kind} unit; use one of {sorted(UNITS[kind])}")
            return None
        val = float(m.group(1)) * UNITS[kind][unit]
        return self._range(path, val, positive, lo, hi)

    def _range(self, path, val, positive, lo, hi):
        if not math.isfinite(val):
            self.fail(RangeError, path, "value must be finite")
            return None
        if positive and not val > 0:
            self.fail(RangeError, path, f"value must be positive, got {val:g}")
            return None
        if lo is not None and val < lo:
            self.fail(RangeError, path, f"value {val:g} is below {lo:g}")
            return None
        if hi is not None and val > hi:
            self.fail(RangeError, path, f"value {val:g} is above {hi:g}")
            return None
        return val

    def number(self, path, default=_MISSING, positive=True, lo=None, hi=None, integer=False):
        path = tuple(path)
        raw = self._require(path, default)
        if raw is _MISSING:
            return None if default is _MISSING else default
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.fail(RangeError, path, f"expected a plain number, got {raw!r}")
            return None
        if integer and not float(raw).is_integer():
            self.fail(RangeError, path, f"expected an integer, got {raw!r}")
            return None
        val = self._range(path, float(raw), positive, lo, hi)
        if val is None:
            return None
        return int(val) if integer else val

    def choice(self, path, options, default=_MISSING):
        path = tuple(path)
        raw = self._require(path, default)
        if raw is _MISSING:
            return None if default is _MISSING else default
        if raw not in options:
            self.fail(RangeError, path, f"{raw!r} is not one of {list(options)}")
            return None
        return raw

    def boolean(self, path, default=False):
        raw = self.get(tuple(path))
        if raw is _MISSING or raw is None:
            return default
        if not isinstance(raw, bool):
            self.fail(RangeError, path, f"expected true or false, got {raw!r}")
            return default
        return raw

    def sequence(self, path, min_len=1, required=True):
        path = tuple(path)
        raw = self.get(path)
        if raw is _MISSING or raw is None:
            if required:
                self.fail(MissingField, path, "required list is missing")
            return []
        if not isinstance(raw, list):
            self.fail(RangeError, path, "expected a list")
            return []
        if len(raw) < min_len:
            self.fail(RangeError, path, f"needs at least {min_len} entries")
        return raw

    def string(self, path, default=_MISSING):
        path = tuple(path)
        raw = self._require(path, default)
        if raw is _MISSING:
            return None if default is _MISSING else default
        return str(raw)


@dataclass(frozen=True)
class SignalSpec:
    frequency_hz: Optional[float] = None
    wavelength_m: Optional[float] = None
    beta_magnitude: Optional[float] = None

    def build(self, beta_magnitude: Optional[float] = None) -> SignalParams:
        b = beta_magnitude if beta_magnitude is not None else self.beta_magnitude
        if self.wavelength_m is not None:
            return SignalParams.from_wavelength(self.wavelength_m, beta_magnitude=b)
        return SignalParams.from_frequency(self.frequency_hz, beta_magnitude=b)


@dataclass(frozen=True)
class Sweep:
    variable: str
    start: float
    stop: float
    steps: int
    integer: bool = False

    def values(self) -> np.ndarray:
        v = np.linspace(self.start, self.stop, self.steps) if self.steps > 1 else np.array([self.start])
        return np.round(v).astype(int) if self.integer else v


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario.  ``body`` holds experiment-specific values in SI units."""

    experiment: str
    body: dict
    seed: int = 0
    samples_per_wavelength: float = 4.0
    beta_magnitude: Optional[float] = None
    source: str = "<memory>"
    config_hash: str = ""
    lines: dict = field(default_factory=dict, repr=False, compare=False)

    def line_of(self, *path) -> Optional[int]:
        path = tuple(path)
        while path not in self.lines and path:
            path = path[:-1]
        return self.lines.get(path)

    def with_overrides(self, seed=None, samples_per_wavelength=None, beta_magnitude=None) -> "ScenarioConfig":
        kw = {}
        if seed is not None:
            kw["seed"] = int(seed)
        if samples_per_wavelength is not None:
            if not samples_per_wavelength > 0:
                raise ScenarioInvalid([RangeError(("quadrature-density",), "must be positive")])
            kw["samples_per_wavelength"] = float(samples_per_wavelength)
        if beta_magnitude is not None:
            if not beta_magnitude > 0:
                raise ScenarioInvalid([RangeError(("beta-magnitude",), "must be positive")])
            kw["beta_magnitude"] = float(beta_magnitude)
        return replace(self, **kw) if kw else self

    def signal(self, spec: Optional[SignalSpec] = None) -> SignalParams:
        return (spec or self.body["signal"]).build(self.beta_magnitude)


# ---------------------------------------------------------------- field groups

def _signal(v: Validator, path) -> Optional[SignalSpec]:
    path = tuple(path)
    has_f = v.has(path + ("frequency",))
    has_w = v.has(path + ("wavelength",))
    if has_f and has_w:
        v.fail(RangeError, path, "give either frequency or wavelength, not both")
        return None
    if not has_f and not has_w:
        v.fail(MissingField, path + ("frequency",), "need frequency or wavelength")
        return None
    beta = v.number(path + ("beta_magnitude",), default=None)
    if has_f:
        f = v.quantity(path + ("frequency",), "frequency")
        return None if f is None else SignalSpec(frequency_hz=f, beta_magnitude=beta)
    w = v.quantity(path + ("wavelength",), "length")
    return None if w is None else SignalSpec(wavelength_m=w, beta_magnitude=beta)


def _footprint(v: Validator, path, depth_key="thickness", depth_default=None):
    """Box extents from ``size`` (one length or a pair) plus a depth."""
    path = tuple(path)
    raw = v.get(path + ("size",))
    if isinstance(raw, list):
        if len(raw) != 2:
            v.fail(RangeError, path + ("size",), "size must be one length or a pair")
            return None
        sx = v.quantity(path + ("size", 0), "length")
        sy = v.quantity(path + ("size", 1), "length")
    else:
        sx = sy = v.quantity(path + ("size",), "length")
    dz = v.quantity(path + (depth_key,), "length",
                    default=_MISSING if depth_default is None else depth_default)
    if None in (sx, sy, dz):
        return None
    return (sx, sy, dz)


def _point(v: Validator, path):
    raw = v.sequence(path, min_len=3)
    if raw and len(raw) != 3:
        v.fail(RangeError, path, "a position needs exactly three coordinates")
        return None
    vals = [v.quantity(tuple(path) + (i,), "length", positive=False) for i in range(len(raw))]
    return None if (len(vals) != 3 or None in vals) else tuple(vals)


def _sweep(v: Validator, path, variable, kind, integer=False) -> Optional[Sweep]:
    path = tuple(path)
    if not v.has(path):
        v.fail(MissingField, path, "sweep is missing")
        return None
    name = v.string(path + ("variable",), default=variable)
    if name != variable:
        v.fail(RangeError, path + ("variable",), f"this experiment sweeps '{variable}'")
    if integer:
        a = v.number(path + ("start",), integer=True)
        b = v.number(path + ("stop",), integer=True)
    else:
        a = v.quantity(path + ("start",), kind)
        b = v.quantity(path + ("stop",), kind)
    n = v.number(path + ("steps",), integer=True, lo=1)
    if None in (a, b, n):
        return None
    if b < a:
        v.fail(RangeError, path + ("stop",), "stop must not be below start")
        return None
    if integer and n > b - a + 1:
        v.fail(RangeError, path + ("steps",), "more steps than integers in the range")
        return None
    return Sweep(variable, a, b, n, integer)


def _budget(v: Validator, path):
    path = tuple(path)
    if not v.has(path):
        return None
    d_db = v.quantity(path + ("directivity",), "decibel", positive=False)
    dist = v.quantity(path + ("distance",), "length")
    ap = v.quantity(path + ("aperture",), "area")
    if None in (d_db, dist, ap):
        return None
    return {"directivity": 10 ** (d_db / 10), "distance": dist, "aperture": ap}


# ---------------------------------------------------------------- experiments

def _boundary_table(v: Validator) -> dict:
    rows = []
    for i, _ in enumerate(v.sequence(("rows",))):
        p = ("rows", i)
        label = v.string(p + ("label",), default=f"row {i + 1}")
        sig = _signal(v, p)
        tx = _footprint(v, p + ("ris",), depth_default=0.01)
        rx = _footprint(v, p + ("receiver",), "depth", depth_default=0.01)
        rows.append({"label": label, "signal": sig, "ris": tx, "receiver": rx})
    return {"rows": rows}


def _scaling_sweep(v: Validator) -> dict:
    sig = _signal(v, ("signal",))
    sides = [v.quantity(("element_sides", i), "length") for i in range(len(v.sequence(("element_sides",))))]
    return {
        "signal": sig,
        "distance": v.quantity(("distance",), "length"),
        "receiver": _footprint(v, ("receiver",), "depth"),
        "element_sides": sides,
        "element_thickness": v.quantity(("element_thickness",), "length", default=None),
        "sweep": _sweep(v, ("sweep",), "elements", None, integer=True),
    }


def _gain_vs_distance(v: Validator) -> dict:
    return {
        "signal": _signal(v, ("signal",)),
        "ris": _footprint(v, ("ris",)),
        "receiver": _footprint(v, ("receiver",), "depth"),
        "budget": _budget(v, ("budget",)),
        "sweep": _sweep(v, ("sweep",), "distance", "length"),
        "kernel_oracle": v.boolean(("kernel_oracle",), False),
        "oracle_max_size": v.number(("oracle_max_size",), default=512, integer=True, lo=1),
    }


def _users(v: Validator):
    users = []
    for i, _ in enumerate(v.sequence(("users",), min_len=1)):
        pos = _point(v, ("users", i, "position"))
        if pos is not None and pos[2] == 0:
            v.fail(RangeError, ("users", i, "position", 2), "user must not lie in the surface plane z = 0")
            pos = None
        users.append(pos)
    return users


def _snr(v: Validator):
    if v.has(("snr",)):
        return v.quantity(("snr",), "decibel", positive=False)
    return None


def _multiuser(v: Validator) -> dict:
    strategies = [v.choice(("strategies", i), ("PS", "REG", "SEG"))
                  for i in range(len(v.sequence(("strategies",), required=False)))] or ["PS", "REG", "SEG"]
    return {
        "signal": _signal(v, ("signal",)),
        "users": _users(v),
        "receiver": _footprint(v, ("receiver",), "depth"),
        "element": _footprint(v, ("element",)),
        "budget": _budget(v, ("budget",)),
        "sweep": _sweep(v, ("sweep",), "ris_size", "length"),
        "strategies": strategies,
        "snr_db": _snr(v),
        "reg_seeds": v.number(("reg_seeds",), default=1, integer=True, lo=1),
    }


def _scene(v: Validator) -> dict:
    p = ("scene",)
    out = {}
    if v.has(p + ("frequency",)) or v.has(p + ("wavelength",)):
        out["signal"] = _signal(v, p)
    for key, kind in (("room_width", "length"), ("room_height", "length"), ("window_center_y", "length"),
                      ("window_size", "length"), ("star_thickness", "length"), ("user_aperture", "area"),
                      ("user_depth", "length"), ("r_sn", "length"), ("r_sf", "length"),
                      ("zone_size", "length"), ("element_size", "length")):
        if v.has(p + (key,)):
            out[key] = v.quantity(p + (key,), kind)
    if v.has(p + ("target",)):
        raw = v.sequence(p + ("target",), min_len=2)
        if len(raw) != 2:
            v.fail(RangeError, p + ("target",), "target needs two coordinates (x, y)")
        else:
            out["target"] = tuple(v.quantity(p + ("target", i), "length") for i in range(2))
    return out


def _hybrid_coverage(v: Validator) -> dict:
    modes = [v.choice(("modes", i), ("NoWindow", "OpenWindow", "StarRis"))
             for i in range(len(v.sequence(("modes",), required=False)))] or ["NoWindow", "OpenWindow", "StarRis"]
    return {
        "scene": _scene(v),
        "resolution": v.number(("resolution",), default=20.0, lo=10),
        "modes": modes,
        "strategy": v.choice(("strategy",), ("PS", "REG", "SEG"), default="PS"),
    }


def _hybrid_angle(v: Validator) -> dict:
    sw = _sweep(v, ("sweep",), "theta", "angle")
    if sw is not None and not (0 < sw.start and sw.stop < math.pi / 2):
        v.fail(RangeError, ("sweep",), "angles must lie strictly between 0 and 90 deg")
    return {"scene": _scene(v), "sweep": sw}


_PARSERS = {
    "boundary-table": _boundary_table,
    "scaling-sweep": _scaling_sweep,
    "gain-vs-distance": _gain_vs_distance,
    "multiuser-sumrate": _multiuser,
    "hybrid-coverage": _hybrid_coverage,
    "hybrid-angle-sweep": _hybrid_angle,
}


def parse_text(text: str, source: str = "<memory>") -> ScenarioConfig:
    """Parse and validate scenario text; raises ScenarioInvalid listing every issue."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioInvalid([RangeError((), f"not valid YAML: {exc}", mark.line + 1 if mark else None)])
    if not isinstance(data, dict):
        raise ScenarioInvalid([RangeError((), "scenario must be a mapping", 1)])
    v = Validator(data, _node_lines(node))
    exp = v.choice(("experiment",), tuple(EXPERIMENTS))
    seed = v.number(("seed",), default=0, positive=False, lo=0, integer=True)
    spw = v.number(("quadrature", "samples_per_wavelength"), default=4.0)
    body = _PARSERS[exp](v) if exp else {}
    if v.issues:
        raise ScenarioInvalid(v.issues)
    canon = json.dumps(data, sort_keys=True, default=str, separators=(",", ":"))
    return ScenarioConfig(
        experiment=exp, body=body, seed=seed, samples_per_wavelength=spw, source=source,
        config_hash=hashlib.sha256(canon.encode()).hexdigest(), lines=v.lines,
    )


def parse_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_text(text, str(path))


__all__ = [
    "EXPERIMENTS", "UNITS", "ScenarioIssue", "MissingField", "UnitError", "RangeError", "ScenarioInvalid",
    "SignalSpec", "Sweep", "ScenarioConfig", "parse_text", "parse_scenario",
]
