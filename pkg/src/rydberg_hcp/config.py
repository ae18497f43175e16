"""Run configuration: a YAML file of nested blocks with unit-bearing values.

Example::

    basis:
      n_range: [21, 31]
      l_max: 16
      defects: cesium          # or hydrogenic, or a path to a defect table
      mode: quantum-defect
      inner_cutoff: 3 au
      grid: {r_min: 0.05 au, r_max: 2600 au, count: 20000, rule: sqrt}
    register:
      states: [24p, 25p, 26p, 27p, 28p, 29p]
      weights: [0.5, 1, 1.2, 1, 0.7, 0.5]    # or "uniform"
      marked: []
    pulse:
      Q: 0.0043 au             # or e_peak: 1.42 kV/cm
      fwhm: 440 fs             # or tau: 993 fs
      dt: 10 fs
      window_taus: 20
    scan:
      delays: [2.1 ps, 4.2 ps, 4.7 ps]
      grid: {start: 0 ps, stop: 8 ps, step: 20 fs}
    output:
      directory: out

Parsing is strict: unknown or duplicate keys and physical quantities without
units are errors, reported with the offending line number.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import constants as C
from .basis import (
    DEFAULT_GRID,
    DEFAULT_INNER_CUTOFF,
    DEFAULT_L_MAX,
    DEFAULT_N_RANGE,
    GRID_RULES,
    L_LETTERS,
    MODES,
    BasisError,
    QuantumDefectTable,
    build_basis,
    build_grid,
    state_label,
)
from .dynamics import DEFAULT_WINDOW_TAUS, IMPULSE_COEFF, HcpPulse, fwhm_ratio
from .register import DEFAULT_REGISTER_STATES, GAUSSIAN_WEIGHTS, RegisterSpec

UNITS = {
    "time": {"au": 1.0, "fs": 1.0 / C.AU_TIME_FS, "ps": 1.0 / C.AU_TIME_PS, "s": 1.0 / C.AU_TIME_S},
    "field": {"au": 1.0, "kV/cm": 1.0 / C.AU_FIELD_KV_PER_CM, "V/cm": 1.0 / C.AU_FIELD_V_PER_CM},
    "momentum": {"au": 1.0},
    "length": {"au": 1.0, "bohr": 1.0},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/]+)\s*$")
_LABEL = re.compile(r"^\s*(\d+)\s*([a-z])\s*$")


class ConfigError(ValueError):
    pass


_SCALARS = yaml.constructor.SafeConstructor()


# ---------------------------------------------------------------------------
# YAML with line tracking
# ---------------------------------------------------------------------------


class _Doc:
    """Plain data plus the source line of every mapping key, keyed by path."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.lines: dict[tuple, int] = {}
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark else "?"
            raise ConfigError(f"{source}:{line}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
        self.data = {} if node is None else self._convert(node, ())

    def _convert(self, node, path):
        if isinstance(node, yaml.MappingNode):
            out = {}
            for knode, vnode in node.value:
                key = knode.value
                if key in out:
                    raise ConfigError(f"{self.source}:{knode.start_mark.line + 1}: duplicate key {key!r}")
                self.lines[path + (key,)] = knode.start_mark.line + 1
                out[key] = self._convert(vnode, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._convert(v, path) for v in node.value]
        return _SCALARS.construct_object(node)

    def where(self, path) -> str:
        path = tuple(path)
        while path and path not in self.lines:
            path = path[:-1]
        return f"{self.source}:{self.lines.get(path, '?')}"


class _Block:
    def __init__(self, doc: _Doc, path: tuple, allowed: set[str]):
        self.doc = doc
        self.path = path
        data = doc.data
        for p in path:
            data = data.get(p, {}) if isinstance(data, dict) else {}
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{doc.where(path)}: block '{'.'.join(path)}' must be a mapping")
        self.data = data
        unknown = sorted(set(data) - allowed)
        if unknown:
            k = unknown[0]
            raise ConfigError(f"{doc.where(path + (k,))}: unknown key {k!r} in block '{'.'.join(path)}'")

    def has(self, key) -> bool:
        return key in self.data

    def fail(self, key, msg):
        raise ConfigError(f"{self.doc.where(self.path + (key,))}: {'.'.join(self.path + (key,))}: {msg}")

    def get(self, key, default=None):
        return self.data.get(key, default)

    def sub(self, key, allowed) -> "_Block":
        return _Block(self.doc, self.path + (key,), allowed)

    def quantity(self, key, kind: str, default=None) -> float | None:
        if key not in self.data:
            return default
        return self.parse_quantity(key, self.data[key], kind)

    def parse_quantity(self, key, value, kind: str) -> float:
        if not isinstance(value, str):
            self.fail(key, f"needs a unit, e.g. '{value} {next(iter(UNITS[kind]))}'")
        m = _QUANTITY.match(value)
        if not m:
            self.fail(key, f"cannot parse quantity {value!r}")
        unit = m.group(2)
        if unit not in UNITS[kind]:
            self.fail(key, f"unit {unit!r} is not a {kind} unit ({', '.join(UNITS[kind])})")
        return float(m.group(1)) * UNITS[kind][unit]

    def integer(self, key, default=None) -> int | None:
        if key not in self.data:
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(key, f"expected an integer, got {v!r}")
        return v

    def number(self, key, default=None) -> float | None:
        if key not in self.data:
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(key, f"expected a number, got {v!r}")
        return float(v)

    def choice(self, key, options, default) -> str:
        v = self.data.get(key, default)
        if v not in options:
            self.fail(key, f"expected one of {list(options)}, got {v!r}")
        return v

    def label(self, key, value) -> tuple[int, int]:
        m = _LABEL.match(str(value))
        if not m or m.group(2) not in L_LETTERS:
            self.fail(key, f"cannot parse state label {value!r} (expected e.g. '26p')")
        return int(m.group(1)), L_LETTERS.index(m.group(2))

    def sequence(self, key) -> list:
        v = self.data[key]
        if not isinstance(v, list):
            self.fail(key, "expected a list")
        return v


# ---------------------------------------------------------------------------
# Resolved configuration
# ---------------------------------------------------------------------------


@dataclass
class BasisConfig:
    n_range: tuple[int, int] = DEFAULT_N_RANGE
    l_max: int = DEFAULT_L_MAX
    defects_name: str = "cesium"
    defects: QuantumDefectTable = field(default_factory=QuantumDefectTable.cesium)
    mode: str = "quantum-defect"
    inner_cutoff: float = DEFAULT_INNER_CUTOFF
    r_min: float = DEFAULT_GRID["r_min"]
    r_max: float = DEFAULT_GRID["r_max"]
    count: int = DEFAULT_GRID["count"]
    rule: str = DEFAULT_GRID["rule"]

    def build(self):
        grid = build_grid(self.r_min, self.r_max, self.count, self.rule)
        return build_basis(self.n_range, self.l_max, self.defects, grid, self.mode, self.inner_cutoff)


@dataclass
class PulseConfig:
    pulse: HcpPulse
    Q: float
    fwhm: float
    dt: float
    given: dict


@dataclass
class ScanConfig:
    delays: tuple[float, ...] = tuple(C.ps_to_au(t) for t in (2.1, 4.2, 4.7))
    start: float = 0.0
    stop: float = C.ps_to_au(8.0)
    step: float = C.fs_to_au(20.0)
    search_window: float = C.ps_to_au(0.25)
    search_step: float = C.fs_to_au(5.0)
    targets: tuple = (((25, 1), 2.1), ((26, 1), 4.2), ((27, 1), 4.7))
    ridge_n: int = 26
    ridge_l: int = 1
    ridge_k_max: int = 2

    def grid(self):
        import numpy as np

        if not self.step > 0 or self.stop < self.start:
            raise ConfigError("scan grid needs step > 0 and stop >= start")
        n = int(math.floor((self.stop - self.start) / self.step * (1 + 1e-12))) + 1
        return self.start + self.step * np.arange(n)


@dataclass
class RunConfig:
    source: str
    basis: BasisConfig
    register: RegisterSpec
    pulse: PulseConfig
    scan: ScanConfig
    out_dir: Path
    formats: tuple[str, ...]
    trajectory: bool

    def resolved_lines(self) -> list[str]:
        b, p, s = self.basis, self.pulse, self.scan
        fs = C.AU_TIME_FS
        lines = [
            f"config = {self.source}",
            f"basis.n_range = {b.n_range[0]}..{b.n_range[1]}",
            f"basis.l_max = {b.l_max}",
            f"basis.mode = {b.mode}",
            f"basis.defects = {b.defects_name} [{b.defects.digest()}] "
            + " ".join(f"l{l}:{d:g}" for l, d in b.defects.defects.items()),
            f"basis.inner_cutoff_au = {b.inner_cutoff:.12g}",
            f"basis.grid = {b.rule} r_min={b.r_min:.12g} r_max={b.r_max:.12g} count={b.count}",
            "register.states = " + " ".join(self.register.labels),
            "register.weights = " + " ".join(f"{w:g}" for w in self.register.base_amplitudes),
            "register.marked = " + (" ".join(state_label(*k) for k in sorted(self.register.marked)) or "none"),
            f"pulse.Q_au = {p.Q:.12g}",
            f"pulse.e_peak_au = {p.pulse.e_peak:.12g} ({p.pulse.e_peak * C.AU_FIELD_KV_PER_CM:.6g} kV/cm)",
            f"pulse.tau_au = {p.pulse.tau:.12g} ({p.pulse.tau * fs:.6g} fs)",
            f"pulse.fwhm_au = {p.fwhm:.12g} ({p.fwhm * fs:.6g} fs)",
            f"pulse.window_au = {p.pulse.window:.12g} ({p.pulse.window / p.pulse.tau:g} tau)",
            f"pulse.dt_au = {p.dt:.12g} ({p.dt * fs:.6g} fs)",
            f"pulse.given = " + ", ".join(f"{k}" for k in p.given),
            "scan.delays_au = " + " ".join(f"{d:.12g}" for d in s.delays),
            f"scan.grid_au = start={s.start:.12g} stop={s.stop:.12g} step={s.step:.12g}",
            f"scan.search_window_au = {s.search_window:.12g}",
            f"scan.search_step_au = {s.search_step:.12g}",
            "scan.targets = " + " ".join(f"{state_label(*k)}@{t:g}ps" for k, t in s.targets),
            f"scan.ridge = n={s.ridge_n} l={s.ridge_l} k_max={s.ridge_k_max}",
        ]
        return lines


def _parse_basis(doc: _Doc, base_dir: Path) -> BasisConfig:
    blk = _Block(doc, ("basis",), {"n_range", "l_max", "defects", "mode", "inner_cutoff", "grid"})
    cfg = BasisConfig()
    if blk.has("n_range"):
        v = blk.sequence("n_range")
        if len(v) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in v) or v[0] > v[1] or v[0] < 1:
            blk.fail("n_range", f"expected [n_min, n_max] with 1 <= n_min <= n_max, got {v!r}")
        cfg.n_range = (v[0], v[1])
    cfg.l_max = blk.integer("l_max", cfg.l_max)
    if cfg.l_max < 0:
        blk.fail("l_max", "must be >= 0")
    cfg.mode = blk.choice("mode", MODES, cfg.mode)
    name = blk.get("defects", "cesium")
    if not isinstance(name, str):
        blk.fail("defects", "expected 'cesium', 'hydrogenic' or a file path")
    cfg.defects_name = name
    try:
        if name == "cesium":
            cfg.defects = QuantumDefectTable.cesium()
        elif name == "hydrogenic":
            cfg.defects = QuantumDefectTable.hydrogenic()
        else:
            path = Path(name)
            if not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                blk.fail("defects", f"defect table {str(path)!r} not found")
            cfg.defects = QuantumDefectTable.from_file(path)
    except BasisError as exc:
        raise ConfigError(f"{doc.where(('basis', 'defects'))}: {exc}") from None
    if cfg.mode == "hydrogenic":
        cfg.defects = QuantumDefectTable.hydrogenic()
    cfg.inner_cutoff = blk.quantity("inner_cutoff", "length", cfg.inner_cutoff)
    if blk.has("grid"):
        g = blk.sub("grid", {"r_min", "r_max", "count", "rule"})
        cfg.r_min = g.quantity("r_min", "length", cfg.r_min)
        cfg.r_max = g.quantity("r_max", "length", cfg.r_max)
        cfg.count = g.integer("count", cfg.count)
        cfg.rule = g.choice("rule", GRID_RULES, cfg.rule)
    return cfg


def _parse_register(doc: _Doc) -> RegisterSpec:
    blk = _Block(doc, ("register",), {"states", "weights", "marked"})
    states = DEFAULT_REGISTER_STATES
    if blk.has("states"):
        states = tuple(blk.label("states", v) for v in blk.sequence("states"))
    weights = blk.get("weights", "gaussian" if states == DEFAULT_REGISTER_STATES else "uniform")
    if weights == "uniform":
        weights = (1.0,) * len(states)
    elif weights == "gaussian":
        if len(states) != len(GAUSSIAN_WEIGHTS):
            blk.fail("weights", "the gaussian preset needs six register states")
        weights = GAUSSIAN_WEIGHTS
    else:
        weights = blk.sequence("weights")
        if not all(isinstance(w, (int, float)) and not isinstance(w, bool) for w in weights):
            blk.fail("weights", "expected numbers, 'uniform' or 'gaussian'")
    marked = [blk.label("marked", v) for v in blk.sequence("marked")] if blk.has("marked") else []
    try:
        return RegisterSpec(tuple(states), tuple(weights), frozenset(marked))
    except ValueError as exc:
        key = "marked" if "marked" in str(exc) else "weights" if "weight" in str(exc) else "states"
        raise ConfigError(f"{doc.where(('register', key))}: {exc}") from None


def _parse_pulse(doc: _Doc) -> PulseConfig:
    blk = _Block(doc, ("pulse",), {"Q", "e_peak", "tau", "fwhm", "dt", "window_taus"})
    given = {}
    if blk.has("Q") and blk.has("e_peak"):
        blk.fail("e_peak", "give exactly one of Q and e_peak")
    if blk.has("tau") and blk.has("fwhm"):
        blk.fail("tau", "give exactly one of tau and fwhm")
    e_peak = blk.quantity("e_peak", "field")
    Q = blk.quantity("Q", "momentum")
    if e_peak is None and Q is None:
        Q = C.Q_NOMINAL
    tau = blk.quantity("tau", "time")
    fwhm = blk.quantity("fwhm", "time")
    if tau is None and fwhm is None:
        fwhm = C.fs_to_au(C.FWHM_NOMINAL_FS)
    for k, v in (("Q", Q), ("e_peak", e_peak), ("tau", tau), ("fwhm", fwhm)):
        if v is not None:
            given[k] = v
    if tau is not None and not tau > 0:
        blk.fail("tau", "must be positive")
    if fwhm is not None and not fwhm > 0:
        blk.fail("fwhm", "must be positive")
    window_taus = blk.number("window_taus", DEFAULT_WINDOW_TAUS)
    if window_taus < DEFAULT_WINDOW_TAUS:
        blk.fail("window_taus", f"must be >= {DEFAULT_WINDOW_TAUS:g} to keep the pulse tail below 1e-6 of Q")
    dt = blk.quantity("dt", "time", C.fs_to_au(C.DT_NOMINAL_FS))
    if not dt > 0:
        blk.fail("dt", "must be positive")
    pulse = HcpPulse.from_targets(Q=Q, fwhm=fwhm, e_peak=e_peak, tau=tau, window_taus=window_taus)
    return PulseConfig(pulse, IMPULSE_COEFF * pulse.e_peak * pulse.tau, fwhm_ratio() * pulse.tau, dt, given)


def _parse_scan(doc: _Doc) -> ScanConfig:
    blk = _Block(doc, ("scan",), {"delays", "grid", "search_window", "search_step", "targets", "ridge"})
    cfg = ScanConfig()
    if blk.has("delays"):
        cfg.delays = tuple(blk.parse_quantity("delays", v, "time") for v in blk.sequence("delays"))
        if not cfg.delays:
            blk.fail("delays", "needs at least one delay")
    if blk.has("grid"):
        g = blk.sub("grid", {"start", "stop", "step"})
        cfg.start = g.quantity("start", "time", cfg.start)
        cfg.stop = g.quantity("stop", "time", cfg.stop)
        cfg.step = g.quantity("step", "time", cfg.step)
        if not cfg.step > 0:
            g.fail("step", "must be positive")
        if cfg.stop < cfg.start:
            g.fail("stop", "delay grid is empty (stop < start)")
    cfg.search_window = blk.quantity("search_window", "time", cfg.search_window)
    cfg.search_step = blk.quantity("search_step", "time", cfg.search_step)
    if not cfg.search_step > 0:
        blk.fail("search_step", "must be positive")
    if blk.has("targets"):
        targets = []
        for item in blk.sequence("targets"):
            if not isinstance(item, list) or len(item) != 2:
                blk.fail("targets", f"expected [label, delay] pairs, got {item!r}")
            key = blk.label("targets", item[0])
            t = blk.parse_quantity("targets", item[1], "time")
            targets.append((key, t * C.AU_TIME_PS))
        cfg.targets = tuple(targets)
    if blk.has("ridge"):
        r = blk.sub("ridge", {"n_center", "l", "k_max"})
        cfg.ridge_n = r.integer("n_center", cfg.ridge_n)
        cfg.ridge_l = r.integer("l", cfg.ridge_l)
        cfg.ridge_k_max = r.integer("k_max", cfg.ridge_k_max)
    return cfg


OUTPUT_FORMATS = ("csv", "pgm", "kv", "matrix")


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    doc = _Doc(text, source)
    if not isinstance(doc.data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping of blocks")
    _Block(doc, (), {"basis", "register", "pulse", "scan", "output"})
    base_dir = base_dir or Path.cwd()
    out = _Block(doc, ("output",), {"directory", "formats", "trajectory"})
    formats = tuple(out.get("formats", ["csv", "pgm", "kv"]))
    bad = [f for f in formats if f not in OUTPUT_FORMATS]
    if bad:
        out.fail("formats", f"unknown format {bad[0]!r}; use {list(OUTPUT_FORMATS)}")
    trajectory = out.get("trajectory", False)
    if not isinstance(trajectory, bool):
        out.fail("trajectory", "expected true or false")
    out_dir = Path(out.get("directory", "out"))
    if not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    return RunConfig(
        source=source,
        basis=_parse_basis(doc, base_dir),
        register=_parse_register(doc),
        pulse=_parse_pulse(doc),
        scan=_parse_scan(doc),
        out_dir=out_dir,
        formats=formats,
        trajectory=trajectory,
    )


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file; ``None`` gives the default (nominal) configuration."""
    if path is None:
        return parse_config("", "<defaults>")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config(text, str(path), base_dir=path.parent)


def parse_quantity(text: str, kind: str, source: str = "<argument>") -> float:
    """Convert a single unit-bearing value such as '5 fs' to atomic units."""
    doc = _Doc("", source)
    return _Block(doc, (), set()).parse_quantity(kind, text, kind)
