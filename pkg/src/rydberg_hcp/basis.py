"""Field-free Rydberg basis: quantum-defect energies and Numerov radial functions.

Radial functions are produced by Numerov integration of the Coulomb radial
equation at the quantum-defect energy. On the default grid, which is uniform
in x = sqrt(r), the substitution u(r) = x**0.5 * chi(x) removes the first
derivative term and leaves

    chi'' = [(4 l (l + 1) + 3/4) / x**2 - 8 - 8 E x**2] chi,

which Numerov handles with a constant step in x.

Two solution modes are supported:

``hydrogenic``
    The energy is an exact Coulomb eigenvalue, so an outward solution from
    the origin and an inward solution from ``r_max`` are matched at the outer
    classical turning point.
``quantum-defect``
    Coulomb approximation. The solution is integrated inward only and set to
    zero below ``inner_cutoff`` (or below the point where the inward solution
    starts to diverge inside the centrifugal barrier, whichever is larger).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

L_LETTERS = "spdfghiklmnoqrtuvwxyz"

GRID_RULES = ("sqrt", "uniform")
MODES = ("hydrogenic", "quantum-defect")

DEFAULT_N_RANGE = (21, 31)
DEFAULT_L_MAX = 16
DEFAULT_GRID = dict(r_min=0.05, r_max=2600.0, count=20000, rule="sqrt")
DEFAULT_INNER_CUTOFF = 3.0

# Minimum points per local wavelength accepted by solve_radial.
MIN_POINTS_PER_WAVELENGTH = 8


class BasisError(ValueError):
    """Invalid basis input or a failed radial solution."""


def l_label(l: int) -> str:
    return L_LETTERS[l] if l < len(L_LETTERS) else f"[l={l}]"


def state_label(n: int, l: int) -> str:
    return f"{n}{l_label(l)}"


# ---------------------------------------------------------------------------
# Quantum defects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantumDefectTable:
    """Quantum defects by orbital angular momentum; missing l means 0."""

    defects: Mapping[int, float] = field(default_factory=dict)
    source_label: str = ""

    def __post_init__(self):
        clean = {}
        for l, d in dict(self.defects).items():
            l, d = int(l), float(d)
            if l < 0:
                raise BasisError(f"negative l in defect table: {l}")
            if not math.isfinite(d) or d < 0:
                raise BasisError(f"quantum defect for l={l} must be finite and >= 0, got {d}")
            clean[l] = d
        object.__setattr__(self, "defects", dict(sorted(clean.items())))

    def delta(self, l: int) -> float:
        return self.defects.get(l, 0.0)

    @property
    def is_hydrogenic(self) -> bool:
        return all(d == 0.0 for d in self.defects.values())

    def digest(self) -> str:
        text = ";".join(f"{l}:{d!r}" for l, d in self.defects.items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def hydrogenic(cls) -> "QuantumDefectTable":
        return cls({}, "hydrogenic")

    @classmethod
    def cesium(cls) -> "QuantumDefectTable":
        text = resources.files("rydberg_hcp.data").joinpath("cs_defects.txt").read_text()
        return parse_defect_table(text, source_label="cesium (bundled cs_defects.txt)")

    @classmethod
    def from_file(cls, path) -> "QuantumDefectTable":
        path = Path(path)
        return parse_defect_table(path.read_text(), source_label=str(path))


def parse_defect_table(text: str, source_label: str = "<string>") -> QuantumDefectTable:
    """Parse lines of the form ``l <int> delta <decimal>``; ``#`` starts a comment."""
    defects: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        where = f"{source_label}, line {lineno}: {raw.strip()!r}"
        if len(tokens) != 4 or tokens[0] != "l" or tokens[2] != "delta":
            raise BasisError(f"{where}: expected 'l <integer> delta <decimal>'")
        try:
            l = int(tokens[1])
            d = float(tokens[3])
        except ValueError:
            raise BasisError(f"{where}: could not parse numbers") from None
        if l in defects:
            raise BasisError(f"{where}: duplicate entry for l={l}")
        if l < 0 or not math.isfinite(d) or d < 0:
            raise BasisError(f"{where}: need l >= 0 and a finite defect >= 0")
        defects[l] = d
    return QuantumDefectTable(defects, source_label)


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial grid ``points`` (bohr) generated from a uniform variable.

    ``variable`` holds the uniformly spaced coordinate (x = sqrt(r) for the
    ``sqrt`` rule, r itself for ``uniform``) and ``step`` its spacing.
    """

    points: np.ndarray
    variable: np.ndarray
    step: float
    rule: str

    @property
    def r_min(self) -> float:
        return float(self.points[0])

    @property
    def r_max(self) -> float:
        return float(self.points[-1])

    def __len__(self):
        return len(self.points)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights in the uniform variable, so that sum(w * f) ~ int f dr."""
        w = np.full(len(self.points), self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        if self.rule == "sqrt":
            w *= 2.0 * self.variable
        w.setflags(write=False)
        return w

    def integrate(self, values: np.ndarray) -> float:
        """Integrate samples of f(r) over dr."""
        return float(np.dot(self.weights, values))

    def describe(self) -> str:
        return f"{self.rule} grid, {len(self)} points, r in [{self.r_min:g}, {self.r_max:g}] a.u."


def build_grid(r_min: float, r_max: float, count: int, rule: str = "sqrt", n_max: int | None = None) -> RadialGrid:
    """Build a radial grid.

    ``rule`` is ``"sqrt"`` (points equally spaced in sqrt(r)) or ``"uniform"``.
    When ``n_max`` is given the grid must hold the classical orbit of that
    shell, r_max >= 2 n_max**2.
    """
    if rule not in GRID_RULES:
        raise BasisError(f"unknown grid rule {rule!r}; use one of {GRID_RULES}")
    if not (math.isfinite(r_min) and math.isfinite(r_max)):
        raise BasisError("grid bounds must be finite")
    if r_min <= 0 or r_max <= 0:
        raise BasisError("grid bounds must be positive")
    if r_max <= r_min:
        raise BasisError(f"empty grid range: r_min={r_min} >= r_max={r_max}")
    if count < 1000:
        raise BasisError(f"grid needs at least 1000 points, got {count}")
    if n_max is not None and r_max < 2.0 * n_max**2:
        raise BasisError(f"r_max={r_max} does not contain the n={n_max} orbit (need >= {2 * n_max**2})")

    if rule == "sqrt":
        var = np.linspace(math.sqrt(r_min), math.sqrt(r_max), count)
        points = var**2
        points[0], points[-1] = r_min, r_max
    else:
        var = np.linspace(r_min, r_max, count)
        points = var.copy()
    step = float(var[1] - var[0])
    if np.any(np.diff(points) <= 0):
        raise BasisError("grid is not strictly increasing (count too large for the range?)")
    var.setflags(write=False)
    points.setflags(write=False)
    return RadialGrid(points, var, step, rule)


def default_grid() -> RadialGrid:
    return build_grid(**DEFAULT_GRID)


# ---------------------------------------------------------------------------
# States and energies
# ---------------------------------------------------------------------------


def _effective_n(n: int, l: int, defects: QuantumDefectTable) -> float:
    if n < 1 or l < 0 or l >= n:
        raise BasisError(f"invalid quantum numbers n={n}, l={l}")
    n_star = n - defects.delta(l)
    if n_star <= 0:
        raise BasisError(f"effective quantum number n - delta_l = {n_star} <= 0 for n={n}, l={l}")
    return n_star


def energy_of(n: int, l: int, defects: QuantumDefectTable | None = None) -> float:
    """Rydberg energy -1 / (2 (n - delta_l)**2) in hartree."""
    n_star = _effective_n(n, l, defects or QuantumDefectTable.hydrogenic())
    return -0.5 / n_star**2


def kepler_time(n: int, l: int, defects: QuantumDefectTable | None = None) -> float:
    """Classical orbit period 2 pi (n - delta_l)**3, in atomic units of time.

    Multiply by ``constants.AU_TIME_S`` for seconds (or use ``kepler_time_s``).
    """
    n_star = _effective_n(n, l, defects or QuantumDefectTable.hydrogenic())
    return 2.0 * math.pi * n_star**3


def kepler_time_s(n: int, l: int, defects: QuantumDefectTable | None = None) -> float:
    from .constants import AU_TIME_S

    return kepler_time(n, l, defects) * AU_TIME_S


@dataclass(frozen=True)
class BasisState:
    n: int
    l: int
    n_star: float
    energy: float
    m: int = 0

    @classmethod
    def make(cls, n: int, l: int, defects: QuantumDefectTable | None = None) -> "BasisState":
        defects = defects or QuantumDefectTable.hydrogenic()
        n_star = _effective_n(n, l, defects)
        return cls(n=n, l=l, n_star=n_star, energy=-0.5 / n_star**2)

    @property
    def label(self) -> str:
        return state_label(self.n, self.l)

    @property
    def key(self) -> tuple[int, int]:
        return (self.n, self.l)

    def outer_turning_point(self) -> float:
        return self.n_star**2 * (1.0 + math.sqrt(max(0.0, 1.0 - self.l * (self.l + 1) / self.n_star**2)))

    def inner_turning_point(self) -> float:
        return self.n_star**2 * (1.0 - math.sqrt(max(0.0, 1.0 - self.l * (self.l + 1) / self.n_star**2)))


# ---------------------------------------------------------------------------
# Radial functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialWavefunction:
    """R(r) sampled on ``grid``; identically zero below ``inner_cutoff``."""

    state: BasisState
    grid: RadialGrid
    values: np.ndarray
    inner_cutoff: float

    @property
    def u(self) -> np.ndarray:
        """Reduced radial function u(r) = r R(r)."""
        return self.values * self.grid.points

    def norm(self) -> float:
        return self.grid.integrate(self.u**2)

    def count_nodes(self, rel_threshold: float = 1e-7) -> int:
        """Sign changes of R, ignoring samples below ``rel_threshold`` of the peak."""
        u = self.u
        keep = np.abs(u) > rel_threshold * np.max(np.abs(u))
        signs = np.sign(u[keep])
        return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _numerov_coefficient(grid: RadialGrid, l: np.ndarray, energy: np.ndarray) -> np.ndarray:
    """f in y'' = f y for each (l, E) row, in the grid's uniform variable."""
    l = l[:, None].astype(float)
    energy = energy[:, None]
    var = grid.variable[None, :]
    if grid.rule == "sqrt":
        return (4.0 * l * (l + 1.0) + 0.75) / var**2 - 8.0 - 8.0 * energy * var**2
    return l * (l + 1.0) / var**2 - 2.0 / var - 2.0 * energy


def _to_u(grid: RadialGrid, y: np.ndarray) -> np.ndarray:
    return y * np.sqrt(grid.variable) if grid.rule == "sqrt" else y


def _from_u(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    return u / np.sqrt(grid.variable) if grid.rule == "sqrt" else u


_RESCALE_AT = 1e150


def _numerov_inward(f: np.ndarray, h: float) -> np.ndarray:
    """Integrate y'' = f y from the last grid point toward the first, all rows at once.

    y(end) = 0 and a tiny seed one step in. Rows that grow past ``_RESCALE_AT``
    are rescaled together with their stored tail, which only underflows the
    exponentially small region near r_max.
    """
    nrow, npts = f.shape
    h12 = h * h / 12.0
    k = 1.0 - h12 * f
    y = np.zeros_like(f)
    y[:, -2] = 1e-30
    w_next = np.zeros(nrow)
    w_cur = k[:, -2] * y[:, -2]
    for i in range(npts - 2, 0, -1):
        w_prev = 2.0 * w_cur - w_next + 12.0 * h12 * f[:, i] * y[:, i]
        y[:, i - 1] = w_prev / k[:, i - 1]
        w_next, w_cur = w_cur, w_prev
        big = np.abs(w_cur) > _RESCALE_AT
        if big.any():
            scale = np.where(big, 1.0 / _RESCALE_AT, 1.0)
            y[big, i - 1 :] *= scale[big, None]
            w_next = w_next * scale
            w_cur = w_cur * scale
    return y


def _numerov_outward(f: np.ndarray, h: float, y0: np.ndarray, y1: np.ndarray, stop: int) -> np.ndarray:
    """Integrate y'' = f y outward from the first two grid points up to index ``stop``."""
    nrow, npts = f.shape
    h12 = h * h / 12.0
    k = 1.0 - h12 * f
    y = np.zeros_like(f)
    y[:, 0], y[:, 1] = y0, y1
    w_prev = k[:, 0] * y0
    w_cur = k[:, 1] * y1
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, min(stop, npts - 1)):
            w_next = 2.0 * w_cur - w_prev + 12.0 * h12 * f[:, i] * y[:, i]
            y[:, i + 1] = w_next / k[:, i + 1]
            w_prev, w_cur = w_cur, w_next
    return y


def _check_resolution(grid: RadialGrid, f: np.ndarray, states: Sequence[BasisState]) -> None:
    kmax = np.sqrt(np.max(np.clip(-f, 0.0, None), axis=1))
    ppw = 2.0 * math.pi / np.maximum(kmax * grid.step, 1e-300)
    bad = np.flatnonzero(ppw < MIN_POINTS_PER_WAVELENGTH)
    if bad.size:
        s = states[bad[0]]
        raise BasisError(
            f"grid too coarse for {s.label}: {ppw[bad[0]]:.1f} points per local wavelength "
            f"(need {MIN_POINTS_PER_WAVELENGTH})"
        )


def _solve_many(
    states: Sequence[BasisState], grid: RadialGrid, mode: str, inner_cutoff: float
) -> list[RadialWavefunction]:
    if mode not in MODES:
        raise BasisError(f"unknown mode {mode!r}; use one of {MODES}")
    if not states:
        return []
    for s in states:
        if not s.energy < 0:
            raise BasisError(f"{s.label}: energy {s.energy} is not bound")
        if s.outer_turning_point() >= grid.r_max:
            raise BasisError(f"{s.label}: grid r_max={grid.r_max} does not cover the outer turning point")
    r = grid.points
    l = np.array([s.l for s in states])
    energy = np.array([s.energy for s in states])
    f = _numerov_coefficient(grid, l, energy)
    _check_resolution(grid, f, states)

    u_in = _to_u(grid, _numerov_inward(f, grid.step))
    cut_radius = np.full(len(states), grid.r_min if mode == "hydrogenic" else inner_cutoff)

    if mode == "hydrogenic":
        match = np.array([min(np.searchsorted(r, s.outer_turning_point()), len(r) - 2) for s in states])
        r0, r1 = r[0], r[1]
        lf = l.astype(float)
        # u ~ r^(l+1) (1 - r/(l+1)) near the origin for Z = 1.
        u0 = r0 ** (lf + 1) * (1.0 - r0 / (lf + 1))
        u1 = r1 ** (lf + 1) * (1.0 - r1 / (lf + 1))
        y0 = _from_u(grid, u0) if grid.rule == "uniform" else u0 / math.sqrt(grid.variable[0])
        y1 = _from_u(grid, u1) if grid.rule == "uniform" else u1 / math.sqrt(grid.variable[1])
        y_out = _numerov_outward(f, grid.step, y0, y1, int(match.max()))
        u_out = _to_u(grid, y_out)
        u = np.empty_like(u_in)
        for row, m in enumerate(match):
            scale = u_in[row, m] / u_out[row, m]
            u[row, :m] = u_out[row, :m] * scale
            u[row, m:] = u_in[row, m:]
    else:
        u = u_in
        for row, s in enumerate(states):
            # Inside the centrifugal barrier the physical solution shrinks toward
            # the origin; cut where the inward solution turns around instead.
            r_in = s.inner_turning_point()
            a = np.abs(u[row])
            grows_inward = (a[:-1] > a[1:]) & (r[:-1] < r_in)
            idx = np.flatnonzero(grows_inward)
            if idx.size:
                cut_radius[row] = max(cut_radius[row], r[idx[-1] + 1])
            u[row, r < cut_radius[row]] = 0.0

    out = []
    w = grid.weights
    for row, s in enumerate(states):
        ur = u[row]
        norm2 = float(np.dot(w, ur * ur))
        if not (math.isfinite(norm2) and norm2 > 1e-280):
            raise BasisError(f"{s.label}: normalization integral underflow ({norm2})")
        ur = ur / math.sqrt(norm2)
        # Sign convention: innermost lobe positive (hydrogenic R ~ +r^l).
        big = np.flatnonzero(np.abs(ur) > 1e-8 * np.max(np.abs(ur)))
        if ur[big[0]] < 0:
            ur = -ur
        values = ur / r
        values.setflags(write=False)
        out.append(RadialWavefunction(s, grid, values, float(cut_radius[row])))
    return out


def solve_radial(
    state: BasisState,
    grid: RadialGrid,
    mode: str = "quantum-defect",
    inner_cutoff: float = DEFAULT_INNER_CUTOFF,
) -> RadialWavefunction:
    """Numerov radial function for ``state`` on ``grid``, unit-normalized."""
    return _solve_many([state], grid, mode, inner_cutoff)[0]


# ---------------------------------------------------------------------------
# Basis set
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BasisSet:
    states: tuple[BasisState, ...]
    wavefunctions: tuple[RadialWavefunction, ...]
    grid: RadialGrid
    defects: QuantumDefectTable
    mode: str

    def __post_init__(self):
        keys = [s.key for s in self.states]
        if len(set(keys)) != len(keys):
            raise BasisError("duplicate (n, l) states in basis")
        if any(wf.grid is not self.grid for wf in self.wavefunctions):
            raise BasisError("all wavefunctions must share the basis grid")
        object.__setattr__(self, "_index", {k: i for i, k in enumerate(keys)})

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, key) -> bool:
        return tuple(key) in self._index

    def index(self, n: int, l: int) -> int:
        try:
            return self._index[(n, l)]
        except KeyError:
            raise BasisError(f"state {state_label(n, l)} is not in the basis") from None

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.states]

    @cached_property
    def energies(self) -> np.ndarray:
        e = np.array([s.energy for s in self.states])
        e.setflags(write=False)
        return e

    @cached_property
    def l_values(self) -> np.ndarray:
        return np.array([s.l for s in self.states])

    @cached_property
    def n_star(self) -> np.ndarray:
        return np.array([s.n_star for s in self.states])

    @cached_property
    def u_matrix(self) -> np.ndarray:
        """Reduced radial functions as columns, shape (grid points, states)."""
        u = np.column_stack([wf.u for wf in self.wavefunctions])
        u.setflags(write=False)
        return u

    def integral_matrix(self, weight: np.ndarray) -> np.ndarray:
        """All radial integrals <a| w(r) |b> for one weight sampled on the grid."""
        uw = self.u_matrix * (self.grid.weights * weight)[:, None]
        return uw.T @ self.u_matrix

    def gram(self) -> np.ndarray:
        return self.integral_matrix(np.ones(len(self.grid)))


def build_basis(
    n_range: tuple[int, int] = DEFAULT_N_RANGE,
    l_max: int = DEFAULT_L_MAX,
    defects: QuantumDefectTable | None = None,
    grid: RadialGrid | None = None,
    mode: str = "quantum-defect",
    inner_cutoff: float = DEFAULT_INNER_CUTOFF,
    l_values: Iterable[int] | None = None,
) -> BasisSet:
    """Build the (n, l, m=0) basis for n in the inclusive ``n_range``.

    States with l >= n are skipped. ``l_values`` restricts l to an explicit
    set (e.g. ``[1]`` for the p-state register subspace). In hydrogenic mode
    all defects are zero regardless of ``defects``.
    """
    n_lo, n_hi = n_range
    if n_lo < 1 or n_hi < n_lo:
        raise BasisError(f"invalid n range {n_range}")
    if l_max < 0:
        raise BasisError(f"invalid l_max {l_max}")
    if mode not in MODES:
        raise BasisError(f"unknown mode {mode!r}; use one of {MODES}")
    if mode == "hydrogenic":
        defects = QuantumDefectTable.hydrogenic()
    elif defects is None:
        defects = QuantumDefectTable.cesium()
    grid = grid or default_grid()
    allowed = None if l_values is None else {int(v) for v in l_values}

    states = [
        BasisState.make(n, l, defects)
        for n in range(n_lo, n_hi + 1)
        for l in range(0, min(l_max, n - 1) + 1)
        if allowed is None or l in allowed
    ]
    if not states:
        raise BasisError("basis selection is empty")
    wfs = _solve_many(states, grid, mode, inner_cutoff)
    return BasisSet(tuple(states), tuple(wfs), grid, defects, mode)


def radial_integral(
    a: RadialWavefunction, b: RadialWavefunction, weight: Callable[[np.ndarray], np.ndarray] | np.ndarray | float = 1.0
) -> float:
    """int R_a(r) w(r) R_b(r) r^2 dr by trapezoid quadrature on the shared grid."""
    if a.grid is not b.grid and not np.array_equal(a.grid.points, b.grid.points):
        raise BasisError("radial functions live on different grids")
    r = a.grid.points
    w = weight(r) if callable(weight) else weight
    w = np.broadcast_to(np.asarray(w, dtype=float), r.shape)
    if not np.all(np.isfinite(w)):
        raise BasisError("weight is not finite on the grid")
    return a.grid.integrate(a.u * w * b.u)
