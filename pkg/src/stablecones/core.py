"""Cone elements, the cone algebra and bounded semicharacters.

Four element types cover the supported cones:

* :class:`Vector` -- a point of R^d (vector sum, ordinary or operator scaling);
* :class:`GridFunction` -- non-negative values on a shared time grid (pointwise max);
* :class:`StepFunction` -- an exact cadlag step function, sampled on the shared
  grid for characters and output (time-reparametrised sum cone);
* :class:`AtomicMeasure` -- a finite sum of weighted point masses (measure sum).

All elements are immutable. The algebra (:func:`add`, :func:`scale`,
:func:`involve`) and characters are pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Sequence

import numpy as np

from .errors import ContractViolation, DomainError

EUCLIDEAN = "euclidean"
GRID = "grid-function"
MEASURE = "atomic-measure"

SUM = "sum"
MAX = "max"

MULTIPLICATIVE = "multiplicative"
OPERATOR = "operator"
TIME = "time"
WEIGHT = "weight"

NEGATION = "negation"
IDENTITY = "identity"


def _frozen_array(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ContractViolation(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DomainError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# elements
# ---------------------------------------------------------------------------


class ConeElement:
    """Common base of all cone elements."""

    kind: ClassVar[str]

    @property
    def is_neutral(self) -> bool:
        raise NotImplementedError

    @property
    def payload(self) -> np.ndarray:
        """Flat real payload used by norms, characters and CSV output."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Vector(ConeElement):
    coords: np.ndarray
    kind: ClassVar[str] = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen_array(self.coords, 1, "coords"))

    @classmethod
    def _trusted(cls, coords: np.ndarray) -> "Vector":
        # fresh 1-D float array from a cone operation; only overflow is possible
        if not np.isfinite(coords).all():
            raise DomainError("coords must be finite")
        coords.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "coords", coords)
        return obj

    @property
    def is_neutral(self) -> bool:
        return not np.any(self.coords)

    @property
    def payload(self) -> np.ndarray:
        return self.coords

    def __repr__(self) -> str:
        return f"Vector({self.coords.tolist()})"


@dataclass(frozen=True, eq=False)
class GridFunction(ConeElement):
    """Function values on a time grid, the element type of the max cone."""

    grid: np.ndarray
    values: np.ndarray
    kind: ClassVar[str] = GRID

    def __post_init__(self):
        values = _frozen_array(self.values, 1, "values")
        if values.shape != self.grid.shape:
            raise ContractViolation("values must be aligned with the grid")
        object.__setattr__(self, "values", values)

    @classmethod
    def _trusted(cls, grid: np.ndarray, values: np.ndarray) -> "GridFunction":
        # fresh array aligned with grid, from a cone operation
        if not np.isfinite(values).all():
            raise DomainError("values must be finite")
        values.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", values)
        return obj

    @property
    def is_neutral(self) -> bool:
        return not np.any(self.values)

    @cached_property
    def nonnegative(self) -> bool:
        return bool(self.values.min() >= 0.0)

    @property
    def payload(self) -> np.ndarray:
        return self.values

    def __repr__(self) -> str:
        return f"GridFunction({self.values.tolist()})"


def _steps(levels: np.ndarray) -> np.ndarray:
    # levels[j] - levels[j - 1], with levels[-1] read as 0
    d = levels.copy()
    d[1:] -= levels[:-1]
    return d


def _jumps_to_levels(times, jumps) -> tuple[np.ndarray, np.ndarray]:
    times = np.asarray(times, dtype=float).ravel()
    jumps = np.asarray(jumps, dtype=float).ravel()
    if times.size == 0:
        return times, jumps
    order = times.argsort(kind="stable")
    times, jumps = times[order], jumps[order]
    # the level after a repeated time is the running sum at its last copy
    last = np.empty(times.size, dtype=bool)
    last[-1] = True
    np.not_equal(times[1:], times[:-1], out=last[:-1])
    return times[last], jumps.cumsum()[last]


@dataclass(frozen=True, eq=False)
class StepFunction(ConeElement):
    """Right-continuous step function vanishing left of its first break.

    ``levels[j]`` is the value on ``[breaks[j], breaks[j + 1])``; the last
    level extends to infinity. Representations are canonical: breaks are
    strictly increasing and positive, and consecutive levels differ, so the
    neutral element is the function with no breaks at all.
    """

    grid: np.ndarray
    breaks: np.ndarray
    levels: np.ndarray
    kind: ClassVar[str] = GRID

    def __post_init__(self):
        breaks = np.array(self.breaks, dtype=float).ravel()
        levels = np.array(self.levels, dtype=float).ravel()
        if breaks.shape != levels.shape:
            raise ContractViolation("breaks and levels must have equal length")
        if not (np.isfinite(breaks).all() and np.isfinite(levels).all()):
            raise DomainError("step function data must be finite")
        if (breaks[1:] <= breaks[:-1]).any():
            raise ContractViolation("breaks must be strictly increasing")
        keep = levels != np.concatenate(([0.0], levels[:-1]))
        breaks, levels = breaks[keep], levels[keep]
        if breaks.size and breaks[0] <= 0.0:
            raise DomainError("time-stable elements vanish at the origin; breaks must be > 0")
        breaks.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def _trusted(cls, grid: np.ndarray, breaks: np.ndarray, levels: np.ndarray) -> "StepFunction":
        # breaks already finite, positive and increasing (results of cone operations)
        keep = _steps(levels) != 0.0
        if not keep.all():
            breaks, levels = breaks[keep], levels[keep]
        breaks.setflags(write=False)
        levels.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "breaks", breaks)
        object.__setattr__(obj, "levels", levels)
        return obj

    @classmethod
    def from_grid(cls, grid: np.ndarray, values) -> "StepFunction":
        """Cadlag interpolant of ``values`` sampled on ``grid``."""
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ContractViolation("values must be aligned with the grid")
        if values[0] != 0.0:
            raise DomainError("time-stable elements must vanish at the first grid point")
        return cls(grid, grid, values)

    @classmethod
    def from_jumps(cls, grid: np.ndarray, times, jumps) -> "StepFunction":
        """Sum of ``jumps[k] * 1[times[k], inf)``; times may repeat."""
        return cls(grid, *_jumps_to_levels(times, jumps))

    def at(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.breaks, s, side="right") - 1
        out = np.where(idx >= 0, self.levels[np.clip(idx, 0, None)] if self.levels.size else 0.0, 0.0)
        return out

    @cached_property
    def values(self) -> np.ndarray:
        v = self.at(self.grid)
        v.setflags(write=False)
        return v

    @cached_property
    def jumps(self) -> np.ndarray:
        j = _steps(self.levels)
        j.setflags(write=False)
        return j

    @property
    def is_neutral(self) -> bool:
        return self.breaks.size == 0

    @property
    def payload(self) -> np.ndarray:
        return self.values

    def __repr__(self) -> str:
        return f"StepFunction(breaks={self.breaks.tolist()}, levels={self.levels.tolist()})"


@dataclass(frozen=True, eq=False)
class AtomicMeasure(ConeElement):
    """Finite measure ``sum_k weights[k] * delta(locations[k])``.

    Atoms are kept unmerged; :meth:`canonical` merges and sorts them.
    """

    locations: np.ndarray
    weights: np.ndarray
    kind: ClassVar[str] = MEASURE

    def __post_init__(self):
        w = _frozen_array(self.weights, 1, "weights")
        loc = np.array(self.locations, dtype=float)
        if loc.ndim == 1:
            loc = loc.reshape(w.size, -1) if w.size else loc.reshape(0, max(loc.size, 1))
        if loc.ndim != 2 or loc.shape[0] != w.size:
            raise ContractViolation("locations must have one row per weight")
        if not np.all(np.isfinite(loc)):
            raise DomainError("locations must be finite")
        if np.any(w < 0):
            raise DomainError("atom weights must be non-negative")
        loc.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @property
    def is_neutral(self) -> bool:
        return not np.any(self.weights)

    @property
    def payload(self) -> np.ndarray:
        return self.weights

    @classmethod
    def _trusted(cls, locations: np.ndarray, weights: np.ndarray) -> "AtomicMeasure":
        # finite 2-D locations and finite non-negative weights (results of cone operations)
        locations.setflags(write=False)
        weights.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "locations", locations)
        object.__setattr__(obj, "weights", weights)
        return obj

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def canonical(self) -> "AtomicMeasure":
        keep = self.weights > 0
        loc, w = self.locations[keep], self.weights[keep]
        if w.size == 0:
            return AtomicMeasure(loc, w)
        uniq, inv = np.unique(loc, axis=0, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inv.ravel(), w)
        return AtomicMeasure(uniq, merged)

    def __repr__(self) -> str:
        return f"AtomicMeasure({self.locations.tolist()}, {self.weights.tolist()})"


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------


_TAYLOR_TERMS = 18
_EIGEN_COND_MAX = 1e3


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series.

    Accepts a single square matrix or a stack ``(..., n, n)``. A stack shares
    one squaring count, chosen from the largest 1-norm in it.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ContractViolation("expm expects square matrices")
    n = a.shape[-1]
    if a.size == 0:
        return np.broadcast_to(np.eye(n), a.shape).copy()
    norm = float(np.max(np.abs(a).sum(axis=-2)))
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    x = a / 2.0**squarings
    # ||x|| <= 1/2, so 18 Taylor terms leave a remainder below 1e-21
    eye = np.broadcast_to(np.eye(n), a.shape)
    result = eye + x / _TAYLOR_TERMS
    for k in range(_TAYLOR_TERMS - 1, 0, -1):
        result = eye + (x @ result) / k
    for _ in range(squarings):
        result = result @ result
    return result


# ---------------------------------------------------------------------------
# the cone descriptor
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConeDescriptor:
    """Algebraic context of a cone: semigroup operation, scaling and involution.

    ``grid`` is required for grid-function cones, ``dim`` for vector cones and
    ``matrix`` for operator scaling ``t x = exp((log t) A) x``. Use
    :func:`stablecones.cones.make_cone` rather than building these by hand.
    """

    element_kind: str
    semigroup_op: str
    scaling_kind: str
    involution_kind: str
    dim: int | None = None
    grid: np.ndarray | None = None
    matrix: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.element_kind not in (EUCLIDEAN, GRID, MEASURE):
            raise ContractViolation(f"unknown element kind {self.element_kind!r}")
        if self.grid is not None:
            g = _frozen_array(self.grid, 1, "grid")
            if g.size == 0:
                raise ContractViolation("grid must be non-empty")
            if np.any(np.diff(g) <= 0):
                raise ContractViolation("grid must be strictly increasing")
            if g[0] < 0:
                raise ContractViolation("grid times must be non-negative")
            object.__setattr__(self, "grid", g)
        elif self.element_kind == GRID:
            raise ContractViolation("grid-function cones need a grid")
        if self.scaling_kind == OPERATOR:
            m = _frozen_array(self.matrix, 2, "matrix")
            if m.shape[0] != m.shape[1] or (self.dim is not None and m.shape[0] != self.dim):
                raise ContractViolation("operator matrix must be dim x dim")
            scale = max(1.0, float(np.linalg.norm(m)))
            if abs(np.linalg.det(m)) <= 1e-12 * scale ** m.shape[0]:
                raise ContractViolation("operator scaling needs a non-degenerate matrix")
            object.__setattr__(self, "matrix", m)
            object.__setattr__(self, "dim", m.shape[0])

    @property
    def is_sum(self) -> bool:
        return self.semigroup_op == SUM

    def operator_power(self, t: float) -> np.ndarray:
        """``exp((log t) A)`` for the operator scaling."""
        eig = self._eigen_basis
        if eig is None:
            return expm(math.log(t) * self.matrix)
        lam, v, v_inv = eig
        return ((v * np.exp(math.log(t) * lam)) @ v_inv).real

    @cached_property
    def _eigen_basis(self):
        # t^A = V diag(t^lambda) V^-1 when A has a well-conditioned eigenbasis
        lam, v = np.linalg.eig(self.matrix)
        if np.linalg.cond(v) > _EIGEN_COND_MAX:
            return None
        return lam, v, np.linalg.inv(v)

    @cached_property
    def operator_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)

    def admissible_alpha(self, symmetric: bool) -> tuple[float, float]:
        """Open interval of alpha for which the uncompensated series converges."""
        if self.semigroup_op == MAX:
            return (0.0, math.inf)
        if self.scaling_kind == WEIGHT:
            return (0.0, 1.0)
        if self.scaling_kind == TIME:
            return (0.0, math.inf) if symmetric else (0.0, 1.0)
        if self.scaling_kind == OPERATOR:
            low = float(np.min(self.operator_eigenvalues.real))
            if low <= 0:
                return (0.0, 0.0)
            return (0.0, 2.0 * low) if symmetric else (0.0, low)
        return (0.0, 2.0) if symmetric else (0.0, 1.0)


def neutral(cone: ConeDescriptor) -> ConeElement:
    if cone.element_kind == EUCLIDEAN:
        return Vector(np.zeros(cone.dim))
    if cone.element_kind == MEASURE:
        return AtomicMeasure(np.zeros((0, cone.dim or 1)), np.zeros(0))
    if cone.scaling_kind == TIME:
        return StepFunction(cone.grid, [], [])
    return GridFunction(cone.grid, np.zeros_like(cone.grid))


def as_element(cone: ConeDescriptor, payload) -> ConeElement:
    """Wrap a raw payload row (coordinates or grid values) as a cone element."""
    if isinstance(payload, ConeElement):
        check_member(cone, payload)
        return payload
    if cone.element_kind == EUCLIDEAN:
        x = Vector(payload)
    elif cone.element_kind == MEASURE:
        raise ContractViolation("atomic measures cannot be built from a flat payload")
    elif cone.scaling_kind == TIME:
        x = StepFunction.from_grid(cone.grid, payload)
    else:
        x = GridFunction(cone.grid, payload)
    check_member(cone, x)
    return x


def _same_grid(cone: ConeDescriptor, x) -> None:
    if x.grid is not cone.grid and not np.array_equal(x.grid, cone.grid):
        raise ContractViolation("grid functions must share the cone's grid")


def check_member(cone: ConeDescriptor, x: ConeElement) -> None:
    """Raise :class:`ContractViolation` unless ``x`` belongs to ``cone``."""
    if not isinstance(x, ConeElement) or x.kind != cone.element_kind:
        raise ContractViolation(f"{type(x).__name__} is not an element of the {cone.element_kind} cone")
    if isinstance(x, Vector):
        if x.coords.shape != (cone.dim,):
            raise ContractViolation(f"expected dimension {cone.dim}, got {x.coords.shape}")
    elif isinstance(x, GridFunction):
        if cone.scaling_kind == TIME:
            raise ContractViolation("time-stable cones carry StepFunction elements")
        _same_grid(cone, x)
        if cone.semigroup_op == MAX and not x.nonnegative:
            raise DomainError("max-cone functions must be non-negative")
    elif isinstance(x, StepFunction):
        if cone.scaling_kind != TIME:
            raise ContractViolation("step functions belong to the time-stable cone")
        _same_grid(cone, x)


def add(cone: ConeDescriptor, x: ConeElement, y: ConeElement) -> ConeElement:
    """Semigroup operation of ``cone``."""
    check_member(cone, x)
    check_member(cone, y)
    if isinstance(x, Vector):
        return Vector._trusted(x.coords + y.coords)
    if isinstance(x, GridFunction):
        return GridFunction._trusted(cone.grid, np.maximum(x.values, y.values))
    if isinstance(x, StepFunction):
        if not y.breaks.size:
            return x
        if not x.breaks.size:
            return y
        return StepFunction._trusted(
            cone.grid, *_jumps_to_levels(np.concatenate([x.breaks, y.breaks]), np.concatenate([x.jumps, y.jumps]))
        )
    if not y.weights.size:
        return x
    if not x.weights.size:
        return y
    return AtomicMeasure._trusted(np.concatenate([x.locations, y.locations]), np.concatenate([x.weights, y.weights]))


def _check_positive(t) -> float:
    try:
        t = float(t)
    except (TypeError, ValueError):
        raise DomainError(f"scaling factor must be a real number, got {t!r}") from None
    if not math.isfinite(t) or t <= 0.0:
        raise DomainError(f"scaling factor must be positive and finite, got {t}")
    return t


def scale(cone: ConeDescriptor, t: float, x: ConeElement) -> ConeElement:
    """The action ``t x`` of the positive reals on ``cone``."""
    t = _check_positive(t)
    check_member(cone, x)
    if cone.scaling_kind == OPERATOR:
        return Vector._trusted(cone.operator_power(t) @ x.coords)
    if isinstance(x, Vector):
        return Vector._trusted(t * x.coords)
    if isinstance(x, GridFunction):
        return GridFunction._trusted(cone.grid, t * x.values)
    if isinstance(x, StepFunction):
        # (t x)(s) = x(t s): a jump of x at b moves to b / t
        b = x.breaks / t
        if b.size and not (b[0] > 0.0 and b[-1] < math.inf):
            return StepFunction(cone.grid, b, x.levels)  # raises on underflow or overflow
        return StepFunction._trusted(cone.grid, b, x.levels)
    w = t * x.weights
    if w.size and not w.max() < math.inf:
        return AtomicMeasure(x.locations, w)  # raises on overflow
    return AtomicMeasure._trusted(x.locations, w)


def involve(cone: ConeDescriptor, x: ConeElement) -> ConeElement:
    check_member(cone, x)
    if cone.involution_kind == IDENTITY:
        return x
    if isinstance(x, Vector):
        return Vector._trusted(-x.coords)
    if isinstance(x, StepFunction):
        return StepFunction._trusted(cone.grid, x.breaks, -x.levels)
    raise ContractViolation(f"negation is not defined on {type(x).__name__}")


def relative_difference(cone: ConeDescriptor, x: ConeElement, y: ConeElement) -> float:
    """Max-norm distance of ``x`` and ``y`` relative to their size.

    Step functions are compared on the union of their breaks (their exact
    sup-distance); measures are compared after merging atoms.
    """
    check_member(cone, x)
    check_member(cone, y)
    if isinstance(x, AtomicMeasure):
        wx, wy = _merged_weights(x, y)
        size = max(wx.max(initial=0.0), wy.max(initial=0.0))
        diff = np.abs(wx - wy).max(initial=0.0)
    elif isinstance(x, StepFunction):
        size = max(np.abs(x.levels).max(initial=0.0), np.abs(y.levels).max(initial=0.0))
        if size == 0.0:
            return 0.0
        if x.breaks.size == y.breaks.size:
            # same shape: breaks compared relatively, levels relative to size
            rb = np.abs(x.breaks - y.breaks) / np.maximum(x.breaks, y.breaks)
            rl = np.abs(x.levels - y.levels) / size
            return float(max(rb.max(), rl.max()))
        pts = np.union1d(x.breaks, y.breaks)
        diff = np.abs(x.at(pts) - y.at(pts)).max()
    else:
        px, py = x.payload, y.payload
        size = np.abs(np.concatenate((px, py))).max(initial=0.0)
        diff = np.abs(px - py).max(initial=0.0)
    if size == 0.0:
        return float(diff)
    return float(diff / size)


def _merged_weights(x: AtomicMeasure, y: AtomicMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Weights of ``x`` and ``y`` on the union of their atom locations, atoms merged."""
    locs = np.concatenate((x.locations, y.locations))
    if locs.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    if locs.shape[1] == 1:
        # inverse of np.unique on one column, without its bookkeeping
        v = locs[:, 0]
        order = v.argsort(kind="stable")
        sv = v[order]
        inv = np.empty(v.size, dtype=np.intp)
        inv[order] = np.concatenate(([0], (sv[1:] != sv[:-1]).cumsum()))
    else:
        _, inv = np.unique(locs, axis=0, return_inverse=True)
    inv = inv.ravel()
    m = int(inv.max()) + 1
    nx = x.weights.size
    return np.bincount(inv[:nx], x.weights, m), np.bincount(inv[nx:], y.weights, m)


def elements_close(cone: ConeDescriptor, x: ConeElement, y: ConeElement, rtol: float = 1e-12) -> bool:
    return relative_difference(cone, x, y) <= rtol


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------


class Character:
    """Bounded semicharacter ``chi: K -> closed unit disk``.

    ``evaluate`` works on a 2-D array whose rows are element payloads
    (coordinates or grid values), which keeps Monte Carlo loops vectorised.
    """

    variant: ClassVar[str]

    def __call__(self, x: ConeElement) -> complex:
        raise NotImplementedError

    def evaluate(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def deficit(self, rows: np.ndarray) -> np.ndarray:
        """``1 - Re chi`` on payload rows, free of cancellation near ``chi = 1``."""
        return 1.0 - np.real(self.evaluate(rows))

    def __mul__(self, other: "Character") -> "Character":
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FourierCharacter(Character):
    """``chi(x) = exp(i <u, x>)`` on coordinates or on grid values."""

    u: np.ndarray
    variant: ClassVar[str] = "fourier"

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen_array(np.atleast_1d(self.u), 1, "u"))

    def _check(self, x):
        if isinstance(x, AtomicMeasure):
            raise ContractViolation("fourier characters do not act on measures")
        if x.payload.shape != self.u.shape:
            raise ContractViolation("frequency and element dimensions differ")

    def __call__(self, x: ConeElement) -> complex:
        self._check(x)
        return complex(np.exp(1j * float(self.u @ x.payload)))

    def evaluate(self, rows: np.ndarray) -> np.ndarray:
        return np.exp(1j * (np.asarray(rows, dtype=float) @ self.u))

    def deficit(self, rows: np.ndarray) -> np.ndarray:
        return 2.0 * np.sin(0.5 * (np.asarray(rows, dtype=float) @ self.u)) ** 2

    def __mul__(self, other):
        if not isinstance(other, FourierCharacter):
            return NotImplemented
        return FourierCharacter(self.u + other.u)

    def __repr__(self):
        return f"FourierCharacter({self.u.tolist()})"


@dataclass(frozen=True, eq=False)
class IndicatorCharacter(Character):
    """``chi(x) = prod_j 1{x(s_j) < a_j}`` for grid indices ``s_j``, thresholds ``a_j > 0``."""

    indices: tuple[int, ...]
    thresholds: tuple[float, ...]
    variant: ClassVar[str] = "indicator"

    def __post_init__(self):
        idx = tuple(int(i) for i in np.atleast_1d(self.indices))
        thr = tuple(float(a) for a in np.atleast_1d(self.thresholds))
        if len(idx) != len(thr):
            raise ContractViolation("one threshold per grid index")
        if any(not (a > 0 and math.isfinite(a)) for a in thr):
            raise DomainError("indicator thresholds must be positive and finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "thresholds", thr)

    def __call__(self, x: ConeElement) -> complex:
        if not isinstance(x, (GridFunction, StepFunction)):
            raise ContractViolation("indicator characters act on grid functions")
        v = x.values
        if max(self.indices, default=-1) >= v.size:
            raise ContractViolation("grid index out of range")
        return complex(all(v[i] < a for i, a in zip(self.indices, self.thresholds)))

    def evaluate(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        ok = np.ones(rows.shape[0], dtype=bool)
        for i, a in zip(self.indices, self.thresholds):
            ok &= rows[:, i] < a
        return ok.astype(complex)

    def __mul__(self, other):
        if not isinstance(other, IndicatorCharacter):
            return NotImplemented
        return IndicatorCharacter(self.indices + other.indices, self.thresholds + other.thresholds)

    def __repr__(self):
        return f"IndicatorCharacter({list(self.indices)}, {list(self.thresholds)})"


@dataclass(frozen=True)
class Bump:
    """Tent function ``height * max(0, 1 - |loc - center| / radius)``."""

    center: tuple[float, ...]
    radius: float
    height: float

    def __call__(self, locations: np.ndarray) -> np.ndarray:
        diff = np.asarray(locations, dtype=float) - np.asarray(self.center)
        d = np.sqrt(np.einsum("...i,...i->...", diff, diff))
        return self.height * np.clip(1.0 - d / self.radius, 0.0, None)


@dataclass(frozen=True, eq=False)
class LaplaceCharacter(Character):
    """``chi(mu) = exp(-int u dmu)`` for ``u >= 0``.

    On measures ``u`` is a sum of :class:`Bump` tents; on the non-negative
    orthant of R^d (or grid values) ``u`` is a weight vector.
    """

    weights: np.ndarray | None = None
    bumps: tuple[Bump, ...] = field(default=())
    variant: ClassVar[str] = "laplace"

    def __post_init__(self):
        if self.weights is not None:
            w = _frozen_array(np.atleast_1d(self.weights), 1, "weights")
            if np.any(w < 0):
                raise DomainError("laplace weights must be non-negative")
            object.__setattr__(self, "weights", w)
        bumps = tuple(self.bumps)
        if any(b.height < 0 or b.radius <= 0 for b in bumps):
            raise DomainError("bumps need non-negative height and positive radius")
        object.__setattr__(self, "bumps", bumps)

    def integral(self, x: ConeElement) -> float:
        if isinstance(x, AtomicMeasure):
            if not self.bumps and self.weights is not None:
                raise ContractViolation("measure characters need bump functions")
            u = sum((b(x.locations) for b in self.bumps), np.zeros(x.weights.size))
            return float(u @ x.weights)
        if self.weights is None or isinstance(x, GridFunction):
            raise ContractViolation("laplace characters act on measures or orthant vectors")
        if x.payload.shape != self.weights.shape:
            raise ContractViolation("weight and element dimensions differ")
        if np.any(x.payload < 0):
            raise DomainError("laplace characters are bounded only on the non-negative orthant")
        return float(self.weights @ x.payload)

    def __call__(self, x: ConeElement) -> complex:
        return complex(math.exp(-self.integral(x)))

    def evaluate(self, rows: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise ContractViolation("row evaluation needs a weight vector")
        rows = np.asarray(rows, dtype=float)
        if np.any(rows < 0):
            raise DomainError("laplace characters are bounded only on the non-negative orthant")
        return np.exp(-(rows @ self.weights)).astype(complex)

    def deficit(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if np.any(rows < 0):
            raise DomainError("laplace characters are bounded only on the non-negative orthant")
        return -np.expm1(-(rows @ self.weights))

    def __mul__(self, other):
        if not isinstance(other, LaplaceCharacter):
            return NotImplemented
        w = self.weights if other.weights is None else other.weights
        if self.weights is not None and other.weights is not None:
            w = self.weights + other.weights
        return LaplaceCharacter(w, self.bumps + other.bumps)

    def __repr__(self):
        w = None if self.weights is None else self.weights.tolist()
        return f"LaplaceCharacter(weights={w}, bumps={len(self.bumps)})"


def char_eval(chi: Character, x: ConeElement) -> complex:
    """Value of ``chi`` at ``x``; raises :class:`ContractViolation` on a variant mismatch."""
    return chi(x)


def evaluate_many(chi: Character, samples: Sequence[ConeElement] | np.ndarray) -> np.ndarray:
    """Evaluate ``chi`` on a batch given either as payload rows or as elements."""
    if isinstance(samples, np.ndarray):
        return chi.evaluate(samples)
    if samples and not isinstance(samples[0], AtomicMeasure) and not isinstance(chi, LaplaceCharacter):
        return chi.evaluate(np.array([x.payload for x in samples]))
    if samples and isinstance(chi, LaplaceCharacter) and chi.bumps and all(isinstance(x, AtomicMeasure) for x in samples):
        # all atoms at once, then summed per measure
        locs = np.vstack([x.locations for x in samples])
        w = np.concatenate([x.weights for x in samples])
        owner = np.repeat(np.arange(len(samples)), [x.weights.size for x in samples])
        u = sum((b(locs) for b in chi.bumps), np.zeros(w.size))
        return np.exp(-np.bincount(owner, u * w, len(samples))).astype(complex)
    return np.array([chi(x) for x in samples], dtype=complex)
