"""Factory for the five concrete cones and their default wiring.

Each cone kind comes with a descriptor, a transversal, a default set of
probe characters (used by the statistical checks) and a default spectral
sampler.

========================  ==============  ===============  ==============  ==========================
kind                      element         operation        scaling         transversal
========================  ==============  ===============  ==============  ==========================
``euclidean-sum``         R^d             vector sum       ``t x``         Euclidean unit sphere
``operator``              R^d             vector sum       ``t^A x``       fourier threshold crossings
``max-grid``              grid values     pointwise max    ``t x``         sup-norm unit sphere
``time-stable``           step functions  sum              ``x(t .)``      fourier threshold crossings
``atomic-measure``        finite measure  measure sum      weights ``t``   unit total mass
========================  ==============  ===============  ==============  ==========================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .core import (
    EUCLIDEAN,
    GRID,
    IDENTITY,
    MAX,
    MEASURE,
    MULTIPLICATIVE,
    NEGATION,
    OPERATOR,
    SUM,
    TIME,
    WEIGHT,
    Bump,
    Character,
    ConeDescriptor,
    FourierCharacter,
    IndicatorCharacter,
    LaplaceCharacter,
)
from .errors import ContractViolation, DomainError
from .polar import CharacterTransversal, NormTransversal
from .spectral import AtomMark, ConstantMark, JumpMark, RademacherMark, SphereMark

KINDS = ("euclidean-sum", "operator", "max-grid", "time-stable", "atomic-measure")

N_PROBES = 16

# canonical index and a comfortable default for each kind
DEFAULT_ALPHA = {
    "euclidean-sum": 0.7,
    "operator": 0.7,
    "max-grid": 1.0,
    "time-stable": 1.0,
    "atomic-measure": 0.5,
}

_PROBE_VARIANTS = {
    "euclidean-sum": (FourierCharacter, LaplaceCharacter),
    "operator": (FourierCharacter,),
    "max-grid": (IndicatorCharacter,),
    "time-stable": (FourierCharacter, IndicatorCharacter),
    "atomic-measure": (LaplaceCharacter,),
}


@dataclass(frozen=True, eq=False)
class ConeSpec:
    """Declarative description of a cone.

    ``dim`` is the vector dimension (euclidean, operator) or the location
    dimension of atoms (atomic-measure); ``grid`` is required for the two
    function cones; ``matrix`` for the operator cone. ``probes`` overrides
    the default probe characters.
    """

    kind: str
    dim: int | None = None
    grid: Any = None
    matrix: Any = None
    probes: tuple[Character, ...] | None = None
    norm_ord: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown cone kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.kind in ("max-grid", "time-stable"):
            if self.grid is None or np.size(self.grid) == 0:
                raise ContractViolation(f"the {self.kind} cone needs a non-empty grid")
        if self.kind == "operator":
            if self.matrix is None:
                raise ContractViolation("the operator cone needs a matrix")
            m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
            object.__setattr__(self, "matrix", m)
            object.__setattr__(self, "dim", m.shape[0])
        if self.kind in ("euclidean-sum", "atomic-measure") and self.dim is None:
            object.__setattr__(self, "dim", 1)
        if self.dim is not None and int(self.dim) < 1:
            raise ContractViolation("dimension must be at least 1")
        if self.probes is not None:
            probes = tuple(self.probes)
            allowed = _PROBE_VARIANTS[self.kind]
            bad = [p for p in probes if not isinstance(p, allowed)]
            if bad:
                raise ContractViolation(f"probe {bad[0]!r} does not act on the {self.kind} cone")
            object.__setattr__(self, "probes", probes)

    @classmethod
    def from_dict(cls, d: dict) -> "ConeSpec":
        """Build from plain config values (``kind``, ``dim``, ``grid``, ``matrix``)."""
        d = dict(d)
        grid = d.get("grid")
        if isinstance(grid, dict):
            grid = np.linspace(grid["start"], grid["stop"], int(grid["num"]))
        return cls(
            kind=d["kind"],
            dim=d.get("dim"),
            grid=grid,
            matrix=d.get("matrix"),
            norm_ord=float(d.get("norm_ord", 2.0)),
        )


def _frequency(k: int, dim: int) -> float:
    # rational magnitudes so probes do not share a period: 1/4, ..., 2 cycling
    # through directions, or 1/8, ..., 2 on the line where there is one direction
    if dim == 1:
        return float(Fraction(k + 1, 8))
    return float(Fraction(k % 8 + 1, 4))


def _fourier_probes(dim: int) -> tuple[FourierCharacter, ...]:
    probes = []
    for k in range(N_PROBES):
        u = np.zeros(dim)
        i = k % (dim + 1) if dim > 1 else 0
        if i < dim:
            u[i] = 1.0
        else:
            u[:] = 1.0 / dim
        probes.append(FourierCharacter(_frequency(k, dim) * u))
    return tuple(probes)


def _indicator_probes(grid: np.ndarray) -> tuple[IndicatorCharacter, ...]:
    n = grid.size
    levels = (0.5, 1.0, 2.0, 4.0)
    probes = []
    for k in range(N_PROBES):
        a = levels[k % 4]
        i = (k // 4) % n
        if k >= 8 and n > 1:
            j = (i + n // 2) % n
            probes.append(IndicatorCharacter((i, j), (a, 2 * a)))
        else:
            probes.append(IndicatorCharacter((i,), (a,)))
    return tuple(probes)


def _time_probes(grid: np.ndarray) -> tuple[FourierCharacter, ...]:
    n = grid.size
    points = [k for k in range(n) if grid[k] > 0] or [n - 1]
    probes = []
    for k in range(N_PROBES):
        u = np.zeros(n)
        u[points[k % len(points)]] = _frequency(k, len(points))
        probes.append(FourierCharacter(u))
    return tuple(probes)


def _measure_probes(dim: int) -> tuple[LaplaceCharacter, ...]:
    probes = []
    for k in range(N_PROBES):
        center = np.zeros(dim)
        center[0] = -1.5 + (k % 4)
        height = 0.25 * (k // 4 + 1)
        probes.append(LaplaceCharacter(bumps=(Bump(tuple(center), 1.0, height),)))
    return tuple(probes)


def make_cone(spec: ConeSpec):
    """Return ``(descriptor, transversal, probes)`` for ``spec``."""
    kind = spec.kind
    if kind == "euclidean-sum":
        cone = ConeDescriptor(EUCLIDEAN, SUM, MULTIPLICATIVE, NEGATION, dim=int(spec.dim), name=kind)
        trans = NormTransversal(spec.norm_ord)
        probes = _fourier_probes(cone.dim)
    elif kind == "operator":
        cone = ConeDescriptor(EUCLIDEAN, SUM, OPERATOR, NEGATION, matrix=spec.matrix, name=kind)
        units = [FourierCharacter(np.eye(cone.dim)[i]) for i in range(cone.dim)]
        trans = CharacterTransversal(tuple(units))
        probes = _fourier_probes(cone.dim)
    elif kind == "max-grid":
        cone = ConeDescriptor(GRID, MAX, MULTIPLICATIVE, IDENTITY, grid=np.asarray(spec.grid, dtype=float), name=kind)
        trans = NormTransversal(math.inf)
        probes = _indicator_probes(cone.grid)
    elif kind == "time-stable":
        cone = ConeDescriptor(GRID, SUM, TIME, NEGATION, grid=np.asarray(spec.grid, dtype=float), name=kind)
        if cone.grid[-1] <= 0:
            raise ContractViolation("the time-stable cone needs a grid reaching beyond 0")
        last = cone.grid.size - 1
        u1 = np.zeros(cone.grid.size)
        u1[last] = 1.0
        # levels cannot be multiples of 2 pi for both frequencies at once
        trans = CharacterTransversal((FourierCharacter(u1), FourierCharacter(math.sqrt(2.0) * u1)))
        probes = _time_probes(cone.grid)
    else:
        cone = ConeDescriptor(MEASURE, SUM, WEIGHT, IDENTITY, dim=int(spec.dim), name=kind)
        trans = NormTransversal(1.0)
        probes = _measure_probes(cone.dim)
    if spec.probes is not None:
        probes = spec.probes
    return cone, trans, probes


def default_spectral(spec: ConeSpec, cone: ConeDescriptor):
    """A reasonable spectral sampler for each kind."""
    kind = spec.kind
    if kind == "euclidean-sum":
        return RademacherMark(np.ones(1)) if cone.dim == 1 else SphereMark(cone.dim)
    if kind == "operator":
        return SphereMark(cone.dim)
    if kind == "max-grid":
        return ConstantMark(np.ones(cone.grid.size))
    if kind == "time-stable":
        return JumpMark(cone.grid)
    return AtomMark(n_atoms=3, loc_dim=cone.dim)


def spectral_from_name(name: str, spec: ConeSpec, cone: ConeDescriptor):
    """Named samplers for the command line."""
    d = cone.dim or 1
    size = None if cone.grid is None else cone.grid.size
    table = {
        "default": lambda: default_spectral(spec, cone),
        "rademacher": lambda: RademacherMark(np.ones(size or d)),
        "constant": lambda: ConstantMark(np.ones(size or d)),
        "sphere": lambda: SphereMark(d),
        "jump": lambda: JumpMark(cone.grid),
        "atoms": lambda: AtomMark(loc_dim=d),
    }
    if name not in table:
        raise DomainError(f"unknown spectral sampler {name!r}; choose from {', '.join(table)}")
    return table[name]()


__all__ = [
    "KINDS",
    "DEFAULT_ALPHA",
    "ConeSpec",
    "make_cone",
    "default_spectral",
    "spectral_from_name",
]
