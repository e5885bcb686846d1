"""Spectral (angular) samplers: i.i.d. marks ``eps_i`` with law ``pi``.

A sampler returns payload rows (coordinates or grid values) as an
``(n, m)`` array, or a list of :class:`AtomicMeasure` for the measure cone.
Declared moments feed the truncation-bias bounds; they are never estimated
online. ``||.||`` below is the cone's natural norm: Euclidean for vectors,
sup for grid and step functions, total mass for measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import TIME, AtomicMeasure, ConeDescriptor, ConeElement, as_element, check_member
from .errors import DomainError

MAX_REDRAWS = 1000


class SpectralSampler:
    """Base class; subclasses implement :meth:`draw`.

    Attributes
    ----------
    symmetric : bool
        Law invariant under the cone involution.
    deterministic : bool
        Every draw is the same element (point mass ``pi``).
    mean_norm, second_moment : float or None
        Declared ``E||eps||`` and ``E||eps||^2``.
    norm_bound : float or None
        Almost-sure bound ``||eps|| <= M``.
    lower_bound : float or None
        Almost-sure bound ``eps(s) >= m`` for every grid point (max cone).
    min_break : float or None
        Almost-sure lower bound on the first jump time (time-stable cone).
    post_scale : float
        Constant ``c`` applied to the aggregate; 1 unless marks were
        normalised onto a transversal.
    """

    symmetric: bool = False
    deterministic: bool = False
    mean_norm: float | None = None
    second_moment: float | None = None
    norm_bound: float | None = None
    lower_bound: float | None = None
    min_break: float | None = None
    post_scale: float = 1.0

    def draw(self, rng: np.random.Generator, n: int):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int):
        """Draw ``n`` marks, redrawing neutral ones. Returns ``(marks, n_redrawn)``."""
        marks = self.draw(rng, n)
        redrawn = 0
        for _ in range(MAX_REDRAWS):
            bad = _neutral_mask(marks)
            if not bad.any():
                return marks, redrawn
            k = int(bad.sum())
            redrawn += k
            fresh = self.draw(rng, k)
            if isinstance(marks, np.ndarray):
                marks[bad] = fresh
            else:
                it = iter(fresh)
                marks = [next(it) if b else m for m, b in zip(marks, bad)]
        raise DomainError("spectral sampler keeps producing the neutral element")

    def elements(self, cone: ConeDescriptor, rng: np.random.Generator, n: int) -> list[ConeElement]:
        marks, _ = self.sample(rng, n)
        if isinstance(marks, np.ndarray):
            return [as_element(cone, row) for row in marks]
        for m in marks:
            check_member(cone, m)
        return list(marks)


def _neutral_mask(marks) -> np.ndarray:
    if isinstance(marks, np.ndarray):
        return ~np.any(marks != 0.0, axis=1)
    return np.array([m.is_neutral for m in marks], dtype=bool)


@dataclass
class ConstantMark(SpectralSampler):
    """Point mass at one element (``eps == value``)."""

    value: np.ndarray | AtomicMeasure
    deterministic: bool = field(default=True, init=False)

    def __post_init__(self):
        if isinstance(self.value, AtomicMeasure):
            norm = self.value.total_mass
        else:
            self.value = np.asarray(self.value, dtype=float).ravel()
            norm = _row_norm(self.value)
            if np.all(self.value >= 0):
                self.lower_bound = float(self.value.min())
        self.mean_norm = norm
        self.second_moment = norm**2
        self.norm_bound = norm

    def draw(self, rng, n):
        if isinstance(self.value, AtomicMeasure):
            return [self.value] * n
        return np.tile(self.value, (n, 1))


def _row_norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


@dataclass
class RademacherMark(SpectralSampler):
    """``eps = +value`` or ``-value`` with probability 1/2 each."""

    value: np.ndarray
    symmetric: bool = field(default=True, init=False)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=float).ravel()
        norm = _row_norm(self.value)
        self.mean_norm = norm
        self.second_moment = norm**2
        self.norm_bound = norm

    def draw(self, rng, n):
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return signs[:, None] * self.value[None, :]


@dataclass
class SphereMark(SpectralSampler):
    """Uniform on the Euclidean unit sphere of R^d."""

    dim: int
    symmetric: bool = field(default=True, init=False)

    def __post_init__(self):
        self.mean_norm = self.second_moment = self.norm_bound = 1.0

    def draw(self, rng, n):
        z = rng.standard_normal((n, self.dim))
        return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass
class OrthantMark(SpectralSampler):
    """Uniform on the part of the unit sphere in the non-negative orthant."""

    dim: int

    def __post_init__(self):
        self.mean_norm = self.second_moment = self.norm_bound = 1.0

    def draw(self, rng, n):
        z = np.abs(rng.standard_normal((n, self.dim)))
        return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass
class GaussianMark(SpectralSampler):
    """Standard normal vectors in R^d (unbounded, symmetric)."""

    dim: int
    symmetric: bool = field(default=True, init=False)

    def __post_init__(self):
        d = self.dim
        self.mean_norm = math.sqrt(2.0) * math.exp(math.lgamma((d + 1) / 2) - math.lgamma(d / 2))
        self.second_moment = float(d)

    def draw(self, rng, n):
        return rng.standard_normal((n, self.dim))


@dataclass
class UniformGridMark(SpectralSampler):
    """Independent ``Uniform[low, high]`` values at each grid point (max cone)."""

    size: int
    low: float = 0.5
    high: float = 1.5

    def __post_init__(self):
        if not 0.0 <= self.low < self.high:
            raise DomainError("need 0 <= low < high")
        self.lower_bound = self.low
        self.norm_bound = self.high
        # E max of `size` uniforms
        m = self.low + (self.high - self.low) * self.size / (self.size + 1)
        self.mean_norm = m
        self.second_moment = self.high**2

    def draw(self, rng, n):
        return rng.uniform(self.low, self.high, size=(n, self.size))


@dataclass
class JumpMark(SpectralSampler):
    """Random single-jump step function ``R * 1[J, inf)`` sampled on a grid.

    ``J`` is uniform over the grid points after the first one and ``R`` is
    ``+-1`` (symmetric) or ``1``.
    """

    grid: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.size < 2:
            raise DomainError("jump marks need at least two grid points")
        self.mean_norm = self.second_moment = self.norm_bound = 1.0
        self.min_break = float(self.grid[1])

    def draw(self, rng, n):
        k = self.grid.size
        where = rng.integers(1, k, size=n)
        rows = (np.arange(k)[None, :] >= where[:, None]).astype(float)
        if self.symmetric:
            rows *= np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
        return rows


@dataclass
class AtomMark(SpectralSampler):
    """Random measure with ``n_atoms`` atoms: Gaussian locations, Exp(1) weights."""

    n_atoms: int = 3
    loc_dim: int = 1

    def __post_init__(self):
        self.mean_norm = float(self.n_atoms)
        self.second_moment = float(self.n_atoms * (self.n_atoms + 1))

    def draw(self, rng, n):
        out = []
        for _ in range(n):
            loc = rng.standard_normal((self.n_atoms, self.loc_dim))
            w = rng.standard_exponential(self.n_atoms)
            out.append(AtomicMeasure(loc, w))
        return out


@dataclass
class CallableMark(SpectralSampler):
    """Wrap a user function ``draw(rng, n)``; moments must be declared explicitly."""

    fn: Callable[[np.random.Generator, int], object]
    symmetric: bool = False
    mean_norm: float | None = None
    second_moment: float | None = None
    norm_bound: float | None = None
    lower_bound: float | None = None

    def draw(self, rng, n):
        return self.fn(rng, n)


@dataclass
class NormalizedMark(SpectralSampler):
    """Marks moved onto a transversal, ``eps / tau(eps)``, with a compensating constant.

    The point process ``{Gamma_i^(-1/alpha) eps_i}`` equals
    ``{c Gamma_i^(-1/alpha) theta_i}`` in law with ``theta = eps / tau(eps)`` and
    ``c = (E tau(eps)^alpha)^(1/alpha)`` when the radial part ``tau(eps)`` is
    independent of the angular part; otherwise the angular law would also
    need tilting by ``tau^alpha``, which this wrapper does not do.
    """

    inner: SpectralSampler
    cone: ConeDescriptor
    transversal: object
    alpha: float
    calibration_draws: int = 10_000
    seed: int = 0

    def __post_init__(self):
        from .polar import decompose, tau

        rng = np.random.default_rng(self.seed)
        taus = np.array([tau(self.transversal, self.cone, x)
                         for x in self.inner.elements(self.cone, rng, self.calibration_draws)])
        self.post_scale = float(np.mean(taus**self.alpha) ** (1.0 / self.alpha))
        self.symmetric = self.inner.symmetric
        self._decompose = decompose

    def draw(self, rng, n):
        raw = self.inner.draw(rng, n)
        if isinstance(raw, np.ndarray):
            elems = [as_element(self.cone, row) for row in raw]
            if self.cone.scaling_kind == TIME:
                # angular parts jump between grid points, so keep them exact
                return [x if x.is_neutral else self._decompose(self.transversal, self.cone, x).angular for x in elems]
            return np.array([self._decompose(self.transversal, self.cone, x).angular.payload
                             if not x.is_neutral else np.zeros(raw.shape[1]) for x in elems])
        return [self._decompose(self.transversal, self.cone, x).angular for x in raw]


def normalize_to_transversal(spectral, cone, transversal, alpha, calibration_draws=10_000, seed=0):
    """Return a :class:`NormalizedMark`; its ``post_scale`` is the induced constant ``c``."""
    return NormalizedMark(spectral, cone, transversal, alpha, calibration_draws, seed)


__all__ = [
    "SpectralSampler",
    "ConstantMark",
    "RademacherMark",
    "SphereMark",
    "OrthantMark",
    "GaussianMark",
    "UniformGridMark",
    "JumpMark",
    "AtomMark",
    "CallableMark",
    "NormalizedMark",
    "normalize_to_transversal",
]
