"""Truncated LePage series and the Laplace exponent of their limits.

The strictly alpha-stable element is the (uncompensated) series
``xi = sum_i Gamma_i^(-1/alpha) eps_i`` over the points ``Gamma_1 < Gamma_2 < ...``
of a unit-rate Poisson process with i.i.d. marks ``eps_i``. Truncating at
``Gamma_i <= r`` gives ``xi^(r)``, whose characters satisfy

    E chi(xi^(r)) = exp(-psi_r(chi)),
    psi_r(chi) = E int_{rho}^inf (1 - chi(t eps)) alpha t^-(alpha+1) dt,

with ``rho = r^(-1/alpha)`` (the radius below which no point survives the
truncation). :func:`truncated_laplace_exponent` evaluates ``psi_r`` by
quadrature, independently of the sampler, so the two can be cross-checked.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    MAX,
    MULTIPLICATIVE,
    OPERATOR,
    TIME,
    WEIGHT,
    AtomicMeasure,
    Character,
    ConeDescriptor,
    ConeElement,
    FourierCharacter,
    GridFunction,
    IndicatorCharacter,
    LaplaceCharacter,
    StepFunction,
    Vector,
    add,
    as_element,
    expm,
    neutral,
    scale,
)
from .errors import AdmissibilityError, DomainError
from .polar import RadialLaw
from .quadrature import adaptive_simpson, log_integrate


class SlowDecayWarning(UserWarning):
    """The truncation bias decays too slowly in ``r`` to be useful."""


class NonCanonicalWarning(UserWarning):
    """A configuration outside the canonical setting of its cone."""


# ---------------------------------------------------------------------------
# Poisson points and admissibility
# ---------------------------------------------------------------------------


def gamma_sequence(rng: np.random.Generator, r: float) -> np.ndarray:
    """Points of a unit-rate Poisson process on ``(0, r]``, increasing.

    Cumulative sums of standard exponentials, drawn in chunks sized so that a
    single chunk almost always suffices.
    """
    r = float(r)
    if not (r > 0 and math.isfinite(r)):
        raise DomainError(f"truncation level must be positive and finite, got {r}")
    chunk = int(r + 5.0 * math.sqrt(r) + 10)
    parts = []
    last = 0.0
    while True:
        g = last + np.cumsum(rng.standard_exponential(chunk))
        k = int(np.searchsorted(g, r, side="right"))
        parts.append(g[:k])
        if k < chunk:
            break
        last = float(g[-1])
    return np.concatenate(parts)


def check_admissible(cone: ConeDescriptor, alpha: float, symmetric: bool) -> None:
    """Refuse configurations whose uncompensated series does not converge."""
    lo, hi = cone.admissible_alpha(symmetric)
    if not lo < alpha < hi:
        sym = "symmetric" if symmetric else "non-symmetric"
        raise AdmissibilityError(
            f"admissibility gate: alpha={alpha} with {sym} marks needs alpha in ({lo}, {hi}) "
            f"on the {cone.name or cone.semigroup_op} cone; compensated series are not supported"
        )
    if cone.scaling_kind == TIME and alpha != 1.0:
        warnings.warn(
            f"time-stable cones are canonically 1-stable; alpha={alpha} is exploratory",
            NonCanonicalWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# bias bounds
# ---------------------------------------------------------------------------


def _tail_power_integral(alpha: float, r: float, p: float) -> float:
    """``int_r^inf t^(-p / alpha) dt`` for ``p > alpha``."""
    e = p / alpha - 1.0
    return r**-e / e


def truncation_bias_bound(
    cone: ConeDescriptor,
    law: RadialLaw,
    spectral,
    r: float,
    value: ConeElement | np.ndarray | None = None,
) -> float | None:
    """Bound on the effect of the discarded tail ``xi - xi^(r)``; None if not available.

    Sum cones: a bound on ``E||tail||``, by ``E||eps|| int_r^inf t^(-1/alpha) dt``
    (``alpha < 1``) or, for symmetric marks, by the root of
    ``E||eps||^2 int_r^inf t^(-2/alpha) dt``. Max cones: a bound on the
    probability that the tail raises the maximum, conditional on the sample
    ``value`` when it is given. Time-stable cones: the expected number of
    tail terms that jump inside the grid times the mark bound.
    """
    a = law.alpha
    r = float(r)
    if cone.semigroup_op == MAX:
        m_hi = spectral.norm_bound
        if m_hi is None:
            return None
        if value is not None:
            payload = value.payload if isinstance(value, ConeElement) else np.asarray(value)
            low = float(payload.min())
            if low <= 0:
                return 1.0
            # tail points beyond r that can exceed the current minimum value
            return float(min(1.0, max(0.0, (m_hi / low) ** a - r)))
        if spectral.lower_bound is None or spectral.lower_bound <= 0:
            return None
        return float(math.exp(-r * (spectral.lower_bound / m_hi) ** a))
    if cone.scaling_kind == TIME:
        if spectral.min_break is None or spectral.norm_bound is None:
            return None
        window = (cone.grid[-1] / spectral.min_break) ** a
        return float(spectral.norm_bound * max(0.0, window - r))
    if cone.scaling_kind == OPERATOR:
        return None
    bounds = []
    if a < 1 and spectral.mean_norm is not None:
        bounds.append(spectral.mean_norm * _tail_power_integral(a, r, 1.0))
        if (1 - a) / a < 0.1:
            warnings.warn(
                f"truncation bias decays like r^-{(1 - a) / a:.3g}; the bound is loose",
                SlowDecayWarning,
                stacklevel=2,
            )
    if spectral.symmetric and a < 2 and spectral.second_moment is not None:
        bounds.append(math.sqrt(spectral.second_moment * _tail_power_integral(a, r, 2.0)))
    return float(min(bounds)) if bounds else None


def ecf_truncation_allowance(
    cone: ConeDescriptor, law: RadialLaw, spectral, chi: Character, r: float
) -> float | None:
    """Bound on ``|E chi(xi) - E chi(xi^(r))|``; None if not available.

    Uses that the tail is independent of ``xi^(r)`` and
    ``|1 - chi(y)| <= min(2, |u.y|)`` (fourier), ``<= int u dy`` (laplace),
    ``<= 1{tail crosses a threshold}`` (indicator).
    """
    a = law.alpha
    r = float(r)
    if cone.scaling_kind == TIME:
        if spectral.min_break is None:
            return None
        window = (cone.grid[-1] / spectral.min_break) ** a
        return float(min(2.0, 2.0 * max(0.0, window - r)))
    if cone.scaling_kind == OPERATOR:
        return None
    if isinstance(chi, IndicatorCharacter):
        m_hi = spectral.norm_bound
        if m_hi is None:
            return None
        return float(min(1.0, max(0.0, (m_hi / min(chi.thresholds)) ** a - r)))
    if isinstance(chi, FourierCharacter):
        u = float(np.linalg.norm(chi.u))
        if spectral.symmetric and a < 2 and spectral.second_moment is not None:
            return float(min(2.0, 0.5 * u * u * spectral.second_moment * _tail_power_integral(a, r, 2.0)))
        if a < 1 and spectral.mean_norm is not None:
            return float(min(2.0, u * spectral.mean_norm * _tail_power_integral(a, r, 1.0)))
        return None
    if isinstance(chi, LaplaceCharacter) and a < 1 and spectral.mean_norm is not None:
        if chi.bumps:
            u = sum(b.height for b in chi.bumps)
        else:
            u = float(np.linalg.norm(chi.weights))
        return float(min(1.0, u * spectral.mean_norm * _tail_power_integral(a, r, 1.0)))
    return None


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SeriesSample:
    """One realization of ``xi^(r)`` with its Poisson points and marks."""

    gammas: np.ndarray
    marks: list
    value: ConeElement
    truncation_r: float
    bias_bound: float | None
    alpha: float
    seed: int | None = None
    stream: int = 0
    n_redrawn: int = 0


@dataclass(eq=False)
class SeriesBatch:
    """Many independent realizations of ``xi^(r)``.

    ``rows`` holds payload rows (coordinates or grid values) when the cone
    has them; ``elements`` holds the exact elements for step functions and
    measures.
    """

    rows: np.ndarray | None
    elements: list | None
    counts: np.ndarray
    bias_bounds: np.ndarray
    alpha: float
    r: float
    seed: int | None
    stream: int
    cone_name: str = ""
    n_redrawn: int = 0

    @property
    def n(self) -> int:
        return int(self.counts.size)

    @property
    def samples(self):
        """What characters are evaluated on: rows if available, else elements."""
        return self.rows if self.rows is not None else self.elements

    def element(self, i: int, cone: ConeDescriptor) -> ConeElement:
        if self.elements is not None:
            return self.elements[i]
        return as_element(cone, self.rows[i])


def _step_from_rows(cone: ConeDescriptor, rows: np.ndarray, times_scale: np.ndarray) -> StepFunction:
    """Sum of step marks given on the grid, mark ``i`` time-scaled by ``times_scale[i]``."""
    grid = cone.grid
    if rows.size and np.any(rows[:, 0] != 0.0):
        raise DomainError("time-stable marks must vanish at the first grid point")
    d = np.diff(rows, axis=1)
    i, k = np.nonzero(d)
    return StepFunction.from_jumps(grid, grid[k + 1] * times_scale[i], d[i, k])


def aggregate(cone: ConeDescriptor, alpha: float, gammas: np.ndarray, marks) -> ConeElement:
    """``sum_i Gamma_i^(-1/alpha) eps_i`` under the cone operation, vectorised."""
    n = len(gammas)
    if n == 0:
        return neutral(cone)
    w = gammas ** (-1.0 / alpha)
    if cone.scaling_kind == OPERATOR:
        rows = np.asarray(marks, dtype=float)
        mats = expm((-np.log(gammas) / alpha)[:, None, None] * cone.matrix)
        return Vector(np.einsum("nij,nj->i", mats, rows))
    if cone.scaling_kind == TIME:
        if isinstance(marks, np.ndarray):
            return _step_from_rows(cone, marks, 1.0 / w)
        times = np.concatenate([m.breaks / wi for m, wi in zip(marks, w)])
        jumps = np.concatenate([m.jumps for m in marks])
        return StepFunction.from_jumps(cone.grid, times, jumps)
    if cone.scaling_kind == WEIGHT:
        locs = np.vstack([m.locations for m in marks])
        weights = np.concatenate([wi * m.weights for m, wi in zip(marks, w)])
        return AtomicMeasure(locs, weights)
    rows = np.asarray(marks, dtype=float)
    if cone.semigroup_op == MAX:
        return GridFunction(cone.grid, (w[:, None] * rows).max(axis=0))
    return Vector(w @ rows)


def series_from_points(cone: ConeDescriptor, alpha: float, gammas: Sequence[float], marks) -> ConeElement:
    """Literal fold ``(((e + g_1 eps_1) + g_2 eps_2) + ...)`` with ``g_i = Gamma_i^(-1/alpha)``."""
    value = neutral(cone)
    for g, m in zip(gammas, marks):
        value = add(cone, value, scale(cone, g ** (-1.0 / alpha), as_element(cone, m)))
    return value


def _post_scale(cone, spectral, value):
    c = spectral.post_scale
    return value if c == 1.0 else scale(cone, c, value)


def _realize(cone, alpha, spectral, r, rng):
    gammas = gamma_sequence(rng, r)
    marks, redrawn = spectral.sample(rng, gammas.size)
    value = _post_scale(cone, spectral, aggregate(cone, alpha, gammas, marks))
    return gammas, marks, value, redrawn


def stream_generator(seed: int, stream: int = 0, batch: int = 0) -> np.random.Generator:
    """Independent generator keyed by ``(seed, stream, batch)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, batch))))


def sample_series(
    cone: ConeDescriptor,
    law: RadialLaw,
    spectral,
    r: float,
    rng: np.random.Generator | int,
    *,
    stream: int = 0,
) -> SeriesSample:
    """One realization of ``xi^(r)``.

    ``rng`` is a generator or an integer seed; a seed gives the same draw as
    the first realization of :func:`sample_batch` with that seed and stream.
    """
    check_admissible(cone, law.alpha, spectral.symmetric)
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = stream_generator(seed, stream, 0)
    gammas, marks, value, redrawn = _realize(cone, law.alpha, spectral, r, rng)
    if isinstance(marks, np.ndarray):
        marks = [as_element(cone, m) for m in marks]
    bias = truncation_bias_bound(cone, law, spectral, r, value if cone.semigroup_op == MAX else None)
    return SeriesSample(gammas, marks, value, float(r), bias, law.alpha, seed, stream, redrawn)


def _run_batch(args):
    cone, alpha, spectral, r, seed, stream, b, size = args
    rng = stream_generator(seed, stream, b)
    values, counts, redrawn = [], np.empty(size, dtype=np.int64), 0
    for i in range(size):
        gammas, _, value, k = _realize(cone, alpha, spectral, r, rng)
        values.append(value)
        counts[i] = gammas.size
        redrawn += k
    return values, counts, redrawn


def sample_batch(
    cone: ConeDescriptor,
    law: RadialLaw,
    spectral,
    r: float,
    n: int,
    seed: int,
    *,
    stream: int = 0,
    batch_size: int = 1024,
    workers: int = 1,
) -> SeriesBatch:
    """``n`` independent realizations of ``xi^(r)``.

    Realizations are generated in batches of ``batch_size``, batch ``b``
    drawing from :func:`stream_generator` ``(seed, stream, b)``. Results do
    not depend on ``workers``.
    """
    check_admissible(cone, law.alpha, spectral.symmetric)
    if n < 0:
        raise DomainError("number of realizations must be non-negative")
    sizes = [min(batch_size, n - s) for s in range(0, n, batch_size)]
    jobs = [(cone, law.alpha, spectral, r, seed, stream, b, k) for b, k in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_batch, jobs))
    else:
        results = [_run_batch(j) for j in jobs]
    values = [v for res in results for v in res[0]]
    counts = np.concatenate([res[1] for res in results]) if results else np.zeros(0, dtype=np.int64)
    redrawn = sum(res[2] for res in results)
    rows = None
    elements = None
    if values and isinstance(values[0], (Vector, GridFunction, StepFunction)):
        rows = np.array([v.payload for v in values])
    if values and isinstance(values[0], (StepFunction, AtomicMeasure)):
        elements = values
    if not values:
        rows = np.zeros((0, len(neutral(cone).payload)))
    if cone.semigroup_op == MAX:
        bias = np.array([truncation_bias_bound(cone, law, spectral, r, row) for row in rows])
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SlowDecayWarning)
            b = truncation_bias_bound(cone, law, spectral, r)
        bias = np.full(len(values), np.nan if b is None else b)
    return SeriesBatch(rows, elements, counts, bias, law.alpha, float(r), seed, stream, cone.name, redrawn)


# ---------------------------------------------------------------------------
# radial profile integrals
# ---------------------------------------------------------------------------

_SMALL = 1e-3
_ABS_TOL = 1e-13


def _power_piece(alpha: float, k: float, lo: float, hi: float) -> float:
    """``alpha int_lo^hi s^(k - alpha - 1) ds``."""
    e = k - alpha
    if lo == 0.0:
        return math.inf if e <= 0 else alpha * hi**e / e
    if abs(e) < 1e-14:
        return alpha * math.log(hi / lo)
    return alpha * (hi**e - lo**e) / e


def _oscillatory_tail(beta: float, p: float) -> complex:
    """``int_p^inf e^(is) s^-(beta+1) ds`` by its asymptotic expansion (``p >> beta``)."""
    total = 0j
    coef = 1.0
    prev = math.inf
    k = 0
    while True:
        term = coef * p ** (-beta - 1.0 - k)
        if term > prev or term < 1e-30:
            break
        total += (-1j) ** k * term
        prev = term
        coef *= beta + 1.0 + k
        k += 1
    return 1j * complex(math.cos(p), math.sin(p)) * total


@dataclass(frozen=True)
class _Profile:
    """Radial profile ``f`` with ``int f(t c) theta_alpha(dt) = |c|^alpha F(rho |c|)``."""

    f: object
    series: tuple  # small-s expansion as (power, coefficient) pairs
    far: float  # beyond this point the tail formula is used
    linear_from: float  # switch from log to linear quadrature here

    def tail(self, alpha: float, p: float) -> float:
        raise NotImplementedError


class _CosProfile(_Profile):
    def tail(self, alpha, p):
        return p**-alpha - alpha * _oscillatory_tail(alpha, p).real


class _SinProfile(_Profile):
    def tail(self, alpha, p):
        return alpha * _oscillatory_tail(alpha, p).imag


class _ExpProfile(_Profile):
    def tail(self, alpha, p):
        # alpha int_p^inf e^-s s^-(alpha+1) ds is below e^-p p^-(alpha+1) alpha
        return p**-alpha - alpha * math.exp(-p) * p ** (-alpha - 1.0)


COS = _CosProfile(
    lambda s: 2.0 * math.sin(0.5 * s) ** 2, ((2, 0.5), (4, -1 / 24), (6, 1 / 720)), 64 * math.pi, 1.0
)
SIN = _SinProfile(math.sin, ((1, 1.0), (3, -1 / 6), (5, 1 / 120)), 64 * math.pi, 1.0)
EXP = _ExpProfile(lambda s: -math.expm1(-s), ((1, 1.0), (2, -0.5), (3, 1 / 6), (4, -1 / 24)), 40.0, 40.0)


def _segment(profile: _Profile, alpha: float, lo: float, hi: float) -> tuple[float, float]:
    """``alpha int_lo^hi f(s) s^-(alpha+1) ds`` and its error estimate; ``hi`` may be inf."""
    total, err = 0.0, 0.0
    if lo < _SMALL:
        top = min(hi, _SMALL)
        for k, c in profile.series:
            total += c * _power_piece(alpha, k, lo, top)
        if not math.isfinite(total):
            return math.inf, 0.0
        # the first omitted term is below top^2 times the last one kept
        k, c = profile.series[-1]
        err += abs(c * _power_piece(alpha, k, lo, top)) * top**2
    g = lambda s: profile.f(s) * alpha * s ** (-alpha - 1.0)
    a, b = max(lo, _SMALL), min(hi, profile.linear_from)
    if a < b:
        res = log_integrate(g, a, b, tol=_ABS_TOL, max_evals=2_000_000)
        total += res.value
        err += res.error
    a, b = max(lo, profile.linear_from), min(hi, profile.far)
    if a < b:
        res = adaptive_simpson(g, a, b, tol=_ABS_TOL, max_evals=2_000_000)
        total += res.value
        err += res.error
    if hi > profile.far:
        p = max(lo, profile.far)
        total += profile.tail(alpha, p) - (profile.tail(alpha, hi) if math.isfinite(hi) else 0.0)
    return total, err


def profile_integrals(profile: _Profile, alpha: float, points: np.ndarray) -> tuple[np.ndarray, float]:
    """``F(a) = alpha int_a^inf f(s) s^-(alpha+1) ds`` at each point, sharing work between them."""
    points = np.asarray(points, dtype=float)
    uniq, inv = np.unique(points, return_inverse=True)
    out = np.empty(uniq.size)
    err = 0.0
    upper = math.inf
    acc = 0.0
    for i in range(uniq.size - 1, -1, -1):
        v, e = _segment(profile, alpha, float(uniq[i]), upper)
        acc += v
        err += e
        out[i] = acc
        upper = float(uniq[i])
    return out[inv.ravel()], err


# ---------------------------------------------------------------------------
# characters along orbits
# ---------------------------------------------------------------------------


def _mark_rows(cone: ConeDescriptor, marks) -> np.ndarray | None:
    if isinstance(marks, np.ndarray):
        return marks
    if marks and isinstance(marks[0], (Vector, GridFunction)):
        return np.array([m.payload for m in marks])
    return None


def _radial_reduction(cone: ConeDescriptor, chi: Character, marks):
    """``(profile, c)`` with ``1 - chi(t eps_i) = f(t c_i)``, or None when the orbit is not that simple."""
    rows = _mark_rows(cone, marks)
    if cone.scaling_kind == MULTIPLICATIVE and rows is not None:
        if isinstance(chi, FourierCharacter):
            return "fourier", rows @ chi.u
        if isinstance(chi, LaplaceCharacter) and chi.weights is not None:
            if np.any(rows < 0):
                raise DomainError("laplace characters need marks in the non-negative orthant")
            return "laplace", rows @ chi.weights
        if isinstance(chi, IndicatorCharacter):
            ratios = np.stack([rows[:, i] / a for i, a in zip(chi.indices, chi.thresholds)], axis=1)
            return "indicator", np.maximum(ratios.max(axis=1), 0.0)
    if cone.scaling_kind == WEIGHT and isinstance(chi, LaplaceCharacter):
        return "laplace", np.array([chi.integral(m) for m in marks])
    return None


def _elements(cone, marks):
    if isinstance(marks, np.ndarray):
        return [as_element(cone, m) for m in marks]
    return list(marks)


def _rows_along(cone: ConeDescriptor, marks, t: float) -> np.ndarray | None:
    """Payload rows of ``t eps_i`` when the cone has them, else None."""
    rows = _mark_rows(cone, marks)
    if rows is not None and cone.scaling_kind == MULTIPLICATIVE:
        return t * rows
    if rows is not None and cone.scaling_kind == OPERATOR:
        return rows @ cone.operator_power(t).T
    if cone.scaling_kind == TIME:
        return np.array([m.at(t * cone.grid) for m in _elements(cone, marks)])
    return None


def _chi_along(cone: ConeDescriptor, chi: Character, marks, t: float) -> np.ndarray:
    """``chi(t eps_i)`` for every mark."""
    rows = _rows_along(cone, marks, t)
    if rows is not None:
        return chi.evaluate(rows)
    return np.array([chi(scale(cone, t, m)) for m in _elements(cone, marks)], dtype=complex)


def _deficit_along(cone: ConeDescriptor, chi: Character, marks, t: float) -> np.ndarray:
    """``1 - Re chi(t eps_i)`` for every mark, computed without cancellation."""
    rows = _rows_along(cone, marks, t)
    if rows is not None:
        return chi.deficit(rows)
    if isinstance(chi, LaplaceCharacter):
        return -np.expm1(-t * np.array([chi.integral(m) for m in _elements(cone, marks)]))
    return 1.0 - _chi_along(cone, chi, marks, t).real


def _step_orbit_integral(cone, chi, mark: StepFunction, alpha: float, rho: float) -> complex:
    """Exact ``int_rho^inf (1 - chi(t x)) theta_alpha(dt)`` for a step function ``x``.

    ``t -> chi(t x)`` only changes where ``t s_k`` meets a break of ``x``.
    """
    g = cone.grid[cone.grid > 0]
    if mark.breaks.size == 0 or g.size == 0:
        return 0j
    cand = np.unique((mark.breaks[:, None] / g[None, :]).ravel())
    vals = mark.at(np.outer(cand * (1.0 + 1e-13), cone.grid))
    one_minus = 1.0 - chi.evaluate(vals)
    lo = np.maximum(cand, rho)
    hi = np.maximum(np.append(cand[1:], np.inf), rho)
    mass = lo**-alpha - np.where(np.isinf(hi), 0.0, hi**-alpha)
    return complex(np.sum(one_minus * mass))


def _typical_size(cone, marks) -> float:
    rows = _mark_rows(cone, marks)
    if rows is not None:
        n = np.linalg.norm(rows, axis=1)
    else:
        n = np.array([np.abs(m.payload).max(initial=0.0) for m in marks])
    n = n[n > 0]
    return float(np.median(n)) if n.size else 1.0


def _fit_rate(ts: np.ndarray, gs: np.ndarray) -> float:
    ok = gs > 0
    if ok.sum() < 2:
        return math.inf
    return float(np.polyfit(np.log(ts[ok]), np.log(gs[ok]), 1)[0])


def _generic_orbit_integral(cone, chi, marks, alpha, rho, tol=1e-9):
    """Quadrature of ``E(1 - chi(t eps)) alpha t^-(alpha+1)`` over ``t > rho`` along general orbits.

    The integral runs over ``[t_small, t_big]`` in ``log t``; below
    ``t_small`` the integrand is extrapolated at its fitted power rate and
    above ``t_big`` the expectation is replaced by its average over the last
    decade, whose spread sets the error estimate.
    """
    size = _typical_size(cone, marks)
    t_small, t_big = 1e-4 / size, 1e2 / size
    g = lambda t: 1.0 - _chi_along(cone, chi, marks, t).mean()

    def f(t):
        v = g(t) * alpha * t ** (-alpha - 1.0)
        return np.array([v.real, v.imag])

    lo = max(rho, t_small)
    total = np.zeros(2)
    err = 0.0
    if lo < t_big:
        res = log_integrate(f, lo, t_big, tol=tol, max_evals=400_000)
        total += res.value
        err += res.error
    if rho < t_small:
        ts = t_small * 2.0 ** -np.arange(8)
        gs = np.array([abs(g(t)) for t in ts])
        p = _fit_rate(ts, gs)
        if p <= alpha:
            return complex(math.inf, 0.0), math.inf
        if math.isfinite(p):
            g0 = g(t_small)
            scale_ = alpha * (t_small ** (p - alpha) - rho ** (p - alpha)) / (p - alpha) * t_small**-p
            total += np.array([g0.real, g0.imag]) * scale_
    top = max(rho, t_big)
    ts = np.exp(np.linspace(math.log(top / 10), math.log(top), 64))
    gs = np.array([g(t) for t in ts])
    mean = gs.mean()
    spread = float(np.abs(gs - mean).max())
    total += np.array([mean.real, mean.imag]) * top**-alpha
    err += spread * top**-alpha
    return complex(total[0], total[1]), err


# ---------------------------------------------------------------------------
# truncated Laplace exponent and the integrability condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaplaceExponent:
    """``psi_r(chi)`` with its Monte Carlo and quadrature error."""

    value: complex
    stderr: float
    quad_error: float
    n_marks: int
    rho: float


def _default_marks(spectral, n_marks):
    if n_marks is None:
        return 1 if spectral.deterministic else 2000
    return n_marks


def _draw_marks(cone, spectral, n_marks, rng):
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    marks, _ = spectral.sample(gen, n_marks)
    if spectral.post_scale != 1.0:
        marks = [scale(cone, spectral.post_scale, m) for m in _elements(cone, marks)]
    return marks


def _per_mark_exponent(cone, chi, marks, alpha, rho, symmetric) -> tuple[np.ndarray, float]:
    """Per-mark values of ``int_rho^inf (1 - chi(t eps_i)) theta_alpha(dt)``."""
    red = _radial_reduction(cone, chi, marks)
    if red is not None:
        kind, c = red
        ac = np.abs(c)
        nz = ac > 0
        out = np.zeros(len(c), dtype=complex)
        if not nz.any():
            return out, 0.0
        if kind == "indicator":
            out[nz] = np.minimum(rho**-alpha if rho > 0 else math.inf, ac[nz] ** alpha)
            return out, 0.0
        profile = COS if kind == "fourier" else EXP
        re, err = profile_integrals(profile, alpha, rho * ac[nz])
        out[nz] = ac[nz] ** alpha * re
        if kind == "fourier" and not symmetric:
            im, e2 = profile_integrals(SIN, alpha, rho * ac[nz])
            out[nz] -= 1j * np.sign(c[nz]) * ac[nz] ** alpha * im
            err += e2
        return out, err * float(np.mean(ac**alpha))
    if cone.scaling_kind == TIME and not isinstance(chi, LaplaceCharacter):
        elems = _elements(cone, marks)
        return np.array([_step_orbit_integral(cone, chi, m, alpha, rho) for m in elems]), 0.0
    v, err = _generic_orbit_integral(cone, chi, marks, alpha, rho)
    return np.array([v]), err


def truncated_laplace_exponent(
    cone: ConeDescriptor,
    law: RadialLaw,
    spectral,
    chi: Character,
    r: float,
    *,
    n_marks: int | None = None,
    rng: np.random.Generator | int | None = 0,
) -> LaplaceExponent:
    """``psi_r(chi)`` so that ``E chi(xi^(r)) = exp(-psi_r(chi))``.

    The expectation over marks is a Monte Carlo mean (a single mark when
    ``spectral`` is deterministic); the radial integral is computed per mark.
    For symmetric marks the imaginary part vanishes and is not computed.
    """
    a = law.alpha
    r = float(r)
    if not r > 0:
        raise DomainError("truncation level must be positive")
    rho = r ** (-1.0 / a)
    marks = _draw_marks(cone, spectral, _default_marks(spectral, n_marks), rng)
    vals, qerr = _per_mark_exponent(cone, chi, marks, a, rho, spectral.symmetric)
    n = len(vals)
    value = complex(vals.mean())
    if spectral.symmetric:
        value = complex(value.real, 0.0)
    stderr = 0.0
    if n > 1:
        stderr = float(np.sqrt(vals.real.var(ddof=1) + vals.imag.var(ddof=1)) / math.sqrt(n))
    return LaplaceExponent(value, stderr, qerr, n, rho)


@dataclass(frozen=True)
class EpsCondition:
    """Outcome of the integrability check for one character.

    ``value`` is ``alpha int_0^inf E(1 - Re chi(t eps)) t^-(alpha+1) dt``
    (infinite when ``finite`` is False); ``small_rate`` and ``large_rate``
    are the fitted power rates of ``E(1 - Re chi(t eps))`` as ``t -> 0`` and
    ``t -> inf``.
    """

    finite: bool
    value: float
    error: float
    small_rate: float
    large_rate: float
    n_marks: int


def _orbit_rates(cone, chi, marks, alpha):
    size = _typical_size(cone, marks)
    g = lambda t: float(np.mean(_deficit_along(cone, chi, marks, t)))
    ts = 1e-4 / size * 2.0 ** -np.arange(12)
    small = _fit_rate(ts, np.array([g(t) for t in ts]))
    # at the far end use dyadic window maxima, since fourier orbits oscillate
    starts = 1e4 / size * 2.0 ** np.arange(8)
    maxima = np.array([max(g(t) for t in s * np.linspace(1.0, 2.0, 17)) for s in starts])
    large = _fit_rate(starts, maxima) if np.all(maxima > 0) else -math.inf
    return small, large


RATE_MARGIN = 1e-3


def eps_condition_check(
    cone: ConeDescriptor,
    law: RadialLaw,
    spectral,
    chi: Character,
    *,
    n_marks: int | None = None,
    rng: np.random.Generator | int | None = 0,
) -> EpsCondition:
    """Check ``int_0^inf E(1 - Re chi(t eps)) t^-(alpha+1) dt < inf`` and evaluate it.

    Divergence is declared when the fitted small-``t`` rate ``p`` of
    ``E(1 - Re chi(t eps))`` satisfies ``p - alpha <= 1e-3`` or the fitted
    large-``t`` rate is not below ``alpha``; configurations within that
    margin of the boundary are reported as divergent.
    """
    a = law.alpha
    marks = _draw_marks(cone, spectral, _default_marks(spectral, n_marks), rng)
    small, large = _orbit_rates(cone, chi, marks, a)
    n = len(marks)
    if small - a <= RATE_MARGIN or large - a >= -RATE_MARGIN:
        return EpsCondition(False, math.inf, 0.0, small, large, n)
    vals, qerr = _per_mark_exponent(cone, chi, marks, a, 0.0, True)
    re = vals.real
    if not np.all(np.isfinite(re)):
        return EpsCondition(False, math.inf, 0.0, small, large, n)
    mc = float(re.std(ddof=1) / math.sqrt(len(re))) if len(re) > 1 else 0.0
    return EpsCondition(True, float(re.mean()), qerr + mc, small, large, n)


__all__ = [
    "SlowDecayWarning",
    "NonCanonicalWarning",
    "gamma_sequence",
    "check_admissible",
    "truncation_bias_bound",
    "ecf_truncation_allowance",
    "SeriesSample",
    "SeriesBatch",
    "aggregate",
    "series_from_points",
    "stream_generator",
    "sample_series",
    "sample_batch",
    "profile_integrals",
    "LaplaceExponent",
    "truncated_laplace_exponent",
    "EpsCondition",
    "eps_condition_check",
]
