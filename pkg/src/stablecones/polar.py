"""Polar coordinates on a cone: radial law, transversals and the measure ``nu``.

A transversal ``S`` meets every orbit ``{t x : t > 0}`` once; the radial
coordinate ``tau`` satisfies ``tau(t x) = t tau(x)`` and the angular part
``x / tau(x)`` lies on ``S``.

Two transversals are provided. :class:`NormTransversal` is the unit sphere
of a norm. :class:`CharacterTransversal` works on any cone from a list of
characters ``chi_n``: with ``h_n = 1 - Re chi_n`` and the bucket ``j`` chosen
by ``sup_t h_n(t x) in (2^-j, 2^-j+1]`` (``j = 0`` if the sup exceeds 1), the
orbit first exceeds ``2^-j`` at the crossing time
``c(x) = inf{t : h_n(t x) > 2^-j}``. Since ``c(t x) = c(x) / t``, the
equivariant radial coordinate is ``tau(x) = 1 / c(x)`` and the transversal is
the set of crossing points ``{c(x) x}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from operator import mul
from typing import Callable, Sequence

import numpy as np

from .core import (
    EUCLIDEAN,
    MULTIPLICATIVE,
    OPERATOR,
    WEIGHT,
    AtomicMeasure,
    Character,
    ConeDescriptor,
    ConeElement,
    FourierCharacter,
    GridFunction,
    IndicatorCharacter,
    StepFunction,
    Vector,
    check_member,
    expm,
    scale,
)
from .errors import ContractViolation, DomainError, QuadratureBudgetExceeded, TransversalDomainError
from .quadrature import log_integrate

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# radial law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialLaw:
    """The measure ``theta_alpha(dt) = alpha t^-(alpha+1) dt`` on ``(0, inf)``."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (math.isfinite(a) and a > 0):
            raise DomainError(f"alpha must be positive and finite, got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        return self.alpha * t ** -(self.alpha + 1.0)


def theta_tail(law: RadialLaw, b: float) -> float:
    """``theta_alpha([b, inf)) = b^-alpha``."""
    b = float(b)
    if not b > 0:
        raise DomainError(f"tail point must be positive, got {b}")
    return b ** -law.alpha


def theta_sample_above(law: RadialLaw, b: float, u):
    """Inverse-CDF draw from ``theta_alpha`` restricted to ``[b, inf)`` and normalised.

    ``u`` may be a scalar or an array of uniforms in ``(0, 1)``.
    """
    b = float(b)
    if not b > 0:
        raise DomainError(f"lower point must be positive, got {b}")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr >= 1.0)) or not np.all(np.isfinite(u_arr)):
        raise DomainError("uniform variates must lie in the open interval (0, 1)")
    out = b * (1.0 - u_arr) ** (-1.0 / law.alpha)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# transversals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormTransversal:
    """Unit sphere of a norm on the payload: ``tau(x) = ||x||``.

    ``ord`` follows :func:`numpy.linalg.norm`. Measures use their total mass
    whatever ``ord`` is. Only cones whose scaling multiplies the payload are
    supported, since otherwise ``||t x|| != t ||x||``.
    """

    ord: float = 2.0
    kind = "norm"


@dataclass(frozen=True, eq=False)
class CharacterTransversal:
    """Transversal built from characters by threshold crossings along orbits.

    The orbit is scanned at ``t = 2^(k / per_octave)`` for ``t`` between
    ``2^k_min`` and ``2^k_max`` and the bracketed crossing is refined by
    ``bisection_steps`` halvings of the exponent. For fourier characters on
    vector cones ``<u, t x>`` is unbounded along the orbit unless it vanishes
    identically, so the orbit sup of ``h`` is exactly 2; otherwise the sup
    over the scanned points stands in for it. For step functions and grid
    functions under indicator characters the orbit is piecewise constant and
    its change points are known, so the crossing is located exactly instead.
    """

    characters: tuple[Character, ...]
    k_min: int = -40
    k_max: int = 40
    bisection_steps: int = 80
    per_octave: int = 8
    kind = "character"

    def __post_init__(self):
        chars = tuple(self.characters) if isinstance(self.characters, Sequence) else (self.characters,)
        if not chars:
            raise ContractViolation("a character transversal needs at least one character")
        if self.k_min >= self.k_max:
            raise ContractViolation("k_min must be below k_max")
        if self.per_octave < 1:
            raise ContractViolation("per_octave must be at least 1")
        object.__setattr__(self, "characters", chars)


@dataclass(frozen=True)
class Crossing:
    """Where an orbit first crosses its bucket threshold."""

    index: int
    bucket: int
    threshold: float
    sup: float
    time: float


@dataclass(frozen=True, eq=False)
class PolarPair:
    angular: ConeElement
    radial: float

    def __post_init__(self):
        r = float(self.radial)
        if not (math.isfinite(r) and r > 0):
            raise DomainError(f"radial part must be positive and finite, got {self.radial}")
        if self.angular.is_neutral:
            raise DomainError("angular part cannot be the neutral element")
        object.__setattr__(self, "radial", r)


def bucket_of(sup: float) -> int:
    """Bucket ``j`` with ``sup in (2^-j, 2^-j+1]``, and 0 when ``sup > 1``."""
    if not sup > 0:
        raise DomainError("bucket needs a positive sup")
    if sup > 1.0:
        return 0
    return int(math.floor(-math.log2(sup))) + 1


def _payload_norm(trans: NormTransversal, cone: ConeDescriptor, x: ConeElement) -> float:
    if cone.scaling_kind not in (MULTIPLICATIVE, WEIGHT):
        raise ContractViolation(
            f"a norm transversal needs multiplicative scaling, the cone scales by {cone.scaling_kind!r}"
        )
    if isinstance(x, AtomicMeasure):
        return x.total_mass
    return float(np.linalg.norm(x.payload, trans.ord))


def _h(chi: Character, rows: np.ndarray) -> np.ndarray:
    return chi.deficit(rows)


def _scan_exponents(trans: "CharacterTransversal") -> np.ndarray:
    m = trans.per_octave
    return np.arange(trans.k_min * m, trans.k_max * m + 1) / m


@lru_cache(maxsize=64)
def _operator_tables(cone: ConeDescriptor, trans: "CharacterTransversal"):
    """``2^(e A)`` on the scan exponents, stacked as one ``(n d, d)`` matrix, and the bisection steps."""
    a, d = cone.matrix, cone.matrix.shape[0]
    coarse = expm(_scan_exponents(trans)[:, None, None] * LN2 * a).reshape(-1, d)
    width = 1.0 / trans.per_octave
    fine = expm((LN2 * width * 2.0 ** -np.arange(1, trans.bisection_steps + 1))[:, None, None] * a)
    return coarse, fine


@lru_cache(maxsize=64)
def _fourier_tables(cone: ConeDescriptor, trans: "CharacterTransversal", u: tuple[float, ...]):
    # per bisection step: F^T u and F as nested lists, for h(F y) = 2 sin^2((F^T u) . y / 2)
    _, fine = _operator_tables(cone, trans)
    return (fine.transpose(0, 2, 1) @ np.array(u)).tolist(), fine.tolist()


def _exact_candidates(cone: ConeDescriptor, chi: Character, x: ConeElement):
    """Orbit change points when ``t -> h(t x)`` is piecewise constant, else None."""
    if isinstance(x, StepFunction) and isinstance(chi, (FourierCharacter, IndicatorCharacter)):
        g = cone.grid
        pos = g[g > 0]
        if x.breaks.size == 0 or pos.size == 0:
            return np.zeros(0), lambda t: np.zeros((len(t), g.size))
        cand = np.unique((x.breaks[:, None] / pos[None, :]).ravel())
        # (t x)(s) = x(t s); nudge up so rounding cannot land left of a break
        return cand, lambda t: x.at(np.outer(t * (1.0 + 1e-13), g))
    if (
        isinstance(x, GridFunction)
        and isinstance(chi, IndicatorCharacter)
        and cone.scaling_kind == MULTIPLICATIVE
    ):
        v = x.values
        cand = [a / v[i] for i, a in zip(chi.indices, chi.thresholds) if v[i] > 0]
        return np.unique(cand), lambda t: np.outer(t * (1.0 + 1e-13), v)
    return None


def _orbit_rows(cone: ConeDescriptor, x: ConeElement, t: np.ndarray):
    """Payload rows of ``t x`` when they are linear in ``x``, else None."""
    if cone.scaling_kind == MULTIPLICATIVE and isinstance(x, (Vector, GridFunction)):
        return t[:, None] * x.payload[None, :]
    return None


def _crossing_exact(chi, cone, x, cand, rows_at):
    if cand.size == 0:
        return None
    h = _h(chi, rows_at(cand))
    h0 = float(_h(chi, np.zeros((1, rows_at(cand[:1]).shape[1])))[0])
    sup = max(float(h.max()), h0)
    if not sup > 0:
        return None
    j = bucket_of(sup)
    thr = 2.0**-j
    if h0 > thr:
        raise TransversalDomainError("orbit starts above its threshold; no crossing time exists")
    first = int(np.argmax(h > thr))
    return j, thr, sup, float(cand[first])


def _orbit_sup_is_two(chi, cone) -> bool:
    if not isinstance(chi, FourierCharacter) or cone.element_kind != EUCLIDEAN:
        return False
    if cone.scaling_kind == MULTIPLICATIVE:
        return True
    return cone.scaling_kind == OPERATOR and float(np.min(cone.operator_eigenvalues.real)) > 0


def _crossing_scan(trans: CharacterTransversal, chi, cone, x):
    exps = _scan_exponents(trans)
    if cone.scaling_kind == OPERATOR:
        coarse, fine = _operator_tables(cone, trans)
        rows = (coarse @ x.coords).reshape(exps.size, -1)
        h = _h(chi, rows)
    else:
        rows = _orbit_rows(cone, x, 2.0**exps)
        if rows is not None:
            h = _h(chi, rows)
        else:
            h = np.array([1.0 - chi(scale(cone, 2.0 ** float(k), x)).real for k in exps])
    sup = float(h.max())
    if not sup > 0:
        return None
    if _orbit_sup_is_two(chi, cone):
        sup = 2.0
    j = bucket_of(sup)
    thr = 2.0**-j
    above = np.nonzero(h > thr)[0]
    if above.size == 0:
        # sup is attained only in the limit or beyond the scanned range
        return None
    first = int(above[0])
    if first == 0:
        raise TransversalDomainError(
            f"orbit is above its threshold already at t = 2^{trans.k_min}; widen the search range"
        )
    lo = float(exps[first - 1])
    hi = float(exps[first])
    width = hi - lo
    if cone.scaling_kind == OPERATOR and isinstance(chi, FourierCharacter):
        # one short dot product per step; plain floats beat numpy calls at this size
        w, f = _fourier_tables(cone, trans, tuple(chi.u.tolist()))
        y = rows[first - 1].tolist()
        for step in range(trans.bisection_steps):
            mid = lo + width * 2.0 ** -(step + 1)
            if mid == lo or mid == hi:
                break
            if 2.0 * math.sin(0.5 * sum(map(mul, w[step], y))) ** 2 > thr:
                hi = mid
            else:
                lo, y = mid, [sum(map(mul, row, y)) for row in f[step]]
        return j, thr, sup, 2.0**hi
    if cone.scaling_kind == OPERATOR:
        y_lo = rows[first - 1]
        for step in range(trans.bisection_steps):
            mid = lo + width * 2.0 ** -(step + 1)
            if mid == lo or mid == hi:
                break
            if _h(chi, (fine[step] @ y_lo)[None, :])[0] > thr:
                hi = mid
            else:
                lo, y_lo = mid, fine[step] @ y_lo
        return j, thr, sup, 2.0**hi
    for step in range(trans.bisection_steps):
        mid = lo + width * 2.0 ** -(step + 1)
        if mid == lo or mid == hi:
            break
        t = np.array([2.0**mid])
        r = _orbit_rows(cone, x, t)
        hm = _h(chi, r)[0] if r is not None else 1.0 - chi(scale(cone, float(t[0]), x)).real
        if hm > thr:
            hi = mid
        else:
            lo = mid
    return j, thr, sup, 2.0**hi


def orbit_crossing(trans: CharacterTransversal, cone: ConeDescriptor, x: ConeElement) -> Crossing:
    """First threshold crossing along the orbit of ``x`` for the first applicable character.

    Raises :class:`TransversalDomainError` when every ``h_n`` vanishes on
    the scanned orbit.
    """
    check_member(cone, x)
    if x.is_neutral:
        raise TransversalDomainError("the neutral element has no polar decomposition")
    for n, chi in enumerate(trans.characters):
        exact = _exact_candidates(cone, chi, x)
        if exact is not None:
            found = _crossing_exact(chi, cone, x, *exact)
        else:
            found = _crossing_scan(trans, chi, cone, x)
        if found is not None:
            j, thr, sup, t = found
            return Crossing(n, j, thr, sup, t)
    raise TransversalDomainError("orbit outside transversal domain: every h_n vanishes along it")


def tau(trans, cone: ConeDescriptor, x: ConeElement) -> float:
    """Radial coordinate of ``x``; ``tau(t x) = t tau(x)``."""
    check_member(cone, x)
    if x.is_neutral:
        raise TransversalDomainError("the neutral element has no polar decomposition")
    if isinstance(trans, NormTransversal):
        return _payload_norm(trans, cone, x)
    return 1.0 / orbit_crossing(trans, cone, x).time


def decompose(trans, cone: ConeDescriptor, x: ConeElement) -> PolarPair:
    r = tau(trans, cone, x)
    return PolarPair(scale(cone, 1.0 / r, x), r)


def compose(cone: ConeDescriptor, p: PolarPair) -> ConeElement:
    return scale(cone, p.radial, p.angular)


# ---------------------------------------------------------------------------
# the measure nu
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NuEstimate:
    """Estimate of ``nu(B)`` with its error budget.

    ``stderr`` is the Monte Carlo standard error over spectral marks,
    ``quad_error`` the summed quadrature error estimate and ``tail_bound``
    the radial mass left out, ``theta_alpha`` of ``(0, t_lo)`` being
    excluded by the caller's justification and ``[t_hi, inf)`` being bounded
    by ``t_hi^-alpha``.
    """

    value: float
    stderr: float
    quad_error: float
    tail_bound: float
    n_marks: int
    evaluations: int


def nu_eval(
    law: RadialLaw,
    spectral,
    indicator: Callable[[ConeElement], bool],
    cone: ConeDescriptor,
    *,
    t_lo: float,
    t_hi: float,
    n_marks: int | None = None,
    rng: np.random.Generator | int | None = 0,
    tol: float = 1e-8,
    pieces: int = 32,
    max_evals: int = 200_000,
) -> NuEstimate:
    """Estimate ``nu(B) = E int 1{t eps in B} theta_alpha(dt)`` over ``t in [t_lo, t_hi]``.

    Marks ``eps`` are drawn from ``spectral``; for each, the radial integral
    is computed by adaptive Simpson in ``s = log t`` over ``pieces`` equal
    sub-intervals. ``B`` must keep away from the origin along orbits so that
    the mass below ``t_lo`` is negligible; that is the caller's claim.
    """
    if not (0 < t_lo < t_hi and math.isfinite(t_hi)):
        raise DomainError("need 0 < t_lo < t_hi < inf")
    if n_marks is None:
        n_marks = 1 if spectral.deterministic else 1000
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    marks = spectral.elements(cone, gen, n_marks)
    a = law.alpha
    edges = np.exp(np.linspace(math.log(t_lo), math.log(t_hi), pieces + 1))
    piece_tol = tol / pieces
    per_mark = np.empty(len(marks))
    quad_err = 0.0
    evals = 0
    for i, eps in enumerate(marks):
        f = lambda t, eps=eps: a * t ** (-a - 1.0) if indicator(scale(cone, t, eps)) else 0.0
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            try:
                res = log_integrate(f, lo, hi, tol=piece_tol, max_evals=max(1, max_evals - evals))
            except QuadratureBudgetExceeded as exc:
                done = per_mark[:i]
                partial = float(np.mean(np.append(done, total + exc.partial)))
                raise QuadratureBudgetExceeded(
                    f"quadrature budget exceeded at mark {i} of {len(marks)}", partial, math.inf
                ) from None
            total += res.value
            quad_err += res.error
            evals += res.evaluations
        per_mark[i] = total
    value = float(per_mark.mean())
    stderr = float(per_mark.std(ddof=1) / math.sqrt(len(marks))) if len(marks) > 1 else 0.0
    return NuEstimate(value, stderr, quad_err / len(marks), t_hi**-a, len(marks), evals)


def scaled_set(cone: ConeDescriptor, indicator: Callable[[ConeElement], bool], s: float):
    """Indicator of ``s B = {s y : y in B}``, i.e. ``x -> B(x / s)``."""
    return lambda x: indicator(scale(cone, 1.0 / s, x))
