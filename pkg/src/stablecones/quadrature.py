"""Adaptive Simpson quadrature, plain and after the substitution ``t = e^s``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import QuadratureBudgetExceeded


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int
    max_depth_hit: bool = False


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-8,
    max_depth: int = 60,
    max_evals: int = 200_000,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    ``tol`` is the absolute error target for the whole interval; it is halved
    at each subdivision. ``f`` may return arrays, in which case the error
    test uses the largest component. Raises :class:`QuadratureBudgetExceeded`
    (carrying the partial sum) once ``max_evals`` evaluations are spent.
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    if a > b:
        r = adaptive_simpson(f, b, a, tol, max_depth, max_evals)
        return QuadResult(-r.value, r.error, r.evaluations, r.max_depth_hit)

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    evals = 3
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    error = 0.0
    depth_hit = False
    while stack:
        lo, hi, flo, fmid, fhi, s_whole, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl = f(0.5 * (lo + mid))
        fr = f(0.5 * (mid + hi))
        evals += 2
        h = hi - lo
        left = h / 12.0 * (flo + 4.0 * fl + fmid)
        right = h / 12.0 * (fmid + 4.0 * fr + fhi)
        delta = left + right - s_whole
        err = float(np.max(np.abs(delta))) / 15.0
        if err <= eps or depth >= max_depth or h <= 4.0 * np.spacing(max(abs(lo), abs(hi))):
            depth_hit |= err > eps
            total = total + left + right + delta / 15.0
            error += err
            continue
        if evals > max_evals:
            partial = total + sum(item[5] for item in stack) + left + right
            raise QuadratureBudgetExceeded(
                f"quadrature budget exceeded after {evals} evaluations", partial, math.inf
            )
        stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, fl, fmid, left, 0.5 * eps, depth + 1))
    return QuadResult(total, error, evals, depth_hit)


def log_integrate(
    f: Callable[[float], float],
    t_lo: float,
    t_hi: float,
    tol: float = 1e-8,
    max_depth: int = 60,
    max_evals: int = 200_000,
) -> QuadResult:
    """``int_{t_lo}^{t_hi} f(t) dt`` computed as ``int f(e^s) e^s ds``."""
    if not (0.0 < t_lo <= t_hi):
        raise ValueError("log substitution needs 0 < t_lo <= t_hi")
    return adaptive_simpson(
        lambda s: f(math.exp(s)) * math.exp(s), math.log(t_lo), math.log(t_hi), tol, max_depth, max_evals
    )
