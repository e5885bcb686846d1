"""Randomised cone and character invariants, shared by the unit and acceptance tests."""

import numpy as np

from stablecones.cones import ConeSpec, make_cone
from stablecones.core import (
    AtomicMeasure,
    GridFunction,
    StepFunction,
    Vector,
    add,
    evaluate_many,
    involve,
    neutral,
    relative_difference,
    scale,
)

GRID = np.linspace(0.0, 10.0, 11)
OPERATOR_MATRIX = [[1.0, 0.3], [0.0, 0.8]]

SPECS = {
    "euclidean-sum": ConeSpec("euclidean-sum", dim=3),
    "operator": ConeSpec("operator", matrix=OPERATOR_MATRIX),
    "max-grid": ConeSpec("max-grid", grid=GRID),
    "time-stable": ConeSpec("time-stable", grid=GRID),
    "atomic-measure": ConeSpec("atomic-measure", dim=1),
}


def random_element(cone, kind, rng):
    if kind in ("euclidean-sum", "operator"):
        return Vector(rng.standard_normal(cone.dim))
    if kind == "max-grid":
        v = np.abs(rng.standard_normal(cone.grid.size))
        v[rng.random(cone.grid.size) < 0.2] = 0.0
        return GridFunction(cone.grid, v)
    if kind == "time-stable":
        k = rng.integers(0, 4)
        return StepFunction.from_jumps(cone.grid, rng.uniform(0.1, 12.0, k), rng.standard_normal(k))
    k = rng.integers(0, 4)
    # a coarse lattice so that atoms collide and merging is exercised
    return AtomicMeasure(rng.integers(-2, 3, (k, 1)).astype(float) / 2, rng.exponential(1.0, k))


def _rows(xs):
    if isinstance(xs[0], AtomicMeasure):
        return xs
    return np.array([x.payload for x in xs])


def check_axioms(kind, n, seed=0):
    """Largest violation of each invariant over ``n`` random triples.

    Elements are compared by :func:`relative_difference`; character
    identities by absolute difference of values in the unit disk.
    """
    cone, _, probes = make_cone(SPECS[kind])
    rng = np.random.default_rng(seed)
    worst = {}

    def record(name, value):
        worst[name] = max(worst.get(name, 0.0), float(value))

    e = neutral(cone)
    xs, ys, sums, invs = [], [], [], []
    for _ in range(n):
        x, y, z = (random_element(cone, kind, rng) for _ in range(3))
        s, t = np.exp(rng.uniform(-2.0, 2.0, 2))
        xy = add(cone, x, y)
        record("commutative", relative_difference(cone, xy, add(cone, y, x)))
        record("associative", relative_difference(cone, add(cone, xy, z), add(cone, x, add(cone, y, z))))
        record("neutral", relative_difference(cone, add(cone, x, e), x))
        record("compose scaling", relative_difference(cone, scale(cone, t, scale(cone, s, x)), scale(cone, t * s, x)))
        record("unit scaling", relative_difference(cone, scale(cone, 1.0, x), x))
        record("distributive", relative_difference(cone, scale(cone, t, xy), add(cone, scale(cone, t, x), scale(cone, t, y))))
        record("scaled neutral", relative_difference(cone, scale(cone, t, e), e))
        xi = involve(cone, x)
        record("involution", relative_difference(cone, involve(cone, xi), x))
        record("involution additive", relative_difference(cone, involve(cone, xy), add(cone, xi, involve(cone, y))))
        record("involution scaling", relative_difference(cone, involve(cone, scale(cone, t, x)), scale(cone, t, xi)))
        xs.append(x)
        ys.append(y)
        sums.append(xy)
        invs.append(xi)
    for chi in probes:
        cx, cy = evaluate_many(chi, _rows(xs)), evaluate_many(chi, _rows(ys))
        record("character multiplicative", np.max(np.abs(evaluate_many(chi, _rows(sums)) - cx * cy)))
        record("character bounded", max(0.0, np.max(np.abs(cx)) - 1.0))
        record("character conjugate", np.max(np.abs(evaluate_many(chi, _rows(invs)) - np.conj(cx))))
        record("character neutral", abs(chi(e) - 1.0))
    return worst
