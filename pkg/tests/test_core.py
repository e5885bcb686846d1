import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from stablecones.core import (
    EUCLIDEAN,
    GRID,
    IDENTITY,
    MAX,
    MULTIPLICATIVE,
    NEGATION,
    OPERATOR,
    SUM,
    TIME,
    AtomicMeasure,
    Bump,
    ConeDescriptor,
    FourierCharacter,
    GridFunction,
    IndicatorCharacter,
    LaplaceCharacter,
    StepFunction,
    Vector,
    add,
    char_eval,
    elements_close,
    evaluate_many,
    expm,
    involve,
    neutral,
    relative_difference,
    scale,
)
from stablecones.errors import ContractViolation, DomainError

from axioms import SPECS, check_axioms

GRID01 = np.array([0.0, 1.0])
GRID10 = np.linspace(0.0, 10.0, 11)

finite = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-3, 1e3)


def euclid(d):
    return ConeDescriptor(EUCLIDEAN, SUM, MULTIPLICATIVE, NEGATION, dim=d)


def max_cone(grid=GRID01):
    return ConeDescriptor(GRID, MAX, MULTIPLICATIVE, IDENTITY, grid=grid)


def time_cone(grid=GRID10):
    return ConeDescriptor(GRID, SUM, TIME, NEGATION, grid=grid)


# --- semigroup operation -----------------------------------------------------


def test_vector_sum():
    x = add(euclid(2), Vector([1.0, 3.0]), Vector([2.0, -1.0]))
    assert x.coords.tolist() == [3.0, 2.0]


def test_max_is_pointwise():
    c = max_cone()
    x = add(c, GridFunction(GRID01, [0.2, 0.7]), GridFunction(GRID01, [0.5, 0.1]))
    assert x.values.tolist() == [0.5, 0.7]


@pytest.mark.parametrize("kind", list(SPECS))
def test_neutral_is_identity(kind):
    from stablecones.cones import make_cone

    from axioms import random_element

    cone, _, _ = make_cone(SPECS[kind])
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = random_element(cone, kind, rng)
        assert relative_difference(cone, add(cone, x, neutral(cone)), x) == 0.0


def test_measure_sum_concatenates_atoms():
    c = ConeDescriptor("atomic-measure", SUM, "weight", IDENTITY, dim=1)
    m = add(c, AtomicMeasure([[0.0]], [1.0]), AtomicMeasure([[0.0], [1.0]], [2.0, 0.5])).canonical()
    assert m.locations.ravel().tolist() == [0.0, 1.0]
    assert m.weights.tolist() == [3.0, 0.5]


def test_mixing_elements_is_a_contract_violation():
    with pytest.raises(ContractViolation):
        add(euclid(2), Vector([1.0, 2.0]), Vector([1.0, 2.0, 3.0]))
    with pytest.raises(ContractViolation):
        add(euclid(2), Vector([1.0, 2.0]), GridFunction(GRID01, [0.0, 1.0]))


def test_max_cone_rejects_negative_values():
    with pytest.raises(DomainError):
        add(max_cone(), GridFunction(GRID01, [0.0, -1.0]), GridFunction(GRID01, [0.0, 1.0]))


# --- scaling -----------------------------------------------------------------


def test_multiplicative_scaling():
    assert scale(euclid(2), 2.0, Vector([1.0, 3.0])).coords.tolist() == [2.0, 6.0]


def test_nilpotent_operator_scaling():
    # exp(A) = I + A for A = [[0, 1], [0, 0]]
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(expm(a), np.eye(2) + a, rtol=0, atol=1e-15)
    # a nilpotent A is singular, so the cone itself refuses it; the action is t^A x
    x = expm(math.log(math.e) * a) @ np.array([0.0, 1.0])
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-15)


def test_singular_operator_matrix_is_refused():
    with pytest.raises(ContractViolation):
        ConeDescriptor(EUCLIDEAN, SUM, OPERATOR, NEGATION, matrix=[[0.0, 1.0], [0.0, 0.0]])


@pytest.mark.parametrize("scale_factor", [1e-3, 0.3, 1.0, 7.0, 300.0])
def test_expm_matches_reference(scale_factor):
    rng = np.random.default_rng(11)
    a = scale_factor * rng.standard_normal((4, 4))
    ref = scipy.linalg.expm(a)
    np.testing.assert_allclose(expm(a), ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


def test_expm_on_a_stack():
    rng = np.random.default_rng(12)
    a = rng.standard_normal((6, 3, 3))
    out = expm(a)
    for i in range(6):
        np.testing.assert_allclose(out[i], scipy.linalg.expm(a[i]), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("matrix", [[[1.0, 0.3], [0.0, 0.8]], [[0.7, -2.0], [2.0, 0.7]], [[1.0, 1.0], [0.0, 1.0]]])
def test_operator_power_matches_reference(matrix):
    c = ConeDescriptor(EUCLIDEAN, SUM, OPERATOR, NEGATION, matrix=matrix)
    for t in (1e-3, 0.4, 2.5, 1e3):
        ref = scipy.linalg.expm(math.log(t) * np.array(matrix))
        np.testing.assert_allclose(c.operator_power(t), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_time_scaling_moves_breaks():
    c = time_cone()
    x = StepFunction.from_grid(GRID10, (GRID10 >= 1.0).astype(float))
    y = scale(c, 2.0, x)
    assert y.breaks.tolist() == [0.5]
    assert y.values.tolist() == [0.0] + [1.0] * 10


@pytest.mark.parametrize("t", [0.0, -1.0, math.inf, math.nan])
def test_bad_scaling_factor(t):
    with pytest.raises(DomainError):
        scale(euclid(1), t, Vector([1.0]))


@given(st.lists(finite, min_size=3, max_size=3), positive, positive)
def test_scaling_composes(v, s, t):
    c = euclid(3)
    x = Vector(v)
    assert elements_close(c, scale(c, t, scale(c, s, x)), scale(c, t * s, x), rtol=1e-12)
    assert elements_close(c, scale(c, 1.0, x), x)


@given(st.lists(positive, min_size=0, max_size=5), st.lists(finite, min_size=5, max_size=5), positive, positive)
def test_step_scaling_composes(times, jumps, s, t):
    c = time_cone()
    x = StepFunction.from_jumps(GRID10, times, jumps[: len(times)])
    assert elements_close(c, scale(c, t, scale(c, s, x)), scale(c, t * s, x), rtol=1e-12)


# --- involution --------------------------------------------------------------


def test_involutions():
    assert involve(euclid(2), Vector([1.0, -2.0])).coords.tolist() == [-1.0, 2.0]
    x = GridFunction(GRID01, [0.3, 0.2])
    assert involve(max_cone(), x) is x
    for c in (euclid(2), max_cone(), time_cone()):
        assert involve(c, neutral(c)).is_neutral


# --- step functions and measures ---------------------------------------------


def test_step_function_must_vanish_at_first_grid_point():
    with pytest.raises(DomainError):
        StepFunction.from_grid(GRID10, np.ones(11))


def test_step_function_representation_is_canonical():
    x = StepFunction.from_jumps(GRID10, [1.0, 2.0, 2.0], [1.0, 0.5, -0.5])
    assert x.breaks.tolist() == [1.0]
    assert StepFunction.from_jumps(GRID10, [3.0], [0.0]).is_neutral


def test_negative_atom_weights_are_refused():
    with pytest.raises(DomainError):
        AtomicMeasure([[0.0]], [-1.0])


# --- characters --------------------------------------------------------------


def test_zero_frequency_character_is_one():
    chi = FourierCharacter([0.0, 0.0])
    assert char_eval(chi, Vector([3.0, -7.0])) == 1.0


def test_indicator_character():
    chi = IndicatorCharacter((1,), (1.0,))
    assert char_eval(chi, GridFunction(GRID01, [0.0, 0.5])) == 1.0
    assert char_eval(chi, GridFunction(GRID01, [0.0, 1.5])) == 0.0


def test_laplace_character_on_single_atom():
    chi = LaplaceCharacter(bumps=(Bump((0.0,), 1.0, 1.0),))
    assert char_eval(chi, AtomicMeasure([[0.0]], [2.0])) == pytest.approx(math.exp(-2.0), rel=1e-15)


def test_character_variant_mismatch():
    with pytest.raises(ContractViolation):
        char_eval(FourierCharacter([1.0]), AtomicMeasure([[0.0]], [1.0]))
    with pytest.raises(ContractViolation):
        char_eval(IndicatorCharacter((0,), (1.0,)), Vector([1.0]))


def test_deficit_avoids_cancellation():
    chi = FourierCharacter([1.0])
    rows = np.array([[1e-9]])
    assert chi.deficit(rows)[0] == pytest.approx(0.5e-18, rel=1e-12)
    lap = LaplaceCharacter(weights=[1.0])
    assert lap.deficit(rows)[0] == pytest.approx(1e-9, rel=1e-8)


def test_vectorised_measure_evaluation_matches_single():
    chi = LaplaceCharacter(bumps=(Bump((0.0,), 1.0, 0.7), Bump((1.0,), 0.5, 0.2)))
    rng = np.random.default_rng(5)
    ms = [AtomicMeasure(rng.uniform(-1, 2, (k, 1)), rng.exponential(1.0, k)) for k in (0, 1, 3, 2)]
    np.testing.assert_allclose(evaluate_many(chi, ms), [chi(m) for m in ms], rtol=1e-14)


@pytest.mark.parametrize("kind", list(SPECS))
def test_axioms_hold_on_random_inputs(kind):
    worst = check_axioms(kind, 500, seed=1)
    bad = {k: v for k, v in worst.items() if v > 1e-10}
    assert not bad, bad
