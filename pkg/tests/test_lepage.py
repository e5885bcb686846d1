import math
import warnings

import numpy as np
import pytest
import scipy.integrate
import scipy.stats

from stablecones.cones import ConeSpec, default_spectral, make_cone
from stablecones.core import (
    FourierCharacter,
    LaplaceCharacter,
    StepFunction,
    relative_difference,
)
from stablecones.errors import AdmissibilityError, DomainError
from stablecones.lepage import (
    NonCanonicalWarning,
    SlowDecayWarning,
    aggregate,
    check_admissible,
    ecf_truncation_allowance,
    eps_condition_check,
    gamma_sequence,
    sample_batch,
    sample_series,
    series_from_points,
    stream_generator,
    truncated_laplace_exponent,
    truncation_bias_bound,
)
from stablecones.polar import RadialLaw
from stablecones.spectral import ConstantMark, JumpMark, RademacherMark, SphereMark

from axioms import SPECS

GRID10 = np.linspace(0.0, 10.0, 11)


def euclid1():
    return make_cone(ConeSpec("euclidean-sum", dim=1))[0]


def _by_decades(f, lo):
    """``int_lo^1 f`` as a sum over decades, which keeps quad accurate near 0."""
    edges = np.geomspace(lo, 1.0, max(2, int(math.ceil(-math.log10(lo))) + 1))
    return sum(scipy.integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))


def radial_oracle(alpha, rho, u, kind):
    """``int_rho^inf (1 - chi(u t)) alpha t^-(alpha+1) dt`` by scipy quadrature."""
    if kind == "exp":
        f = lambda t: -math.expm1(-u * t) * alpha * t ** (-alpha - 1)  # noqa: E731
        lo, _ = scipy.integrate.quad(f, rho, 1.0, epsabs=1e-14, epsrel=1e-12, limit=500)
        hi, _ = scipy.integrate.quad(f, 1.0, math.inf, epsabs=1e-14, epsrel=1e-12, limit=500)
        return lo + hi
    # fourier: split the power law from the oscillatory weight at t = 1
    g = lambda t: alpha * t ** (-alpha - 1)  # noqa: E731
    near_re = _by_decades(lambda t: 2 * math.sin(u * t / 2) ** 2 * g(t), rho)
    near_im = _by_decades(lambda t: math.sin(u * t) * g(t), rho)
    far_cos, _ = scipy.integrate.quad(g, 1.0, math.inf, weight="cos", wvar=u)
    far_sin, _ = scipy.integrate.quad(g, 1.0, math.inf, weight="sin", wvar=u)
    return complex(near_re + 1.0 - far_cos, -(near_im + far_sin))


# --- Poisson points ----------------------------------------------------------


def test_gamma_sequence_mean_count():
    rng = np.random.default_rng(1)
    counts = np.array([gamma_sequence(rng, 5.0).size for _ in range(10_000)])
    assert abs(counts.mean() - 5.0) < 3 * math.sqrt(5.0 / 10_000)


def test_gamma_sequence_is_increasing_and_truncated():
    rng = np.random.default_rng(2)
    g = gamma_sequence(rng, 1000.0)
    assert np.all(np.diff(g) > 0)
    assert g[-1] <= 1000.0
    gaps = np.diff(np.concatenate([[0.0], g]))
    assert scipy.stats.kstest(gaps, "expon").pvalue > 0.01


def test_gamma_sequence_empty_below_first_point():
    rng = np.random.default_rng(3)
    first = np.random.default_rng(3).standard_exponential()
    assert gamma_sequence(rng, 0.5 * first).size == 0


def test_gamma_sequence_spans_several_chunks():
    # a chunk holds about r + 5 sqrt(r) points; force a second one by a tiny r
    counts = [gamma_sequence(np.random.default_rng(s), 0.1).size for s in range(2000)]
    assert max(counts) >= 2
    assert np.mean(counts) == pytest.approx(0.1, abs=3 * math.sqrt(0.1 / 2000))


def test_bad_truncation_level():
    with pytest.raises(DomainError):
        gamma_sequence(np.random.default_rng(0), 0.0)


# --- admissibility -----------------------------------------------------------


def test_admissibility_gate():
    cone = euclid1()
    with pytest.raises(AdmissibilityError, match="admissibility gate"):
        check_admissible(cone, 1.0, symmetric=False)
    with pytest.raises(AdmissibilityError):
        check_admissible(cone, 2.0, symmetric=True)
    check_admissible(cone, 0.7, symmetric=False)
    check_admissible(cone, 1.5, symmetric=True)


def test_operator_admissibility_follows_eigenvalues():
    cone = make_cone(ConeSpec("operator", matrix=[[1.0, 0.3], [0.0, 0.8]]))[0]
    check_admissible(cone, 0.7, symmetric=False)
    check_admissible(cone, 1.5, symmetric=True)
    with pytest.raises(AdmissibilityError):
        check_admissible(cone, 0.9, symmetric=False)


def test_time_stable_away_from_one_warns():
    cone = make_cone(ConeSpec("time-stable", grid=GRID10))[0]
    with pytest.warns(NonCanonicalWarning):
        check_admissible(cone, 0.5, symmetric=True)


# --- aggregation -------------------------------------------------------------


@pytest.mark.parametrize("kind", list(SPECS))
def test_vectorised_aggregate_equals_literal_fold(kind):
    cone, _, _ = make_cone(SPECS[kind])
    spectral = default_spectral(SPECS[kind], cone)
    alpha = 0.5 if kind == "atomic-measure" else 0.7
    rng = np.random.default_rng(4)
    for _ in range(20):
        g = gamma_sequence(rng, 30.0)
        marks, _ = spectral.sample(rng, g.size)
        fast = aggregate(cone, alpha, g, marks)
        slow = series_from_points(cone, alpha, g, marks if isinstance(marks, np.ndarray) else list(marks))
        assert relative_difference(cone, fast, slow) <= 1e-12


def test_time_stable_first_term():
    cone = make_cone(ConeSpec("time-stable", grid=GRID10))[0]
    mark = StepFunction.from_jumps(GRID10, [1.0], [1.0])
    x = aggregate(cone, 1.0, np.array([0.5]), [mark])
    # Gamma_1^-1 eps evaluated at s is eps(s / Gamma_1) = 1 for s >= 0.5
    assert x.breaks.tolist() == [0.5]
    assert x.values.tolist() == [0.0] + [1.0] * 10


def test_empty_series_is_neutral():
    cone = euclid1()
    s = sample_series(cone, RadialLaw(0.7), ConstantMark(np.ones(1)), 1e-12, 0)
    assert s.gammas.size == 0
    assert s.value.is_neutral


def test_frechet_marginal():
    cone = make_cone(ConeSpec("max-grid", grid=np.array([0.0])))[0]
    batch = sample_batch(cone, RadialLaw(1.0), ConstantMark(np.ones(1)), 50.0, 3000, seed=5)
    assert scipy.stats.kstest(batch.rows[:, 0], lambda x: np.exp(-(x**-1.0))).pvalue > 0.01
    assert np.all(batch.bias_bounds == 0.0)


# --- reproducibility ---------------------------------------------------------


def test_same_seed_same_batch():
    cone = euclid1()
    law, sp = RadialLaw(0.7), RademacherMark(np.ones(1))
    a = sample_batch(cone, law, sp, 100.0, 50, seed=9, batch_size=16)
    b = sample_batch(cone, law, sp, 100.0, 50, seed=9, batch_size=16)
    c = sample_batch(cone, law, sp, 100.0, 50, seed=9, batch_size=16, workers=2)
    assert np.array_equal(a.rows, b.rows)
    assert np.array_equal(a.rows, c.rows)
    one = sample_series(cone, law, sp, 100.0, 9)
    assert one.value.coords[0] == a.rows[0, 0]


def test_streams_are_independent():
    a = stream_generator(1, 0, 0).standard_normal(5)
    b = stream_generator(1, 1, 0).standard_normal(5)
    c = stream_generator(1, 0, 1).standard_normal(5)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


# --- bias bounds -------------------------------------------------------------


def test_bias_bound_closed_form():
    b = truncation_bias_bound(euclid1(), RadialLaw(0.5), ConstantMark(np.ones(1)), 1e4)
    assert b == pytest.approx(1e-4, rel=1e-12)


def test_bias_bound_flags_slow_decay():
    with pytest.warns(SlowDecayWarning):
        b = truncation_bias_bound(euclid1(), RadialLaw(0.95), ConstantMark(np.ones(1)), 1e4)
    assert math.isfinite(b)


def test_max_cone_bias_is_zero_given_the_sample():
    cone = make_cone(ConeSpec("max-grid", grid=GRID10))[0]
    s = sample_series(cone, RadialLaw(1.0), ConstantMark(np.ones(11)), 10.0, 3)
    assert s.bias_bound == 0.0


def test_bias_bound_not_available_without_moments():
    cone = make_cone(ConeSpec("operator", matrix=[[1.0, 0.0], [0.0, 1.2]]))[0]
    assert truncation_bias_bound(cone, RadialLaw(0.7), SphereMark(2), 100.0) is None


def test_time_stable_bias_counts_visible_jumps():
    cone = make_cone(ConeSpec("time-stable", grid=GRID10))[0]
    sp = JumpMark(GRID10)
    # marks jump no earlier than 1, so terms with Gamma > 10 jump after the grid ends;
    # below that, the expected number of visible tail jumps times the mark bound 1
    assert truncation_bias_bound(cone, RadialLaw(1.0), sp, 10.0) == 0.0
    assert truncation_bias_bound(cone, RadialLaw(1.0), sp, 9.5) == pytest.approx(0.5)


def test_ecf_allowance_shrinks_with_r():
    cone = euclid1()
    chi = FourierCharacter([1.0])
    law, sp = RadialLaw(1.3), RademacherMark(np.ones(1))
    a1 = ecf_truncation_allowance(cone, law, sp, chi, 1e2)
    a2 = ecf_truncation_allowance(cone, law, sp, chi, 1e4)
    assert 0 < a2 < a1


# --- Laplace exponent --------------------------------------------------------


def test_laplace_exponent_one_sided():
    cone = euclid1()
    law, sp, chi = RadialLaw(0.5), ConstantMark(np.ones(1)), LaplaceCharacter(weights=[1.0])
    assert truncated_laplace_exponent(cone, law, sp, chi, 1e12).value.real == pytest.approx(math.sqrt(math.pi), abs=1e-5)
    res = truncated_laplace_exponent(cone, law, sp, chi, 100.0)
    assert res.value.real == pytest.approx(radial_oracle(0.5, 100.0**-2, 1.0, "exp"), rel=1e-9)


@pytest.mark.parametrize("alpha, u, r", [(0.7, 1.3, 50.0), (0.4, 2.0, 1e3)])
def test_laplace_exponent_fourier_non_symmetric(alpha, u, r):
    res = truncated_laplace_exponent(euclid1(), RadialLaw(alpha), ConstantMark(np.ones(1)), FourierCharacter([u]), r)
    ref = radial_oracle(alpha, r ** (-1 / alpha), u, "fourier")
    assert abs(res.value - ref) < 1e-8 * abs(ref)


def test_laplace_exponent_empty_range():
    res = truncated_laplace_exponent(euclid1(), RadialLaw(0.5), ConstantMark(np.ones(1)), LaplaceCharacter(weights=[1.0]), 1e-12)
    assert abs(res.value) < 1e-10


def test_laplace_exponent_matches_simulation():
    cone = euclid1()
    law, sp, chi = RadialLaw(0.5), ConstantMark(np.ones(1)), LaplaceCharacter(weights=[1.0])
    r = 100.0
    batch = sample_batch(cone, law, sp, r, 100_000, seed=13)
    vals = np.exp(-batch.rows[:, 0])
    m, se = vals.mean(), vals.std(ddof=1) / math.sqrt(vals.size)
    psi = truncated_laplace_exponent(cone, law, sp, chi, r)
    # delta method: se(-log m) = se / m
    assert abs(-math.log(m) - psi.value.real) < 3 * math.hypot(se / m, psi.stderr + psi.quad_error)


# --- integrability condition -------------------------------------------------


def c_alpha_oracle(alpha):
    lo = 1e-12
    # below lo, 1 - cos t = t^2 / 2 to double precision
    head = alpha * lo ** (2 - alpha) / (2 * (2 - alpha))
    near = head + _by_decades(lambda t: 2 * math.sin(t / 2) ** 2 * alpha * t ** (-alpha - 1), lo)
    far_cos, _ = scipy.integrate.quad(lambda t: alpha * t ** (-alpha - 1), 1.0, math.inf, weight="cos", wvar=1.0)
    return near + 1.0 - far_cos


@pytest.mark.parametrize("alpha", [0.5, 1.3, 1.9])
def test_eps_condition_value(alpha):
    res = eps_condition_check(euclid1(), RadialLaw(alpha), ConstantMark(np.ones(1)), FourierCharacter([1.0]))
    assert res.finite
    assert res.value == pytest.approx(c_alpha_oracle(alpha), rel=1e-8)
    # closed form of the same integral
    assert res.value == pytest.approx(math.gamma(1 - alpha) * math.cos(math.pi * alpha / 2), rel=1e-8)


def test_eps_condition_flags_divergence():
    res = eps_condition_check(euclid1(), RadialLaw(2.5), ConstantMark(np.ones(1)), FourierCharacter([1.0]))
    assert not res.finite
    assert res.small_rate == pytest.approx(2.0, abs=0.05)


def test_eps_condition_of_the_trivial_character():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = eps_condition_check(euclid1(), RadialLaw(0.7), ConstantMark(np.ones(1)), FourierCharacter([0.0]))
    assert res.finite
    assert res.value == 0.0
