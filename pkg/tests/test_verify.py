import math

import numpy as np
import pytest

from stablecones.cones import ConeSpec, make_cone
from stablecones.core import FourierCharacter
from stablecones.errors import DomainError
from stablecones.polar import NormTransversal, RadialLaw
from stablecones.spectral import ConstantMark, RademacherMark
from stablecones.verify import (
    TestSet,
    VerificationReport,
    cms_constant,
    cms_oracle,
    ecf_estimate,
    empirical_homogeneity_test,
    eps_condition_report,
    lepage_vs_cms_test,
    phi_homogeneity_test,
    series_points,
    stability_test,
    two_sample_ecf_test,
)

PROBES_1D = [FourierCharacter([u]) for u in (0.25, 0.5, 1.0, 2.0)]


@pytest.fixture(scope="module")
def line():
    cone, _, probes = make_cone(ConeSpec("euclidean-sum", dim=1))
    return cone, probes


# --- ECF estimation ----------------------------------------------------------


def test_ecf_of_neutral_samples_is_one():
    est = ecf_estimate(np.zeros((50, 1)), PROBES_1D)
    assert np.all(est.mean == 1.0)
    assert np.all(est.stderr == 0.0)


def test_ecf_of_a_normal_sample():
    x = np.random.default_rng(4).standard_normal((20_000, 1))
    est = ecf_estimate(x, PROBES_1D)
    u = np.array([0.25, 0.5, 1.0, 2.0])
    assert np.all(np.abs(est.mean - np.exp(-u**2 / 2)) <= 3 * est.stderr + 1e-12)


def test_ecf_of_nothing():
    with pytest.raises(DomainError):
        ecf_estimate(np.zeros((0, 1)), PROBES_1D)


# --- symmetric stable oracle -------------------------------------------------


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.7])
def test_cms_oracle_has_the_stable_ecf(alpha):
    x = cms_oracle(alpha, 100_000, 9)[:, None]
    est = ecf_estimate(x, PROBES_1D)
    u = np.array([0.25, 0.5, 1.0, 2.0])
    assert np.all(np.abs(est.mean - np.exp(-(u**alpha))) <= 4 * est.stderr)
    # symmetric: the mean sign is zero
    assert abs(np.sign(x).mean()) < 4 / math.sqrt(x.size)


def test_cms_oracle_range():
    for a in (0.0, 2.0, 2.5):
        with pytest.raises(DomainError):
            cms_oracle(a, 10, 0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_cms_constant_closed_form(alpha):
    # integral of (1 - cos t) alpha t^-(alpha+1) over (0, inf)
    ref = math.pi / 2 if alpha == 1.0 else math.gamma(1 - alpha) * math.cos(math.pi * alpha / 2)
    assert cms_constant(alpha) == pytest.approx(ref, rel=1e-7)


# --- two-sample test ---------------------------------------------------------


def test_identical_samples_give_zero_statistic():
    x = np.random.default_rng(1).standard_normal((2000, 1))
    stat, thr, rows = two_sample_ecf_test(x, x.copy(), PROBES_1D, seed=0, n_perm=100)
    assert stat == 0.0
    assert thr > 0.0
    assert len(rows) == len(PROBES_1D)


def test_two_sample_null_is_rarely_rejected():
    rng = np.random.default_rng(2)
    rejections = 0
    for k in range(20):
        x = rng.standard_normal((2000, 1))
        y = rng.standard_normal((2000, 1))
        stat, thr, _ = two_sample_ecf_test(x, y, PROBES_1D, seed=k, n_perm=200)
        rejections += stat > thr
    # at a 1% level, three or more rejections out of 20 has probability ~0.001
    assert rejections <= 2


def test_two_sample_detects_a_scale_change():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((5000, 1))
    y = 1.2 * rng.standard_normal((5000, 1))
    stat, thr, _ = two_sample_ecf_test(x, y, PROBES_1D, seed=0, n_perm=200)
    assert stat > thr


def test_two_sample_needs_two_elements():
    with pytest.raises(DomainError):
        two_sample_ecf_test(np.zeros((1, 1)), np.zeros((5, 1)), PROBES_1D, seed=0)


# --- stability, phi and CMS checks -------------------------------------------


def test_stability_holds_and_the_mutation_is_caught(line):
    cone, probes = line
    law, sp = RadialLaw(0.5), RademacherMark(np.ones(1))
    ok = stability_test(cone, law, sp, 1.0, 1.0, 10_000, 200.0, probes, seed=5, n_perm=200)
    assert ok.passed
    bad = stability_test(cone, law, sp, 1.0, 1.0, 10_000, 200.0, probes, seed=5, n_perm=200, mutation="exponent-one")
    assert bad.passed is False


@pytest.mark.parametrize("a, b", [(0.0, 1.0), (1.0, -2.0), (math.inf, 1.0)])
def test_stability_weights_must_be_positive(line, a, b):
    cone, probes = line
    with pytest.raises(DomainError):
        stability_test(cone, RadialLaw(0.5), RademacherMark(np.ones(1)), a, b, 10, 10.0, probes, seed=0)


def test_mutation_must_match_the_test(line):
    cone, probes = line
    with pytest.raises(DomainError):
        stability_test(cone, RadialLaw(0.5), RademacherMark(np.ones(1)), 1.0, 1.0, 10, 10.0, probes, seed=0,
                       mutation="wrong-alpha")
    with pytest.raises(DomainError):
        lepage_vs_cms_test(0.7, 10, 10.0, 0, mutation="exponent-one")


def test_phi_with_unit_scaling_is_exact(line):
    cone, probes = line
    rep = phi_homogeneity_test(cone, RadialLaw(0.5), RademacherMark(np.ones(1)), 1.0, probes, 2000, 100.0, 0,
                               n_boot=50)
    assert rep.statistic == 0.0
    assert rep.passed


def test_phi_detects_the_wrong_index(line):
    cone, probes = line
    law, sp = RadialLaw(0.5), RademacherMark(np.ones(1))
    assert phi_homogeneity_test(cone, law, sp, 2.0, probes, 10_000, 1000.0, 1, n_boot=200).passed
    bad = phi_homogeneity_test(cone, law, sp, 2.0, probes, 10_000, 1000.0, 1, n_boot=200, mutation="wrong-alpha")
    assert bad.passed is False


def test_lepage_matches_cms_and_the_unscaled_series_does_not():
    assert lepage_vs_cms_test(1.3, 10_000, 500.0, 2, n_perm=200).passed
    assert lepage_vs_cms_test(1.3, 10_000, 500.0, 2, n_perm=200, mutation="skip-rescale").passed is False


# --- point-count homogeneity -------------------------------------------------


def test_unit_scaling_gives_ratio_one(line):
    cone, _ = line
    pts = series_points(cone, RadialLaw(1.0), ConstantMark(np.ones(1)), 50.0, 200, 0, NormTransversal())
    rep = empirical_homogeneity_test(pts, 1.0, [TestSet(1.0, 2.0)], [1.0])
    assert rep.per_probe[0]["ratio"] == 1.0
    assert rep.passed


def test_halving_for_alpha_one(line):
    # nu(2B) = nu(B) / 2 for B = [1, 2) and alpha = 1
    cone, _ = line
    pts = series_points(cone, RadialLaw(1.0), ConstantMark(np.ones(1)), 100.0, 10_000, 3, NormTransversal())
    rep = empirical_homogeneity_test(pts, 1.0, [TestSet(1.0, 2.0)], [2.0])
    row = rep.per_probe[0]
    assert rep.passed
    assert row["expected_ratio"] == 0.5
    # counts are ~ Poisson(10^4 / 2) and ~ Poisson(10^4 / 4)
    assert row["ratio"] == pytest.approx(0.5, abs=0.05)


def test_sets_below_the_visible_radius_are_skipped(line):
    cone, _ = line
    pts = series_points(cone, RadialLaw(1.0), ConstantMark(np.ones(1)), 10.0, 50, 0, NormTransversal())
    rep = empirical_homogeneity_test(pts, 1.0, [TestSet(0.01, 0.02)], [2.0], visible_radius=0.1)
    assert rep.passed is None
    assert "skipped" in rep.per_probe[0]


def test_test_set_bounds():
    with pytest.raises(DomainError):
        TestSet(2.0, 1.0)


# --- integrability and reports -----------------------------------------------


def test_eps_condition_report_flags_large_alpha(line):
    cone, probes = line
    sp = ConstantMark(np.ones(1))
    assert eps_condition_report(cone, RadialLaw(1.2), sp, probes[:2]).passed
    assert eps_condition_report(cone, RadialLaw(2.5), sp, probes[:2]).passed is False


def test_report_round_trip():
    rep = VerificationReport(
        "demo", 1.25, 3.0, "permutation", True, {"n": 10}, {"seed": 4}, 100.0, 0.7, 1e-5,
        [{"probe": "u=1", "diff": 0.1}], ["note"],
    )
    back = VerificationReport.from_lines(rep.dumps().splitlines())
    assert back == rep
    row = rep.csv_row()
    assert len(row) == len(VerificationReport.CSV_HEADER)
    assert row[:4] == ["demo", "true", "1.25", "3"]
    assert row[-1] == format(1e-5, ".17g")
