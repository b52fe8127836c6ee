import math
import warnings

import numpy as np
import pytest
from scipy import stats

from tailcluster.cluster import ClusterConstructionSpec
from tailcluster.errors import ConfigurationError
from tailcluster.maxstable import (
    MaxStableSampleSpec,
    TruncationWarning,
    dehaan_sample,
    empirical_neglog_cdf,
    fidi_neglog,
    frechet_ks,
    rosinski_sample,
)
from tailcluster.models import ModelSpec, ShiftDistribution

NS = 10_000


def mm_fidi_oracle(coeffs, alpha, points, levels):
    """E[max_i x_i^-alpha Z(t_i)^alpha] for the moving maximum.

    Z(t) = a_{t-N} / p(N)^{1/alpha} with N uniform on a box; the expectation
    is the sum over shifts N of max_i x_i^-alpha a_{t_i - N}^alpha, divided by
    sum a^alpha.
    """
    a = np.asarray(coeffs, dtype=float) ** alpha
    lo, hi = min(points) - len(a), max(points) + len(a)
    total = 0.0
    for s in range(lo, hi + 1):
        vals = [a[t - s] * x ** (-alpha) for t, x in zip(points, levels) if 0 <= t - s < len(a)]
        total += max(vals, default=0.0)
    return total / a.sum()


def husler_reiss_bivariate(gamma):
    return 2 * stats.norm.cdf(math.sqrt(gamma) / 2)


def test_oracle_values():
    assert mm_fidi_oracle((2, 1), 1.0, [0, 1], [1, 1]) == pytest.approx(5 / 3)
    assert mm_fidi_oracle((2, 1), 1.0, [0], [1]) == pytest.approx(1.0)
    assert mm_fidi_oracle((2, 1), 1.0, [0, 1, 2], [1, 1, 1]) == pytest.approx(7 / 3)


# ----------------------------------------------------------------------------
# sample spec validation


@pytest.mark.parametrize("eps", [0.0, -0.1, 0.2])
def test_epsilon_range(mm, eps):
    with pytest.raises(ConfigurationError):
        MaxStableSampleSpec(mm, ((0,),), stopping_epsilon=eps)


def test_spec_rejects_bad_fields(mm):
    for kw in ({"representation": "x"}, {"representer": "x"}, {"stopping": "never"}):
        with pytest.raises(ConfigurationError):
            MaxStableSampleSpec(mm, ((0,),), **kw)
    with pytest.raises(ConfigurationError):
        MaxStableSampleSpec(mm, ())
    with pytest.raises(ConfigurationError):
        MaxStableSampleSpec(mm, ((0, 1),))


def test_scalar_points_normalized(mm):
    assert MaxStableSampleSpec(mm, (0, 2)).points == ((0,), (2,))


def test_rosinski_rejects_rejection_constructions(mm):
    spec = MaxStableSampleSpec(mm, ((0,),), construction=ClusterConstructionSpec("anchor_y"))
    with pytest.raises(ConfigurationError):
        rosinski_sample(spec, 10, seed=1)


# ----------------------------------------------------------------------------
# marginals


@pytest.mark.parametrize("name", ["mm", "ar1", "br"])
def test_unit_frechet_marginal(name, request):
    m = request.getfixturevalue(name)
    rep = "spectral" if m.kind == "brown_resnick" else "raw"
    x = dehaan_sample(MaxStableSampleSpec(m, ((0,),), representer=rep), NS, seed=2)[:, 0]
    assert frechet_ks(x, m.alpha) < 0.02


def test_single_point_neglog(mm):
    x = dehaan_sample(MaxStableSampleSpec(mm, ((0,),)), NS, seed=3)
    levels = [[0.5], [1.0], [2.0]]
    val, se = empirical_neglog_cdf(x, levels)
    for v, s, (lv,) in zip(val, se, levels):
        assert abs(v - 1 / lv) <= 3 * s


def test_alpha_two_marginal():
    m = ModelSpec("moving_max", alpha=2.0, coeffs=(2.0, 1.0))
    x = dehaan_sample(MaxStableSampleSpec(m, ((0,),)), NS, seed=4)[:, 0]
    assert frechet_ks(x, 2.0) < 0.02


def test_exact_stopping_is_reported(mm):
    _, d = dehaan_sample(MaxStableSampleSpec(mm, ((0,), (1,))), 200, seed=5, return_diagnostics=True)
    assert d["stopping_rule"] == "exact" and d["bound"] > 0
    assert d["truncated_samples"] == 0 and d["mean_terms"] >= 1


def test_markov_stopping_is_reported(ar1):
    _, d = dehaan_sample(MaxStableSampleSpec(ar1, ((0,),), stopping="markov"), 200, seed=6, return_diagnostics=True)
    assert d["stopping_rule"] == "markov"
    assert d["max_achieved_epsilon"] < 0.01 + 1e-12


def test_term_budget_warns(ar1):
    spec = MaxStableSampleSpec(ar1, ((0,), (3,)), stopping="markov", stopping_epsilon=0.001, max_terms=2)
    with pytest.warns(TruncationWarning):
        _, d = dehaan_sample(spec, 50, seed=7, return_diagnostics=True)
    assert d["truncated_samples"] > 0 and "achieved_epsilon_worst" in d


# ----------------------------------------------------------------------------
# fidi


def test_fidi_single_point_unit(mm, ar1, br):
    for m in (mm, ar1, br):
        v, se = fidi_neglog(m, [(0,)], [1.0], 20_000, seed=8)
        assert abs(v - 1.0) <= 3 * se + 1e-12


def test_fidi_duplicate_points(ar1):
    one = fidi_neglog(ar1, [(0,)], [1.0], 5000, seed=9)
    two = fidi_neglog(ar1, [(0,), (0,)], [1.0, 1.0], 5000, seed=9)
    assert abs(one[0] - two[0]) <= 3 * math.hypot(one[1], two[1]) + 1e-12


def test_fidi_moving_max_enumeration(mm):
    pts = [0, 1, 2]
    lv = np.array([[1, 1, 1], [0.5, 1, 2], [2, 2, 0.5]], dtype=float)
    v, se = fidi_neglog(mm, [(p,) for p in pts], lv, 20_000, seed=10)
    for row, vi, si in zip(lv, v, se):
        assert abs(vi - mm_fidi_oracle((2, 1), 1.0, pts, row)) <= 3 * si + 1e-12


def test_fidi_rejects_bad_levels(mm):
    with pytest.raises(ConfigurationError):
        fidi_neglog(mm, [(0,)], [0.0], 10, seed=1)
    with pytest.raises(ConfigurationError):
        fidi_neglog(mm, [(0,), (1,)], [1.0], 10, seed=1)


def test_fidi_br_husler_reiss(br):
    v, se = fidi_neglog(br, [(0,), (1,)], [1.0, 1.0], 20_000, seed=11, representer="spectral")
    assert abs(v - husler_reiss_bivariate(10.0)) <= 3 * se


def test_dehaan_matches_fidi_moving_max(mm):
    pts = ((0,), (1,), (2,))
    x = dehaan_sample(MaxStableSampleSpec(mm, pts), NS, seed=12)
    for lv in ([1, 1, 1], [0.5, 1, 2]):
        val, se = empirical_neglog_cdf(x, [lv])
        assert abs(val[0] - mm_fidi_oracle((2, 1), 1.0, [0, 1, 2], lv)) <= 3 * se[0]


# ----------------------------------------------------------------------------
# sampler-level properties


def test_max_stability(ar1):
    spec = MaxStableSampleSpec(ar1, ((0,), (1,)), stopping="markov")
    k = 4
    single = dehaan_sample(spec, NS, seed=13)[:, 1]
    many = dehaan_sample(spec, k * NS, seed=14)[:, 1].reshape(NS, k)
    scaled = many.max(axis=1) / k ** (1 / ar1.alpha)
    assert stats.ks_2samp(single, scaled).statistic < 0.03


def test_stopping_soundness(ar1):
    pts = ((0,), (2,))
    levels = [[0.5, 0.5], [1, 1], [2, 2]]
    cdfs = {}
    for eps in (0.1, 0.05):
        spec = MaxStableSampleSpec(ar1, pts, stopping="markov", stopping_epsilon=eps)
        x = dehaan_sample(spec, NS, seed=15)
        cdfs[eps] = np.exp(-empirical_neglog_cdf(x, levels)[0])
    assert np.all(np.abs(cdfs[0.1] - cdfs[0.05]) < 0.1)


def test_thread_determinism(mm):
    spec = MaxStableSampleSpec(mm, ((0,), (1,)))
    a = dehaan_sample(spec, 9000, seed=16, threads=1)
    b = dehaan_sample(spec, 9000, seed=16, threads=8)
    assert np.array_equal(a, b)


def test_rosinski_vs_dehaan_moving_max(mm):
    spec = MaxStableSampleSpec(mm, ((0,), (1,)))
    d = dehaan_sample(spec, NS, seed=17)
    r = rosinski_sample(spec, NS, seed=18)
    for i in range(2):
        assert stats.ks_2samp(d[:, i], r[:, i]).statistic < 0.02
    for lv in ([1, 1], [0.5, 2]):
        val, se = empirical_neglog_cdf(r, [lv])
        assert abs(val[0] - mm_fidi_oracle((2, 1), 1.0, [0, 1], lv)) <= 3 * se[0]


def test_rosinski_shift_laws(mm):
    for sd in (ShiftDistribution("uniform_window"), ShiftDistribution("symmetric_geometric_product", 0.6)):
        spec = MaxStableSampleSpec(mm, ((0,),), shift_dist=sd)
        x = rosinski_sample(spec, NS, seed=19)[:, 0]
        assert frechet_ks(x, 1.0) < 0.02


def test_rosinski_degenerate_point_mass():
    m = ModelSpec("deterministic_q", alpha=1.0, q_table=(((0,), (1.0,)),))
    sd = ShiftDistribution("uniform_window", half_width=0)
    spec = MaxStableSampleSpec(m, ((0,),), shift_dist=sd, q_half_width=0)
    r = rosinski_sample(spec, NS, seed=20)[:, 0]
    d = dehaan_sample(MaxStableSampleSpec(m, ((0,),)), NS, seed=20)[:, 0]
    # one term decides each sample: X(0) = 1 / Gamma_1
    assert frechet_ks(r, 1.0) < 0.02 and frechet_ks(d, 1.0) < 0.02


def test_rosinski_br_bivariate(br):
    pts = ((0,), (1,))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        r = rosinski_sample(MaxStableSampleSpec(br, pts, stopping_epsilon=0.05), NS, seed=21)
        d = dehaan_sample(MaxStableSampleSpec(br, pts, representer="spectral"), NS, seed=22)
    vr, sr = empirical_neglog_cdf(r, [[1, 1]])
    vd, sd_ = empirical_neglog_cdf(d, [[1, 1]])
    assert abs(vr[0] - vd[0]) <= 3 * math.hypot(sr[0], sd_[0])
    assert abs(vd[0] - husler_reiss_bivariate(10.0)) <= 3 * sd_[0]
