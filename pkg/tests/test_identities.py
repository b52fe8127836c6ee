import math

import numpy as np
import pytest
from scipy import stats

from tailcluster.errors import ConfigurationError
from tailcluster.field import Window
from tailcluster.identities import (
    FUNCTIONALS,
    IDENTITIES,
    IdentityCase,
    battery_summary,
    default_battery,
    identity_window,
    run_battery,
    run_event_equality,
    run_identity,
)
from tailcluster.models import ModelSpec


def close(value, se, target, k=3.0):
    return abs(value - target) <= k * se + 1e-12


# ----------------------------------------------------------------------------
# functionals


@pytest.mark.parametrize("fid", [f.id for f in FUNCTIONALS.values() if f.homogeneity is not None])
def test_homogeneity(fid):
    f = FUNCTIONALS[fid]
    rng = np.random.default_rng(11)
    w = Window.cube(4, 1)
    alpha = 1.5
    x = rng.pareto(1.0, size=(100, len(w.points))) * (rng.random((100, len(w.points))) < 0.7)
    c = rng.uniform(0.01, 100.0, size=100)
    base = f(x, w, alpha, 1)
    scaled = f(x * c[:, None], w, alpha, 1)
    deg = f.homogeneity * (alpha if fid in ("sup_alpha", "l2_alpha") else 1.0)
    np.testing.assert_allclose(scaled, c**deg * base, rtol=1e-12, atol=0)


@pytest.mark.parametrize("fid", list(FUNCTIONALS))
def test_functional_bounds(fid):
    f = FUNCTIONALS[fid]
    rng = np.random.default_rng(12)
    w = Window.cube(4, 1)
    x = rng.exponential(size=(500, len(w.points))) * 3
    v = f(x, w, 1.0, 0)
    assert v.shape == (500,) and np.all(v >= 0) and np.all(v <= f.bound)


def test_ratio01_shift():
    w = Window.cube(2, 1)
    x = np.array([[0.0, 4.0, 1.0, 3.0, 0.0]])  # points -2..2
    # at h = 1 the pair is (x(-1), x(0))
    assert FUNCTIONALS["ratio01"](x, w, 1.0, 1)[0] == pytest.approx(4 / 5)
    assert FUNCTIONALS["ratio01"](x, w, 1.0, 0)[0] == pytest.approx(1 / 4)


# ----------------------------------------------------------------------------
# case validation


@pytest.mark.parametrize(
    "iid,fid",
    [("spectral_shift", "sup_alpha"), ("spectral_shift", "exc_pair"), ("tail_shift", "l2_alpha"), ("cluster_four_way", "ratio01"), ("anchor_sum", "max_exceeds_2"), ("anchor_conditional", "clip_p1")],
)
def test_incompatible_functional(ar1, iid, fid):
    with pytest.raises(ConfigurationError):
        IdentityCase(iid, ar1, fid)


def test_unknown_ids(ar1):
    with pytest.raises(ConfigurationError):
        IdentityCase("nope", ar1)
    with pytest.raises(ConfigurationError):
        IdentityCase("tail_shift", ar1, "nope")
    with pytest.raises(ConfigurationError):
        IdentityCase("tail_shift", ar1, n=1)


def test_event_identity_not_two_sided(ar1):
    with pytest.raises(ConfigurationError):
        run_identity(IdentityCase("dissipative_events", ar1, n=100))


def test_nota_box_must_fit(mm):
    with pytest.raises(ConfigurationError):
        run_identity(IdentityCase("window_sup", mm, params=(("K", 6),), n=100, window=Window.cube(4, 1)))


# ----------------------------------------------------------------------------
# closed-form and enumeration checks


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_tyy_constant_functional(alpha):
    m = ModelSpec("ar1_tail_chain", alpha=alpha, phi=0.5)
    r = run_identity(IdentityCase("tail_shift", m, "one", (("h", 0), ("x", 2.0)), 50_000, seed=1))
    target = 2.0**-alpha
    assert close(r.lhs, r.lhs_stderr, target) and close(r.rhs, r.rhs_stderr, target)
    assert abs(r.z) < 4


def test_eqdo20_ar1_enumeration(ar1):
    """Theta = (.., phi^-1 w.p. phi^alpha, 1, phi, ..); both sides equal
    phi^alpha / (1 + phi^alpha) for the two-point ratio at h = 1."""
    r = run_identity(IdentityCase("spectral_shift", ar1, "ratio01", (("h", 1),), 100_000, seed=2))
    target = 0.5 * (1 / (1 + 0.5))
    assert abs(r.z) < 4
    assert close(r.lhs, r.lhs_stderr, target) and close(r.rhs, r.rhs_stderr, target)


def test_nota_moving_max_enumeration(mm):
    # E[max(Z(-1), Z(0), Z(1))] = sum over shifts of the max coefficient / 3 = 7/3
    r = run_identity(IdentityCase("window_sup", mm, "one", (("K", 1), ("tau", 0.0)), 50_000, seed=3))
    assert close(r.lhs, r.lhs_stderr, 7 / 3) and close(r.rhs, r.rhs_stderr, 7 / 3)


def test_cluster_four_way_moving_max(mm):
    vals = []
    for sides in ((0, 1), (0, 2), (0, 3)):
        r = run_identity(IdentityCase("cluster_four_way", mm, "sup_alpha", (("construction", "anchor_y"), ("sides", sides)), 30_000, seed=4))
        assert abs(r.z) < 4
        vals.append((r.rhs, r.rhs_stderr))
    # E[sup ||Q||^alpha] is the extremal index 2/3 for this model
    for v, se in vals:
        assert close(v, se, 2 / 3)


def test_0e11a_ar1_value(ar1):
    r = run_identity(IdentityCase("anchor_sum", ar1, "sup_alpha", (("sides", (0, 1)),), 30_000, seed=5))
    # E[sup Theta^alpha / S(Theta)] = 1 - phi^alpha
    assert close(r.lhs, r.lhs_stderr, 0.5) and abs(r.z) < 4


# ----------------------------------------------------------------------------
# determinism and stream handling


def test_sides_use_independent_streams(ar1):
    case = IdentityCase("tail_shift", ar1, "one", (("h", 0), ("x", 2.0)), 2000, seed=6)
    r = run_identity(case)
    s = run_identity(case, swap_streams=True)
    assert (r.lhs, r.rhs) != (s.lhs, s.rhs)
    assert run_identity(case) == r


def test_thread_invariance(mm):
    case = IdentityCase("window_sup", mm, "one", (("K", 1), ("tau", 1.0)), 9000, seed=7)
    assert run_identity(case, threads=1) == run_identity(case, threads=4)


# ----------------------------------------------------------------------------
# battery


def test_battery_shape():
    cases = default_battery(n=1000)
    assert len(cases) >= 20
    assert {c.identity_id for c in cases} == set(IDENTITIES) - {"dissipative_events"}
    assert {c.model.kind for c in cases} == {"ar1_tail_chain", "moving_max"}
    per_id = {}
    for c in cases:
        per_id.setdefault(c.identity_id, set()).add(c.functional)
    assert all(len(v) >= 2 for k, v in per_id.items() if k != "window_sup")
    assert len({c.label for c in cases}) == len(cases)


def test_full_battery_passes():
    results = run_battery(default_battery(n=100_000, seed=0))
    s = battery_summary(results)
    assert s["verdict"] == "PASS", [(r.label, r.z) for r in results if abs(r.z) >= 4]
    assert s["flagged"] <= 2


def test_battery_summary_rules():
    class R:
        def __init__(self, z):
            self.z = z

    assert battery_summary([R(0.1), R(4.2), R(-4.5)])["verdict"] == "PASS"
    assert battery_summary([R(4.1), R(4.2), R(-4.5)])["verdict"] == "FAIL"
    assert battery_summary([R(5.0)])["verdict"] == "FAIL"


def test_seed_swap_sign_test():
    cases = default_battery(n=5000, seed=3)
    plain = run_battery(cases)
    swapped = run_battery(cases, swap_streams=True)
    d = [abs(s.z) - abs(p.z) for p, s in zip(plain, swapped) if abs(s.z) != abs(p.z)]
    pos = sum(v > 0 for v in d)
    assert len(d) >= 20
    assert stats.binomtest(pos, len(d)).pvalue > 0.01


# ----------------------------------------------------------------------------
# event equality


@pytest.mark.parametrize("name", ["mm", "ar1", "br"])
def test_event_equality(name, request):
    m = request.getfixturevalue(name)
    w = identity_window(m) if m.kind != "ar1_tail_chain" else Window.cube(60, 1)
    out = run_event_equality(m, w, 20_000, seed=8)
    assert out["verdict"] == "PASS" and out["min_agreement"] >= 0.999
    assert out["event_rates"]["J1_defined"] == 1.0


def test_event_equality_moving_max_exact(mm):
    out = run_event_equality(mm, identity_window(mm), 5000, seed=9)
    assert all(v == 1.0 for v in out["agreement"].values())
    assert all(v == 1.0 for v in out["event_rates"].values())


def test_window_helper(mm, br):
    assert identity_window(br).half_width == (32,)
    assert min(identity_window(mm).half_width) >= 8
    assert math.isfinite(FUNCTIONALS["one"].bound)
