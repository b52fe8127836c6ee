import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tailcluster.errors import ConfigurationError
from tailcluster.field import (
    FieldSample,
    NormSpec,
    OrderSpec,
    Window,
    exceedance_sum,
    first_exceedance,
    infargsup,
    shift,
    sum_alpha,
    sup_norm,
)
from tailcluster.lattice import LatticeSpec

W3 = Window.cube(3)
ABS = NormSpec("absolute")


def fs(mapping, window=W3):
    return FieldSample.from_mapping(mapping, window)


def test_shift_example():
    g = shift(fs({-1: 1.0, 0: 2.0, 1: 3.0}), 1)
    assert {k[0]: float(v[0]) for k, v in g.to_mapping().items()} == {0: 1.0, 1: 2.0, 2: 3.0}


def test_shift_drops_points_leaving_window():
    g = shift(fs({2: 1.0, 3: 5.0}), 1)
    assert {k[0]: float(v[0]) for k, v in g.to_mapping().items()} == {3: 1.0}


def test_zero_shift_is_identity():
    f = fs({-1: 1.0, 0: 2.0, 1: 3.0})
    g = shift(f, 0)
    assert np.array_equal(g.values, f.values) and np.array_equal(g.covered, f.covered)


def test_inverse_shift_on_mutual_coverage():
    f = FieldSample(W3, np.arange(7, dtype=float))
    back = shift(shift(f, 2), -2)
    cov = back.covered
    assert np.array_equal(back.values[cov], f.values[cov])
    assert cov.sum() == 5


@pytest.mark.parametrize(
    "mapping, alpha, norm, expected",
    [({0: 1.0, 1: 2.0}, 2.0, ABS, 5.0), ({0: 0.0, 1: 0.0}, 1.0, ABS, 0.0), ({0: (3.0, 4.0)}, 1.0, NormSpec("euclidean"), 5.0)],
)
def test_sum_alpha_examples(mapping, alpha, norm, expected):
    assert sum_alpha(fs(mapping), None, alpha, norm) == pytest.approx(expected, abs=0)


def test_sum_alpha_uses_cell_volume():
    w = Window.cube(2, 1, grid_spacing=0.5)
    f = FieldSample.from_mapping({0: 1.0, 1: 2.0}, w)
    assert sum_alpha(f, None, 1.0, ABS) == pytest.approx(1.5)


@pytest.mark.parametrize(
    "mapping, tau, b, expected",
    [({-1: 0.5, 0: 1.0, 1: 3.0}, 1.0, 1.0, 4.0), ({-1: 0.5, 0: 1.0, 1: 3.0}, 0.0, 1.0, 2.0), ({0: 0.5}, 0.0, 10.0, 1.0)],
)
def test_exceedance_sum_examples(mapping, tau, b, expected):
    assert exceedance_sum(fs(mapping), None, tau, b, ABS) == pytest.approx(expected)


@pytest.mark.parametrize(
    "mapping, lattice, expected",
    [({-1: 1.0, 0: 2.0, 1: 3.0}, None, 3.0), ({0: 0.0}, None, 0.0), ({-1: 9.0, 0: 2.0}, LatticeSpec([[2]]), 2.0)],
)
def test_sup_norm_examples(mapping, lattice, expected):
    assert sup_norm(fs(mapping), lattice, ABS) == expected


@pytest.mark.parametrize("mapping, expected", [({-1: 2.0, 0: 3.0, 1: 3.0}, 0), ({0: 1.0}, 0), ({0: 0.0, 1: 0.0}, None)])
def test_infargsup_examples(mapping, expected):
    assert infargsup(fs(mapping), None, ABS) == expected


@pytest.mark.parametrize(
    "mapping, expected", [({-1: 0.5, 0: 1.5, 1: 2.0}, 0), ({0: 1.0}, None), ({-2: 3.0, 1: 3.0}, -2)]
)
def test_first_exceedance_examples(mapping, expected):
    assert first_exceedance(fs(mapping), None, ABS) == expected


def test_two_dimensional_points_are_tuples():
    w = Window.cube(2, 2)
    f = FieldSample.from_mapping({(0, 1): 2.0, (1, -1): 2.0, (0, 0): 0.5}, w)
    assert infargsup(f, None, ABS) == (0, 1)
    assert first_exceedance(f, None, ABS) == (0, 1)


def test_norm_kinds():
    v = np.array([[3.0, -4.0]])
    assert NormSpec("euclidean")(v)[0] == 5.0
    assert NormSpec("max")(v)[0] == 4.0
    assert NormSpec("weighted_sum", (1.0, 2.0))(v)[0] == 11.0
    with pytest.raises(ConfigurationError):
        NormSpec("absolute")(v)
    with pytest.raises(ConfigurationError):
        NormSpec("weighted_sum", (1.0, -1.0))


def test_nonfinite_values_rejected():
    with pytest.raises(ConfigurationError):
        FieldSample(W3, np.full(7, np.inf))


def test_csv_rows():
    rows = list(fs({0: 1.5, 2: 0.5}).csv_rows())
    assert rows == [[0, 1.5], [2, 0.5]]


# ---------------------------------------------------------------- properties

vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=100, deadline=None)
@given(vec, st.floats(1e-3, 1e3), st.sampled_from(["euclidean", "max", "weighted_sum"]))
def test_norm_is_one_homogeneous(v, c, kind):
    norm = NormSpec(kind, (1.0, 0.5, 2.0) if kind == "weighted_sum" else ())
    x = np.array([v])
    assert norm(c * x)[0] == pytest.approx(c * norm(x)[0], rel=1e-12, abs=1e-300)


def test_norm_of_zero():
    for kind in ("euclidean", "max"):
        assert NormSpec(kind)(np.zeros((1, 2)))[0] == 0.0


pt = st.tuples(st.integers(-20, 20), st.integers(-20, 20))


@settings(max_examples=200, deadline=None)
@given(pt, pt, pt)
def test_order_is_total_and_shift_invariant(i, j, k):
    if i != j:
        assert OrderSpec.less(i, j) != OrderSpec.less(j, i)
    if OrderSpec.less(i, j):
        assert OrderSpec.less(tuple(np.add(i, k)), tuple(np.add(j, k)))


interior = st.lists(st.floats(0.0, 10.0, allow_nan=False), min_size=5, max_size=5)


@settings(max_examples=150, deadline=None)
@given(interior, st.integers(-3, 3), st.floats(0.01, 100.0))
def test_argmax_maps_shift_and_scale(vals, h, c):
    w = Window.cube(10)
    f = FieldSample.from_mapping({t - 2: v for t, v in enumerate(vals)}, w)
    j = infargsup(f, None, ABS)
    if j is None:
        return
    assert infargsup(shift(f, h), None, ABS) == j + h
    assert infargsup(f.scaled(c), None, ABS) == j
    assert sup_norm(f, None, ABS) > 0
    fe = first_exceedance(f, None, ABS)
    if fe is not None:
        assert first_exceedance(shift(f, h), None, ABS) == fe + h
        x0 = f.value_at(0)
        assert abs(f.value_at(fe)[0]) > 1 >= min(1.0, abs(x0[0]))


@settings(max_examples=150, deadline=None)
@given(interior, st.integers(-3, 3), st.floats(0.1, 3.0), st.floats(0.0, 2.0), st.floats(0.5, 5.0))
def test_sum_shift_covariance_and_scale_identity(vals, h, alpha, tau, b):
    w = Window.cube(10)
    f = FieldSample.from_mapping({t - 2: v for t, v in enumerate(vals)}, w)
    assert sum_alpha(shift(f, h), None, alpha, ABS) == pytest.approx(sum_alpha(f, None, alpha, ABS), rel=1e-12)
    assert exceedance_sum(f, None, tau, b, ABS) == exceedance_sum(f.scaled(b), None, tau, 1.0, ABS)
