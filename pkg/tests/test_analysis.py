import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chebylab.analysis import (
    DEFAULT_T,
    ScalarField,
    TSequence,
    corollary1_check,
    corollary2_check,
    dini_lower,
    dini_upper,
    distance_field,
    f_phi_estimate,
    gateaux_derivative_probe,
    norm_field,
    one_sided_limit,
    oscillating_field,
    singleton_subdifferential_probe,
    subdifferential_check,
    upper_bound_inequality_check,
)
from chebylab.normed_space import NormSpec
from chebylab.sets import Ball, ConvexPolytope, HalfSpace, PointCloud, Sphere

L1, L2, L3 = NormSpec.lp(1, 2), NormSpec.lp(2, 2), NormSpec.lp(3, 2)
HALF = HalfSpace([1, 0], 0)
X = np.array([3.0, 4.0])
# tail steps reach t ~ 1e-10, so rounding of phi ~ 5 alone moves a
# quotient by about eps * 5 / 1e-10 ~ 1e-5
ROUNDING = 1e-4


def test_t_sequence():
    t = DEFAULT_T.values()
    assert t.size == 31 and t[0] == 0.1 and t[-1] == pytest.approx(0.1 * 0.5 ** 30)
    j = TSequence(jitter=0.1, seed=4).values()
    assert np.all(np.abs(j / t - 1) <= 0.1)
    np.testing.assert_array_equal(j, TSequence(jitter=0.1, seed=4).values())


def test_dini_examples():
    assert dini_lower(norm_field(L2), X, X).value == pytest.approx(5.0, abs=1e-9)
    phi = distance_field(HALF, L2)
    assert dini_lower(phi, X, [3, 0]).value == pytest.approx(3.0, abs=ROUNDING)
    assert dini_lower(phi, X, [-3, 0]).value == pytest.approx(-3.0, abs=ROUNDING)
    sph = distance_field(Sphere([0, 0], 1), L2)
    assert dini_upper(sph, [0, 0], [1, 0]).value == pytest.approx(-1.0, abs=ROUNDING)
    l1 = norm_field(L1)
    assert dini_upper(l1, [1, 0], [0, 1]).value == pytest.approx(1.0, abs=ROUNDING)
    assert dini_lower(l1, [1, 0], [0, -1]).value == pytest.approx(1.0, abs=ROUNDING)
    assert dini_upper(phi, [-2, 1], [1, 1]).value == 0.0


def test_one_sided_limit_detects_oscillation():
    est = one_sided_limit(oscillating_field(2), [0, 0], [1, 0])
    assert not est.converged


def test_upper_bound_inequality_examples():
    assert upper_bound_inequality_check(HALF, L2, X) <= 1e-8
    assert upper_bound_inequality_check(Sphere([0, 0], 1), L2, [2, 0], (0.1, 1.0)) <= 1e-8
    assert upper_bound_inequality_check(PointCloud([[0, 0]]), L2, [1, 0], (1.0,)) == 0.0
    with pytest.raises(ValueError):
        upper_bound_inequality_check(HALF, L2, [-1, 0])


def test_gateaux_probe_examples():
    v = gateaux_derivative_probe(distance_field(HALF, L2), X)
    assert v.exists
    np.testing.assert_allclose(v.functional, [1, 0], atol=1e-9)
    v = gateaux_derivative_probe(oscillating_field(2), [0, 0])
    assert not v.exists
    v = gateaux_derivative_probe(norm_field(L1), [1, 0])
    assert not v.exists
    np.testing.assert_allclose(np.abs(v.witness), [0, 1], atol=1e-12)
    assert v.left == pytest.approx(-1.0, abs=1e-6) and v.right == pytest.approx(1.0, abs=1e-6)


def test_subdifferential_check_examples():
    phi = distance_field(HALF, L2)
    sample = np.random.default_rng(0).uniform(-10, 10, (500, 2))
    assert subdifferential_check(phi, X, [1, 0], sample).max_violation == 0.0
    probe = subdifferential_check(phi, X, [1.1, 0], [[10, 4]])
    assert probe.max_violation == pytest.approx(0.7, abs=1e-12)
    osc = subdifferential_check(oscillating_field(2), [0, 0], [0, 0], sample)
    assert osc.max_violation == 0.0


def test_singleton_probe_examples():
    v = singleton_subdifferential_probe(distance_field(HALF, L2), X, L2)
    assert v.status == "singleton"
    np.testing.assert_allclose(v.candidate, [1, 0], atol=1e-6)
    v = singleton_subdifferential_probe(norm_field(L1), [1, 0], L1)
    assert v.status == "multiple"
    got = sorted(tuple(np.round(a, 6)) for a in v.accepted)
    assert (1.0, -1.0) in got and (1.0, 1.0) in got
    # nonconvex d_K at the center of the circle: recorded only
    v = singleton_subdifferential_probe(distance_field(Sphere([0, 0], 1), L2), [0, 0], L2)
    assert v.status in ("empty", "multiple")


def test_f_phi_examples():
    e = f_phi_estimate(distance_field(HALF, L2), X, L2)
    assert 1 - 1e-3 <= e.value <= 1 + 1e-6
    const = ScalarField(batch=lambda P: np.full(len(P), 2.5))
    assert f_phi_estimate(const, X, L2).value == 0.0
    e = f_phi_estimate(norm_field(L2), X, L2)
    assert 1 - 1e-3 <= e.value <= 1 + 1e-6
    assert e.tail_min <= e.value == e.tail_max


@pytest.mark.parametrize("K,norm,x,bound", [
    (HALF, L2, (3, 4), 1e-6),
    (Ball([0, 0], 1), L2, (2, 0), 1e-6),
    (Ball([0, 0], 1), L3, (0, 1.5), 1e-4),
])
def test_corollary1_examples(K, norm, x, bound):
    r = corollary1_check(K, norm, x)
    assert r.status == "ok" and r.discrepancy <= bound


def test_corollary1_statuses():
    assert corollary1_check(HALF, L2, [-1, 0]).status == "x_in_set"
    tri = ConvexPolytope([[0, 0], [1, 0], [0, 1]])
    assert corollary1_check(tri, L1, [2, 0]).status == "norm_not_smooth"


def test_corollary2_examples():
    r = corollary2_check(HALF, L2, X)
    assert r.hypothesis_holds and r.differentiable.exists and r.consistent
    assert r.reverse_derivative.value == pytest.approx(-3.0, abs=ROUNDING)
    r = corollary2_check(Sphere([0, 0], 1), L2, [2, 0])
    assert r.hypothesis_holds and r.differentiable.exists and r.consistent
    r = corollary2_check(PointCloud([[0, 0], [2, 0]]), L2, [1, 0.5])
    assert r.status == "evaluated"
    # consistency is only binding where the hypothesis holds
    assert r.consistent or not r.hypothesis_holds


# ---------------------------------------------------------------- properties

pts = arrays(np.float64, (2,), elements=st.floats(-4, 4, allow_nan=False))
dirs = arrays(np.float64, (2,), elements=st.floats(-2, 2, allow_nan=False))
fields = st.sampled_from([
    distance_field(HALF, L2), distance_field(Ball([0, 0], 1), L3),
    distance_field(Sphere([0, 0], 1), L2), distance_field(PointCloud([[0, 0], [2, 0]]), L2),
    norm_field(L1),
])


@given(fields, pts, dirs)
def test_lower_dini_not_above_upper(phi, x, y):
    if np.abs(y).max() < 1e-3:
        return
    assert dini_lower(phi, x, y).value <= dini_upper(phi, x, y).value


@given(st.sampled_from([HALF, Ball([0, 0], 1), ConvexPolytope([[0, 0], [1, 0], [0, 1]])]),
       st.sampled_from([NormSpec.lp(1.5, 2), L2, L3]), pts, st.floats(0.05, 2.0))
def test_upper_bound_inequality_on_convex_sets(K, norm, x, t):
    if K.nearest(x, norm).distance < 1e-3:
        return
    assert upper_bound_inequality_check(K, norm, x, (t,)) <= 1e-8


@given(fields, pts, dirs)
def test_dini_quotients_bounded_by_lipschitz_constant(phi, x, y):
    n = float(np.abs(y).max())
    if n < 1e-3:
        return
    scale = float(np.sum(np.abs(y)))  # l1 dominates every norm used here
    assert abs(dini_upper(phi, x, y).value) <= scale + ROUNDING
