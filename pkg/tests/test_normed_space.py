import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chebylab.normed_space import (
    NormSpec,
    ZeroVectorError,
    dual_index,
    dual_is_strictly_convex,
    dual_norm_eval,
    is_smooth_at,
    is_strictly_convex,
    norm_eval,
    norm_gateaux_derivative,
    norm_values,
    support_functionals,
)

L1, L2, L3, LINF = NormSpec.lp(1, 2), NormSpec.lp(2, 2), NormSpec.lp(3, 2), NormSpec.max_norm(2)


def test_norm_examples():
    assert norm_eval(L2, [3, 4]) == 5.0
    assert norm_eval(L1, [1, -1]) == 2.0
    assert norm_eval(LINF, [1, -3]) == 3.0


def test_dual_norm_examples():
    assert dual_norm_eval(L2, [3, 4]) == pytest.approx(5.0, abs=1e-15)
    assert dual_norm_eval(L1, [2, -5]) == 5.0
    # dual index 3/2: (1 + 1)^(2/3)
    assert dual_norm_eval(L3, [1, 1]) == pytest.approx(2.0 ** (2.0 / 3.0), rel=1e-14)


def test_dual_index():
    assert dual_index(2) == 2
    assert dual_index(3) == pytest.approx(1.5)
    assert dual_index(1) == math.inf
    assert dual_index(math.inf) == 1


@pytest.mark.parametrize("bad", [dict(kind="lp", p=0.5, dim=2), dict(kind="lp", p=2, dim=0),
                                 dict(kind="weighted_lp", p=2, dim=2, weights=(1.0, -1.0)),
                                 dict(kind="bogus", p=2, dim=2)])
def test_invalid_specs(bad):
    with pytest.raises(ValueError):
        NormSpec(**bad)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        norm_eval(L2, [1, 2, 3])


def test_serialization_round_trip():
    for spec in (L1, L2, LINF, NormSpec.weighted(2.5, [1.0, 4.0]), NormSpec.lp(math.inf, 3)):
        assert NormSpec.from_dict(spec.to_dict()) == spec


def test_support_functionals_examples():
    (f,) = support_functionals(L2, [3, 4])
    np.testing.assert_allclose(f, [0.6, 0.8], atol=1e-15)
    fs = sorted(tuple(f) for f in support_functionals(L1, [1, 0]))
    assert fs == [(1.0, -1.0), (1.0, 1.0)]
    (f,) = support_functionals(L1, [1, 1])
    np.testing.assert_array_equal(f, [1.0, 1.0])


def test_support_functionals_zero_vector():
    with pytest.raises(ZeroVectorError):
        support_functionals(L2, [0, 0])


def test_max_norm_face_extremes():
    fs = support_functionals(LINF, [1, 1])
    assert sorted(tuple(f) for f in fs) == [(0.0, 1.0), (1.0, 0.0)]


def test_smoothness_examples():
    assert is_smooth_at(L2, [0.3, -2]).smooth
    v = is_smooth_at(L1, [1, 0])
    assert not v.smooth
    assert sorted(tuple(f) for f in v.functionals) == [(1.0, -1.0), (1.0, 1.0)]
    assert is_smooth_at(L1, [2, 3]).smooth


def test_strict_convexity_examples():
    v = is_strictly_convex(L1)
    assert not v.strictly_convex
    u, w = v.witness
    assert norm_eval(L1, u + w) == pytest.approx(norm_eval(L1, u) + norm_eval(L1, w))
    np.testing.assert_array_equal(u, [1, 0])
    np.testing.assert_array_equal(w, [0, 1])
    v = is_strictly_convex(LINF)
    assert not v.strictly_convex
    np.testing.assert_array_equal(v.witness[0], [1, 1])
    np.testing.assert_array_equal(v.witness[1], [1, 0])
    v = is_strictly_convex(L2, samples=5000, seed=3)
    assert v.strictly_convex and v.witness is None


def test_dual_strict_convexity():
    assert dual_is_strictly_convex(L2)
    assert not dual_is_strictly_convex(L1)
    assert dual_is_strictly_convex(L3)
    assert not dual_is_strictly_convex(LINF)


def test_norm_derivative_examples():
    d = norm_gateaux_derivative(L2, [3, 4], [1, 0])
    assert d.exists and d.value == pytest.approx(0.6, abs=1e-12) and d.fd_agrees
    d = norm_gateaux_derivative(L1, [1, 0], [0, 1])
    assert not d.exists
    assert (d.left, d.right) == (-1.0, 1.0)
    d = norm_gateaux_derivative(L3, [1, 1], [1, 0])
    assert d.exists and d.value == pytest.approx(2.0 ** (-2.0 / 3.0), rel=1e-12)


def test_weighted_dual_matches_sampled_supremum():
    # sup over the unit sphere of <f, v>, approximated densely in the plane
    spec = NormSpec.weighted(3.0, [1.0, 5.0])
    th = np.linspace(0, 2 * np.pi, 200_001)
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    U /= norm_values(spec, U)[:, None]
    f = np.array([0.7, -1.3])
    assert dual_norm_eval(spec, f) == pytest.approx((U @ f).max(), rel=1e-8)


def test_dual_of_dual_is_original():
    spec = NormSpec.weighted(1.5, [2.0, 0.5, 3.0])
    back = spec.dual().dual()
    v = np.array([0.3, -1.2, 2.0])
    assert norm_eval(back, v) == pytest.approx(norm_eval(spec, v), rel=1e-13)


# ---------------------------------------------------------------- properties

exponents = st.sampled_from([1.0, 1.25, 1.5, 2.0, 3.0, 7.5, math.inf])
vectors = arrays(np.float64, (3,), elements=st.floats(-1e3, 1e3, allow_nan=False))


def _spec(p, weights=None):
    if weights is not None:
        return NormSpec.weighted(p, weights)
    return NormSpec.max_norm(3) if math.isinf(p) else NormSpec.lp(p, 3)


weights = st.one_of(st.none(), st.lists(st.floats(0.1, 10.0), min_size=3, max_size=3))


@given(exponents, weights, vectors, vectors, st.floats(-50, 50))
def test_norm_axioms(p, w, u, v, c):
    spec = _spec(p, w)
    nu, nv = norm_eval(spec, u), norm_eval(spec, v)
    assert nu >= 0
    assert norm_eval(spec, c * u) == pytest.approx(abs(c) * nu, rel=1e-12, abs=1e-12)
    assert norm_eval(spec, u + v) <= nu + nv + 1e-9 * (1 + nu + nv)


@given(exponents, weights, vectors, vectors)
def test_holder_inequality(p, w, f, v):
    spec = _spec(p, w)
    lhs = abs(float(f @ v))
    assert lhs <= dual_norm_eval(spec, f) * norm_eval(spec, v) * (1 + 1e-12) + 1e-9


@given(exponents, weights, vectors)
def test_support_functionals_attain_the_norm(p, w, x):
    spec = _spec(p, w)
    if norm_eval(spec, x) < 1e-6:
        return
    for f in support_functionals(spec, x):
        assert dual_norm_eval(spec, f) == pytest.approx(1.0, abs=1e-9)
        assert float(f @ x) == pytest.approx(norm_eval(spec, x), rel=1e-9)


@given(st.sampled_from([1.5, 2.0, 3.0]), vectors, vectors)
def test_gateaux_derivative_matches_central_difference(p, x, y):
    spec = _spec(p)
    if norm_eval(spec, x) < 1e-2 or np.min(np.abs(x)) < 1e-3:
        return
    y = y / max(1.0, np.abs(y).max())
    h = 1e-6 * norm_eval(spec, x)
    fd = (norm_eval(spec, x + h * y) - norm_eval(spec, x - h * y)) / (2 * h)
    d = norm_gateaux_derivative(spec, x, y)
    assert d.exists
    assert d.value == pytest.approx(fd, abs=1e-5 * (1 + abs(fd)))


@given(arrays(np.float64, (4,), elements=st.sampled_from([0.0, 0.0, -2.5, 1.0, 3.0, -0.1])))
def test_l1_smoothness_is_all_coordinates_nonzero(x):
    if not np.any(x):
        return
    assert is_smooth_at(NormSpec.lp(1, 4), x).smooth == bool(np.all(x != 0))
