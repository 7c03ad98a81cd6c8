"""Brute-force distance oracle.

Distances are computed as a plain minimum over a dense sample of the set's
boundary with spacing at most ``resolution`` in the ambient norm, so the
result exceeds the true distance by at most ``resolution``. Containment is
decided by direct inequalities (a feasibility LP for polytopes), never by
the solvers under test. Enumeration is implemented for the plane; point
clouds work in any dimension.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from chebylab.normed_space import NormSpec, as_vector, norm_values
from chebylab.sets import (
    Ball,
    ClosedSet,
    ConvexPolytope,
    FunctionGraph,
    HalfSpace,
    PointCloud,
    Sphere,
    Union,
)

_CHUNK = 200_000


def _min_dist(x, P, norm):
    best = math.inf
    for i in range(0, P.shape[0], _CHUNK):
        best = min(best, float(norm_values(norm, P[i:i + _CHUNK] - x).min()))
    return best


def _segment_samples(a, b, norm, resolution):
    length = float(norm_values(norm, b - a))
    k = max(2, int(math.ceil(length / resolution)) + 1)
    t = np.linspace(0.0, 1.0, k)[:, None]
    return a + t * (b - a)


def _lp_contains(V, x):
    m = V.shape[0]
    A_eq = np.vstack([V.T, np.ones((1, m))])
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=np.r_[x, 1.0], bounds=(0, None), method="highs")
    return res.status == 0


def _sphere_samples(center, radius, norm, resolution):
    k = 64
    while True:
        th = np.linspace(0.0, 2 * math.pi, k, endpoint=False)
        U = np.stack([np.cos(th), np.sin(th)], axis=1)
        P = center + radius * U / norm_values(norm, U)[:, None]
        gaps = norm_values(norm, np.roll(P, -1, axis=0) - P)
        if gaps.max() <= resolution:
            return P
        k = int(k * max(2.0, 1.1 * gaps.max() / resolution))


def _halfspace_boundary(a, b, bbox):
    """Segment of the line ``<a, v> = b`` inside a planar box."""
    p0 = a * b / float(a @ a)
    d = np.array([-a[1], a[0]])
    lo_t, hi_t = -math.inf, math.inf
    for i in range(2):
        lo, hi = bbox[i]
        if d[i] == 0:
            if not lo <= p0[i] <= hi:
                return None
            continue
        t1, t2 = (lo - p0[i]) / d[i], (hi - p0[i]) / d[i]
        lo_t, hi_t = max(lo_t, min(t1, t2)), min(hi_t, max(t1, t2))
    if lo_t > hi_t:
        return None
    return p0 + lo_t * d, p0 + hi_t * d


def brute_force_distance(set_: ClosedSet, x, norm: NormSpec, resolution: float = 1e-3,
                         bbox=None) -> float:
    """Distance from ``x`` to the set by dense enumeration.

    Parameters
    ----------
    bbox : sequence of (lo, hi) pairs, optional
        Required for unbounded sets; the nearest points must lie inside.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    x = as_vector(x, set_.dim)
    if isinstance(set_, PointCloud):
        return _min_dist(x, set_.points, norm)
    if isinstance(set_, Union):
        return min(brute_force_distance(m, x, norm, resolution, bbox) for m in set_.members)
    if set_.unbounded and bbox is None:
        raise ValueError(f"{set_.kind} is unbounded: brute-force enumeration needs a bounding box")
    if set_.dim != 2:
        raise ValueError("brute-force enumeration is implemented for dim 2 only")

    if isinstance(set_, HalfSpace):
        if float(set_.a @ x) <= set_.b:
            return 0.0
        seg = _halfspace_boundary(set_.a, set_.b, np.asarray(bbox, dtype=float))
        if seg is None:
            raise ValueError("half-space boundary does not meet the bounding box")
        return _min_dist(x, _segment_samples(*seg, norm, resolution), norm)
    if isinstance(set_, ConvexPolytope):
        V = set_.vertices
        if _lp_contains(V, x):
            return 0.0
        if V.shape[0] == 1:
            return _min_dist(x, V, norm)
        pieces = [_segment_samples(V[i], V[j], norm, resolution)
                  for i, j in itertools.combinations(range(V.shape[0]), 2)]
        return _min_dist(x, np.vstack(pieces), norm)
    if isinstance(set_, (Ball, Sphere)):
        if isinstance(set_, Ball) and float(norm_values(norm, x - set_.center)) <= set_.radius:
            return 0.0
        return _min_dist(x, _sphere_samples(set_.center, set_.radius, norm, resolution), norm)
    if isinstance(set_, FunctionGraph):
        P = np.stack([set_.nodes, set_.values_table], axis=1)
        pieces = [_segment_samples(P[i], P[i + 1], norm, resolution) for i in range(len(P) - 1)]
        return _min_dist(x, np.vstack(pieces), norm)
    raise TypeError(f"no enumeration for {type(set_).__name__}")
