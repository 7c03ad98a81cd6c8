"""
Closed subsets of a finite-dimensional normed space.

Each set variant knows how to compute distances for a batch of points
(:meth:`ClosedSet.values`, the hot path used by the limit estimators) and
the full nearest-point structure for a single point
(:meth:`ClosedSet.nearest`), including every distinct minimizer cluster.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from chebylab import _solvers
from chebylab.normed_space import (
    NormSpec,
    ZERO_TOL,
    as_vector,
    dual_norm_eval,
    norm_values,
    support_functionals,
)

#: minimizer representatives closer than this (ambient norm) are merged.
CLUSTER_DELTA = 1e-3
#: candidates within this much of the minimum distance count as minimizers.
VALUE_TOL = 1e-6
#: rounding allowance attached to closed-form distances.
ANALYTIC_ERROR = 1e-12
GRAPH_SCAN = 1024


@dataclass(frozen=True)
class SolverInfo:
    method: str
    iterations: int = 0
    converged: bool = True


@dataclass(frozen=True)
class NearestPointResult:
    """Distance, distinct minimizer clusters and a certified error bound."""

    distance: float
    minimizers: tuple
    certified_error: float
    solver_info: SolverInfo

    @property
    def unique(self) -> bool:
        return len(self.minimizers) == 1


def cluster_points(points, norm: NormSpec, delta: float = CLUSTER_DELTA) -> list:
    """Greedy clustering in input order; returns one representative each."""
    reps = []
    for p in points:
        if all(norm_values(norm, p - r) > delta for r in reps):
            reps.append(np.asarray(p, dtype=float))
    return reps


def _result(x, norm, distance, cands, bound, info) -> NearestPointResult:
    reps = cluster_points(cands, norm)
    dev = max((abs(float(norm_values(norm, x - r)) - distance) for r in reps), default=0.0)
    return NearestPointResult(float(distance), tuple(reps), float(max(bound, dev)), info)


class ClosedSet:
    """Base class of the set variants."""

    kind = "abstract"
    #: whether some region must be supplied for brute-force enumeration
    unbounded = False

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def _check(self, norm: NormSpec):
        if norm.dim != self.dim:
            raise ValueError(f"norm dimension {norm.dim} != set dimension {self.dim}")

    def values(self, X, norm: NormSpec) -> np.ndarray:
        """Distances of the rows of ``X`` to the set."""
        raise NotImplementedError

    def nearest(self, x, norm: NormSpec) -> NearestPointResult:
        raise NotImplementedError

    def anchor_points(self) -> np.ndarray:
        """A few points of the set (vertices, centers) used for sampling."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _rows(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[-1] != dim:
        raise ValueError(f"points have dimension {X.shape[-1]}, expected {dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError("points have non-finite entries")
    return X


def _matrix(points, name):
    A = np.asarray(points, dtype=float)
    if A.ndim != 2 or A.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty list of points")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class PointCloud(ClosedSet):
    points: np.ndarray
    kind = "point_cloud"

    def __post_init__(self):
        object.__setattr__(self, "points", _matrix(self.points, "points"))

    @property
    def dim(self):
        return self.points.shape[1]

    def values(self, X, norm):
        self._check(norm)
        X = _rows(X, self.dim)
        return norm_values(norm, X[:, None, :] - self.points[None]).min(axis=1)

    def nearest(self, x, norm):
        self._check(norm)
        x = as_vector(x, self.dim)
        d = norm_values(norm, x[None, :] - self.points)
        best = float(d.min())
        cands = self.points[d <= best + VALUE_TOL]
        return _result(x, norm, best, cands, 0.0, SolverInfo("enumeration"))

    def anchor_points(self):
        return np.array(self.points)

    def to_dict(self):
        return {"kind": self.kind, "points": self.points.tolist()}


@dataclass(frozen=True, eq=False)
class ConvexPolytope(ClosedSet):
    """Convex hull of finitely many vertices."""

    vertices: np.ndarray
    kind = "convex_polytope"

    def __post_init__(self):
        object.__setattr__(self, "vertices", _matrix(self.vertices, "vertices"))

    @property
    def dim(self):
        return self.vertices.shape[1]

    def _segments(self):
        V = self.vertices
        if V.shape[0] == 1:
            return V, V
        pairs = np.array(list(itertools.combinations(range(V.shape[0]), 2)))
        return V[pairs[:, 0]], V[pairs[:, 1]]

    def _polyhedral_exact(self, norm):
        return norm.is_polyhedral and self.dim <= 2

    def values(self, X, norm):
        self._check(norm)
        X = _rows(X, self.dim)
        V = self.vertices
        if not norm.is_polyhedral:
            return _solvers.polytope_frank_wolfe(V, X, norm).values
        inside = _solvers.in_hull(V, X)
        out = np.zeros(X.shape[0])
        rows = np.flatnonzero(~inside)
        if rows.size == 0:
            return out
        if self._polyhedral_exact(norm):
            A, B = self._segments()
            out[rows] = _solvers.segments_polyhedral(A, B, X[rows], norm)[0]
        else:
            out[rows] = [_solvers.polytope_lp(V, x, norm)[0] for x in X[rows]]
        return out

    def nearest(self, x, norm):
        self._check(norm)
        x = as_vector(x, self.dim)
        V = self.vertices
        if not norm.is_polyhedral:
            sol = _solvers.polytope_frank_wolfe(V, x[None, :], norm)
            info = SolverInfo("frank-wolfe", int(sol.iterations[0]), bool(sol.converged[0]))
            bound = float(sol.gaps[0]) + ANALYTIC_ERROR
            return _result(x, norm, float(sol.values[0]), [sol.points[0]], bound, info)
        if _solvers.in_hull(V, x[None, :])[0]:
            return _result(x, norm, 0.0, [x], 0.0, SolverInfo("containment"))
        if self._polyhedral_exact(norm):
            A, B = self._segments()
            best, pts, vals = _solvers.segments_polyhedral(A, B, x[None, :], norm)
            best = float(best[0])
            cands = pts[0][vals[0] <= best + VALUE_TOL]
            return _result(x, norm, best, cands, ANALYTIC_ERROR, SolverInfo("segment-breakpoints"))
        value, extremes = _solvers.polytope_lp(V, x, norm)
        return _result(x, norm, value, extremes, 1e-8, SolverInfo("linear-program"))

    def anchor_points(self):
        return np.array(self.vertices)

    def to_dict(self):
        return {"kind": self.kind, "vertices": self.vertices.tolist()}


@dataclass(frozen=True, eq=False)
class HalfSpace(ClosedSet):
    """The set ``{v : <a, v> <= b}``."""

    a: np.ndarray
    b: float
    kind = "half_space"
    unbounded = True

    def __post_init__(self):
        a = as_vector(self.a, name="a")
        if np.max(np.abs(a)) == 0:
            raise ValueError("half-space normal must be nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return self.a.size

    def values(self, X, norm):
        self._check(norm)
        X = _rows(X, self.dim)
        return np.maximum(X @ self.a - self.b, 0.0) / dual_norm_eval(norm, self.a)

    def nearest(self, x, norm):
        self._check(norm)
        x = as_vector(x, self.dim)
        excess = float(x @ self.a) - self.b
        if excess <= 0:
            return _result(x, norm, 0.0, [x], 0.0, SolverInfo("closed-form"))
        d = excess / dual_norm_eval(norm, self.a)
        # unit vectors w with <a, w> = ||a||_* are support functionals of a in the dual
        ws = support_functionals(norm.dual(), self.a)
        return _result(x, norm, d, [x - d * w for w in ws], ANALYTIC_ERROR,
                       SolverInfo("closed-form"))

    def anchor_points(self):
        return (self.b / float(self.a @ self.a) * self.a)[None, :]

    def to_dict(self):
        return {"kind": self.kind, "a": self.a.tolist(), "b": self.b}


def _ball_facets(center, radius, norm: NormSpec) -> list:
    """Facets of a polyhedral-norm sphere, each as a vertex array."""
    n = norm.dim
    h = radius / norm.scale
    facets = []
    if norm.p == 1:
        for signs in itertools.product((1.0, -1.0), repeat=n):
            facets.append(center + np.diag(np.array(signs) * h))
    else:
        for i in range(n):
            others = [j for j in range(n) if j != i]
            for sg in (1.0, -1.0):
                verts = []
                for signs in itertools.product((1.0, -1.0), repeat=n - 1):
                    v = center.copy()
                    v[i] += sg * h[i]
                    for j, t in zip(others, signs):
                        v[j] += t * h[j]
                    verts.append(v)
                facets.append(np.array(verts))
    return facets


def _union_nearest(x, norm, results) -> NearestPointResult:
    best = min(r.distance for r in results)
    cands, bound = [], 0.0
    for r in results:
        if r.distance <= best + VALUE_TOL:
            cands.extend(r.minimizers)
            bound = max(bound, r.certified_error)
    conv = all(r.solver_info.converged for r in results)
    its = sum(r.solver_info.iterations for r in results)
    return _result(x, norm, best, cands, bound, SolverInfo("union", its, conv))


@dataclass(frozen=True, eq=False)
class _Round(ClosedSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_vector(self.center, name="center")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not (r > 0 and math.isfinite(r)):
            raise ValueError("radius must be positive")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return self.center.size

    def _boundary_nearest(self, x, norm, offset, interior):
        """Nearest points of the sphere for ``x`` off the center."""
        c, r = self.center, self.radius
        if not norm.is_polyhedral:
            m = c + r * (x - c) / offset
            return _result(x, norm, abs(offset - r), [m], ANALYTIC_ERROR, SolverInfo("radial"))
        facets = [ConvexPolytope(F).nearest(x, norm) for F in _ball_facets(c, r, norm)]
        res = _union_nearest(x, norm, facets)
        return NearestPointResult(abs(offset - r), res.minimizers,
                                  max(res.certified_error, ANALYTIC_ERROR),
                                  SolverInfo("facets", res.solver_info.iterations))

    def anchor_points(self):
        n = self.dim
        return np.vstack([self.center + self.radius * e for e in np.eye(n)])

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


class Ball(_Round):
    """Closed ball of the ambient norm."""

    kind = "ball"

    def values(self, X, norm):
        self._check(norm)
        X = _rows(X, self.dim)
        return np.maximum(norm_values(norm, X - self.center) - self.radius, 0.0)

    def nearest(self, x, norm):
        self._check(norm)
        x = as_vector(x, self.dim)
        off = float(norm_values(norm, x - self.center))
        if off <= self.radius:
            return _result(x, norm, 0.0, [x], 0.0, SolverInfo("closed-form"))
        return self._boundary_nearest(x, norm, off, interior=False)


class Sphere(_Round):
    """Sphere of the ambient norm; not convex."""

    kind = "sphere"

    def values(self, X, norm):
        self._check(norm)
        X = _rows(X, self.dim)
        return np.abs(norm_values(norm, X - self.center) - self.radius)

    def nearest(self, x, norm):
        self._check(norm)
        x = as_vector(x, self.dim)
        off = float(norm_values(norm, x - self.center))
        if off <= ZERO_TOL:
            # every point of the sphere is nearest; report the axis points
            reps = []
            for e in np.eye(self.dim):
                u = e / float(norm_values(norm, e))
                reps += [self.center + self.radius * u, self.center - self.radius * u]
            return _result(x, norm, self.radius, reps, ANALYTIC_ERROR, SolverInfo("closed-form"))
        return self._boundary_nearest(x, norm, off, interior=off < self.radius)


@dataclass(frozen=True, eq=False)
class FunctionGraph(ClosedSet):
    """Graph ``{(s, g(s)) : lo <= s <= hi}`` of a tabulated profile in the plane.

    ``g`` interpolates ``values`` linearly on an equispaced grid.
    """

    lo: float
    hi: float
    values_table: np.ndarray
    kind = "function_graph"

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not lo < hi:
            raise ValueError("function graph needs lo < hi")
        t = as_vector(self.values_table, name="values")
        if not 2 <= t.size <= GRAPH_SCAN:
            raise ValueError(f"function graph needs 2..{GRAPH_SCAN} samples")
        t.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values_table", t)

    @property
    def dim(self):
        return 2

    @property
    def samples(self):
        return self.values_table.size

    @property
    def nodes(self):
        return np.linspace(self.lo, self.hi, self.samples)

    def profile(self, s):
        return np.interp(s, self.nodes, self.values_table)

    def _solve(self, X, norm, keep=3):
        N = X.shape[0]
        grid = np.linspace(self.lo, self.hi, GRAPH_SCAN)

        def fun(S):
            P = np.stack([S, self.profile(S)], axis=-1)
            return norm_values(norm, P - X.reshape((N,) + (1,) * (S.ndim - 1) + (2,)))

        scan = fun(np.broadcast_to(grid, (N, GRAPH_SCAN)))
        # best `keep` local minima of the scan per row
        padded = np.pad(scan, ((0, 0), (1, 1)), constant_values=np.inf)
        is_min = (scan <= padded[:, :-2]) & (scan <= padded[:, 2:])
        ranked = np.argsort(np.where(is_min, scan, np.inf), axis=1, kind="stable")[:, :keep]
        h = grid[1] - grid[0]
        a = np.clip(grid[ranked] - h, self.lo, self.hi)
        b = np.clip(grid[ranked] + h, self.lo, self.hi)
        # split brackets at table nodes so the distance is convex on every piece;
        # node spacing >= scan spacing, so a bracket holds at most two nodes
        nodes = self.nodes
        idx = np.searchsorted(nodes, a, side="right")
        cuts = [a]
        for off in range(2):
            nk = nodes[np.clip(idx + off, 0, nodes.size - 1)]
            cuts.append(np.where((nk > a) & (nk < b), nk, b))
        cuts.append(b)
        cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
        S, vals, width = _solvers.golden_minimize(fun, cuts[..., :-1], cuts[..., 1:])
        return S.reshape(N, -1), vals.reshape(N, -1), float(width.max(initial=0.0))

    def values(self, X, norm):
        self._check(norm)
        X = _rows(X, 2)
        return self._solve(X, norm)[1].min(axis=1)

    def nearest(self, x, norm):
        self._check(norm)
        x = as_vector(x, 2)
        S, vals, width = self._solve(x[None, :], norm)
        best = float(vals.min())
        sel = S[0][vals[0] <= best + VALUE_TOL]
        pts = np.stack([sel, self.profile(sel)], axis=-1)
        slopes = np.diff(self.values_table) / (self.nodes[1] - self.nodes[0])
        lip = float(norm_values(norm, np.stack([np.ones_like(slopes), slopes], axis=-1)).max())
        return _result(x, norm, best, pts, lip * width + ANALYTIC_ERROR,
                       SolverInfo("scan+golden", GRAPH_SCAN))

    def anchor_points(self):
        return np.stack([self.nodes, self.values_table], axis=-1)

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi,
                "values": self.values_table.tolist()}


@dataclass(frozen=True, eq=False)
class Union(ClosedSet):
    members: tuple
    kind = "union"

    def __post_init__(self):
        ms = tuple(self.members)
        if not ms:
            raise ValueError("union needs at least one member")
        if len({m.dim for m in ms}) != 1:
            raise ValueError("union members must share a dimension")
        object.__setattr__(self, "members", ms)

    @property
    def dim(self):
        return self.members[0].dim

    @property
    def unbounded(self):
        return any(m.unbounded for m in self.members)

    def values(self, X, norm):
        self._check(norm)
        X = _rows(X, self.dim)
        return np.min([m.values(X, norm) for m in self.members], axis=0)

    def nearest(self, x, norm):
        self._check(norm)
        x = as_vector(x, self.dim)
        return _union_nearest(x, norm, [m.nearest(x, norm) for m in self.members])

    def anchor_points(self):
        return np.vstack([m.anchor_points() for m in self.members])

    def to_dict(self):
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members]}


def set_from_dict(d: dict) -> ClosedSet:
    kind = d["kind"]
    if kind == "point_cloud":
        return PointCloud(d["points"])
    if kind == "convex_polytope":
        return ConvexPolytope(d["vertices"])
    if kind == "half_space":
        return HalfSpace(d["a"], d["b"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "sphere":
        return Sphere(d["center"], d["radius"])
    if kind == "function_graph":
        return FunctionGraph(d["lo"], d["hi"], d["values"])
    if kind == "union":
        return Union(tuple(set_from_dict(m) for m in d["members"]))
    raise ValueError(f"unknown set kind {kind!r}")


def distance(set_: ClosedSet, x, norm: NormSpec) -> NearestPointResult:
    """Distance from ``x`` to the set with all distinct minimizers."""
    return set_.nearest(x, norm)


def membership(set_: ClosedSet, v, norm: NormSpec, tol: float = 1e-9) -> bool:
    return float(set_.values(as_vector(v, set_.dim), norm)[0]) <= tol


@dataclass(frozen=True)
class ChebyshevVerdict:
    status: str
    witnesses: tuple = ()

    @property
    def chebyshev(self) -> bool:
        return self.status == "CHEBYSHEV_ON_GRID"


def is_chebyshev_on_grid(set_: ClosedSet, norm: NormSpec, grid: Sequence,
                         tol: float = CLUSTER_DELTA) -> ChebyshevVerdict:
    """Sampled uniqueness check of nearest points; never a global proof.

    Each witness is ``(point, minimizers)`` for a grid point with more than
    one minimizer cluster at separation ``tol``.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    witnesses = []
    for g in grid:
        g = as_vector(g, set_.dim)
        res = set_.nearest(g, norm)
        reps = cluster_points(res.minimizers, norm, tol)
        if len(reps) > 1:
            witnesses.append((g, tuple(reps)))
    return ChebyshevVerdict("NOT_CHEBYSHEV" if witnesses else "CHEBYSHEV_ON_GRID",
                            tuple(witnesses))
