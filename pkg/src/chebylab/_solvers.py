"""Nearest-point kernels shared by the set variants.

All kernels are batched: they take an ``(N, n)`` array of query points and
return per-row results, so the limit estimators can evaluate hundreds of
nearby points in one call.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import Delaunay, QhullError

from chebylab.normed_space import NormSpec, dual_norm_values, norm_values, support_gradients

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _rowdot(A, B):
    return np.einsum("ij,ij->i", A, B)


def segment_argmin(norm: NormSpec, R0: np.ndarray, D: np.ndarray, hi, steps: int = 64):
    """Minimize ``||R0 - mu D||`` over ``mu in [0, hi]`` row by row.

    The derivative ``-<grad(R0 - mu D), D>`` is monotone, so bisection on
    its sign converges to machine precision. Requires ``1 < p < inf``.
    """
    N = R0.shape[0]
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (N,)).copy()

    def slope(mu):
        return -_rowdot(support_gradients(norm, R0 - mu[:, None] * D), D)

    lo = np.zeros(N)
    mu = np.zeros(N)
    at_hi = slope(hi) <= 0
    mu[at_hi] = hi[at_hi]
    inner = ~at_hi & (slope(lo) < 0)
    if inner.any():
        a, b = lo[inner], hi[inner]
        Ri, Di = R0[inner], D[inner]
        for _ in range(steps):
            mid = 0.5 * (a + b)
            s = -_rowdot(support_gradients(norm, Ri - mid[:, None] * Di), Di)
            neg = s < 0
            a = np.where(neg, mid, a)
            b = np.where(neg, b, mid)
        mu[inner] = 0.5 * (a + b)
    return mu


def in_hull(V: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Containment of the rows of ``X`` in the convex hull of ``V``."""
    n = V.shape[1]
    if V.shape[0] >= n + 1:
        try:
            if n == 1:
                lo, hi = V.min(), V.max()
                return (X[:, 0] >= lo) & (X[:, 0] <= hi)
            return Delaunay(V).find_simplex(X) >= 0
        except QhullError:
            pass
    # lower-dimensional hull: test each row with a feasibility LP
    out = np.zeros(X.shape[0], dtype=bool)
    A_eq = np.vstack([V.T, np.ones((1, V.shape[0]))])
    for i, x in enumerate(X):
        res = linprog(np.zeros(V.shape[0]), A_eq=A_eq, b_eq=np.r_[x, 1.0],
                      bounds=(0, None), method="highs")
        out[i] = res.status == 0
    return out


@dataclass
class BatchSolution:
    values: np.ndarray
    points: np.ndarray
    gaps: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray


def polytope_frank_wolfe(V: np.ndarray, X: np.ndarray, norm: NormSpec,
                         gap_tol: float = 1e-10, max_iter: int = 10_000,
                         polish_every: int = 10) -> BatchSolution:
    """Distance to ``conv(V)`` under a smooth strictly convex norm.

    Pairwise Frank-Wolfe on the barycentric weights, minimizing the norm of
    the residual directly. Every ``polish_every`` iterations each row tries
    an exact solve on the edge spanned by its two leading vertices. The
    Frank-Wolfe gap ``max_j <f, V_j> - <f, v>`` with ``f`` the support
    functional of the residual bounds ``||x - v|| - d(x)`` from above and is
    returned as the certificate.
    """
    N, n = X.shape
    m = V.shape[0]
    values = np.zeros(N)
    points = X.copy()
    gaps = np.zeros(N)
    iters = np.zeros(N, dtype=int)
    conv = np.ones(N, dtype=bool)
    inside = in_hull(V, X)
    todo = np.flatnonzero(~inside)
    if todo.size == 0:
        return BatchSolution(values, points, gaps, iters, conv)

    Xo = X[todo]
    K = Xo.shape[0]
    dist_v = norm_values(norm, Xo[:, None, :] - V[None, :, :])
    lam = np.zeros((K, m))
    lam[np.arange(K), np.argmin(dist_v, axis=1)] = 1.0
    done = np.zeros(K, dtype=bool)
    best_pt = lam @ V
    best_gap = np.full(K, np.inf)
    it_count = np.zeros(K, dtype=int)

    def certify(rows, P):
        R = Xo[rows] - P
        F = support_gradients(norm, R)
        S = F @ V.T
        return np.max(S, axis=1) - _rowdot(F, P), S

    def face_gap(rows, P, F, faces):
        # gap of the functional with its component along the active face
        # removed; for p < 2 the raw gradient keeps a tangential part of
        # order sqrt(eps) that stalls the plain gap above gap_tol
        F = F.copy()
        sizes = np.array([len(idx) for idx in faces])
        edge = np.flatnonzero(sizes == 2)
        if edge.size:
            E = np.array([V[faces[k][1]] - V[faces[k][0]] for k in edge])
            F[edge] -= (_rowdot(F[edge], E) / _rowdot(E, E))[:, None] * E
        for k in np.flatnonzero(sizes > 2):
            E = (V[faces[k][1:]] - V[faces[k][0]]).T
            F[k] -= E @ np.linalg.lstsq(E, F[k], rcond=None)[0]
        size = dual_norm_values(norm, F)
        ok = size > 1e-300
        F[ok] /= size[ok][:, None]
        X_r = Xo[rows]
        lower = _rowdot(F, X_r) - np.max(F @ V.T, axis=1)
        out = norm_values(norm, X_r - P) - lower
        out[~ok] = np.inf
        return out

    def sharpen(rows, g, P, faces):
        slow = np.flatnonzero(g > gap_tol)
        if slow.size and n > 1:
            F = support_gradients(norm, Xo[rows[slow]] - P[slow])
            g = g.copy()
            g[slow] = np.minimum(g[slow], face_gap(rows[slow], P[slow], F,
                                                    [faces[k] for k in slow]))
        return g

    def record(rows, g, Q):
        better = g < best_gap[rows]
        upd = rows[better]
        best_gap[upd] = g[better]
        best_pt[upd] = Q[better]
        done[rows[g <= gap_tol]] = True

    def polish(rows):
        L = lam[rows]
        P = L @ V
        g0, S = certify(rows, P)
        record(rows, sharpen(rows, g0, P, [np.flatnonzero(l > 0) for l in L]), P)
        a = np.argmax(L, axis=1)
        fw = np.argmax(S, axis=1)
        order = np.argsort(-L, axis=1, kind="stable")
        second = order[:, 1] if m > 1 else a
        b = np.where(fw != a, fw, second)
        R0 = Xo[rows] - V[a]
        D = V[b] - V[a]
        mu = segment_argmin(norm, R0, D, 1.0)
        Q = V[a] + mu[:, None] * D
        g, _ = certify(rows, Q)
        faces = [[i, j] if 0.0 < t < 1.0 else [i if t == 0.0 else j]
                 for i, j, t in zip(a, b, mu)]
        record(rows, sharpen(rows, g, Q, faces), Q)

    for it in range(max_iter):
        rows = np.flatnonzero(~done)
        if rows.size == 0:
            break
        if it % polish_every == 0:
            polish(rows)
            rows = np.flatnonzero(~done)
            if rows.size == 0:
                break
        L = lam[rows]
        P = L @ V
        R = Xo[rows] - P
        F = support_gradients(norm, R)
        S = F @ V.T
        fw = np.argmax(S, axis=1)
        gap = S[np.arange(rows.size), fw] - _rowdot(F, P)
        better = gap < best_gap[rows]
        best_gap[rows[better]] = gap[better]
        best_pt[rows[better]] = P[better]
        fin = gap <= gap_tol
        if fin.any():
            polish(rows[fin])
            done[rows[fin]] = True
        live = ~fin
        rows, L, R, S, fw = rows[live], L[live], R[live], S[live], fw[live]
        if rows.size == 0:
            continue
        away = np.argmin(np.where(L > 0, S, np.inf), axis=1)
        r = np.arange(rows.size)
        D = V[fw] - V[away]
        gamma = segment_argmin(norm, R, D, L[r, away], steps=40)
        L[r, fw] += gamma
        L[r, away] -= gamma
        L[L < 1e-15] = 0.0
        L /= L.sum(axis=1, keepdims=True)
        lam[rows] = L
        it_count[rows] += 1

    unfinished = np.flatnonzero(~done)
    if unfinished.size:
        polish(unfinished)
    values_o = norm_values(norm, Xo - best_pt)
    values[todo] = values_o
    points[todo] = best_pt
    gaps[todo] = np.maximum(best_gap, 0.0)
    iters[todo] = it_count
    conv[todo] = best_gap <= gap_tol
    return BatchSolution(values, points, gaps, iters, conv)


def _polyhedral_breakpoints(R0: np.ndarray, D: np.ndarray, p: float) -> np.ndarray:
    """Candidate parameters in [0, 1] containing every minimizer's kinks.

    ``R0`` and ``D`` have shape ``(..., n)`` in scaled coordinates. The
    function ``mu -> ||R0 - mu D||`` is convex and piecewise linear, so
    its minimizing interval has endpoints among 0, 1 and the kinks.
    """
    n = R0.shape[-1]
    cands = [np.zeros(R0.shape[:-1]), np.ones(R0.shape[:-1])]
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            cands.append(R0[..., i] / D[..., i])
        if math.isinf(p):
            for i, j in itertools.combinations(range(n), 2):
                for sg in (1.0, -1.0):
                    cands.append((R0[..., i] - sg * R0[..., j]) / (D[..., i] - sg * D[..., j]))
    C = np.stack(cands, axis=-1)
    C = np.where(np.isfinite(C), C, 0.0)
    return np.clip(C, 0.0, 1.0)


def segments_polyhedral(A: np.ndarray, B: np.ndarray, X: np.ndarray, norm: NormSpec):
    """Exact distance from the rows of ``X`` to a union of segments.

    ``A`` and ``B`` are ``(S, n)`` endpoint arrays, the norm is l^1 or
    l^inf (possibly weighted). Returns ``(values, cand_points, cand_values)``
    where the candidates have shape ``(N, S*C, n)`` and ``(N, S*C)``.
    """
    s = norm.scale
    R0 = (X[:, None, :] - A[None, :, :]) * s
    D = np.broadcast_to(((B - A) * s)[None, :, :], R0.shape)
    mu = _polyhedral_breakpoints(R0, D, norm.p)
    N, S, C = mu.shape
    pts = A[None, :, None, :] + mu[..., None] * (B - A)[None, :, None, :]
    vals = norm_values(norm, X[:, None, None, :] - pts)
    pts = pts.reshape(N, S * C, -1)
    vals = vals.reshape(N, S * C)
    return vals.min(axis=1), pts, vals


def polytope_lp(V: np.ndarray, x: np.ndarray, norm: NormSpec, slack: float = 1e-9):
    """Distance to ``conv(V)`` for l^1/l^inf norms by linear programming.

    Returns ``(value, extremes)``: the optimal value and, for each
    coordinate, the minimizers extremal in that coordinate (an outer
    description of the minimizer face).
    """
    m, n = V.shape
    s = norm.scale
    SV = V.T * s[:, None]  # (n, m)
    sx = s * x
    if math.isinf(norm.p):
        k = 1
        A_norm = np.vstack([np.hstack([-SV, -np.ones((n, 1))]),
                            np.hstack([SV, -np.ones((n, 1))])])
        obj = np.r_[np.zeros(m), 1.0]
    else:
        k = n
        A_norm = np.vstack([np.hstack([-SV, -np.eye(n)]),
                            np.hstack([SV, -np.eye(n)])])
        obj = np.r_[np.zeros(m), np.ones(n)]
    b_norm = np.r_[-sx, sx]
    A_eq = np.r_[np.ones(m), np.zeros(k)][None, :]
    bounds = [(0, None)] * (m + k)
    res = linprog(obj, A_ub=A_norm, b_ub=b_norm, A_eq=A_eq, b_eq=[1.0],
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"polytope LP failed: {res.message}")
    value = float(res.fun)
    A_ub = np.vstack([A_norm, obj[None, :]])
    b_ub = np.r_[b_norm, value + slack]
    extremes = []
    for j in range(n):
        for sign in (1.0, -1.0):
            c = np.r_[sign * V[:, j], np.zeros(k)]
            r = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                        bounds=bounds, method="highs")
            if r.status == 0:
                extremes.append(r.x[:m] @ V)
    return value, extremes


def golden_minimize(fun, a: np.ndarray, b: np.ndarray, steps: int = 80):
    """Vectorized golden-section search of a batch of unimodal functions.

    ``fun`` maps an array of parameters shaped like ``a`` to values.
    Returns ``(argmin, min_value, final_width)``.
    """
    a = a.copy()
    b = b.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(steps):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        # the retained interior point keeps its value, only one new evaluation
        probe = np.where(left, c_next, d_next)
        fp = fun(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_next, d_next
    mid = 0.5 * (a + b)
    cands = np.stack([a, b, mid], axis=0)
    vals = np.stack([fun(a), fun(b), fun(mid)], axis=0)
    k = np.argmin(vals, axis=0)
    idx = np.indices(k.shape)
    return cands[(k, *idx)], vals[(k, *idx)], b - a
