"""
Finite-dimensional real normed spaces.

A norm is described by a :class:`NormSpec` (plain, weighted or max-type
l^p). Vectors and functionals are plain ``numpy`` arrays; a functional
acts on a vector through the standard pairing ``<f, y> = sum(f_i y_i)``.

Every weighted l^p norm is an l^p norm applied to rescaled coordinates,
``||v|| = ||s * v||_p`` with ``s_i = w_i**(1/p)`` (``s_i = w_i`` for
``p = inf``). The dual norm is then ``||f||_* = ||f / s||_q`` and all
geometric queries reduce to the unweighted case in the ``u = s * v``
coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from chebylab.rng import stream

#: |u_i| at or below this value counts as an exact zero coordinate.
ZERO_TOL = 1e-12
#: two functionals are distinct when their dual-norm distance exceeds this.
SMOOTH_TOL = 1e-6
#: central-difference steps used to cross-check closed-form derivatives.
FD_STEPS = (1e-4, 1e-5, 1e-6)
FD_AGREE_TOL = 1e-6
#: minimum |sin(angle)| for a pair of vectors to count as non-parallel.
PARALLEL_TOL = 1e-3


class ZeroVectorError(ValueError):
    """Raised when an operation needs a nonzero vector."""


def as_vector(v, dim: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Validate and convert ``v`` to a finite 1-D float array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D sequence, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise ValueError(f"{name} has dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def dual_index(p: float) -> float:
    """Conjugate exponent ``q`` with ``1/p + 1/q = 1``."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormSpec:
    """A finite-dimensional l^p-type norm.

    Parameters
    ----------
    kind : {"lp", "weighted_lp", "max"}
    p : float
        Exponent in ``[1, inf]``. ``kind="max"`` forces ``p = inf``.
    dim : int
    weights : tuple of float, optional
        Positive coordinate weights, required for ``kind="weighted_lp"``.
    """

    kind: str
    p: float
    dim: int
    weights: Optional[tuple] = None
    _scale: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("lp", "weighted_lp", "max"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if self.kind == "max" and not math.isinf(p):
            raise ValueError("max norm requires p = inf")
        object.__setattr__(self, "p", p)
        if self.kind == "weighted_lp":
            if self.weights is None:
                raise ValueError("weighted_lp requires weights")
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.dim:
                raise ValueError(f"weights length {len(w)} != dim {self.dim}")
            if not all(x > 0 and math.isfinite(x) for x in w):
                raise ValueError("weights must be finite and strictly positive")
            object.__setattr__(self, "weights", w)
            wa = np.array(w)
            scale = wa if math.isinf(p) else wa ** (1.0 / p)
        else:
            if self.weights is not None:
                raise ValueError(f"{self.kind} norm takes no weights")
            scale = np.ones(self.dim)
        scale.setflags(write=False)
        object.__setattr__(self, "_scale", scale)

    @classmethod
    def lp(cls, p: float, dim: int) -> "NormSpec":
        return cls("lp", p, dim)

    @classmethod
    def weighted(cls, p: float, weights: Sequence[float]) -> "NormSpec":
        return cls("weighted_lp", p, len(weights), tuple(weights))

    @classmethod
    def max_norm(cls, dim: int) -> "NormSpec":
        return cls("max", math.inf, dim)

    @property
    def q(self) -> float:
        return dual_index(self.p)

    @property
    def scale(self) -> np.ndarray:
        return self._scale

    @property
    def is_polyhedral(self) -> bool:
        return self.p == 1 or math.isinf(self.p)

    def dual(self) -> "NormSpec":
        """The dual norm, again as a NormSpec on the same coordinates."""
        q = self.q
        if self.kind != "weighted_lp":
            return NormSpec.max_norm(self.dim) if math.isinf(q) else NormSpec.lp(q, self.dim)
        inv = 1.0 / self._scale
        w = inv if math.isinf(q) else inv**q
        return NormSpec.weighted(q, tuple(w))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.kind != "max":
            d["p"] = "inf" if math.isinf(self.p) else self.p
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NormSpec":
        kind = d["kind"]
        p = d.get("p", "inf" if kind == "max" else None)
        if p is None:
            raise ValueError("norm.p is required")
        p = math.inf if p in ("inf", "infinity") else float(p)
        w = d.get("weights")
        return cls(kind, p, int(d["dim"]), None if w is None else tuple(w))


def _lp(U: np.ndarray, p: float) -> np.ndarray:
    """l^p norm along the last axis, overflow-safe."""
    A = np.abs(U)
    if p == 1:
        return A.sum(axis=-1)
    m = A.max(axis=-1)
    if math.isinf(p):
        return m
    if p == 2:
        return np.sqrt(np.einsum("...i,...i->...", U, U))
    safe = np.where(m > 0, m, 1.0)
    return m * ((A / safe[..., None]) ** p).sum(axis=-1) ** (1.0 / p)


def norm_values(spec: NormSpec, V: np.ndarray) -> np.ndarray:
    """Vectorized norm along the last axis of ``V``."""
    return _lp(np.asarray(V, dtype=float) * spec.scale, spec.p)


def dual_norm_values(spec: NormSpec, F: np.ndarray) -> np.ndarray:
    return _lp(np.asarray(F, dtype=float) / spec.scale, spec.q)


def norm_eval(spec: NormSpec, v) -> float:
    """``||v||`` in the norm ``spec``."""
    return float(norm_values(spec, as_vector(v, spec.dim)))


def dual_norm_eval(spec: NormSpec, f) -> float:
    """``||f||_*``, the norm of ``f`` as a functional."""
    return float(dual_norm_values(spec, as_vector(f, spec.dim, "functional")))


def support_gradients(spec: NormSpec, V: np.ndarray) -> np.ndarray:
    """Closed-form support functionals of the rows of ``V``, for ``1 < p < inf``.

    Rows that are exactly zero map to zero. This is the gradient of the
    norm, used on hot paths by the nearest-point solvers.
    """
    U = np.asarray(V, dtype=float) * spec.scale
    p = spec.p
    if p == 2:
        n = np.sqrt(np.einsum("...i,...i->...", U, U))
        G = U / np.where(n > 0, n, 1.0)[..., None]
    else:
        A = np.abs(U)
        m = A.max(axis=-1, keepdims=True)
        W = A / np.where(m > 0, m, 1.0)
        nrm = (W**p).sum(axis=-1, keepdims=True) ** (1.0 / p)
        G = np.sign(U) * (W / np.where(nrm > 0, nrm, 1.0)) ** (p - 1.0)
    return G * spec.scale


def support_functionals(spec: NormSpec, x, tol: float = 1e-9) -> list:
    """Norm-one functionals attaining ``||x||`` at ``x``.

    For ``1 < p < inf`` the set is a singleton given in closed form. For
    ``p = 1`` and ``p = inf`` the set is a face of the dual ball and the
    extreme points of that face are returned.

    Raises
    ------
    ZeroVectorError
        If ``x = 0``.
    """
    x = as_vector(x, spec.dim)
    u = x * spec.scale
    if np.max(np.abs(u)) <= ZERO_TOL:
        raise ZeroVectorError("support functionals are undefined at the origin")
    s = spec.scale
    if not spec.is_polyhedral:
        return [support_gradients(spec, x)]
    if spec.p == 1:
        zero = np.abs(u) <= ZERO_TOL
        base = np.where(zero, 0.0, np.sign(u))
        idx = np.flatnonzero(zero)
        out = []
        for signs in itertools.product((1.0, -1.0), repeat=idx.size):
            g = base.copy()
            g[idx] = signs
            out.append(g * s)
    else:
        a = np.abs(u)
        m = a.max()
        active = np.flatnonzero(a >= m - ZERO_TOL * max(1.0, m))
        out = []
        for i in active:
            g = np.zeros(spec.dim)
            g[i] = np.sign(u[i])
            out.append(g * s)
    nx = norm_eval(spec, x)
    for f in out:
        # guards against a bad face enumeration, never expected to fire
        assert abs(dual_norm_eval(spec, f) - 1.0) <= tol
        assert abs(float(f @ x) - nx) <= tol * max(1.0, nx)
    return out


@dataclass(frozen=True)
class SmoothnessVerdict:
    smooth: bool
    functionals: tuple
    witnesses: tuple = ()

    def __bool__(self):
        return self.smooth


def is_smooth_at(spec: NormSpec, x, tol: float = SMOOTH_TOL) -> SmoothnessVerdict:
    """Whether exactly one support functional exists at ``x``.

    On failure the two most distant support functionals are returned as
    witnesses.
    """
    fs = support_functionals(spec, x)
    best, pair = 0.0, ()
    for f, g in itertools.combinations(fs, 2):
        dist = dual_norm_eval(spec, f - g)
        if dist > best:
            best, pair = dist, (f, g)
    if best > tol:
        return SmoothnessVerdict(False, tuple(fs), pair)
    return SmoothnessVerdict(True, tuple(fs[:1]))


def unit_sphere_samples(spec: NormSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """Directions uniform on the Euclidean sphere, renormalized to ``spec``."""
    G = rng.standard_normal((count, spec.dim))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    return G / norm_values(spec, G)[:, None]


def _non_parallel(x: np.ndarray, y: np.ndarray) -> bool:
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    c = float(x @ y) / (nx * ny)
    return math.sqrt(max(0.0, 1.0 - c * c)) > PARALLEL_TOL


@dataclass(frozen=True)
class StrictConvexityVerdict:
    strictly_convex: bool
    witness: Optional[tuple] = None
    samples_tried: int = 0


def is_strictly_convex(spec: NormSpec, samples: int = 1000, seed: int = 0,
                       tol: float = 1e-10) -> StrictConvexityVerdict:
    """Strict convexity of the norm, analytically and by falsification search.

    The analytic answer (``1 < p < inf``) is returned; the search looks for
    non-parallel unit vectors with ``||x + y|| >= 2 - tol``. Coordinate
    axis pairs are tried before random ones. A witness contradicting the
    analytic answer raises ``RuntimeError``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    analytic = not spec.is_polyhedral
    n = spec.dim
    eye = np.eye(n)
    cands = []
    if n >= 2:
        cands.append((eye[0], eye[1]))
        cands.append((eye[0] + eye[1], eye[0]))
    rng = stream(seed, "normed_space/strict_convexity")
    U = unit_sphere_samples(spec, 2 * samples, rng)
    cands.extend(zip(U[:samples], U[samples:]))
    witness, tried = None, 0
    for x, y in cands:
        tried += 1
        x = x / norm_eval(spec, x)
        y = y / norm_eval(spec, y)
        if not _non_parallel(x, y):
            continue
        if norm_eval(spec, x + y) >= 2.0 - tol:
            witness = (x, y)
            break
    if analytic and witness is not None:
        raise RuntimeError(f"strictly convex norm {spec} has equality witness {witness}")
    return StrictConvexityVerdict(analytic, witness, tried)


def dual_is_strictly_convex(spec: NormSpec) -> bool:
    """True iff the dual index lies strictly between 1 and infinity."""
    return 1.0 < spec.q < math.inf


@dataclass(frozen=True)
class NormDerivative:
    """Outcome of a Gateaux derivative query for the norm.

    ``exists`` is False when the one-sided derivatives in the queried
    direction differ; ``left`` and ``right`` are always reported.
    """

    exists: bool
    value: Optional[float]
    left: float
    right: float
    fd_value: Optional[float] = None
    fd_agrees: Optional[bool] = None


def _central_difference(fun, h_values=FD_STEPS):
    vals = [fun(h) for h in h_values]
    agree = all(abs(a - b) <= FD_AGREE_TOL for a, b in zip(vals, vals[1:]))
    return vals[-1], agree


def norm_gateaux_derivative(spec: NormSpec, x, y, tol: float = SMOOTH_TOL) -> NormDerivative:
    """Directional derivative of the norm at ``x`` in direction ``y``.

    One-sided derivatives come from the support face: the right derivative
    is ``max <f, y>`` and the left one ``min <f, y>`` over its extreme
    points. At smooth points the closed form is cross-checked against a
    central difference.
    """
    x = as_vector(x, spec.dim)
    y = as_vector(y, spec.dim, "direction")
    fs = support_functionals(spec, x)
    vals = [float(f @ y) for f in fs]
    right, left = max(vals), min(vals)
    if right - left > tol:
        return NormDerivative(False, None, left, right)
    value = float(fs[0] @ y)

    def quotient(h):
        return (norm_eval(spec, x + h * y) - norm_eval(spec, x - h * y)) / (2 * h)

    fd, stable = _central_difference(quotient)
    agrees = stable and abs(fd - value) <= FD_AGREE_TOL * max(1.0, float(np.linalg.norm(y)))
    return NormDerivative(True, value, left, right, fd, agrees)
