"""
Limit quantities of real-valued fields on a normed space.

Limits as ``t -> 0+`` are estimated from difference quotients on a geometric
sequence ``t_k = t0 * ratio**k``; liminf and limsup are read off the last
``tail_window`` quotients. This is a sampled surrogate of the true limit
and never a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from chebylab.normed_space import (
    SMOOTH_TOL,
    NormSpec,
    as_vector,
    dual_norm_values,
    is_smooth_at,
    norm_values,
    support_functionals,
    unit_sphere_samples,
)
from chebylab.rng import stream
from chebylab.sets import ClosedSet

LIMIT_TOL = 1e-3
SUB_TOL = 1e-6
#: nonexistence of a two-sided limit needs |left - right| above this many limit_tol
KINK_FACTOR = 3.0
#: step of the derivative refinements (central and one-sided differences)
FD_STEP = 1e-6
ONE_SIDED_STEP = 1e-7


@dataclass(frozen=True)
class TSequence:
    """Geometric step sequence ``t0 * ratio**k``, ``k = 0..count-1``.

    A nonzero ``jitter`` multiplies each step by a seeded factor in
    ``[1 - jitter, 1 + jitter]``.
    """

    t0: float = 0.1
    ratio: float = 0.5
    count: int = 31
    tail_window: int = 5
    jitter: float = 0.0
    seed: int = 0

    def values(self) -> np.ndarray:
        t = self.t0 * self.ratio ** np.arange(self.count)
        if self.jitter:
            u = stream(self.seed, "analysis/t-jitter").uniform(-1.0, 1.0, self.count)
            t = t * (1.0 + self.jitter * u)
        return t

    def to_dict(self):
        return {"t0": self.t0, "ratio": self.ratio, "count": self.count,
                "tail_window": self.tail_window}


DEFAULT_T = TSequence()


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    tail_min: float
    tail_max: float
    t_sequence: TSequence
    converged: bool

    def to_dict(self):
        return {"value": self.value, "tail_min": self.tail_min, "tail_max": self.tail_max,
                "converged": self.converged, "t_sequence": self.t_sequence.to_dict()}


class ScalarField:
    """A real-valued function on the space.

    Parameters
    ----------
    evaluator : callable, optional
        Maps one point to a float.
    batch : callable, optional
        Maps an ``(N, n)`` array to ``N`` values; preferred when given.
    lipschitz_hint : float, optional
    label : str
    iterative : bool
        Whether values come from an iterative solver (recorded for reports).
    """

    def __init__(self, evaluator: Optional[Callable] = None, batch: Optional[Callable] = None,
                 lipschitz_hint: Optional[float] = None, label: str = "",
                 iterative: bool = False):
        if evaluator is None and batch is None:
            raise ValueError("a field needs an evaluator or a batch evaluator")
        self._one = evaluator
        self._batch = batch
        self.lipschitz_hint = lipschitz_hint
        self.label = label
        self.iterative = iterative

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._batch is not None:
            out = np.asarray(self._batch(X), dtype=float)
        else:
            out = np.array([float(self._one(x)) for x in X])
        return out

    def __call__(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def __repr__(self):
        return f"ScalarField({self.label!r})"


def distance_field(set_: ClosedSet, norm: NormSpec) -> ScalarField:
    """The distance function of ``set_`` as a Lipschitz-1 field."""
    from chebylab.sets import ConvexPolytope, FunctionGraph

    iterative = isinstance(set_, FunctionGraph) or (
        isinstance(set_, ConvexPolytope) and not norm.is_polyhedral)
    return ScalarField(batch=lambda X: set_.values(X, norm), lipschitz_hint=1.0,
                       label=f"d_K[{set_.kind}]", iterative=iterative)


def norm_field(norm: NormSpec) -> ScalarField:
    return ScalarField(batch=lambda X: norm_values(norm, X), lipschitz_hint=1.0,
                       label=f"norm[{norm.kind}, p={norm.p}]")


def oscillating_field(dim: int = 1) -> ScalarField:
    """``1 + sin(1/v_1)`` off the hyperplane ``v_1 = 0`` and 0 on it."""

    def batch(X):
        v = X[:, 0]
        out = np.zeros(v.shape)
        nz = v != 0
        out[nz] = 1.0 + np.sin(1.0 / v[nz])
        return out

    return ScalarField(batch=batch, label="1+sin(1/x1)")


def _quotients(phi: ScalarField, x: np.ndarray, Y: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Forward difference quotients, shape ``(len(Y), len(t))``."""
    f0 = phi(x)
    P = x[None, None, :] + t[None, :, None] * Y[:, None, :]
    vals = phi.values(P.reshape(-1, x.size)).reshape(Y.shape[0], t.size)
    Q = (vals - f0) / t[None, :]
    if not np.all(np.isfinite(Q)):
        raise FloatingPointError(f"non-finite difference quotient for {phi!r}")
    return Q


def _estimate(q: np.ndarray, tseq: TSequence, mode: str, limit_tol: float) -> LimitEstimate:
    tail = q[-tseq.tail_window:]
    lo, hi = float(tail.min()), float(tail.max())
    value = {"lower": lo, "upper": hi, "limit": float(tail.mean())}[mode]
    return LimitEstimate(value, lo, hi, tseq, hi - lo <= limit_tol)


def _direction(y, dim):
    y = as_vector(y, dim, "direction")
    if not np.any(y):
        raise ValueError("direction must be nonzero")
    return y


def dini_lower(phi: ScalarField, x, y, tseq: TSequence = DEFAULT_T,
               limit_tol: float = LIMIT_TOL) -> LimitEstimate:
    """Lower Dini derivative ``liminf_{t->0+} (phi(x+ty) - phi(x)) / t``."""
    x = as_vector(x)
    y = _direction(y, x.size)
    return _estimate(_quotients(phi, x, y[None], tseq.values())[0], tseq, "lower", limit_tol)


def dini_upper(phi: ScalarField, x, y, tseq: TSequence = DEFAULT_T,
               limit_tol: float = LIMIT_TOL) -> LimitEstimate:
    """Upper Dini derivative ``limsup_{t->0+} (phi(x+ty) - phi(x)) / t``."""
    x = as_vector(x)
    y = _direction(y, x.size)
    return _estimate(_quotients(phi, x, y[None], tseq.values())[0], tseq, "upper", limit_tol)


def one_sided_limit(phi: ScalarField, x, y, tseq: TSequence = DEFAULT_T,
                    limit_tol: float = LIMIT_TOL) -> LimitEstimate:
    """``lim_{t->0+}`` of the forward quotient; ``converged`` says whether it exists."""
    x = as_vector(x)
    y = _direction(y, x.size)
    return _estimate(_quotients(phi, x, y[None], tseq.values())[0], tseq, "limit", limit_tol)


def upper_bound_inequality_check(set_: ClosedSet, norm: NormSpec, x,
                                 t_list: Sequence[float] = (0.1, 0.5, 1.0),
                                 tol: float = 1e-9) -> float:
    """Largest ``d(x + t(x - xbar)) - d(x) - t d(x)`` over ``t_list``.

    Nonpositive up to solver error, since ``xbar`` stays within
    ``(1 + t) d(x)`` of the moved point.
    """
    x = as_vector(x, set_.dim)
    res = set_.nearest(x, norm)
    if res.distance <= tol:
        raise ValueError("x lies in the set")
    t = np.asarray(t_list, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t values must be positive")
    xbar = res.minimizers[0]
    moved = x[None, :] + t[:, None] * (x - xbar)[None, :]
    d = res.distance
    return float(np.max(set_.values(moved, norm) - d - t * d))


@dataclass(frozen=True)
class DirectionRecord:
    direction: np.ndarray
    left: LimitEstimate
    right: LimitEstimate


@dataclass(frozen=True)
class GateauxVerdict:
    """Either ``exists`` with the derivative ``functional`` or a witness."""

    exists: bool
    functional: Optional[np.ndarray] = None
    witness: Optional[np.ndarray] = None
    left: Optional[float] = None
    right: Optional[float] = None
    reason: str = ""
    records: tuple = field(default=(), repr=False)

    def to_dict(self):
        d = {"exists": self.exists, "reason": self.reason}
        if self.functional is not None:
            d["functional"] = self.functional.tolist()
        if self.witness is not None:
            d.update(witness=self.witness.tolist(), left=self.left, right=self.right)
        return d


def probe_directions(dim: int, extra: int, seed: int, name: str = "analysis/probe") -> np.ndarray:
    """Coordinate basis followed by ``extra`` seeded Euclidean-unit directions."""
    rng = stream(seed, name)
    G = rng.standard_normal((extra, dim))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    return np.vstack([np.eye(dim), G])


def gateaux_derivative_probe(phi: ScalarField, x, directions=None, tseq: TSequence = DEFAULT_T,
                             limit_tol: float = LIMIT_TOL, seed: int = 0) -> GateauxVerdict:
    """Test Gateaux differentiability of ``phi`` at ``x``.

    For every direction the limits ``t -> 0+`` and ``t -> 0-`` are
    estimated; all must converge and agree within ``3 * limit_tol``. The
    derivative functional is fitted on the first ``dim`` directions (which
    must span) and checked for linearity on the rest. The fitted values are
    refined by central differences at step ``1e-6`` when those agree with
    the limits.
    """
    x = as_vector(x)
    n = x.size
    D = probe_directions(n, 4, seed) if directions is None else np.atleast_2d(
        np.asarray(directions, dtype=float))
    if D.shape[0] < n or np.linalg.matrix_rank(D[:n]) < n:
        raise ValueError("the first dim directions must span the space")
    t = tseq.values()
    Qp = _quotients(phi, x, D, t)
    Qm = -_quotients(phi, x, -D, t)
    records, mids = [], []
    for d, qp, qm in zip(D, Qp, Qm):
        right = _estimate(qp, tseq, "limit", limit_tol)
        left = _estimate(qm, tseq, "limit", limit_tol)
        records.append(DirectionRecord(d, left, right))
        if not (right.converged and left.converged):
            return GateauxVerdict(False, witness=d, left=left.value, right=right.value,
                                  reason="one-sided limit does not converge",
                                  records=tuple(records))
        if abs(left.value - right.value) > KINK_FACTOR * limit_tol:
            return GateauxVerdict(False, witness=d, left=left.value, right=right.value,
                                  reason="one-sided limits differ", records=tuple(records))
        mids.append(0.5 * (left.value + right.value))
    mids = np.array(mids)
    A = np.linalg.solve(D[:n], mids[:n])
    h = FD_STEP
    central = (phi.values(x + h * D) - phi.values(x - h * D)) / (2 * h)
    if np.all(np.abs(central - mids) <= limit_tol):
        A = np.linalg.solve(D[:n], central[:n])
    resid = np.abs(D @ A - mids)
    k = int(np.argmax(resid))
    if resid[k] > limit_tol:
        return GateauxVerdict(False, witness=D[k], left=records[k].left.value,
                              right=records[k].right.value,
                              reason="directional derivative is not linear",
                              records=tuple(records))
    return GateauxVerdict(True, functional=A, reason="two-sided limits agree and are linear",
                          records=tuple(records))


@dataclass(frozen=True)
class SubdifferentialProbe:
    candidate: np.ndarray
    max_violation: float
    witness: Optional[np.ndarray]
    sample_size: int


def subdifferential_check(phi: ScalarField, x, candidate, sample) -> SubdifferentialProbe:
    """Largest violation of ``<c, y - x> <= phi(y) - phi(x)`` over the sample."""
    x = as_vector(x)
    c = as_vector(candidate, x.size, "candidate")
    Y = np.atleast_2d(np.asarray(sample, dtype=float))
    if Y.shape[0] == 0:
        raise ValueError("sample must be nonempty")
    viol = (Y - x) @ c - (phi.values(Y) - phi(x))
    k = int(np.argmax(viol))
    if viol[k] > 0:
        return SubdifferentialProbe(c, float(viol[k]), Y[k], Y.shape[0])
    return SubdifferentialProbe(c, 0.0, None, Y.shape[0])


def subgradient_sample(x, norm: NormSpec, count: int, rng: np.random.Generator,
                       radius: float = 10.0, anchors=None) -> np.ndarray:
    """Seeded points of the ``radius`` ball around ``x`` plus ``anchors``."""
    x = as_vector(x, norm.dim)
    U = unit_sphere_samples(norm, count, rng)
    r = radius * rng.uniform(0.0, 1.0, count) ** (1.0 / norm.dim)
    Y = x + r[:, None] * U
    if anchors is not None and len(anchors):
        Y = np.vstack([Y, np.asarray(anchors, dtype=float)])
    return Y


@dataclass(frozen=True)
class SubdifferentialVerdict:
    status: str  # "singleton" | "multiple" | "empty"
    accepted: tuple
    probes: tuple = field(default=(), repr=False)

    @property
    def candidate(self):
        return self.accepted[0] if self.status == "singleton" else None

    def to_dict(self):
        return {"status": self.status, "accepted": [a.tolist() for a in self.accepted]}


def singleton_subdifferential_probe(phi: ScalarField, x, norm: NormSpec, budget: int = 200,
                                    seed: int = 0, sub_tol: float = SUB_TOL,
                                    tseq: TSequence = DEFAULT_T, limit_tol: float = LIMIT_TOL,
                                    anchors=None) -> SubdifferentialVerdict:
    """Search approximate subgradients of ``phi`` at ``x`` and count them.

    Candidates are the Gateaux derivative (when the probe finds one) and
    the corners of the box of one-sided coordinate derivatives. The search
    is incomplete: ``"empty"`` means no candidate survived, not that the
    subdifferential is empty.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    x = as_vector(x, norm.dim)
    n = x.size
    cands = []
    probe = gateaux_derivative_probe(phi, x, tseq=tseq, limit_tol=limit_tol, seed=seed)
    if probe.exists:
        cands.append(probe.functional)
    E = np.eye(n)
    h = ONE_SIDED_STEP
    f0 = phi(x)
    right = (phi.values(x + h * E) - f0) / h
    left = (f0 - phi.values(x - h * E)) / h
    central = (phi.values(x + FD_STEP * E) - phi.values(x - FD_STEP * E)) / (2 * FD_STEP)
    kinks = np.abs(right - left) > KINK_FACTOR * limit_tol
    corners = [central.copy()]
    for i in np.flatnonzero(kinks):
        corners = [np.r_[c[:i], v, c[i + 1:]] for c in corners for v in (left[i], right[i])]
    cands.extend(corners)

    rng = stream(seed, "analysis/subgradient-sample")
    sample = subgradient_sample(x, norm, budget, rng, anchors=anchors)
    probes, accepted = [], []
    for c in cands:
        pr = subdifferential_check(phi, x, c, sample)
        probes.append(pr)
        if pr.max_violation <= sub_tol and all(
                float(dual_norm_values(norm, c - a)) > SMOOTH_TOL for a in accepted):
            accepted.append(c)
    status = "empty" if not accepted else ("singleton" if len(accepted) == 1 else "multiple")
    return SubdifferentialVerdict(status, tuple(accepted), tuple(probes))


def f_phi_estimate(phi: ScalarField, x, norm: NormSpec, y_samples: int = 256,
                   z_samples: int = 16, z_radius: float = 2.0, seed: int = 0,
                   tseq: TSequence = DEFAULT_T, limit_tol: float = LIMIT_TOL) -> LimitEstimate:
    """Sampled ``sup_y sup_z limsup_t (phi(x+tz+ty) - phi(x+tz)) / t``.

    ``y`` runs over the signed coordinate directions and seeded points of
    the unit sphere, ``z`` over 0 and seeded points of the ``z_radius``
    ball. ``tail_min``/``tail_max`` hold the estimates at a quarter, half
    and the full sample budget (nondecreasing by construction), and
    ``converged`` compares the last two.
    """
    if y_samples < 1 or z_samples < 1:
        raise ValueError("sample counts must be >= 1")
    x = as_vector(x, norm.dim)
    n = x.size
    rng = stream(seed, "analysis/f-phi")
    E = np.vstack([np.eye(n), -np.eye(n)])
    Y = np.vstack([E / norm_values(norm, E)[:, None], unit_sphere_samples(norm, y_samples, rng)])
    Zu = unit_sphere_samples(norm, z_samples, rng)
    Z = np.vstack([np.zeros(n), Zu * (z_radius * rng.uniform(0, 1, z_samples) ** (1.0 / n))[:, None]])
    t = tseq.values()
    B = x[None, None, :] + t[None, :, None] * Z[:, None, :]              # (Nz, T, n)
    fB = phi.values(B.reshape(-1, n)).reshape(Z.shape[0], t.size)
    A = B[None] + t[None, None, :, None] * Y[:, None, None, :]           # (Ny, Nz, T, n)
    fA = phi.values(A.reshape(-1, n)).reshape(Y.shape[0], Z.shape[0], t.size)
    Q = (fA - fB[None]) / t
    sup = Q[..., -tseq.tail_window:].max(axis=-1)                         # (Ny, Nz)
    ny0, nz0 = 2 * n, 1
    levels = []
    for frac in (4, 2, 1):
        ky = ny0 + max(1, y_samples // frac)
        kz = nz0 + max(1, z_samples // frac)
        levels.append(float(sup[:ky, :kz].max()))
    return LimitEstimate(levels[-1], min(levels), max(levels), tseq,
                         abs(levels[-1] - levels[-2]) <= limit_tol)


@dataclass(frozen=True)
class Corollary1Result:
    status: str  # "ok" | "x_in_set" | "norm_not_smooth" | "probe_failed"
    discrepancy: Optional[float] = None
    probe: Optional[GateauxVerdict] = None
    support: Optional[np.ndarray] = None


def corollary1_check(set_: ClosedSet, norm: NormSpec, x, directions=None,
                     tseq: TSequence = DEFAULT_T, limit_tol: float = LIMIT_TOL,
                     seed: int = 0, tol: float = 1e-9) -> Corollary1Result:
    """Compare the derivative of ``d_K`` at ``x`` with the support functional of ``x - xbar``.

    Hypothesis failures come back as a status, never as a discrepancy.
    """
    x = as_vector(x, set_.dim)
    res = set_.nearest(x, norm)
    if res.distance <= tol:
        return Corollary1Result("x_in_set")
    r = x - res.minimizers[0]
    if not is_smooth_at(norm, r).smooth:
        return Corollary1Result("norm_not_smooth")
    f = support_functionals(norm, r)[0]
    probe = gateaux_derivative_probe(distance_field(set_, norm), x, tseq=tseq,
                                     limit_tol=limit_tol, seed=seed)
    if not probe.exists:
        return Corollary1Result("probe_failed", probe=probe, support=f)
    if directions is None:
        directions = probe_directions(norm.dim, 8, seed, "analysis/corollary1")[norm.dim:]
    D = np.atleast_2d(np.asarray(directions, dtype=float))
    disc = float(np.max(np.abs(D @ probe.functional - D @ f)))
    return Corollary1Result("ok", disc, probe, f)


@dataclass(frozen=True)
class Corollary2Result:
    status: str  # "evaluated" | "x_in_set" | "norm_not_smooth"
    hypothesis_holds: bool = False
    differentiable: Optional[GateauxVerdict] = None
    consistent: bool = True
    lower_along_ray: Optional[LimitEstimate] = None
    reverse_derivative: Optional[LimitEstimate] = None
    distance: Optional[float] = None

    def to_dict(self):
        d = {"status": self.status, "hypothesis_holds": self.hypothesis_holds,
             "consistent": self.consistent, "distance": self.distance}
        if self.differentiable is not None:
            d["differentiable"] = self.differentiable.to_dict()
        if self.lower_along_ray is not None:
            d["lower_along_ray"] = self.lower_along_ray.to_dict()
            d["reverse_derivative"] = self.reverse_derivative.to_dict()
        return d


def corollary2_check(set_: ClosedSet, norm: NormSpec, x, tseq: TSequence = DEFAULT_T,
                     limit_tol: float = LIMIT_TOL, seed: int = 0,
                     tol: float = 1e-9) -> Corollary2Result:
    """If the lower Dini derivative along ``x - xbar`` equals ``d(x)``, ``d_K``
    must be Gateaux differentiable at ``x``.

    Only the implication is checked: ``consistent`` is False exactly when the
    hypothesis holds and the probe finds no derivative. The quantity
    ``d'(x; xbar - x)`` is measured and reported alongside.
    """
    x = as_vector(x, set_.dim)
    res = set_.nearest(x, norm)
    if res.distance <= tol:
        return Corollary2Result("x_in_set", distance=res.distance)
    r = x - res.minimizers[0]
    if not is_smooth_at(norm, r).smooth:
        return Corollary2Result("norm_not_smooth", distance=res.distance)
    phi = distance_field(set_, norm)
    d = res.distance
    lower = dini_lower(phi, x, r, tseq, limit_tol)
    reverse = one_sided_limit(phi, x, -r, tseq, limit_tol)
    hyp = abs(lower.value - d) <= limit_tol * max(1.0, d)
    probe = gateaux_derivative_probe(phi, x, tseq=tseq, limit_tol=limit_tol, seed=seed)
    return Corollary2Result("evaluated", hyp, probe, not (hyp and not probe.exists),
                            lower, reverse, d)
