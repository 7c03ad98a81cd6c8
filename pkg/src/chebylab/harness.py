"""
Evaluation of the equivalence between convexity of a Chebyshev set, convexity
and differentiability of its distance function, and the two limit conditions
on the distance function, over a finite grid of test points.

The pointwise conditions (iii)-(v) are read as holding at *every* grid
point when they are compared with the global conditions (i) and (ii); the
pointwise table is reported as well.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from chebylab import analysis
from chebylab.analysis import (
    DEFAULT_T,
    GateauxVerdict,
    LimitEstimate,
    SubdifferentialVerdict,
    TSequence,
    distance_field,
    gateaux_derivative_probe,
    one_sided_limit,
    singleton_subdifferential_probe,
)
from chebylab.normed_space import (
    NormSpec,
    dual_is_strictly_convex,
    norm_values,
    unit_sphere_samples,
)
from chebylab.rng import stream
from chebylab.sets import ClosedSet, NearestPointResult, is_chebyshev_on_grid

#: direction budget per shell for the limsup over shrinking y
SHELL_DIRECTIONS = 64
#: extra random directions for the Gateaux probe of condition (iii)
PROBE_EXTRA = 4
#: radius of the pairs used for the local midpoint-convexity record
LOCAL_RADIUS = 0.5


class HypothesisError(ValueError):
    """A condition was evaluated where its standing hypothesis fails."""


@dataclass(frozen=True)
class Tolerances:
    limit_tol: float = analysis.LIMIT_TOL
    sub_tol: float = analysis.SUB_TOL
    convexity_tol: float = 1e-6


@dataclass(frozen=True, eq=False)
class Scenario:
    norm: NormSpec
    set: ClosedSet
    grid: np.ndarray
    bbox: np.ndarray
    pair_samples: int = 200
    seed: int = 0
    tolerances: Tolerances = Tolerances()
    tseq: TSequence = DEFAULT_T
    name: str = "scenario"

    def __post_init__(self):
        grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        if grid.shape[0] == 0:
            raise ValueError("grid must be nonempty")
        if grid.shape[1] != self.norm.dim or self.set.dim != self.norm.dim:
            raise ValueError("grid, set and norm dimensions differ")
        object.__setattr__(self, "grid", grid)
        bbox = np.asarray(self.bbox, dtype=float)
        if bbox.shape != (self.norm.dim, 2) or np.any(bbox[:, 0] >= bbox[:, 1]):
            raise ValueError("bbox must hold one (lo, hi) pair per dimension")
        object.__setattr__(self, "bbox", bbox)

    @property
    def field(self):
        return distance_field(self.set, self.norm)

    def rng(self, name: str) -> np.random.Generator:
        return stream(self.seed, f"harness/{name}")

    def uniform(self, count: int, name: str) -> np.ndarray:
        lo, hi = self.bbox[:, 0], self.bbox[:, 1]
        return lo + (hi - lo) * self.rng(name).uniform(0.0, 1.0, (count, self.norm.dim))


@dataclass(frozen=True)
class ConvexityVerdict:
    convex: bool
    witness: Optional[tuple] = None
    pairs_tested: int = 0


def check_condition_i(scenario: Scenario) -> ConvexityVerdict:
    """Midpoint test on pairs of set points.

    Set points are the nearest points of seeded probes in the bounding box
    and of the grid, plus the set's anchor points. Pairs of anchors are
    always tested; the remaining pairs are drawn at random.
    """
    K, norm = scenario.set, scenario.norm
    probes = np.vstack([scenario.uniform(scenario.pair_samples, "cond_i/probes"), scenario.grid])
    pool = [np.asarray(a, dtype=float) for a in K.anchor_points()]
    n_anchor = len(pool)
    for p in probes:
        pool.extend(K.nearest(p, norm).minimizers)
    pool = np.array(pool)
    rng = scenario.rng("cond_i/pairs")
    ia, ib = np.triu_indices(n_anchor, 1)
    ra = rng.integers(0, len(pool), scenario.pair_samples)
    rb = rng.integers(0, len(pool), scenario.pair_samples)
    A = np.r_[ia, ra]
    B = np.r_[ib, rb]
    mids = 0.5 * (pool[A] + pool[B])
    d = K.values(mids, norm)
    k = int(np.argmax(d))
    if d[k] > scenario.tolerances.convexity_tol:
        return ConvexityVerdict(False, (pool[A[k]], pool[B[k]], mids[k]), len(A))
    return ConvexityVerdict(True, None, len(A))


def midpoint_violation(phi, U: np.ndarray, V: np.ndarray) -> float:
    """``max d((u+v)/2) - (d(u) + d(v))/2`` over the paired rows."""
    mid = phi.values(0.5 * (U + V))
    return float(np.max(mid - 0.5 * (phi.values(U) + phi.values(V))))


def check_condition_ii(scenario: Scenario) -> float:
    """Largest midpoint-convexity violation of ``d_K`` on seeded pairs."""
    n = scenario.pair_samples
    U = scenario.uniform(n, "cond_ii/u")
    V = scenario.uniform(n, "cond_ii/v")
    # pairs symmetric about grid points catch local maxima of d_K between them
    rng = scenario.rng("cond_ii/sym")
    G = scenario.grid[rng.integers(0, len(scenario.grid), n)]
    S = unit_sphere_samples(scenario.norm, n, rng) * rng.uniform(0, 2.0, n)[:, None]
    U = np.vstack([U, G + S])
    V = np.vstack([V, G - S])
    return max(0.0, midpoint_violation(scenario.field, U, V))


def local_condition_ii(scenario: Scenario, x: np.ndarray, key: str, count: int = 64) -> float:
    rng = scenario.rng(f"cond_ii/local/{key}")
    S = unit_sphere_samples(scenario.norm, count, rng) * rng.uniform(0, LOCAL_RADIUS, count)[:, None]
    O = unit_sphere_samples(scenario.norm, count, rng) * rng.uniform(0, LOCAL_RADIUS, count)[:, None]
    return max(0.0, midpoint_violation(scenario.field, x + O + S, x + O - S))


def _canonical_direction(scenario, x, res: NearestPointResult):
    r = x - res.minimizers[0]
    return r / float(norm_values(scenario.norm, r))


def check_condition_iv(scenario: Scenario, x, res: Optional[NearestPointResult] = None
                       ) -> LimitEstimate:
    """Forward limit of the quotient of ``d_K`` along ``(x - xbar)/||x - xbar||``."""
    x = np.asarray(x, dtype=float)
    res = res or scenario.set.nearest(x, scenario.norm)
    if res.distance <= scenario.tolerances.convexity_tol:
        raise HypothesisError("x lies in the set")
    if not res.unique:
        raise HypothesisError(f"{len(res.minimizers)} nearest-point clusters at {x.tolist()}")
    z = _canonical_direction(scenario, x, res)
    return one_sided_limit(scenario.field, x, z, scenario.tseq, scenario.tolerances.limit_tol)


def passes_iv(scenario, est: Optional[LimitEstimate]) -> bool:
    return est is not None and est.converged and abs(est.value - 1.0) <= scenario.tolerances.limit_tol


def passes_v(scenario, est: LimitEstimate) -> bool:
    return abs(est.value - 1.0) <= scenario.tolerances.limit_tol


def check_condition_v(scenario: Scenario, x, res: Optional[NearestPointResult] = None,
                      key: Optional[str] = None) -> LimitEstimate:
    """``limsup_{||y||->0} (d(x+y) - d(x)) / ||y||`` over seeded shells.

    Shell ``k`` has radius ``t_k`` and :data:`SHELL_DIRECTIONS` seeded unit
    directions, plus the canonical direction when the nearest point is
    unique. The limsup is the largest shell maximum in the tail.
    """
    x = np.asarray(x, dtype=float)
    norm, phi = scenario.norm, scenario.field
    res = res or scenario.set.nearest(x, norm)
    key = key or repr(tuple(x.tolist()))
    r = scenario.tseq.values()
    rng = scenario.rng(f"cond_v/{key}")
    U = unit_sphere_samples(norm, SHELL_DIRECTIONS * r.size, rng).reshape(r.size, SHELL_DIRECTIONS, -1)
    if res.unique and res.distance > 0:
        z = _canonical_direction(scenario, x, res)
        U = np.concatenate([U, np.broadcast_to(z, (r.size, 1, x.size))], axis=1)
    P = x + r[:, None, None] * U
    vals = phi.values(P.reshape(-1, x.size)).reshape(U.shape[:2])
    shell_max = ((vals - res.distance) / r[:, None]).max(axis=1)
    tail = shell_max[-scenario.tseq.tail_window:]
    lo, hi = float(tail.min()), float(tail.max())
    return LimitEstimate(hi, lo, hi, scenario.tseq, hi - lo <= scenario.tolerances.limit_tol)


@dataclass(frozen=True)
class ConditionReport:
    """Hypotheses and the pointwise conditions at one grid point."""

    index: int
    point: np.ndarray
    distance: float
    minimizer_count: int
    cond_ii_local: float
    cond_iii: GateauxVerdict
    cond_iv: Optional[LimitEstimate]
    cond_iv_pass: bool
    cond_v: LimitEstimate
    cond_v_pass: bool
    subdifferential: SubdifferentialVerdict
    note: str = ""

    @property
    def cond_iii_pass(self) -> bool:
        return self.cond_iii.exists


@dataclass(frozen=True)
class EquivalenceVerdict:
    status: str  # CONSISTENT | HYPOTHESIS_FAILED | VIOLATION
    details: tuple = ()
    witness: Optional[np.ndarray] = None
    disagreeing: tuple = ()


@dataclass
class Evaluation:
    scenario: Scenario
    reports: list
    skipped: list
    cond_i: ConvexityVerdict
    cond_ii: float
    hypotheses: dict
    verdict: EquivalenceVerdict
    chebyshev: object = field(repr=False, default=None)

    @property
    def truth(self) -> dict:
        tol = self.scenario.tolerances.convexity_tol
        return {
            "i": self.cond_i.convex,
            "ii": self.cond_ii <= tol,
            "iii": all(r.cond_iii_pass for r in self.reports),
            "iv": all(r.cond_iv_pass for r in self.reports),
            "v": all(r.cond_v_pass for r in self.reports),
        }


def _evaluate_point(scenario: Scenario, index: int, x: np.ndarray) -> ConditionReport:
    norm, tol = scenario.norm, scenario.tolerances
    key = str(index)
    res = scenario.set.nearest(x, norm)
    phi = scenario.field
    probe = gateaux_derivative_probe(phi, x, tseq=scenario.tseq, limit_tol=tol.limit_tol,
                                     seed=scenario.seed)
    note = ""
    try:
        iv = check_condition_iv(scenario, x, res)
    except HypothesisError as exc:
        iv, note = None, str(exc)
    v = check_condition_v(scenario, x, res, key)
    sub = singleton_subdifferential_probe(
        phi, x, norm, budget=200, seed=scenario.seed, sub_tol=tol.sub_tol, tseq=scenario.tseq,
        limit_tol=tol.limit_tol, anchors=scenario.set.anchor_points())
    return ConditionReport(index, x, res.distance, len(res.minimizers),
                           local_condition_ii(scenario, x, key), probe, iv,
                           passes_iv(scenario, iv), v, passes_v(scenario, v), sub, note)


def _workers(max_workers):
    if max_workers is not None:
        return max(1, int(max_workers))
    env = os.environ.get("CHEBYLAB_THREADS")
    return max(1, int(env)) if env else 1


def evaluate_conditions(scenario: Scenario, max_workers: Optional[int] = None) -> Evaluation:
    """Run the hypotheses and all five conditions over the grid.

    Grid points within ``convexity_tol`` of the set are skipped and listed.
    Point evaluations may run on a thread pool (``max_workers`` or the
    ``CHEBYLAB_THREADS`` environment variable); results are aggregated in
    grid order.
    """
    K, norm, tol = scenario.set, scenario.norm, scenario.tolerances
    dist = K.values(scenario.grid, norm)
    keep = [i for i in range(len(scenario.grid)) if dist[i] > tol.convexity_tol]
    skipped = [i for i in range(len(scenario.grid)) if dist[i] <= tol.convexity_tol]
    pts = scenario.grid[keep]

    workers = _workers(max_workers)
    if workers == 1:
        reports = [_evaluate_point(scenario, i, scenario.grid[i]) for i in keep]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda i: _evaluate_point(scenario, i, scenario.grid[i]), keep))

    cond_i = check_condition_i(scenario)
    cond_ii = check_condition_ii(scenario)
    cheb = is_chebyshev_on_grid(K, norm, pts) if len(pts) else None
    hyp = {
        "dual_strictly_convex": dual_is_strictly_convex(norm),
        "chebyshev_on_grid": bool(cheb is not None and cheb.chebyshev),
        "subdifferential_singleton": all(r.subdifferential.status == "singleton" for r in reports),
    }
    details = []
    if not hyp["dual_strictly_convex"]:
        details.append(f"dual norm (q={norm.q}) is not strictly convex")
    if cheb is None:
        details.append("no grid point off the set")
    elif not cheb.chebyshev:
        wit = [w[0].tolist() for w in cheb.witnesses]
        details.append(f"nearest points not unique at {len(wit)} grid point(s), first {wit[0]}")
    bad = [(r.index, r.subdifferential.status) for r in reports
           if r.subdifferential.status != "singleton"]
    if bad:
        details.append(f"subdifferential not shown singleton at {len(bad)} point(s), "
                       f"first index {bad[0][0]} ({bad[0][1]})")

    ev = Evaluation(scenario, reports, skipped, cond_i, cond_ii, hyp,
                    EquivalenceVerdict("CONSISTENT"), cheb)
    if details:
        ev.verdict = EquivalenceVerdict("HYPOTHESIS_FAILED", tuple(details))
        return ev
    truth = ev.truth
    ref = truth["i"]
    if all(val == ref for val in truth.values()):
        return ev
    disagree = tuple(k for k, val in truth.items() if val != ref)
    witness = None
    for r in reports:
        point_truth = {"iii": r.cond_iii_pass, "iv": r.cond_iv_pass, "v": r.cond_v_pass}
        if any(val != ref for val in point_truth.values()):
            witness = r.point
            break
    ev.verdict = EquivalenceVerdict("VIOLATION", (f"conditions {disagree} disagree with (i)={ref}",),
                                    witness, disagree)
    return ev


@dataclass(frozen=True)
class Theorem4Verdict:
    status: str  # NOT_APPLICABLE | CONSISTENT_CONVEX | CONSISTENT_NONCONVEX | CONVEX_BUT_V_FAILS | VIOLATION
    failing_point: Optional[np.ndarray] = None


def theorem4_scan(scenario: Scenario, evaluation: Optional[Evaluation] = None) -> Theorem4Verdict:
    """Under a strictly convex dual, (v) at every point must force convexity."""
    if not dual_is_strictly_convex(scenario.norm):
        return Theorem4Verdict("NOT_APPLICABLE")
    ev = evaluation or evaluate_conditions(scenario)
    failing = [r for r in ev.reports if not r.cond_v_pass]
    convex = ev.cond_i.convex
    if not failing:
        return Theorem4Verdict("CONSISTENT_CONVEX" if convex else "VIOLATION")
    point = failing[0].point
    if not convex:
        return Theorem4Verdict("CONSISTENT_NONCONVEX", point)
    # not a contradiction of the theorem, but of the full equivalence
    return Theorem4Verdict("CONVEX_BUT_V_FAILS", point)


@dataclass(frozen=True)
class RemarkOutcome:
    status: str  # NOT_APPLICABLE | CONSISTENT | HYPOTHESIS_SCOPE | VIOLATION
    hypothesis_holds: bool = False
    conclusion: Optional[bool] = None
    note: str = ""


def _remark_status(applicable, cheb, premise, convex, scope_note):
    if not applicable:
        return RemarkOutcome("NOT_APPLICABLE", note="dual norm not strictly convex or norm not smooth")
    if not cheb:
        return RemarkOutcome("HYPOTHESIS_SCOPE", False, convex, scope_note)
    if not premise:
        return RemarkOutcome("CONSISTENT", False, convex, "premise false at x")
    return RemarkOutcome("CONSISTENT" if convex else "VIOLATION", True, convex)


def remark_checks(scenario: Scenario, x, evaluation: Optional[Evaluation] = None) -> dict:
    """Implication consistency of the two remarks at ``x``.

    Remark 1: smooth norm and smooth dual norm, Chebyshev ``K`` and ``d_K``
    Gateaux differentiable at ``x`` give convex ``K``. Remark 2: Chebyshev
    ``K``, strictly convex dual and ``d^-(x; x - xbar) = d(x)`` give convex
    ``K``. A violation is reported only when every hypothesis holds and the
    set is found non-convex.
    """
    x = np.asarray(x, dtype=float)
    norm, tol = scenario.norm, scenario.tolerances
    applicable1 = not norm.is_polyhedral
    applicable2 = dual_is_strictly_convex(norm)
    if not (applicable1 or applicable2):
        na = RemarkOutcome("NOT_APPLICABLE", note="dual norm not strictly convex")
        return {"remark1": na, "remark2": na}
    ev = evaluation or evaluate_conditions(scenario)
    cheb = ev.hypotheses["chebyshev_on_grid"]
    convex = ev.cond_i.convex
    res = scenario.set.nearest(x, norm)
    if res.distance <= tol.convexity_tol:
        na = RemarkOutcome("NOT_APPLICABLE", note="x lies in the set")
        return {"remark1": na, "remark2": na}
    phi = scenario.field
    diff = gateaux_derivative_probe(phi, x, tseq=scenario.tseq, limit_tol=tol.limit_tol,
                                    seed=scenario.seed).exists
    r = x - res.minimizers[0]
    lower = analysis.dini_lower(phi, x, r, scenario.tseq, tol.limit_tol)
    premise2 = abs(lower.value - res.distance) <= tol.limit_tol * max(1.0, res.distance)
    scope = ("Chebyshev property fails on the grid; the remark needs it globally"
             + ("; d_K is differentiable at x yet K is not convex" if diff and not convex else ""))
    return {
        "remark1": _remark_status(applicable1, cheb, diff, convex, scope),
        "remark2": _remark_status(applicable2, cheb, premise2, convex, scope),
    }
