"""Report documents (JSON) and per-point tables (CSV).

Floats are written in shortest round-trip form, so identical inputs give
byte-identical files. Non-finite floats are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Optional

import numpy as np

from chebylab import __version__
from chebylab.harness import Evaluation, Theorem4Verdict, remark_checks

REPORT_SCHEMA_VERSION = 1

#: frozen column order of the per-point CSV for schema_version 1
POINT_COLUMNS = (
    "index", "point", "distance", "minimizer_count", "subdifferential",
    "cond_ii_local", "cond_iii", "cond_iv_value", "cond_iv_pass", "cond_v_value", "cond_v_pass",
    "pointwise_agrees", "remark1", "remark2", "note",
)

QUANTIFICATION_NOTE = (
    "conditions (iii)-(v) are compared with (i)-(ii) as statements holding at every "
    "grid point; the per-point table gives the pointwise reading"
)


def clean(obj):
    """Recursively turn numpy values into JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(doc) -> str:
    return json.dumps(clean(doc), indent=2, sort_keys=False, allow_nan=False) + "\n"


def _pointwise_agrees(r, convex: bool) -> bool:
    return r.cond_iii_pass == convex and r.cond_iv_pass == convex and r.cond_v_pass == convex


def point_rows(ev: Evaluation, remarks: Optional[dict] = None) -> list:
    convex = ev.cond_i.convex
    rows = []
    for r in ev.reports:
        rm = (remarks or {}).get(r.index, {})
        rows.append({
            "index": r.index,
            "point": r.point,
            "distance": r.distance,
            "minimizer_count": r.minimizer_count,
            "subdifferential": r.subdifferential.status,
            "cond_ii_local": r.cond_ii_local,
            "cond_iii": r.cond_iii.to_dict(),
            "cond_iv": None if r.cond_iv is None else r.cond_iv.to_dict(),
            "cond_iv_pass": r.cond_iv_pass,
            "cond_v": r.cond_v.to_dict(),
            "cond_v_pass": r.cond_v_pass,
            "pointwise_agrees": _pointwise_agrees(r, convex),
            "remark1": rm["remark1"].status if rm else None,
            "remark2": rm["remark2"].status if rm else None,
            "note": r.note,
        })
    return rows


def all_remarks(ev: Evaluation) -> dict:
    return {r.index: remark_checks(ev.scenario, r.point, ev) for r in ev.reports}


def build_report(config_echo: dict, ev: Evaluation, t4: Theorem4Verdict, remarks: dict,
                 duration: Optional[float] = None) -> dict:
    sc = ev.scenario
    v = ev.verdict
    summary = {}
    for key in ("remark1", "remark2"):
        counts = {}
        for rm in remarks.values():
            counts[rm[key].status] = counts.get(rm[key].status, 0) + 1
        summary[key] = dict(sorted(counts.items()))
    doc = {
        "report_schema_version": REPORT_SCHEMA_VERSION,
        "tool": "chebylab",
        "version": __version__,
        "seed": sc.seed,
        "scenario": config_echo,
        "grid": {"points": sc.grid, "skipped_in_set": ev.skipped},
        "quantification": QUANTIFICATION_NOTE,
        "hypotheses": {
            **ev.hypotheses,
            "chebyshev_witnesses": [] if ev.chebyshev is None else
            [{"point": w[0], "minimizers": w[1]} for w in ev.chebyshev.witnesses],
        },
        "conditions": {
            "i": {"holds": ev.cond_i.convex, "pairs_tested": ev.cond_i.pairs_tested,
                  "witness": None if ev.cond_i.witness is None else
                  {"u": ev.cond_i.witness[0], "v": ev.cond_i.witness[1],
                   "midpoint": ev.cond_i.witness[2]}},
            "ii": {"holds": ev.cond_ii <= sc.tolerances.convexity_tol,
                   "max_violation": ev.cond_ii},
            "universal": ev.truth,
        },
        "verdicts": {
            "equivalence": {"status": v.status, "details": list(v.details),
                            "witness": v.witness, "disagreeing": list(v.disagreeing)},
            "theorem4": {"status": t4.status, "failing_point": t4.failing_point},
            "remarks": summary,
        },
        "points": point_rows(ev, remarks),
    }
    if duration is not None:
        doc["wall_clock_seconds"] = duration
    return clean(doc)


def _cell(value):
    value = clean(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return " ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def points_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POINT_COLUMNS)
    for r in rows:
        flat = dict(r)
        flat["cond_iii"] = r["cond_iii"]["exists"]
        flat["cond_iv_value"] = None if r["cond_iv"] is None else r["cond_iv"]["value"]
        flat["cond_v_value"] = r["cond_v"]["value"]
        w.writerow([_cell(flat[c]) for c in POINT_COLUMNS])
    return buf.getvalue()


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()
