"""JSON reports: construction, schema, serialization."""
from __future__ import annotations

import json
import math

import jsonschema
import numpy as np

from .network import pack
from .signs import CERTIFIED_ADMISSIBLE, CERTIFIED_INADMISSIBLE, UNCERTIFIED

REPORT_SCHEMA_VERSION = "1.0"

_NUM = {"type": ["number", "null"]}
_VEC = {"type": "array", "items": _NUM}
_INTVEC = {"type": "array", "items": {"type": "integer"}}
_MAT = {"type": "array", "items": _VEC}
_SIGN = {"type": "array", "items": {"enum": [-1, 0, 1]}}


def _obj(props, required=None):
    return {"type": "object", "additionalProperties": False,
            "required": list(props) if required is None else required, "properties": props}


ADMISSIBLE_ROW = _obj({
    "s": _SIGN,
    "verdict": {"enum": [CERTIFIED_ADMISSIBLE, CERTIFIED_INADMISSIBLE, UNCERTIFIED]},
    "certificate": {"type": ["string", "null"]},
    "value": _NUM,
    "bracket": {"type": ["array", "null"], "items": _NUM},
    "witness": {"type": ["array", "null"], "items": _NUM},
})

SWEEP_ROW = _obj({"s": _SIGN, "epsilon": _VEC, "coefficients": _VEC, "r_value": _NUM})

COMPONENT = _obj({
    "component": {"type": "integer"},
    "kept": _INTVEC,
    "excluded": {"type": "array", "items": _obj({"index": {"type": "integer"}, "reason": {"type": "string"}})},
    "anchors": _MAT,
    "anchor_methods": {"type": "array", "items": {"type": "string"}},
    "gram": _MAT,
    "beta": _VEC,
    "attainment": {"type": "array", "items": {"type": "boolean"}},
    "norm_bracket": _VEC,
    "status": {"enum": ["CertifiedMinimal", "Candidate"]},
    "witness_sign": {"type": ["array", "null"], "items": {"enum": [-1, 0, 1]}},
    "admissible": {"type": "array", "items": ADMISSIBLE_ROW},
    "sweep": {"type": "array", "items": SWEEP_ROW},
    "r_interval": {"type": ["array", "null"], "items": _NUM},
    "decision": {"enum": ["Unregularized", "Regularized", "Ambiguous", None]},
    "chosen_sign": {"type": ["array", "null"], "items": {"enum": [-1, 0, 1]}},
    "chosen_coefficients": _VEC,
})

PROVENANCE = _obj({
    "artifact_version": {"type": "string"},
    "seed": {"type": "integer"},
    "wall_clock_seconds": {"type": "number"},
})

SOLUTION_REPORT_SCHEMA = _obj({
    "schema_version": {"const": REPORT_SCHEMA_VERSION},
    "kind": {"const": "solution"},
    "config": {"type": "object"},
    "dataset": _obj({"x": _MAT, "y": _MAT}),
    "components": {"type": "array", "items": COMPONENT},
    "combined": _obj({"norm_bracket": _VEC, "status": {"enum": ["CertifiedMinimal", "Candidate"]}}),
    "provenance": PROVENANCE,
})

ADMISSIBLE_REPORT_SCHEMA = _obj({
    "schema_version": {"const": REPORT_SCHEMA_VERSION},
    "kind": {"const": "admissible"},
    "config": {"type": "object"},
    "dataset": _obj({"x": _MAT, "y": _MAT}),
    "component": {"type": "integer"},
    "admissible": {"type": "array", "items": ADMISSIBLE_ROW},
    "provenance": PROVENANCE,
})

SCHEMAS = {"solution": SOLUTION_REPORT_SCHEMA, "admissible": ADMISSIBLE_REPORT_SCHEMA}


def num(v):
    """Plain float, with non-finite values stored as null."""
    v = float(v)
    return v if math.isfinite(v) else None


def vec(a):
    return [num(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def mat(a):
    return [vec(r) for r in np.atleast_2d(np.asarray(a, dtype=float))]


def signs(s):
    return None if s is None else [int(v) for v in s]


def admissible_rows(table):
    rows = []
    for s, v in table:
        est = v.estimate
        rows.append({
            "s": signs(s),
            "verdict": v.kind,
            "certificate": v.certificate,
            "value": None if v.value is None else num(v.value),
            "bracket": None if est is None else [num(est.lower), num(est.upper)],
            "witness": None if v.witness is None else vec(pack(v.witness)),
        })
    return rows


def component_entry(sol) -> dict:
    aset = sol.anchor_set
    methods = {r.index: r.method for r in sol.anchor_report if r.ok}
    return {
        "component": int(sol.component),
        "kept": [int(i) for i in sol.kept],
        "excluded": [{"index": int(i), "reason": str(r)} for i, r in sol.excluded],
        "anchors": [vec(pack(t)) for t in aset.anchors],
        "anchor_methods": [methods.get(i) or "search" for i in sol.kept],
        "gram": mat(aset.gram) if len(sol.kept) else [],
        "beta": vec(sol.beta),
        "attainment": [bool(a) for a in aset.attainment],
        "norm_bracket": [num(sol.mni.norm_lower), num(sol.mni.norm_upper)],
        "status": sol.mni.status,
        "witness_sign": signs(sol.mni.witness_sign),
        "admissible": admissible_rows(sol.admissible_table),
        "sweep": [{"s": signs(r.s), "epsilon": vec(r.epsilon), "coefficients": vec(r.coefficients),
                   "r_value": num(r.r_value)} for r in sol.sweep],
        "r_interval": None if sol.r_interval is None else vec(sol.r_interval),
        "decision": None if sol.selection is None else sol.selection.decision,
        "chosen_sign": None if sol.selection is None else signs(sol.selection.chosen_sign),
        "chosen_coefficients": vec(sol.chosen.coefficients),
    }


def solution_report(config, X, Y, vsol, provenance) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "solution",
        "config": config,
        "dataset": {"x": mat(X), "y": mat(Y)},
        "components": [component_entry(c) for c in vsol.components],
        "combined": {"norm_bracket": [num(vsol.norm_lower), num(vsol.norm_upper)], "status": vsol.status},
        "provenance": provenance,
    }


def admissible_report(config, X, Y, table, component, provenance) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "admissible",
        "config": config,
        "dataset": {"x": mat(X), "y": mat(Y)},
        "component": int(component),
        "admissible": admissible_rows(table),
        "provenance": provenance,
    }


def validate_report(report) -> None:
    kind = report.get("kind") if isinstance(report, dict) else None
    if kind not in SCHEMAS:
        raise jsonschema.ValidationError(f"unknown report kind {kind!r}")
    jsonschema.validate(report, SCHEMAS[kind])


def dumps(report) -> str:
    """Deterministic serialization (sorted keys, fixed indentation, trailing newline)."""
    validate_report(report)
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def loads(text) -> dict:
    report = json.loads(text)
    validate_report(report)
    return report
