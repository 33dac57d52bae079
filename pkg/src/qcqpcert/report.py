"""JSON encoding of reports and outcomes: +/-inf as strings, NaN as null."""

from __future__ import annotations

import dataclasses
import json
import math
from enum import Enum

import numpy as np

from .certifier import ConditionReport
from .sdp_solver import ConicOutcome


def _float(v: float):
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return v + 0.0     # no negative zeros in the output


def jsonable(obj):
    """Recursively turn numpy data, enums and dataclasses into plain JSON values."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(jsonable(k)) if not isinstance(k, str) else k: jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    try:
        return _float(float(obj))     # mpmath scalars and the like
    except (TypeError, ValueError):
        return str(obj)


def report_dict(report: ConditionReport, flavor: str = "sdp", meta: dict | None = None) -> dict:
    doc = {"flavor": flavor}
    doc.update(jsonable(report))
    if meta is not None:
        doc["meta"] = meta
    return doc


def outcome_dict(out: ConicOutcome, include_trace: bool = False) -> dict:
    doc = jsonable(out)
    if not include_trace:
        doc.pop("trace", None)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def parse_float(v):
    """Inverse of the float encoding used in reports."""
    if v is None:
        return float("nan")
    if v == "+inf":
        return float("inf")
    if v == "-inf":
        return float("-inf")
    return float(v)
