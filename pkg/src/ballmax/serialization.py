"""JSON input/output for instances, SSP data and reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInstance
from .geometry import BallSet, Instance

INSTANCE_KEYS = ("dim", "lambda", "c0", "balls")


def _reject_constant(name):
    raise InvalidInstance(f"non-finite number {name} in JSON input")


def loads_strict(text: str):
    """``json.loads`` that rejects NaN and Infinity literals."""
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"malformed JSON: {exc}") from exc


def _vector(value, name):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                              for v in value):
        raise InvalidInstance(f"{name} must be a list of numbers")
    return [float(v) for v in value]


def instance_from_dict(data: dict, lam: float | None = None) -> Instance:
    """Build an Instance from the ``{"dim", "lambda", "c0", "balls"}`` mapping.

    ``lam`` overrides the stored lambda (the field may then be absent).
    """
    if not isinstance(data, dict):
        raise InvalidInstance("instance JSON must be an object")
    missing = [k for k in INSTANCE_KEYS if k not in data and not (k == "lambda" and lam is not None)]
    if missing:
        raise InvalidInstance(f"missing field(s): {', '.join(missing)}")
    dim = data["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InvalidInstance("dim must be a positive integer")
    balls = data["balls"]
    if not isinstance(balls, list) or not balls:
        raise InvalidInstance("balls must be a non-empty list")
    centers, radii = [], []
    for k, b in enumerate(balls):
        if not isinstance(b, dict) or "center" not in b or "radius" not in b:
            raise InvalidInstance(f"ball {k} needs 'center' and 'radius'")
        c = _vector(b["center"], f"balls[{k}].center")
        if len(c) != dim:
            raise InvalidInstance(f"balls[{k}].center has length {len(c)}, expected {dim}")
        r = b["radius"]
        if not isinstance(r, (int, float)) or isinstance(r, bool):
            raise InvalidInstance(f"balls[{k}].radius must be a number")
        centers.append(c)
        radii.append(float(r))
    c0 = _vector(data["c0"], "c0")
    if len(c0) != dim:
        raise InvalidInstance(f"c0 has length {len(c0)}, expected {dim}")
    lam_val = data.get("lambda") if lam is None else lam
    if not isinstance(lam_val, (int, float)) or isinstance(lam_val, bool):
        raise InvalidInstance("lambda must be a number")
    return Instance(BallSet(np.array(centers), np.array(radii)), np.array(c0), float(lam_val))


def instance_to_dict(inst: Instance) -> dict:
    return {
        "dim": inst.dim,
        "lambda": inst.lam,
        "c0": inst.c0.tolist(),
        "balls": [{"center": c.tolist(), "radius": float(r)}
                  for c, r in zip(inst.q.centers, inst.q.radii)],
    }


def loads_instance(text: str, lam: float | None = None) -> Instance:
    return instance_from_dict(loads_strict(text), lam)


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def load_instance(path, lam: float | None = None) -> Instance:
    return loads_instance(Path(path).read_text(), lam)


def to_jsonable(obj):
    """Recursively convert numpy containers and scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=False) + "\n"
