"""File formats: PointSet text files, trigonometric polynomials and JSON reports."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .geometry import AlignedBox
from .netgen import PointSet
from .selberg import TrigPolynomial

FORMAT_VERSION = 1


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays, tuples and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# point sets


def format_pointset(ps: PointSet, extra: dict | None = None) -> str:
    header = {
        "format_version": FORMAT_VERSION,
        "dim": ps.dim,
        "count": len(ps),
        "generator": ps.metadata.get("generator", "unknown"),
        "window": ps.window.to_dict(),
        "metadata": {k: v for k, v in ps.metadata.items() if k != "generator"},
    }
    if extra:
        header.update(extra)
    lines = [json.dumps(to_jsonable(header), sort_keys=True, allow_nan=False)]
    lines.extend(" ".join("%.12g" % c for c in row) for row in ps.points)
    return "\n".join(lines) + "\n"


def write_pointset(path, ps: PointSet, extra: dict | None = None) -> None:
    Path(path).write_text(format_pointset(ps, extra), encoding="utf-8")


def parse_pointset(text: str) -> PointSet:
    lines = text.splitlines()
    if not lines:
        raise ConfigError("empty point set file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad point set header: {exc}") from exc
    dim = int(header["dim"])
    body = [ln for ln in lines[1:] if ln.strip()]
    pts = np.array([[float(t) for t in ln.split()] for ln in body], dtype=float).reshape(-1, dim)
    meta = dict(header.get("metadata", {}))
    meta["generator"] = header.get("generator", "unknown")
    return PointSet(pts, AlignedBox.from_dict(header["window"]), meta)


def read_pointset(path) -> PointSet:
    try:
        return parse_pointset(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read point set {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# trigonometric polynomials


def trig_to_dict(p: TrigPolynomial) -> dict:
    out = {
        "format_version": FORMAT_VERSION,
        "dim": p.dim,
        "frequencies": p.freqs.tolist(),
        "coefficients": [[float(c.real), float(c.imag)] for c in p.coeffs],
    }
    if p.support is not None:
        out["support"] = {"L": np.asarray(p.support[0]).tolist(), "M": float(p.support[1])}
    return out


def trig_from_dict(d: dict) -> TrigPolynomial:
    dim = int(d["dim"])
    coeffs = np.array([complex(re, im) for re, im in d["coefficients"]], dtype=complex)
    freqs = np.array(d["frequencies"], dtype=np.int64).reshape(-1, dim)
    support = None
    if "support" in d:
        support = (np.array(d["support"]["L"], dtype=float), float(d["support"]["M"]))
    return TrigPolynomial(freqs, coeffs, dim, support)


def trig_dumps(p: TrigPolynomial) -> str:
    return json.dumps(trig_to_dict(p), sort_keys=True)


def trig_loads(text: str) -> TrigPolynomial:
    return trig_from_dict(json.loads(text))
