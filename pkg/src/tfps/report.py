"""JSON and CSV serialization.

Floats are written with ``repr`` so a report re-parsed from disk reproduces
every number bit for bit.  Non-finite values, which JSON cannot carry, are
written as the strings "NaN", "Infinity" and "-Infinity" and revived on load.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

SCHEMA = 1
_NONFINITE = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}


def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_encode(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "NaN"
        if math.isinf(f):
            return "Infinity" if f > 0 else "-Infinity"
        return f
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if isinstance(obj, str) and obj in _NONFINITE:
        return _NONFINITE[obj]
    return obj


def dumps(payload):
    return json.dumps(_encode(payload), indent=2, allow_nan=False)


def loads(text):
    return _decode(json.loads(text))


def envelope(command, body, provenance):
    return {"schema": SCHEMA, "command": command, "provenance": provenance, **body}


def write_json(path, payload):
    Path(path).write_text(dumps(payload) + "\n")


def read_json(path):
    return loads(Path(path).read_text())


def fmt(v):
    """17 significant digits; non-finite values spelled out."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating, int, np.integer)) and not isinstance(v, bool) else v for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [row for row in r]
    return header, rows


def write_density_csv(path, x, rho1, rho2, V1, V2):
    write_csv(path, ["x", "rho1", "rho2", "V1", "V2"], zip(x, rho1, rho2, V1, V2))
