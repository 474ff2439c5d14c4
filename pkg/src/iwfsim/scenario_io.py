"""Scenario JSON files, trace CSV and number formatting.

Scenario documents::

    {"num_users": 2, "num_channels": 2,
     "gain": 0.1 | [[[...]]] ,          # scalar = unit direct gains, this cross gain
     "noise": 1.0 | [[...]],            # scalar or [i][k]
     "power_budget": 10 | [...],        # scalar or [i]
     "mask": 4.0 | [...] | [[...]]}     # optional; null entries are unbounded

Errors carry a JSON path such as ``$.gain[1][0][1]``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import Scenario, validate_scenario


class ScenarioFormatError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _number(value, path):
    if value is None:
        return np.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFormatError(path, f"expected a number, got {value!r}")
    return float(value)


def _array(value, shape, path, allow_null=False):
    """Nested lists of exactly ``shape``; nulls only where ``allow_null``."""
    if not shape:
        if value is None and not allow_null:
            raise ScenarioFormatError(path, "null is not allowed here")
        return _number(value, path)
    if not isinstance(value, list):
        raise ScenarioFormatError(path, f"expected a list of length {shape[0]}")
    if len(value) != shape[0]:
        raise ScenarioFormatError(path, f"expected length {shape[0]}, got {len(value)}")
    return [_array(v, shape[1:], f"{path}[{n}]", allow_null) for n, v in enumerate(value)]


def _count(doc, key):
    if key not in doc:
        raise ScenarioFormatError(f"$.{key}", "missing required key")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ScenarioFormatError(f"$.{key}", f"expected a positive integer, got {v!r}")
    return v


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("$", "scenario must be a JSON object")
    n, k = _count(doc, "num_users"), _count(doc, "num_channels")
    for key in ("gain", "noise", "power_budget"):
        if key not in doc:
            raise ScenarioFormatError(f"$.{key}", "missing required key")

    g = doc["gain"]
    if isinstance(g, list):
        gain = np.array(_array(g, (n, n, k), "$.gain"))
    else:
        h = _number(g, "$.gain")
        gain = np.full((n, n, k), h)
        gain[np.arange(n), np.arange(n)] = 1.0

    def broadcast(key, shape):
        v = doc[key]
        if isinstance(v, list):
            return np.array(_array(v, shape, f"$.{key}"))
        return np.full(shape, _number(v, f"$.{key}") if v is not None else np.nan)

    noise = broadcast("noise", (n, k))
    budget = broadcast("power_budget", (n,))

    mask = doc.get("mask")
    if mask is None:
        mask_arr = np.full((n, k), np.inf)
    elif isinstance(mask, list):
        nested = bool(mask) and isinstance(mask[0], list)
        if nested:
            mask_arr = np.array(_array(mask, (n, k), "$.mask", allow_null=True))
        else:
            mask_arr = np.tile(_array(mask, (k,), "$.mask", allow_null=True), (n, 1))
    else:
        mask_arr = np.full((n, k), _number(mask, "$.mask"))

    s = Scenario(gain, noise, budget, mask_arr)
    problems = validate_scenario(s)
    if problems:
        raise ScenarioFormatError("$", "; ".join(problems))
    return s


def scenario_to_dict(s: Scenario) -> dict:
    doc = {
        "num_users": s.num_users,
        "num_channels": s.num_channels,
        "gain": s.gain.tolist(),
        "noise": s.noise.tolist(),
        "power_budget": s.power_budget.tolist(),
    }
    if np.any(np.isfinite(s.mask)):
        doc["mask"] = [[None if np.isinf(m) else float(m) for m in row] for row in s.mask]
    return doc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioFormatError(str(path), f"cannot read file ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    try:
        return scenario_from_dict(doc)
    except ScenarioFormatError as exc:
        raise ScenarioFormatError(f"{path}: {exc.where}", str(exc).split(": ", 1)[1]) from exc


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")


TRACE_COLUMNS = ("iter", "user", "channel", "power", "sup_delta", "rate_user")


def write_trace_csv(trace, path) -> None:
    """One row per (iter, user, channel). ``sup_delta`` at iter t is the step
    that produced iterate t, left empty for the starting profile."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for t, (p, r) in enumerate(zip(trace.iterates, trace.per_user_rates)):
            delta = "" if t == 0 else fmt(trace.sup_deltas[t - 1])
            for i in range(p.shape[0]):
                for c in range(p.shape[1]):
                    w.writerow((t, i, c, fmt(p[i, c]), delta, fmt(r[i])))
