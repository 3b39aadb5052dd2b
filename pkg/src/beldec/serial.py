"""Deterministic text serialization helpers.

All numeric artifacts (CSV columns, JSON documents) are written with 17
significant digits, which round-trips IEEE doubles exactly and keeps
repeated runs byte-identical.
"""

from __future__ import annotations

import json
import math


def fmt17(x: float) -> str:
    """A float as a JSON-compatible literal with 17 significant digits."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(x, ".17g")


def dumps17(obj) -> str:
    """json.dumps with floats rendered by fmt17 and no whitespace padding."""
    if isinstance(obj, float):
        return fmt17(obj)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = ",".join(f"{json.dumps(str(k))}:{dumps17(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps17(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
