"""Mass functions over either algebra, their derived set functions, and
conjunctive / Dempster combination.

A mass function assigns strictly positive masses to focal elements of one
algebra ("power" subsets or "hyper" lattice elements) of a single frame,
summing to one within a tolerance.  Instances are value objects: construct,
query, combine.

Derived functions:

* ``bel(x)``  -- sum of masses of nonempty focal elements included in x.
* ``pl(x)``   -- sum of masses of focal elements intersecting x.  On the
  free lattice every element contains the total intersection, so pl is
  identically 1 there.
* ``betp(x)`` -- power algebra: sum of m(Y) * |x & Y| / |Y|.
* ``gpt(x)``  -- hyper algebra: same prorating with Venn-part cardinality.

Conjunctive combination multiplies masses over focal tuples and assigns the
product to the tuple intersection.  In the power algebra the mass landing on
the empty set is the conflict; Dempster's rule renormalizes it away.  On the
free lattice intersections are never empty, so the conflict is always zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .lattice import (
    Frame,
    HyperElement,
    PowerElement,
    canonical_key,
    format_element,
    parse_element,
)
from .serial import fmt17

__all__ = [
    "MassFunction",
    "CombinationReport",
    "TotalConflictError",
    "conjunctive",
    "dempster",
    "mass_to_json",
    "mass_from_json",
    "DEFAULT_TOLERANCE",
]

DEFAULT_TOLERANCE = 1e-9


class TotalConflictError(ValueError):
    """Dempster normalization is impossible: all combined mass is conflict."""


def _mask(el) -> int:
    return el.bits if isinstance(el, PowerElement) else el.parts


class MassFunction:
    """Basic belief assignment over one algebra of a frame."""

    __slots__ = ("frame", "algebra", "tolerance", "_focal")

    def __init__(
        self,
        frame: Frame,
        focal: Mapping | Iterable[tuple],
        algebra: str | None = None,
        *,
        renormalize: bool = False,
        tolerance: float = DEFAULT_TOLERANCE,
    ):
        """Build a mass function from element -> mass pairs.

        Elements may be PowerElement/HyperElement values or expression
        strings (strings require ``algebra=``).  Masses must be nonnegative
        and sum to 1 within ``tolerance`` unless ``renormalize`` is set, in
        which case they are scaled to sum exactly.  Mass on the empty set is
        rejected here; it only arises inside conjunctive combination.
        """
        if algebra is not None and algebra not in ("power", "hyper"):
            raise ValueError("algebra must be 'power' or 'hyper'")
        pairs = focal.items() if hasattr(focal, "items") else focal
        entries: dict = {}
        for key, value in pairs:
            if isinstance(key, str):
                if algebra is None:
                    raise ValueError("algebra= is required with string focal elements")
                el = parse_element(frame, key, algebra)
            elif isinstance(key, PowerElement):
                if algebra is None:
                    algebra = "power"
                elif algebra != "power":
                    raise ValueError("power element in a non-power mass function")
                el = key
            elif isinstance(key, HyperElement):
                if algebra is None:
                    algebra = "hyper"
                elif algebra != "hyper":
                    raise ValueError("hyper element in a non-hyper mass function")
                el = key
            else:
                raise TypeError(f"bad focal element {key!r}")
            if el.frame != frame:
                raise ValueError("focal element belongs to a different frame")
            if isinstance(el, PowerElement) and el.is_empty:
                raise ValueError(
                    "mass on the empty set only arises from conjunctive combination"
                )
            entries[el] = entries.get(el, 0.0) + float(value)
        if not entries:
            raise ValueError("a mass function needs at least one focal element")
        for el, v in entries.items():
            if v < -tolerance:
                raise ValueError(f"negative mass {v!r} on {el}")
        total = math.fsum(entries.values())
        if renormalize:
            if total <= tolerance:
                raise ValueError("cannot renormalize: total mass is zero")
            entries = {el: v / total for el, v in entries.items()}
        elif abs(total - 1.0) > tolerance:
            raise ValueError(f"masses sum to {total!r}, not 1")
        self.frame = frame
        self.algebra = algebra
        self.tolerance = tolerance
        self._focal = {el: v for el, v in entries.items() if v > 0.0}

    @classmethod
    def _raw(cls, frame: Frame, algebra: str, focal: dict, tolerance: float) -> "MassFunction":
        """Internal constructor for pre-validated focal dicts (the only path
        that may carry mass on the empty subset)."""
        m = object.__new__(cls)
        m.frame = frame
        m.algebra = algebra
        m.tolerance = tolerance
        m._focal = focal
        return m

    # -- queries ---------------------------------------------------------

    def _coerce(self, x, nonempty: bool = True):
        if isinstance(x, str):
            x = parse_element(self.frame, x, self.algebra)
        expected = PowerElement if self.algebra == "power" else HyperElement
        if not isinstance(x, expected):
            raise ValueError(f"expected a {self.algebra}-algebra element")
        if x.frame != self.frame:
            raise ValueError("element belongs to a different frame")
        if nonempty and isinstance(x, PowerElement) and x.is_empty:
            raise ValueError("the empty subset is not a valid argument")
        return x

    def items(self) -> tuple:
        return tuple(self._focal.items())

    def focal_elements(self) -> tuple:
        return tuple(self._focal.keys())

    def mass(self, x) -> float:
        return self._focal.get(self._coerce(x, nonempty=False), 0.0)

    def mass_on_empty(self) -> float:
        if self.algebra != "power":
            return 0.0
        for el, v in self._focal.items():
            if el.is_empty:
                return v
        return 0.0

    def is_bayesian(self) -> bool:
        return all(el.cardinality == 1 for el in self._focal)

    def bel(self, x) -> float:
        """Minimal committed belief: mass of nonempty focal subsets of x."""
        x = self._coerce(x)
        xm = _mask(x)
        terms = []
        for el, v in self._focal.items():
            em = _mask(el)
            if em and em & xm == em:
                terms.append(v)
        return math.fsum(terms)

    def pl(self, x) -> float:
        """Maximal compatible belief: mass of focal elements meeting x."""
        x = self._coerce(x)
        xm = _mask(x)
        terms = []
        for el, v in self._focal.items():
            if _mask(el) & xm:
                terms.append(v)
        return math.fsum(terms)

    def betp(self, x) -> float:
        """Pignistic probability on the power algebra.

        Requires a normalized input with no mass on the empty set; apply
        Dempster normalization first rather than hiding conflict here.
        """
        if self.algebra != "power":
            raise ValueError("betp is defined on the power algebra; use gpt")
        if self.mass_on_empty() > 0.0:
            raise ValueError("mass on the empty set: renormalize before betp")
        x = self._coerce(x)
        xm = _mask(x)
        terms = []
        for el, v in self._focal.items():
            em = _mask(el)
            terms.append(v * (em & xm).bit_count() / em.bit_count())
        return math.fsum(terms)

    def gpt(self, x) -> float:
        """Pignistic probability on the lattice, prorated by part counts."""
        if self.algebra != "hyper":
            raise ValueError("gpt is defined on the hyper algebra; use betp")
        x = self._coerce(x)
        xm = _mask(x)
        terms = []
        for el, v in self._focal.items():
            em = _mask(el)
            terms.append(v * (em & xm).bit_count() / em.bit_count())
        return math.fsum(terms)

    def __repr__(self) -> str:
        shown = [
            (el, v)
            for el, v in self._focal.items()
            if not (isinstance(el, PowerElement) and el.is_empty)
        ]
        shown.sort(key=lambda kv: canonical_key(kv[0]))
        inner = ", ".join(f"{el}: {v:.6g}" for el, v in shown)
        empty = self.mass_on_empty()
        if empty:
            inner += f", <empty>: {empty:.6g}"
        return f"<MassFunction[{self.algebra}] {{{inner}}}>"


@dataclass(frozen=True)
class CombinationReport:
    """Conjunctive pooling result plus the conflict it produced."""

    result: MassFunction
    conflict: float


def _check_combinable(masses: Sequence[MassFunction]) -> tuple[Frame, str]:
    if not masses:
        raise ValueError("need at least one mass function")
    frame, algebra = masses[0].frame, masses[0].algebra
    for m in masses[1:]:
        if m.frame != frame:
            raise ValueError("mass functions belong to different frames")
        if m.algebra != algebra:
            raise ValueError("mass functions use different algebras")
    return frame, algebra


def conjunctive(masses: Sequence[MassFunction]) -> CombinationReport:
    """Unnormalized conjunctive combination.

    Masses multiply over focal tuples and land on the tuple intersection;
    the conflict is the resulting mass on the empty set (always zero on the
    free lattice).  The result sums to 1 including that empty-set mass.
    """
    masses = list(masses)
    frame, algebra = _check_combinable(masses)
    acc = {_mask(el): v for el, v in masses[0]._focal.items()}
    for m in masses[1:]:
        nxt: dict[int, float] = {}
        items = list(m._focal.items())
        for ka, va in acc.items():
            for el, vb in items:
                k = ka & _mask(el)
                nxt[k] = nxt.get(k, 0.0) + va * vb
        acc = nxt
    tolerance = max(m.tolerance for m in masses)
    conflict = 0.0
    focal: dict = {}
    for k in sorted(acc):
        v = acc[k]
        if v <= 0.0:
            continue
        if k == 0:
            if algebra == "hyper":
                raise AssertionError("free-lattice intersections cannot be empty")
            conflict = v
            focal[PowerElement._trusted(frame, 0)] = v
        elif algebra == "power":
            focal[PowerElement._trusted(frame, k)] = v
        else:
            focal[HyperElement._trusted(frame, k)] = v
    result = MassFunction._raw(frame, algebra, focal, tolerance)
    return CombinationReport(result=result, conflict=conflict)


def dempster(masses: Sequence[MassFunction]) -> MassFunction:
    """Normalized conjunctive rule: conflict is redistributed by scaling.

    Raises TotalConflictError when the combined mass is (numerically) all
    conflict, i.e. the sources fully contradict each other.
    """
    report = conjunctive(masses)
    k = report.conflict
    if k == 0.0:
        return report.result
    if k >= 1.0 - 1e-12:
        raise TotalConflictError(
            f"conflict {k!r} leaves no mass to renormalize"
        )
    scale = 1.0 / (1.0 - k)
    focal = {
        el: v * scale
        for el, v in report.result._focal.items()
        if not (isinstance(el, PowerElement) and el.is_empty)
    }
    return MassFunction._raw(report.result.frame, "power", focal, report.result.tolerance)


def mass_to_json(m: MassFunction) -> str:
    """Serialize as ``{"frame": [...], "algebra": ..., "focal": [...]}``.

    Focal elements are canonical expressions in canonical order; masses are
    written with 17 significant digits.  A transient conflict-bearing mass
    cannot be serialized.
    """
    rows = []
    for el, v in sorted(m._focal.items(), key=lambda kv: canonical_key(kv[0])):
        rows.append(
            '{"element":%s,"mass":%s}' % (json.dumps(format_element(el)), fmt17(v))
        )
    return '{"frame":%s,"algebra":%s,"focal":[%s]}' % (
        json.dumps(list(m.frame.labels), separators=(",", ":")),
        json.dumps(m.algebra),
        ",".join(rows),
    )


def mass_from_json(doc, frame: Frame | None = None) -> MassFunction:
    """Parse a mass JSON document (text or already-decoded dict)."""
    obj = json.loads(doc) if isinstance(doc, (str, bytes)) else doc
    doc_frame = Frame(obj["frame"])
    if frame is None:
        frame = doc_frame
    elif frame != doc_frame:
        raise ValueError("document frame does not match the expected frame")
    pairs = [(row["element"], float(row["mass"])) for row in obj["focal"]]
    return MassFunction(frame, pairs, algebra=obj["algebra"])
