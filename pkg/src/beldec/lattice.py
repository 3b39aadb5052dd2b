"""Frames of discernment and their two element algebras.

A :class:`Frame` fixes an ordered tuple of class labels.  Elements live in
one of two algebras:

* :class:`PowerElement` -- a disjunction of classes, i.e. a subset of the
  frame, stored as an n-bit mask (bit k set <-> class k+1 included).
* :class:`HyperElement` -- an element of the lattice generated by closing
  the classes under union and intersection, stored as a bit mask over the
  2**n - 1 atomic regions (Venn parts) of the n-class Venn diagram.

A Venn part is identified by its *signature*: the nonempty set of class
positions whose regions contain it.  Bit s-1 of a part mask records the
presence of the part with signature s (read s as an n-bit subset mask,
1 <= s <= 2**n - 1).  A part mask denotes a union/intersection combination
of classes exactly when it is nonempty and upward closed under signature
inclusion; unions are bitwise OR, intersections bitwise AND, and the
cardinality of an element is the popcount of its mask.

Element expressions use the grammar::

    expr := term ('|' term)*
    term := atom ('&' atom)*
    atom := label | '(' expr ')'

where '&' (intersection) binds tighter than '|' (union).  The canonical
form of an element is its antichain of minimal signatures: each signature
printed as '&'-joined labels, terms joined by '|', factors and terms both
sorted lexicographically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

__all__ = [
    "Frame",
    "PowerElement",
    "HyperElement",
    "SpecificityWindow",
    "ParseError",
    "parse_element",
    "format_element",
    "canonical_key",
    "enumerate_hyper",
    "elements_in_window",
    "cardinality_histogram",
]

_LABEL_RE = re.compile(r"[A-Za-z0-9_]+\Z")
_TOKEN_RE = re.compile(r"\s*([A-Za-z0-9_]+|[&|()])")

# Full enumeration of the free lattice is exponential in the number of
# classes (Dedekind growth); six classes (~7.8e6 elements) is the cap.
MAX_ENUMERATION_CLASSES = 6


class ParseError(ValueError):
    """Syntax or vocabulary error in an element expression."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


def _bit_positions(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@lru_cache(maxsize=None)
def _clear_bit_masks(n: int) -> tuple[int, ...]:
    """Per class position b: mask of the signature indices with bit b clear.

    Indices range over all 2**n subset masks; index 0 stands for the empty
    signature, which is re-inserted before running the closure check.
    """
    masks = []
    for b in range(n):
        m = 0
        for s in range(1 << n):
            if not (s >> b) & 1:
                m |= 1 << s
        masks.append(m)
    return tuple(masks)


def _check_parts(frame: "Frame", parts: int) -> None:
    if not isinstance(parts, int):
        raise TypeError("part mask must be an int")
    if parts <= 0:
        raise ValueError("lattice elements are nonempty")
    if parts >> frame.part_count:
        raise ValueError(
            f"part mask uses bits outside the {frame.part_count} Venn parts"
        )
    table = parts << 1
    for b, clear in enumerate(_clear_bit_masks(frame.n)):
        # presence of signature s (bit b clear) must imply presence of s|{b}
        if ((table & clear) << (1 << b)) & ~table:
            raise ValueError(
                "part mask is not upward closed: not a union/intersection "
                "combination of classes"
            )


class Frame:
    """Ordered, exhaustive and exclusive set of at least two class labels."""

    def __init__(self, labels: Iterable[str]):
        labels = tuple(labels)
        if len(labels) < 2:
            raise ValueError("a frame needs at least two classes")
        if len(set(labels)) != len(labels):
            raise ValueError("frame labels must be distinct")
        for lab in labels:
            if not isinstance(lab, str) or not _LABEL_RE.match(lab):
                raise ValueError(f"label {lab!r} is not a word over [A-Za-z0-9_]")
        self.labels = labels
        self.n = len(labels)
        self.part_count = (1 << self.n) - 1
        self._pos = {lab: k for k, lab in enumerate(labels)}
        self._hash = hash(labels)
        self._singleton_parts: tuple[int, ...] | None = None
        self._hyper_cache: tuple["HyperElement", ...] | None = None

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and self.labels == other.labels

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Frame({list(self.labels)!r})"

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def index(self, label: str) -> int:
        """0-based position of a label."""
        try:
            return self._pos[label]
        except KeyError:
            raise ValueError(f"unknown label {label!r}") from None

    def _singleton_masks(self) -> tuple[int, ...]:
        if self._singleton_parts is None:
            out = []
            for b in range(self.n):
                mask = 0
                for s in range(1, 1 << self.n):
                    if (s >> b) & 1:
                        mask |= 1 << (s - 1)
                out.append(mask)
            self._singleton_parts = tuple(out)
        return self._singleton_parts

    def singleton(self, i: int) -> "HyperElement":
        """Class number i (1-based) as a lattice element: all parts whose
        signature contains i."""
        if not 1 <= i <= self.n:
            raise IndexError(f"class number {i} outside 1..{self.n}")
        return HyperElement._trusted(self, self._singleton_masks()[i - 1])

    def power_singleton(self, i: int) -> "PowerElement":
        """Class number i (1-based) as a one-class subset."""
        if not 1 <= i <= self.n:
            raise IndexError(f"class number {i} outside 1..{self.n}")
        return PowerElement._trusted(self, 1 << (i - 1))

    def theta_hyper(self) -> "HyperElement":
        """The full union of all classes (every Venn part)."""
        return HyperElement._trusted(self, (1 << self.part_count) - 1)

    def theta_power(self) -> "PowerElement":
        """The whole frame as a subset."""
        return PowerElement._trusted(self, (1 << self.n) - 1)

    def element(self, text: str, algebra: str = "hyper"):
        """Parse an element expression against this frame."""
        return parse_element(self, text, algebra)


class PowerElement:
    """Disjunction of classes: a subset of the frame as an n-bit mask.

    The empty subset exists only as the conflict by-product of conjunctive
    combination; it never parses, formats, or wins a decision.
    """

    __slots__ = ("frame", "bits")

    def __init__(self, frame: Frame, bits: int):
        if not isinstance(frame, Frame):
            raise TypeError("frame must be a Frame")
        if not isinstance(bits, int) or bits < 0 or bits >> frame.n:
            raise ValueError(f"bits must be an int in [0, 2**{frame.n})")
        self.frame = frame
        self.bits = bits

    @classmethod
    def _trusted(cls, frame: Frame, bits: int) -> "PowerElement":
        el = object.__new__(cls)
        el.frame = frame
        el.bits = bits
        return el

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    @property
    def cardinality(self) -> int:
        return self.bits.bit_count()

    def labels(self) -> tuple[str, ...]:
        return tuple(self.frame.labels[b] for b in _bit_positions(self.bits))

    def complement(self) -> "PowerElement":
        return PowerElement._trusted(self.frame, self.bits ^ ((1 << self.frame.n) - 1))

    def to_hyper(self) -> "HyperElement":
        """Embed into the union/intersection lattice as a union of singletons."""
        if self.is_empty:
            raise ValueError("the empty subset has no lattice embedding")
        masks = self.frame._singleton_masks()
        parts = 0
        for b in _bit_positions(self.bits):
            parts |= masks[b]
        return HyperElement._trusted(self.frame, parts)

    def issubset(self, other: "PowerElement") -> bool:
        self._same_frame(other)
        return self.bits & other.bits == self.bits

    def _same_frame(self, other) -> None:
        if not isinstance(other, PowerElement):
            raise TypeError("expected a PowerElement")
        if other.frame != self.frame:
            raise ValueError("elements belong to different frames")

    def __or__(self, other: "PowerElement") -> "PowerElement":
        self._same_frame(other)
        return PowerElement._trusted(self.frame, self.bits | other.bits)

    def __and__(self, other: "PowerElement") -> "PowerElement":
        self._same_frame(other)
        return PowerElement._trusted(self.frame, self.bits & other.bits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PowerElement)
            and other.frame == self.frame
            and other.bits == self.bits
        )

    def __hash__(self) -> int:
        return hash((self.frame, "power", self.bits))

    def __str__(self) -> str:
        return "<empty>" if self.is_empty else format_element(self)

    def __repr__(self) -> str:
        return f"<PowerElement {self}>"


class HyperElement:
    """Union/intersection combination of classes as a Venn-part mask."""

    __slots__ = ("frame", "parts")

    def __init__(self, frame: Frame, parts: int):
        if not isinstance(frame, Frame):
            raise TypeError("frame must be a Frame")
        _check_parts(frame, parts)
        self.frame = frame
        self.parts = parts

    @classmethod
    def _trusted(cls, frame: Frame, parts: int) -> "HyperElement":
        el = object.__new__(cls)
        el.frame = frame
        el.parts = parts
        return el

    @property
    def cardinality(self) -> int:
        """Number of Venn parts composing the element."""
        return self.parts.bit_count()

    def signatures(self) -> Iterator[int]:
        """Signatures (as subset masks) of the parts present."""
        for idx in _bit_positions(self.parts):
            yield idx + 1

    def min_signatures(self) -> list[int]:
        """The antichain of minimal signatures generating this up-set."""
        out = []
        parts = self.parts
        for s in self.signatures():
            for b in _bit_positions(s):
                pred = s & ~(1 << b)
                if pred and (parts >> (pred - 1)) & 1:
                    break
            else:
                out.append(s)
        return out

    def issubset(self, other: "HyperElement") -> bool:
        self._same_frame(other)
        return self.parts & other.parts == self.parts

    def _same_frame(self, other) -> None:
        if not isinstance(other, HyperElement):
            raise TypeError("expected a HyperElement")
        if other.frame != self.frame:
            raise ValueError("elements belong to different frames")

    def __or__(self, other: "HyperElement") -> "HyperElement":
        self._same_frame(other)
        return HyperElement._trusted(self.frame, self.parts | other.parts)

    def __and__(self, other: "HyperElement") -> "HyperElement":
        self._same_frame(other)
        # both operands contain the top part, so the result is nonempty
        return HyperElement._trusted(self.frame, self.parts & other.parts)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HyperElement)
            and other.frame == self.frame
            and other.parts == self.parts
        )

    def __hash__(self) -> int:
        return hash((self.frame, "hyper", self.parts))

    def __str__(self) -> str:
        return format_element(self)

    def __repr__(self) -> str:
        return f"<HyperElement {self}>"


@dataclass(frozen=True)
class SpecificityWindow:
    """Inclusive band [min_s, max_s] of element cardinalities."""

    min_s: int
    max_s: int

    def __post_init__(self):
        if self.min_s < 1:
            raise ValueError("min_s must be at least 1")
        if self.max_s < self.min_s:
            raise ValueError("min_s must not exceed max_s")


def format_element(x) -> str:
    """Canonical expression of an element (see module docstring)."""
    if isinstance(x, PowerElement):
        if x.is_empty:
            raise ValueError("the empty subset has no expression")
        return "|".join(sorted(x.labels()))
    if isinstance(x, HyperElement):
        labels = x.frame.labels
        terms = [
            "&".join(sorted(labels[b] for b in _bit_positions(sig)))
            for sig in x.min_signatures()
        ]
        return "|".join(sorted(terms))
    raise TypeError(f"cannot format {type(x).__name__}")


def canonical_key(x) -> tuple[int, str]:
    """Sort key giving the canonical element order: cardinality, then text."""
    return (x.cardinality, format_element(x))


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:]
            stripped = rest.lstrip()
            if not stripped:
                break
            at = pos + (len(rest) - len(stripped))
            raise ParseError(f"unexpected character {text[at]!r}", at)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, frame: Frame, text: str, algebra: str):
        self.frame = frame
        self.text = text
        self.algebra = algebra
        self.tokens = _tokenize(text)
        self.i = 0
        if algebra == "hyper":
            self.atoms = frame._singleton_masks()
        else:
            self.atoms = tuple(1 << b for b in range(frame.n))

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, len(self.text))

    def _next(self):
        tok = self._peek()
        self.i += 1
        return tok

    def expr(self) -> int:
        value = self.term()
        while self._peek()[0] == "|":
            self._next()
            value |= self.term()
        return value

    def term(self) -> int:
        value = self.atom()
        while self._peek()[0] == "&":
            self._next()
            value &= self.atom()
        return value

    def atom(self) -> int:
        tok, pos = self._next()
        if tok is None:
            raise ParseError("unexpected end of expression", pos)
        if tok == "(":
            value = self.expr()
            closing, cpos = self._next()
            if closing != ")":
                raise ParseError("expected ')'", cpos)
            return value
        if tok in "&|)":
            raise ParseError(f"unexpected {tok!r}", pos)
        try:
            b = self.frame.index(tok)
        except ValueError:
            raise ParseError(f"unknown label {tok!r}", pos) from None
        return self.atoms[b]

    def parse(self) -> int:
        value = self.expr()
        tok, pos = self._peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok!r}", pos)
        return value


def parse_element(frame: Frame, text: str, algebra: str = "hyper"):
    """Parse an element expression; '&' is intersection, '|' union.

    In the power algebra the classes are exclusive, so intersections reduce
    to plain subset intersection and an expression denoting the empty set is
    rejected.
    """
    if algebra not in ("hyper", "power"):
        raise ValueError("algebra must be 'hyper' or 'power'")
    mask = _Parser(frame, text, algebra).parse()
    if algebra == "power":
        if mask == 0:
            raise ParseError("expression denotes the empty set", 0)
        return PowerElement._trusted(frame, mask)
    return HyperElement._trusted(frame, mask)


@lru_cache(maxsize=None)
def _monotone_tables(k: int) -> tuple[int, ...]:
    """Truth tables of every monotone indicator on the subsets of k classes.

    Bit s of a table records the value at the subset with mask s.  Tables of
    k classes are glued from ordered pairs (low, high) of (k-1)-class tables
    with low <= high pointwise.
    """
    if k == 0:
        return (0, 1)
    prev = _monotone_tables(k - 1)
    shift = 1 << (k - 1)
    out = []
    for low in prev:
        for high in prev:
            if low | high == high:
                out.append(low | (high << shift))
    out.sort()
    return tuple(out)


_MASKS_6 = None


def _hyper_masks_6():
    # ~7.8e6 elements: pure-Python pairing over the 7581 five-class tables
    # is too slow, so the last gluing step is vectorized.
    global _MASKS_6
    if _MASKS_6 is None:
        import numpy as np

        prev = np.asarray(_monotone_tables(5), dtype=np.uint64)
        shift = np.uint64(32)
        chunks = []
        for low in prev:
            high = prev[(prev | low) == prev]
            chunks.append(low | (high << shift))
        tables = np.concatenate(chunks)
        keep = (tables != 0) & ((tables & np.uint64(1)) == 0)
        masks = tables[keep] >> np.uint64(1)
        masks.sort()
        _MASKS_6 = masks
    return _MASKS_6


def _hyper_masks(n: int) -> Sequence[int]:
    if n <= 5:
        return tuple(t >> 1 for t in _monotone_tables(n) if t and not (t & 1))
    if n == 6:
        return _hyper_masks_6()
    raise ValueError(
        f"full lattice enumeration is capped at {MAX_ENUMERATION_CLASSES} classes"
    )


def enumerate_hyper(frame: Frame) -> tuple[HyperElement, ...]:
    """Every element of the frame's union/intersection lattice.

    Returned in canonical order (ascending cardinality, then canonical text)
    for up to five classes; the six-class lattice (~7.8e6 elements) is
    returned in ascending mask order because rendering that many canonical
    strings would dominate the runtime.  The result is cached on the frame;
    treat it as read-only.
    """
    if frame._hyper_cache is None:
        masks = _hyper_masks(frame.n)
        if frame.n == 6:
            elems = [HyperElement._trusted(frame, int(m)) for m in masks.tolist()]
        else:
            elems = [HyperElement._trusted(frame, m) for m in masks]
            elems.sort(key=canonical_key)
        frame._hyper_cache = tuple(elems)
    return frame._hyper_cache


def elements_in_window(frame: Frame, window: SpecificityWindow) -> tuple[HyperElement, ...]:
    """Lattice elements whose cardinality falls inside the window."""
    if window.max_s > frame.part_count:
        raise ValueError(
            f"window max_s {window.max_s} exceeds the {frame.part_count} Venn parts"
        )
    return tuple(
        e for e in enumerate_hyper(frame) if window.min_s <= e.cardinality <= window.max_s
    )


def cardinality_histogram(n: int) -> list[int]:
    """Element counts per cardinality 1..2**n-1 of the n-class lattice."""
    part_count = (1 << n) - 1
    counts = [0] * (part_count + 1)
    if n == 6:
        import numpy as np

        pops = np.bitwise_count(_hyper_masks_6())
        binned = np.bincount(pops.astype(np.int64), minlength=part_count + 1)
        counts = binned.tolist()
    else:
        for m in _hyper_masks(n):
            counts[m.bit_count()] += 1
    return counts[1:]
