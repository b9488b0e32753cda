"""Formal statement language for plane-geometry facts.

Defines the closed predicate vocabulary, canonical forms, the text grammar
(EBNF in the README), parsing, and serialization. Everything downstream
relies on one guarantee: two statements are equal exactly when their
canonical serializations are byte-identical.

Statements carry exact rational values only; floating point lives in the
numeric kernel.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Iterator


class StatementError(ValueError):
    """Base error for the statement language."""


class MalformedStatementError(StatementError):
    """Arity, value-range, or point-distinctness violation."""


class ParseError(StatementError):
    """Input text does not conform to the statement grammar."""

    def __init__(self, text: str, offset: int, expected: tuple[str, ...]):
        self.text = text
        self.offset = offset
        self.expected = expected
        super().__init__(f"at byte {offset}: expected {' | '.join(expected)} (input: {text!r})")


class UnknownPredicateError(ParseError):
    pass


class UnknownPointError(ParseError):
    pass


class Unit(Enum):
    DEGREES = "degrees"
    LENGTH = "length"
    RATIO = "ratio"


class Predicate(Enum):
    COLLINEAR = "collinear"
    PARALLEL = "parallel"
    PERPENDICULAR = "perp"
    EQUAL_SEGMENTS = "eq_seg"
    EQUAL_ANGLES = "eq_angle"
    SEGMENT_LENGTH = "seg_len"
    ANGLE_MEASURE = "angle_val"
    RIGHT_ANGLE = "right_angle"
    MIDPOINT = "midpoint"
    ON_CIRCLE = "on_circle"
    CONGRUENT_TRIANGLES = "congruent"
    SIMILAR_TRIANGLES = "similar"
    SEGMENT_RATIO = "seg_ratio"


# group sizes, and the unit of the trailing rational (None = no value slot)
_SHAPES: dict[Predicate, tuple[tuple[int, ...], Unit | None]] = {
    Predicate.COLLINEAR: ((3,), None),
    Predicate.PARALLEL: ((2, 2), None),
    Predicate.PERPENDICULAR: ((2, 2), None),
    Predicate.EQUAL_SEGMENTS: ((2, 2), None),
    Predicate.EQUAL_ANGLES: ((3, 3), None),
    Predicate.SEGMENT_LENGTH: ((2,), Unit.LENGTH),
    Predicate.ANGLE_MEASURE: ((3,), Unit.DEGREES),
    Predicate.RIGHT_ANGLE: ((3,), None),
    Predicate.MIDPOINT: ((1, 2), None),
    Predicate.ON_CIRCLE: ((1, 1, 2), None),
    Predicate.CONGRUENT_TRIANGLES: ((3, 3), None),
    Predicate.SIMILAR_TRIANGLES: ((3, 3), None),
    Predicate.SEGMENT_RATIO: ((2, 2), Unit.RATIO),
}

_BY_TOKEN = {p.value: p for p in Predicate}

VALUE_PREDICATES = frozenset(p for p, (_, u) in _SHAPES.items() if u is not None)

_POINT_RE = re.compile(r"[A-Z][0-9]?")
_RATIONAL_RE = re.compile(r"-?[0-9]+(?:/[0-9]+)?")


@dataclass(frozen=True)
class PointId:
    """A named point within one scene; the index is dense and stable."""

    label: str
    index: int

    def __post_init__(self) -> None:
        if not _POINT_RE.fullmatch(self.label):
            raise MalformedStatementError(f"bad point label {self.label!r}")
        if self.index < 0:
            raise MalformedStatementError("point index must be non-negative")


@dataclass(frozen=True)
class Statement:
    """One atomic geometric fact over named points.

    ``groups`` follows the per-predicate shape in ``_SHAPES`` (e.g. two
    2-point groups for segment pairs). ``value`` is present exactly for the
    value-bearing predicates; ``value=None`` on those denotes a query form
    (the "find this" slot) and never appears inside a StatementSet.
    """

    predicate: Predicate
    groups: tuple[tuple[str, ...], ...]
    value: Fraction | None = None

    @property
    def unit(self) -> Unit | None:
        return _SHAPES[self.predicate][1]

    def points(self) -> Iterator[str]:
        for group in self.groups:
            yield from group

    def text(self) -> str:
        return serialize_statement(self)

    def without_value(self) -> "Statement":
        """Query form of a value-bearing statement."""
        if self.predicate not in VALUE_PREDICATES:
            raise MalformedStatementError(f"{self.predicate.value} has no value slot")
        return Statement(self.predicate, self.groups, None)

    def __str__(self) -> str:
        return serialize_statement(self)


def _canon_segment(group: tuple[str, ...]) -> tuple[str, str]:
    a, b = group
    if a == b:
        raise MalformedStatementError(f"degenerate segment {a}{b}")
    return (a, b) if a < b else (b, a)


def _canon_angle(group: tuple[str, ...]) -> tuple[str, str, str]:
    a, v, c = group
    if len({a, v, c}) != 3:
        raise MalformedStatementError(f"degenerate angle {a}{v}{c}")
    return (a, v, c) if a < c else (c, v, a)


def _canon_triangle(group: tuple[str, ...]) -> tuple[str, ...]:
    if len(set(group)) != 3:
        raise MalformedStatementError(f"degenerate triangle {''.join(group)}")
    return group


def _canon_triangle_pair(
    t1: tuple[str, ...], t2: tuple[str, ...]
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    # Any identical index permutation of both triangles preserves the vertex
    # correspondence, as does swapping the two triangles.
    _canon_triangle(t1)
    _canon_triangle(t2)
    variants = []
    for perm in permutations(range(3)):
        u1 = tuple(t1[i] for i in perm)
        u2 = tuple(t2[i] for i in perm)
        variants.append((u1, u2))
        variants.append((u2, u1))
    return min(variants)


def _check_value(pred: Predicate, value: Fraction | None) -> Fraction | None:
    if pred not in VALUE_PREDICATES:
        if value is not None:
            raise MalformedStatementError(f"{pred.value} takes no value")
        return None
    if value is None:
        return None  # query form
    if value <= 0:
        raise MalformedStatementError(f"{pred.value} value must be positive, got {value}")
    if pred is Predicate.ANGLE_MEASURE and not (0 < value < 180):
        raise MalformedStatementError(f"angle value must lie in (0, 180), got {value}")
    return value


def canonicalize(s: Statement) -> Statement:
    """Return the unique canonical representative of ``s``.

    Idempotent; raises :class:`MalformedStatementError` for wrong arity,
    required-distinct points that coincide, or out-of-range values.
    """
    shape, _ = _SHAPES[s.predicate]
    if len(s.groups) != len(shape) or any(len(g) != n for g, n in zip(s.groups, shape)):
        raise MalformedStatementError(
            f"{s.predicate.value} expects groups {shape}, got {tuple(len(g) for g in s.groups)}"
        )
    for label in s.points():
        if not _POINT_RE.fullmatch(label):
            raise MalformedStatementError(f"bad point label {label!r}")
    value = _check_value(s.predicate, s.value)
    pred = s.predicate

    if pred is Predicate.COLLINEAR:
        pts = s.groups[0]
        if len(set(pts)) != 3:
            raise MalformedStatementError("collinear points must be distinct")
        groups: tuple[tuple[str, ...], ...] = (tuple(sorted(pts)),)
    elif pred in (Predicate.PARALLEL, Predicate.PERPENDICULAR, Predicate.EQUAL_SEGMENTS):
        s1 = _canon_segment(s.groups[0])
        s2 = _canon_segment(s.groups[1])
        if s1 == s2:
            raise MalformedStatementError(f"{pred.value} of a segment with itself")
        if pred is Predicate.PARALLEL and set(s1) & set(s2):
            raise MalformedStatementError("parallel segments may not share a point")
        groups = (min(s1, s2), max(s1, s2))
    elif pred is Predicate.EQUAL_ANGLES:
        a1 = _canon_angle(s.groups[0])
        a2 = _canon_angle(s.groups[1])
        if a1 == a2:
            raise MalformedStatementError("equal-angles with itself")
        groups = (min(a1, a2), max(a1, a2))
    elif pred in (Predicate.ANGLE_MEASURE, Predicate.RIGHT_ANGLE):
        groups = (_canon_angle(s.groups[0]),)
    elif pred is Predicate.SEGMENT_LENGTH:
        groups = (_canon_segment(s.groups[0]),)
    elif pred is Predicate.MIDPOINT:
        (m,), seg = s.groups
        cs = _canon_segment(seg)
        if m in cs:
            raise MalformedStatementError("midpoint coincides with an endpoint")
        groups = ((m,), cs)
    elif pred is Predicate.ON_CIRCLE:
        (p,), (o,), radius = s.groups
        cr = _canon_segment(radius)
        if p == o:
            raise MalformedStatementError("circle point coincides with the center")
        groups = ((p,), (o,), cr)
    elif pred in (Predicate.CONGRUENT_TRIANGLES, Predicate.SIMILAR_TRIANGLES):
        t1, t2 = _canon_triangle_pair(s.groups[0], s.groups[1])
        if t1 == t2:
            raise MalformedStatementError(f"{pred.value} of a triangle with itself")
        groups = (t1, t2)
    elif pred is Predicate.SEGMENT_RATIO:
        s1 = _canon_segment(s.groups[0])
        s2 = _canon_segment(s.groups[1])
        if s1 == s2:
            raise MalformedStatementError("ratio of a segment with itself")
        if s1 > s2:
            s1, s2 = s2, s1
            if value is not None:
                value = 1 / value
        groups = (s1, s2)
    else:  # pragma: no cover - exhaustive over Predicate
        raise AssertionError(pred)

    return Statement(pred, groups, value)


def serialize_statement(s: Statement) -> str:
    """Deterministic ASCII, newline-free rendering; inverse of the parser."""
    body = ";".join(",".join(group) for group in s.groups)
    if s.value is not None:
        body += f";{s.value}"
    return f"{s.predicate.value}({body})"


def parse_statement(text: str, known_points: Iterable[str] | None = None) -> Statement:
    """Parse grammar text into a canonical Statement.

    ``known_points``, when given, restricts point tokens to that set
    (used when interpreting statements against a concrete scene).
    """
    known = None if known_points is None else frozenset(known_points)
    pos = 0

    def expect(literal: str) -> None:
        nonlocal pos
        if not text.startswith(literal, pos):
            raise ParseError(text, pos, (repr(literal),))
        pos += len(literal)

    m = re.match(r"[a-z_]+", text)
    if not m:
        raise ParseError(text, 0, ("predicate name",))
    pred = _BY_TOKEN.get(m.group(0))
    if pred is None:
        raise UnknownPredicateError(text, 0, ("known predicate name",))
    pos = m.end()
    expect("(")

    shape, unit = _SHAPES[pred]
    groups: list[tuple[str, ...]] = []
    for gi, size in enumerate(shape):
        group: list[str] = []
        for i in range(size):
            pm = _POINT_RE.match(text, pos)
            if not pm:
                raise ParseError(text, pos, ("point",))
            label = pm.group(0)
            if known is not None and label not in known:
                raise UnknownPointError(text, pos, ("known point",))
            group.append(label)
            pos = pm.end()
            if i < size - 1:
                expect(",")
        groups.append(tuple(group))
        if gi < len(shape) - 1:
            expect(";")

    value: Fraction | None = None
    if unit is not None and text.startswith(";", pos):
        pos += 1
        vm = _RATIONAL_RE.match(text, pos)
        if not vm:
            raise ParseError(text, pos, ("rational",))
        value = Fraction(vm.group(0))
        pos = vm.end()

    expect(")")
    if pos != len(text):
        raise ParseError(text, pos, ("end of input",))
    return canonicalize(Statement(pred, tuple(groups), value))


class StatementSet:
    """Deduplicated canonical statements with stable insertion order.

    Membership and index lookup are O(1); iteration follows insertion order.
    Treated as immutable once a scene or graph hands it out.
    """

    __slots__ = ("_index", "_items")

    def __init__(self, items: Iterable[Statement] = ()):
        self._index: dict[Statement, int] = {}
        self._items: list[Statement] = []
        for s in items:
            self.add(s)

    def add(self, s: Statement) -> bool:
        """Insert ``s``; returns True when it was not already present."""
        if s in self._index:
            return False
        self._index[s] = len(self._items)
        self._items.append(s)
        return True

    def index_of(self, s: Statement) -> int:
        return self._index[s]

    def __contains__(self, s: object) -> bool:
        return s in self._index

    def __iter__(self) -> Iterator[Statement]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i: int) -> Statement:
        return self._items[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StatementSet):
            return NotImplemented
        return self._items == other._items

    def __repr__(self) -> str:
        return f"StatementSet({len(self._items)} statements)"

    def copy(self) -> "StatementSet":
        return StatementSet(self._items)


Seg = tuple[str, str]
Ang = tuple[str, str, str]


def collinear(a: str, b: str, c: str) -> Statement:
    return canonicalize(Statement(Predicate.COLLINEAR, ((a, b, c),)))


def parallel(s1: Seg, s2: Seg) -> Statement:
    return canonicalize(Statement(Predicate.PARALLEL, (tuple(s1), tuple(s2))))


def perpendicular(s1: Seg, s2: Seg) -> Statement:
    return canonicalize(Statement(Predicate.PERPENDICULAR, (tuple(s1), tuple(s2))))


def equal_segments(s1: Seg, s2: Seg) -> Statement:
    return canonicalize(Statement(Predicate.EQUAL_SEGMENTS, (tuple(s1), tuple(s2))))


def equal_angles(a1: Ang, a2: Ang) -> Statement:
    return canonicalize(Statement(Predicate.EQUAL_ANGLES, (tuple(a1), tuple(a2))))


def segment_length(s: Seg, value) -> Statement:
    v = None if value is None else Fraction(value)
    return canonicalize(Statement(Predicate.SEGMENT_LENGTH, (tuple(s),), v))


def angle_measure(a: Ang, value) -> Statement:
    v = None if value is None else Fraction(value)
    return canonicalize(Statement(Predicate.ANGLE_MEASURE, (tuple(a),), v))


def right_angle(a: Ang) -> Statement:
    return canonicalize(Statement(Predicate.RIGHT_ANGLE, (tuple(a),)))


def midpoint(m: str, seg: Seg) -> Statement:
    return canonicalize(Statement(Predicate.MIDPOINT, ((m,), tuple(seg))))


def on_circle(p: str, center: str, radius_seg: Seg) -> Statement:
    return canonicalize(Statement(Predicate.ON_CIRCLE, ((p,), (center,), tuple(radius_seg))))


def congruent_triangles(t1: Ang, t2: Ang) -> Statement:
    return canonicalize(Statement(Predicate.CONGRUENT_TRIANGLES, (tuple(t1), tuple(t2))))


def similar_triangles(t1: Ang, t2: Ang) -> Statement:
    return canonicalize(Statement(Predicate.SIMILAR_TRIANGLES, (tuple(t1), tuple(t2))))


def segment_ratio(s1: Seg, s2: Seg, value) -> Statement:
    v = None if value is None else Fraction(value)
    return canonicalize(Statement(Predicate.SEGMENT_RATIO, (tuple(s1), tuple(s2)), v))
