"""Geometric theorem catalog for the forward-chaining reasoner.

Each rule knows how to match itself against a newly derived statement
(semi-naive evaluation: every premise combination fires exactly once, when
its newest premise is processed) and how to re-verify a recorded transition.
Rules carry numeric side-condition guards so that a fired rule's conclusion
always holds on the instantiated scene; a conclusion failing the kernel
check therefore signals a bug, not a filterable event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterator, Protocol, Sequence

from .geometry import SceneGeometry
from .statements import (
    MalformedStatementError,
    Predicate,
    Statement,
    angle_measure,
    collinear,
    congruent_triangles,
    equal_angles,
    equal_segments,
    parallel,
    right_angle,
    segment_length,
    segment_ratio,
    similar_triangles,
)

Match = tuple[tuple[int, ...], Statement]


class MatchContext(Protocol):
    geometry: SceneGeometry

    def stmt(self, sid: int) -> Statement: ...

    def ids_of(self, pred: Predicate) -> Sequence[int]: ...

    def lookup(self, stmt: Statement) -> int | None: ...


@dataclass(frozen=True)
class Rule:
    """A theorem: premise matcher, conclusion builder, numeric re-verifier."""

    id: str
    cost_tag: str  # "geometric" | "algebraic"
    match: Callable[[MatchContext, int], Iterator[Match]]
    value_relation: Callable[[Sequence[Statement], Statement], bool] | None = None

    def recheck(self, geometry: SceneGeometry, premises: Sequence[Statement], conclusion: Statement) -> bool:
        """Numeric verifier used when replaying stored transitions."""
        for s in (*premises, conclusion):
            if not geometry.check_statement(s).holds:
                return False
        if self.value_relation is not None and not self.value_relation(premises, conclusion):
            return False
        return True


def _others(ctx: MatchContext, pred: Predicate, before: int) -> Iterator[tuple[int, Statement]]:
    for i in ctx.ids_of(pred):
        if i >= before:
            break
        yield i, ctx.stmt(i)


def _lookup_before(ctx: MatchContext, stmt: Statement, before: int) -> int | None:
    sid = ctx.lookup(stmt)
    return sid if sid is not None and sid < before else None


def _seg(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


def _shared_point(s1: Sequence[str], s2: Sequence[str]) -> str | None:
    common = set(s1) & set(s2)
    return common.pop() if len(common) == 1 else None


def _other_end(seg: Sequence[str], p: str) -> str:
    return seg[1] if seg[0] == p else seg[0]


def _not_collinear(g: SceneGeometry, a: str, b: str, c: str, margin: float = 1e-7) -> bool:
    try:
        return g.statement_residual(collinear(a, b, c)) > margin
    except MalformedStatementError:
        return False


def _norm180(deg: float) -> float:
    return (deg + 180.0) % 360.0 - 180.0


def _position_deg(g: SceneGeometry, center: str, p: str) -> float:
    pc, pp = g.point(center), g.point(p)
    return math.degrees(math.atan2(pp[1] - pc[1], pp[0] - pc[0]))


def _on_major_arc(g: SceneGeometry, center: str, a: str, b: str, c: str) -> bool:
    """True when c lies strictly on the arc of the circle not subtending a-b."""
    ta = _position_deg(g, center, a)
    tb = _position_deg(g, center, b)
    tc = _position_deg(g, center, c)
    ds = (tb - ta) % 360.0
    if ds > 180.0:
        ta, tb = tb, ta
        ds = 360.0 - ds
    dc = (tc - ta) % 360.0
    eps = 1e-9
    if dc < eps or abs(dc - ds) < eps or abs(dc - 360.0) < eps:
        return False  # coincides with an endpoint
    return dc > ds


def _strictly_between(g: SceneGeometry, a: str, x: str, b: str) -> bool:
    pa, px, pb = g.point(a), g.point(x), g.point(b)
    return (pa[0] - px[0]) * (pb[0] - px[0]) + (pa[1] - px[1]) * (pb[1] - px[1]) < 0.0


def _side_sign(g: SceneGeometry, p: str, a: str, b: str, margin: float = 1e-7) -> int:
    """-1/+1 for a point strictly off the directed line a->b, else 0."""
    pa, pb, pp = g.point(a), g.point(b), g.point(p)
    ux, uy = pb[0] - pa[0], pb[1] - pa[1]
    cross = ux * (pp[1] - pa[1]) - uy * (pp[0] - pa[0])
    scale = math.hypot(ux, uy) * math.hypot(pp[0] - pa[0], pp[1] - pa[1])
    if scale == 0.0 or abs(cross) / scale <= margin:
        return 0
    return 1 if cross > 0 else -1


def _safe(factory, *args) -> Statement | None:
    try:
        return factory(*args)
    except MalformedStatementError:
        return None


def _sqrt_fraction(f: Fraction) -> Fraction | None:
    if f < 0:
        return None
    rn, rd = math.isqrt(f.numerator), math.isqrt(f.denominator)
    if rn * rn == f.numerator and rd * rd == f.denominator:
        return Fraction(rn, rd)
    return None


# --- matchers ---------------------------------------------------------------


def _m_isosceles_base_angles(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.EQUAL_SEGMENTS:
        return
    s1, s2 = new.groups
    apex = _shared_point(s1, s2)
    if apex is None:
        return
    b, c = _other_end(s1, apex), _other_end(s2, apex)
    if not _not_collinear(ctx.geometry, apex, b, c):
        return
    conclusion = _safe(equal_angles, (apex, b, c), (apex, c, b))
    if conclusion is not None:
        yield (sid,), conclusion


def _base_angle_pattern(a1: Sequence[str], a2: Sequence[str]) -> tuple[str, str, str] | None:
    """Detect base angles of one triangle: returns (apex, base1, base2)."""
    v1, v2 = a1[1], a2[1]
    r1, r2 = {a1[0], a1[2]}, {a2[0], a2[2]}
    if v1 == v2 or v2 not in r1 or v1 not in r2:
        return None
    w1 = (r1 - {v2}).pop()
    w2 = (r2 - {v1}).pop()
    if w1 != w2:
        return None
    return w1, v1, v2


def _m_isosceles_converse(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.EQUAL_ANGLES:
        return
    pat = _base_angle_pattern(new.groups[0], new.groups[1])
    if pat is None:
        return
    apex, b, c = pat
    if not _not_collinear(ctx.geometry, apex, b, c):
        return
    conclusion = _safe(equal_segments, (apex, b), (apex, c))
    if conclusion is not None:
        yield (sid,), conclusion


def _m_triangle_angle_sum(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.ANGLE_MEASURE or new.value is None:
        return
    tri = set(new.groups[0])
    for oid, other in _others(ctx, Predicate.ANGLE_MEASURE, sid):
        if other.value is None or set(other.groups[0]) != tri:
            continue
        v1, v2 = new.groups[0][1], other.groups[0][1]
        if v1 == v2:
            continue
        rest = 180 - new.value - other.value
        if not 0 < rest < 180:
            continue
        third = (tri - {v1, v2}).pop()
        conclusion = _safe(angle_measure, (v1, third, v2), rest)
        if conclusion is not None:
            yield tuple(sorted((oid, sid))), conclusion


def _m_angle_sum_equal_pair(ctx: MatchContext, sid: int) -> Iterator[Match]:
    """Base angles equal plus a known apex angle fixes both base angles."""

    def fire(eq_id: int, eq: Statement, val_id: int, val: Statement) -> Iterator[Match]:
        pat = _base_angle_pattern(eq.groups[0], eq.groups[1])
        if pat is None or val.value is None:
            return
        apex, b, c = pat
        ang = val.groups[0]
        if ang[1] != apex or {ang[0], ang[2]} != {b, c}:
            return
        each = (180 - val.value) / 2
        if not 0 < each < 180:
            return
        premises = tuple(sorted((eq_id, val_id)))
        for base, other in ((b, c), (c, b)):
            conclusion = _safe(angle_measure, (apex, base, other), each)
            if conclusion is not None:
                yield premises, conclusion

    new = ctx.stmt(sid)
    if new.predicate is Predicate.EQUAL_ANGLES:
        for oid, other in _others(ctx, Predicate.ANGLE_MEASURE, sid):
            yield from fire(sid, new, oid, other)
    elif new.predicate is Predicate.ANGLE_MEASURE:
        for oid, other in _others(ctx, Predicate.EQUAL_ANGLES, sid):
            yield from fire(oid, other, sid, new)


def _m_vertical_angles(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.COLLINEAR:
        return
    g = ctx.geometry
    for oid, other in _others(ctx, Predicate.COLLINEAR, sid):
        common = set(new.groups[0]) & set(other.groups[0])
        if len(common) != 1:
            continue
        x = common.pop()
        a, b = (p for p in new.groups[0] if p != x)
        c, d = (p for p in other.groups[0] if p != x)
        if not (_strictly_between(g, a, x, b) and _strictly_between(g, c, x, d)):
            continue
        if _side_sign(g, c, a, b) == 0:  # same line, no crossing
            continue
        premises = tuple(sorted((oid, sid)))
        for c1, c2 in (((a, x, c), (b, x, d)), ((a, x, d), (b, x, c))):
            conclusion = _safe(equal_angles, c1, c2)
            if conclusion is not None:
                yield premises, conclusion


def _m_alternate_interior(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.PARALLEL:
        return
    g = ctx.geometry
    s1, s2 = new.groups
    for b in s1:
        for c in s2:
            a, d = _other_end(s1, b), _other_end(s2, c)
            sa, sd = _side_sign(g, a, b, c), _side_sign(g, d, b, c)
            if sa == 0 or sd == 0 or sa == sd:
                continue
            conclusion = _safe(equal_angles, (a, b, c), (b, c, d))
            if conclusion is not None:
                yield (sid,), conclusion


def _m_corresponding_angles(ctx: MatchContext, sid: int) -> Iterator[Match]:
    def fire(par_id: int, par: Statement, col_id: int, col: Statement) -> Iterator[Match]:
        g = ctx.geometry
        s1, s2 = par.groups
        pts = set(col.groups[0])
        for b in s1:
            for c in s2:
                if {b, c} - pts:
                    continue
                e = (pts - {b, c}).pop() if len(pts - {b, c}) == 1 else None
                if e is None or not _strictly_between(g, b, c, e):
                    continue
                a, d = _other_end(s1, b), _other_end(s2, c)
                sa, sd = _side_sign(g, a, b, c), _side_sign(g, d, b, c)
                if sa == 0 or sd == 0 or sa != sd:
                    continue
                conclusion = _safe(equal_angles, (a, b, c), (d, c, e))
                if conclusion is not None:
                    yield tuple(sorted((par_id, col_id))), conclusion

    new = ctx.stmt(sid)
    if new.predicate is Predicate.PARALLEL:
        for oid, other in _others(ctx, Predicate.COLLINEAR, sid):
            yield from fire(sid, new, oid, other)
    elif new.predicate is Predicate.COLLINEAR:
        for oid, other in _others(ctx, Predicate.PARALLEL, sid):
            yield from fire(oid, other, sid, new)


def _m_perpendicular_right_angle(ctx: MatchContext, sid: int) -> Iterator[Match]:
    def shared_endpoint(perp_id: int, perp: Statement) -> Iterator[Match]:
        s1, s2 = perp.groups
        v = _shared_point(s1, s2)
        if v is None:
            return
        conclusion = _safe(right_angle, (_other_end(s1, v), v, _other_end(s2, v)))
        if conclusion is not None:
            yield (perp_id,), conclusion

    def on_line(perp_id: int, perp: Statement, col_id: int, col: Statement) -> Iterator[Match]:
        pts = set(col.groups[0])
        for sa, sb in ((perp.groups[0], perp.groups[1]), (perp.groups[1], perp.groups[0])):
            if not set(sb) <= pts:
                continue
            feet = (set(sa) & pts) - set(sb)
            if len(feet) != 1:
                continue
            foot = feet.pop()
            apex = _other_end(sa, foot)
            if apex in pts:
                continue
            premises = tuple(sorted((perp_id, col_id)))
            for end in sb:
                conclusion = _safe(right_angle, (apex, foot, end))
                if conclusion is not None:
                    yield premises, conclusion

    new = ctx.stmt(sid)
    if new.predicate is Predicate.PERPENDICULAR:
        yield from shared_endpoint(sid, new)
        for oid, other in _others(ctx, Predicate.COLLINEAR, sid):
            yield from on_line(sid, new, oid, other)
    elif new.predicate is Predicate.COLLINEAR:
        for oid, other in _others(ctx, Predicate.PERPENDICULAR, sid):
            yield from on_line(oid, other, sid, new)


def _m_right_angle_measure(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.RIGHT_ANGLE:
        return
    conclusion = _safe(angle_measure, new.groups[0], 90)
    if conclusion is not None:
        yield (sid,), conclusion


def _m_midpoint_equal_halves(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.MIDPOINT:
        return
    (m,), (a, b) = new.groups
    conclusion = _safe(equal_segments, (a, m), (m, b))
    if conclusion is not None:
        yield (sid,), conclusion


def _m_midpoint_half_ratio(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.MIDPOINT:
        return
    (m,), (a, b) = new.groups
    for end in (a, b):
        conclusion = _safe(segment_ratio, (end, m), (a, b), Fraction(1, 2))
        if conclusion is not None:
            yield (sid,), conclusion


def _midsegment_pattern(
    ctx: MatchContext, sid: int
) -> Iterator[tuple[tuple[int, ...], tuple[str, str], tuple[str, str]]]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.MIDPOINT:
        return
    (m,), seg1 = new.groups
    for oid, other in _others(ctx, Predicate.MIDPOINT, sid):
        (n,), seg2 = other.groups
        apex = _shared_point(seg1, seg2)
        if apex is None or m == n:
            continue
        b, c = _other_end(seg1, apex), _other_end(seg2, apex)
        if not _not_collinear(ctx.geometry, apex, b, c):
            continue
        yield tuple(sorted((oid, sid))), (m, n), (b, c)


def _m_midsegment_parallel(ctx: MatchContext, sid: int) -> Iterator[Match]:
    for premises, mid_seg, base in _midsegment_pattern(ctx, sid):
        conclusion = _safe(parallel, mid_seg, base)
        if conclusion is not None:
            yield premises, conclusion


def _m_midsegment_half_length(ctx: MatchContext, sid: int) -> Iterator[Match]:
    for premises, mid_seg, base in _midsegment_pattern(ctx, sid):
        conclusion = _safe(segment_ratio, mid_seg, base, Fraction(1, 2))
        if conclusion is not None:
            yield premises, conclusion


def _right_angle_with_lengths(
    ctx: MatchContext, sid: int
) -> Iterator[tuple[int, Statement, int, Statement, int, Statement]]:
    """Enumerate (right-angle stmt, two segment lengths) combinations with sid newest."""
    new = ctx.stmt(sid)
    if new.predicate is Predicate.RIGHT_ANGLE:
        lens = list(_others(ctx, Predicate.SEGMENT_LENGTH, sid))
        for (i1, l1), (i2, l2) in combinations(lens, 2):
            yield sid, new, i1, l1, i2, l2
    elif new.predicate is Predicate.SEGMENT_LENGTH:
        for rid, ra in _others(ctx, Predicate.RIGHT_ANGLE, sid):
            for oid, other in _others(ctx, Predicate.SEGMENT_LENGTH, sid):
                yield rid, ra, oid, other, sid, new


def _m_pythagoras(ctx: MatchContext, sid: int) -> Iterator[Match]:
    for rid, ra, i1, l1, i2, l2 in _right_angle_with_lengths(ctx, sid):
        if l1.value is None or l2.value is None:
            continue
        x, v, y = ra.groups[0]
        legs = {_seg(v, x): None, _seg(v, y): None}
        segs = {l1.groups[0]: l1.value, l2.groups[0]: l2.value}
        if set(segs) != set(legs):
            continue
        hyp = _sqrt_fraction(sum(val * val for val in segs.values()))
        if hyp is None:
            continue
        conclusion = _safe(segment_length, (x, y), hyp)
        if conclusion is not None:
            yield tuple(sorted((rid, i1, i2))), conclusion


def _m_pythagoras_leg(ctx: MatchContext, sid: int) -> Iterator[Match]:
    for rid, ra, i1, l1, i2, l2 in _right_angle_with_lengths(ctx, sid):
        if l1.value is None or l2.value is None:
            continue
        x, v, y = ra.groups[0]
        hyp_seg = _seg(x, y)
        for hyp, leg in ((l1, l2), (l2, l1)):
            if hyp.groups[0] != hyp_seg:
                continue
            if leg.groups[0] == _seg(v, x):
                target = (v, y)
            elif leg.groups[0] == _seg(v, y):
                target = (v, x)
            else:
                continue
            sq = hyp.value * hyp.value - leg.value * leg.value
            if sq <= 0:
                continue
            other_leg = _sqrt_fraction(sq)
            if other_leg is None:
                continue
            conclusion = _safe(segment_length, target, other_leg)
            if conclusion is not None:
                yield tuple(sorted((rid, i1, i2))), conclusion


def _triangle_correspondence(
    sides1: Sequence[tuple[str, str]], sides2: Sequence[tuple[str, str]]
) -> tuple[tuple[str, ...], tuple[str, ...]] | None:
    pts1 = set(sides1[0]) | set(sides1[1]) | set(sides1[2])
    pts2 = set(sides2[0]) | set(sides2[1]) | set(sides2[2])
    if len(pts1) != 3 or len(pts2) != 3:
        return None
    mapping: dict[str, str] = {}
    for i, j in combinations(range(3), 2):
        c1 = _shared_point(sides1[i], sides1[j])
        c2 = _shared_point(sides2[i], sides2[j])
        if c1 is None or c2 is None:
            return None
        if mapping.get(c1, c2) != c2:
            return None
        mapping[c1] = c2
    if len(mapping) != 3 or len(set(mapping.values())) != 3:
        return None
    for k in range(3):
        if {mapping[p] for p in sides1[k]} != set(sides2[k]):
            return None
    t1 = tuple(sorted(pts1))
    return t1, tuple(mapping[p] for p in t1)


def _m_sss_congruence(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.EQUAL_SEGMENTS:
        return
    g = ctx.geometry
    eqs = list(_others(ctx, Predicate.EQUAL_SEGMENTS, sid))
    seen: set[tuple[tuple[int, ...], Statement]] = set()

    def emit(premises: tuple[int, ...], sides1, sides2) -> Iterator[Match]:
        pair = _triangle_correspondence(sides1, sides2)
        if pair is None:
            return
        t1, t2 = pair
        if not (_not_collinear(g, *t1) and _not_collinear(g, *t2)):
            return
        conclusion = _safe(congruent_triangles, t1, t2)
        if conclusion is None:
            return
        key = (premises, conclusion)
        if key not in seen:
            seen.add(key)
            yield premises, conclusion

    # three explicit equalities
    for (i2, e2), (i3, e3) in combinations(eqs, 2):
        premises = tuple(sorted((sid, i2, i3)))
        for o1 in (0, 1):
            for o2 in (0, 1):
                for o3 in (0, 1):
                    sides1 = [new.groups[o1], e2.groups[o2], e3.groups[o3]]
                    sides2 = [new.groups[1 - o1], e2.groups[1 - o2], e3.groups[1 - o3]]
                    yield from emit(premises, sides1, sides2)
    # two equalities plus a literally shared third side
    for i2, e2 in eqs:
        premises = tuple(sorted((sid, i2)))
        for o1 in (0, 1):
            for o2 in (0, 1):
                s1a, s1b = new.groups[o1], e2.groups[o2]
                s2a, s2b = new.groups[1 - o1], e2.groups[1 - o2]
                p1 = _shared_point(s1a, s1b)
                p2 = _shared_point(s2a, s2b)
                if p1 is None or p2 is None:
                    continue
                loose1 = (set(s1a) | set(s1b)) - {p1}
                loose2 = (set(s2a) | set(s2b)) - {p2}
                if len(loose1) != 2 or len(loose2) != 2 or loose1 != loose2:
                    continue
                third = _seg(*sorted(loose1))
                yield from emit(premises, [s1a, s1b, third], [s2a, s2b, third])


def _eq_or_identical(
    ctx: MatchContext, seg1: tuple[str, str], seg2: tuple[str, str], before: int
) -> tuple[bool, int | None]:
    """Is seg1 = seg2 available: identical segments or an eq statement < before."""
    s1, s2 = _seg(*seg1), _seg(*seg2)
    if s1 == s2:
        return True, None
    stmt = _safe(equal_segments, s1, s2)
    if stmt is None:
        return False, None
    sid = _lookup_before(ctx, stmt, before)
    return (sid is not None), sid


def _angle_pairings(
    eq_ang: Statement,
) -> Iterator[tuple[tuple[str, str, str], tuple[str, str, str]]]:
    """Yield angle pairs in both triangle-assignment orders and ray pairings."""
    g1, g2 = eq_ang.groups
    for a1, a2 in ((g1, g2), (g2, g1)):
        yield a1, a2
        yield (a1[2], a1[1], a1[0]), a2


def _m_sas_congruence(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    g = ctx.geometry

    def fire(ang_id: int, ang_stmt: Statement, newest: int) -> Iterator[Match]:
        seen: set[tuple[tuple[int, ...], Statement]] = set()
        for a1, a2 in _angle_pairings(ang_stmt):
            x1, v1, y1 = a1
            x2, v2, y2 = a2
            ok1, eq1 = _eq_or_identical(ctx, (v1, x1), (v2, x2), newest + 1)
            ok2, eq2 = _eq_or_identical(ctx, (v1, y1), (v2, y2), newest + 1)
            if not (ok1 and ok2):
                continue
            ids = {ang_id} | {e for e in (eq1, eq2) if e is not None}
            if newest not in ids or max(ids) != newest:
                continue
            if not (_not_collinear(g, x1, v1, y1) and _not_collinear(g, x2, v2, y2)):
                continue
            conclusion = _safe(congruent_triangles, (x1, v1, y1), (x2, v2, y2))
            if conclusion is None:
                continue
            premises = tuple(sorted(ids))
            if (premises, conclusion) in seen:
                continue
            seen.add((premises, conclusion))
            yield premises, conclusion

    if new.predicate is Predicate.EQUAL_ANGLES:
        yield from fire(sid, new, sid)
    elif new.predicate is Predicate.EQUAL_SEGMENTS:
        for oid, other in _others(ctx, Predicate.EQUAL_ANGLES, sid):
            yield from fire(oid, other, sid)


def _triangle_maps(
    t1: set[str], t2: set[str], v1: str, v2: str, w1: str, w2: str
) -> tuple[tuple[str, str, str], tuple[str, str, str]] | None:
    if v1 == w1 or v2 == w2:
        return None
    r1 = t1 - {v1, w1}
    r2 = t2 - {v2, w2}
    if len(r1) != 1 or len(r2) != 1:
        return None
    return (v1, w1, r1.pop()), (v2, w2, r2.pop())


def _m_asa_congruence(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    g = ctx.geometry

    def fire(id_a: int, st_a: Statement, id_b: int, st_b: Statement, newest: int) -> Iterator[Match]:
        seen: set[tuple[tuple[int, ...], Statement]] = set()
        for a1, a2 in _angle_pairings(st_a):
            for b1, b2 in _angle_pairings(st_b):
                if set(a1) != set(b1) or set(a2) != set(b2):
                    continue
                tri = _triangle_maps(set(a1), set(a2), a1[1], a2[1], b1[1], b2[1])
                if tri is None:
                    continue
                (v1, w1, u1), (v2, w2, u2) = tri
                ok, eq_id = _eq_or_identical(ctx, (v1, w1), (v2, w2), newest + 1)
                if not ok:
                    continue
                ids = {id_a, id_b} | ({eq_id} if eq_id is not None else set())
                if newest not in ids or max(ids) != newest:
                    continue
                if not (_not_collinear(g, v1, w1, u1) and _not_collinear(g, v2, w2, u2)):
                    continue
                conclusion = _safe(congruent_triangles, (v1, w1, u1), (v2, w2, u2))
                if conclusion is None:
                    continue
                premises = tuple(sorted(ids))
                if (premises, conclusion) in seen:
                    continue
                seen.add((premises, conclusion))
                yield premises, conclusion

    if new.predicate is Predicate.EQUAL_ANGLES:
        for oid, other in _others(ctx, Predicate.EQUAL_ANGLES, sid):
            yield from fire(sid, new, oid, other, sid)
    elif new.predicate is Predicate.EQUAL_SEGMENTS:
        angs = list(_others(ctx, Predicate.EQUAL_ANGLES, sid))
        for (ia, sa), (ib, sb) in combinations(angs, 2):
            yield from fire(ia, sa, ib, sb, sid)


def _corresponding_side_pairs(t1, t2):
    for i, j in ((0, 1), (1, 2), (0, 2)):
        yield (t1[i], t1[j]), (t2[i], t2[j])


def _m_congruent_sides(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.CONGRUENT_TRIANGLES:
        return
    for s1, s2 in _corresponding_side_pairs(*new.groups):
        conclusion = _safe(equal_segments, s1, s2)
        if conclusion is not None:
            yield (sid,), conclusion


def _m_congruent_angles(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.CONGRUENT_TRIANGLES:
        return
    t1, t2 = new.groups
    for i in range(3):
        a1 = (t1[(i + 1) % 3], t1[i], t1[(i + 2) % 3])
        a2 = (t2[(i + 1) % 3], t2[i], t2[(i + 2) % 3])
        conclusion = _safe(equal_angles, a1, a2)
        if conclusion is not None:
            yield (sid,), conclusion


def _m_aa_similarity(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.EQUAL_ANGLES:
        return
    g = ctx.geometry
    seen: set[tuple[tuple[int, ...], Statement]] = set()
    for oid, other in _others(ctx, Predicate.EQUAL_ANGLES, sid):
        for a1, a2 in _angle_pairings(new):
            for b1, b2 in _angle_pairings(other):
                if set(a1) != set(b1) or set(a2) != set(b2):
                    continue
                tri = _triangle_maps(set(a1), set(a2), a1[1], a2[1], b1[1], b2[1])
                if tri is None:
                    continue
                (v1, w1, u1), (v2, w2, u2) = tri
                if not (_not_collinear(g, v1, w1, u1) and _not_collinear(g, v2, w2, u2)):
                    continue
                conclusion = _safe(similar_triangles, (v1, w1, u1), (v2, w2, u2))
                if conclusion is None:
                    continue
                premises = tuple(sorted((oid, sid)))
                if (premises, conclusion) in seen:
                    continue
                seen.add((premises, conclusion))
                yield premises, conclusion


def _m_similar_side_ratio(ctx: MatchContext, sid: int) -> Iterator[Match]:
    def fire(sim_id: int, sim: Statement, newest: int) -> Iterator[Match]:
        t1, t2 = sim.groups
        pairs = [( _seg(*p1), _seg(*p2)) for p1, p2 in _corresponding_side_pairs(t1, t2)]
        for i, (seg1, seg2) in enumerate(pairs):
            st1 = _lookup_len(ctx, seg1, newest + 1)
            st2 = _lookup_len(ctx, seg2, newest + 1)
            if st1 is None or st2 is None:
                continue
            (id1, v1), (id2, v2) = st1, st2
            ids = {sim_id, id1, id2}
            if newest not in ids or max(ids) != newest:
                continue
            ratio = v1 / v2
            premises = tuple(sorted(ids))
            for j, (o1, o2) in enumerate(pairs):
                if j == i or o1 == o2:
                    continue
                conclusion = _safe(segment_ratio, o1, o2, ratio)
                if conclusion is not None:
                    yield premises, conclusion

    new = ctx.stmt(sid)
    if new.predicate is Predicate.SIMILAR_TRIANGLES:
        yield from fire(sid, new, sid)
    elif new.predicate is Predicate.SEGMENT_LENGTH:
        for oid, other in _others(ctx, Predicate.SIMILAR_TRIANGLES, sid):
            yield from fire(oid, other, sid)


def _lookup_len(ctx: MatchContext, seg: tuple[str, str], before: int) -> tuple[int, Fraction] | None:
    for i in ctx.ids_of(Predicate.SEGMENT_LENGTH):
        if i >= before:
            break
        s = ctx.stmt(i)
        if s.groups[0] == seg and s.value is not None:
            return i, s.value
    return None


def _circle_groups(ctx: MatchContext, before: int) -> dict[tuple[str, tuple[str, str]], list[tuple[int, str]]]:
    """Group on-circle statements by (center, radius segment)."""
    circles: dict[tuple[str, tuple[str, str]], list[tuple[int, str]]] = {}
    for i in ctx.ids_of(Predicate.ON_CIRCLE):
        if i >= before:
            break
        s = ctx.stmt(i)
        (p,), (o,), sr = s.groups
        circles.setdefault((o, sr), []).append((i, p))
    return circles


def _m_inscribed_angle(ctx: MatchContext, sid: int) -> Iterator[Match]:
    g = ctx.geometry

    def fire(circle_key, members, val_id: int, val: Statement, newest: int) -> Iterator[Match]:
        center = circle_key[0]
        a, v, b = val.groups[0]
        if v != center or val.value is None:
            return
        by_point = {}
        for i, p in members:
            by_point.setdefault(p, i)
        if a not in by_point or b not in by_point:
            return
        half = val.value / 2
        if not 0 < half < 180:
            return
        for c, cid in sorted(by_point.items()):
            if c in (a, b):
                continue
            if not _on_major_arc(g, center, a, b, c):
                continue
            ids = {by_point[a], by_point[b], cid, val_id}
            if newest not in ids or max(ids) != newest:
                continue
            conclusion = _safe(angle_measure, (a, c, b), half)
            if conclusion is not None:
                yield tuple(sorted(ids)), conclusion

    new = ctx.stmt(sid)
    if new.predicate is Predicate.ANGLE_MEASURE:
        circles = _circle_groups(ctx, sid)
        for key, members in circles.items():
            yield from fire(key, members, sid, new, sid)
    elif new.predicate is Predicate.ON_CIRCLE:
        circles = _circle_groups(ctx, sid + 1)
        for oid, other in _others(ctx, Predicate.ANGLE_MEASURE, sid):
            for key, members in circles.items():
                yield from fire(key, members, oid, other, sid)


def _m_thales(ctx: MatchContext, sid: int) -> Iterator[Match]:
    g = ctx.geometry

    def fire(circle_key, members, mid_id: int, mid: Statement, newest: int) -> Iterator[Match]:
        center = circle_key[0]
        (m,), (a, b) = mid.groups
        if m != center:
            return
        by_point = {}
        for i, p in members:
            by_point.setdefault(p, i)
        if a not in by_point or b not in by_point:
            return
        for c, cid in sorted(by_point.items()):
            if c in (a, b):
                continue
            ids = {by_point[a], by_point[b], cid, mid_id}
            if newest not in ids or max(ids) != newest:
                continue
            if not _not_collinear(g, a, c, b):
                continue
            conclusion = _safe(right_angle, (a, c, b))
            if conclusion is not None:
                yield tuple(sorted(ids)), conclusion

    new = ctx.stmt(sid)
    if new.predicate is Predicate.MIDPOINT:
        circles = _circle_groups(ctx, sid)
        for key, members in circles.items():
            yield from fire(key, members, sid, new, sid)
    elif new.predicate is Predicate.ON_CIRCLE:
        circles = _circle_groups(ctx, sid + 1)
        for oid, other in _others(ctx, Predicate.MIDPOINT, sid):
            for key, members in circles.items():
                yield from fire(key, members, oid, other, sid)


def _m_angle_addition(ctx: MatchContext, sid: int) -> Iterator[Match]:
    new = ctx.stmt(sid)
    if new.predicate is not Predicate.ANGLE_MEASURE or new.value is None:
        return
    g = ctx.geometry
    p1, v, q1 = new.groups[0]
    for oid, other in _others(ctx, Predicate.ANGLE_MEASURE, sid):
        if other.value is None or other.groups[0][1] != v:
            continue
        p2, _, q2 = other.groups[0]
        shared = {p1, q1} & {p2, q2}
        if len(shared) != 1:
            continue
        d = shared.pop()
        x = p1 if q1 == d else q1
        y = p2 if q2 == d else q2
        if x == y:
            continue
        total = new.value + other.value
        if not 0 < total < 180:
            continue
        pv, px, py, pd = g.point(v), g.point(x), g.point(y), g.point(d)
        cross1 = (px[0] - pv[0]) * (pd[1] - pv[1]) - (px[1] - pv[1]) * (pd[0] - pv[0])
        cross2 = (pd[0] - pv[0]) * (py[1] - pv[1]) - (pd[1] - pv[1]) * (py[0] - pv[0])
        if cross1 * cross2 <= 0:
            continue  # d must lie strictly inside the combined angle
        conclusion = _safe(angle_measure, (x, v, y), total)
        if conclusion is not None:
            yield tuple(sorted((oid, sid))), conclusion


def _transitive(pred: Predicate, factory) -> Callable[[MatchContext, int], Iterator[Match]]:
    def matcher(ctx: MatchContext, sid: int) -> Iterator[Match]:
        new = ctx.stmt(sid)
        if new.predicate is not pred:
            return
        for oid, other in _others(ctx, pred, sid):
            common = [x for x in new.groups if x in other.groups]
            if len(common) != 1:
                continue
            mid = common[0]
            a = new.groups[0] if new.groups[1] == mid else new.groups[1]
            b = other.groups[0] if other.groups[1] == mid else other.groups[1]
            conclusion = _safe(factory, a, b)
            if conclusion is not None:
                yield tuple(sorted((oid, sid))), conclusion

    return matcher


def _substitution(
    eq_pred: Predicate, val_pred: Predicate, factory
) -> Callable[[MatchContext, int], Iterator[Match]]:
    def fire(ctx, eq_id, eq, val_id, val) -> Iterator[Match]:
        if val.value is None:
            return
        target = val.groups[0]
        if target == eq.groups[0]:
            other = eq.groups[1]
        elif target == eq.groups[1]:
            other = eq.groups[0]
        else:
            return
        conclusion = _safe(factory, other, val.value)
        if conclusion is not None:
            yield tuple(sorted((eq_id, val_id))), conclusion

    def matcher(ctx: MatchContext, sid: int) -> Iterator[Match]:
        new = ctx.stmt(sid)
        if new.predicate is eq_pred:
            for oid, other in _others(ctx, val_pred, sid):
                yield from fire(ctx, sid, new, oid, other)
        elif new.predicate is val_pred:
            for oid, other in _others(ctx, eq_pred, sid):
                yield from fire(ctx, oid, other, sid, new)

    return matcher


def _m_ratio_length_substitution(ctx: MatchContext, sid: int) -> Iterator[Match]:
    def fire(ratio_id: int, ratio: Statement, len_id: int, lstmt: Statement) -> Iterator[Match]:
        if ratio.value is None or lstmt.value is None:
            return
        s1, s2 = ratio.groups
        if lstmt.groups[0] == s2:
            conclusion = _safe(segment_length, s1, ratio.value * lstmt.value)
        elif lstmt.groups[0] == s1:
            conclusion = _safe(segment_length, s2, lstmt.value / ratio.value)
        else:
            return
        if conclusion is not None:
            yield tuple(sorted((ratio_id, len_id))), conclusion

    new = ctx.stmt(sid)
    if new.predicate is Predicate.SEGMENT_RATIO:
        for oid, other in _others(ctx, Predicate.SEGMENT_LENGTH, sid):
            yield from fire(sid, new, oid, other)
    elif new.predicate is Predicate.SEGMENT_LENGTH:
        for oid, other in _others(ctx, Predicate.SEGMENT_RATIO, sid):
            yield from fire(oid, other, sid, new)


# --- value relations for replay verification --------------------------------


def _vals(premises: Sequence[Statement], pred: Predicate) -> list[Fraction]:
    return [p.value for p in premises if p.predicate is pred and p.value is not None]


def _vr_right_angle(premises, conclusion) -> bool:
    return conclusion.value == 90


def _vr_angle_sum(premises, conclusion) -> bool:
    vals = _vals(premises, Predicate.ANGLE_MEASURE)
    return len(vals) == 2 and sum(vals) + conclusion.value == 180


def _vr_sum_equal_pair(premises, conclusion) -> bool:
    vals = _vals(premises, Predicate.ANGLE_MEASURE)
    return len(vals) == 1 and conclusion.value == (180 - vals[0]) / 2


def _vr_half(premises, conclusion) -> bool:
    # canonical segment ordering may invert the stored ratio
    return conclusion.value in (Fraction(1, 2), Fraction(2))


def _vr_pythagoras(premises, conclusion) -> bool:
    vals = _vals(premises, Predicate.SEGMENT_LENGTH)
    return len(vals) == 2 and conclusion.value**2 == vals[0] ** 2 + vals[1] ** 2


def _vr_pythagoras_leg(premises, conclusion) -> bool:
    vals = sorted(_vals(premises, Predicate.SEGMENT_LENGTH))
    if len(vals) != 2:
        return False
    return vals[1] ** 2 == vals[0] ** 2 + conclusion.value**2


def _vr_substitution(val_pred: Predicate):
    def check(premises, conclusion) -> bool:
        vals = _vals(premises, val_pred)
        return len(vals) == 1 and conclusion.value == vals[0]

    return check


def _vr_ratio_subst(premises, conclusion) -> bool:
    ratio = next((p for p in premises if p.predicate is Predicate.SEGMENT_RATIO), None)
    length = next((p for p in premises if p.predicate is Predicate.SEGMENT_LENGTH), None)
    if ratio is None or length is None or ratio.value is None or length.value is None:
        return False
    if conclusion.groups[0] == ratio.groups[0]:
        return conclusion.value == ratio.value * length.value
    return conclusion.value == length.value / ratio.value


def _vr_inscribed(premises, conclusion) -> bool:
    vals = _vals(premises, Predicate.ANGLE_MEASURE)
    return len(vals) == 1 and conclusion.value == vals[0] / 2


def _vr_angle_addition(premises, conclusion) -> bool:
    vals = _vals(premises, Predicate.ANGLE_MEASURE)
    return len(vals) == 2 and conclusion.value == sum(vals)


def _vr_similar_ratio(premises, conclusion) -> bool:
    vals = _vals(premises, Predicate.SEGMENT_LENGTH)
    if conclusion.value is None:
        return False
    if len(vals) == 1:  # a corresponding side pair is one shared segment
        return conclusion.value == 1
    if len(vals) != 2:
        return False
    return conclusion.value in (vals[0] / vals[1], vals[1] / vals[0])


DEFAULT_RULES: tuple[Rule, ...] = (
    Rule("isosceles_base_angles", "geometric", _m_isosceles_base_angles),
    Rule("isosceles_converse", "geometric", _m_isosceles_converse),
    Rule("triangle_angle_sum", "algebraic", _m_triangle_angle_sum, _vr_angle_sum),
    Rule("triangle_angle_sum_equal_pair", "algebraic", _m_angle_sum_equal_pair, _vr_sum_equal_pair),
    Rule("vertical_angles", "geometric", _m_vertical_angles),
    Rule("alternate_interior_angles", "geometric", _m_alternate_interior),
    Rule("corresponding_angles", "geometric", _m_corresponding_angles),
    Rule("perpendicular_right_angle", "geometric", _m_perpendicular_right_angle),
    Rule("right_angle_measure", "algebraic", _m_right_angle_measure, _vr_right_angle),
    Rule("midpoint_equal_halves", "geometric", _m_midpoint_equal_halves),
    Rule("midpoint_half_ratio", "geometric", _m_midpoint_half_ratio, _vr_half),
    Rule("midsegment_parallel", "geometric", _m_midsegment_parallel),
    Rule("midsegment_half_length", "geometric", _m_midsegment_half_length, _vr_half),
    Rule("pythagoras", "algebraic", _m_pythagoras, _vr_pythagoras),
    Rule("pythagoras_leg", "algebraic", _m_pythagoras_leg, _vr_pythagoras_leg),
    Rule("sss_congruence", "geometric", _m_sss_congruence),
    Rule("sas_congruence", "geometric", _m_sas_congruence),
    Rule("asa_congruence", "geometric", _m_asa_congruence),
    Rule("congruent_sides", "geometric", _m_congruent_sides),
    Rule("congruent_angles", "geometric", _m_congruent_angles),
    Rule("aa_similarity", "geometric", _m_aa_similarity),
    Rule("similar_side_ratio", "algebraic", _m_similar_side_ratio, _vr_similar_ratio),
    Rule("inscribed_angle", "geometric", _m_inscribed_angle, _vr_inscribed),
    Rule("thales_right_angle", "geometric", _m_thales),
    Rule("angle_addition", "algebraic", _m_angle_addition, _vr_angle_addition),
    Rule("equal_segments_transitive", "algebraic", _transitive(Predicate.EQUAL_SEGMENTS, equal_segments)),
    Rule("equal_angles_transitive", "algebraic", _transitive(Predicate.EQUAL_ANGLES, equal_angles)),
    Rule(
        "segment_length_substitution",
        "algebraic",
        _substitution(Predicate.EQUAL_SEGMENTS, Predicate.SEGMENT_LENGTH, segment_length),
        _vr_substitution(Predicate.SEGMENT_LENGTH),
    ),
    Rule(
        "angle_measure_substitution",
        "algebraic",
        _substitution(Predicate.EQUAL_ANGLES, Predicate.ANGLE_MEASURE, angle_measure),
        _vr_substitution(Predicate.ANGLE_MEASURE),
    ),
    Rule("ratio_length_substitution", "algebraic", _m_ratio_length_substitution, _vr_ratio_subst),
)

RULES_BY_ID = {r.id: r for r in DEFAULT_RULES}
