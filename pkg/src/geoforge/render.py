"""Deterministic SVG diagrams for scenes.

Only the initial statements and the scene's drawn segments drive the
picture: segments, circles, point dots and labels, right-angle squares, and
equal-length tick marks. Identical scene and style always produce
byte-identical output (fixed float formatting, fixed element order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constructions import Scene
from .statements import Predicate, Statement


class RenderError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagramStyle:
    canvas: int = 440
    stroke_width: float = 2.0
    mark_stroke_width: float = 1.2
    font_size: int = 15
    point_radius: float = 2.6
    label_offset: float = 14.0
    right_angle_size: float = 10.0
    tick_size: float = 5.0
    show_right_angle_marks: bool = True
    show_equal_tick_marks: bool = True
    show_point_dots: bool = True

    def __post_init__(self) -> None:
        for name in ("canvas", "stroke_width", "font_size", "point_radius", "label_offset"):
            if getattr(self, name) <= 0:
                raise RenderError(f"style dimension {name} must be positive")


def _fmt(x: float) -> str:
    out = f"{x:.4f}"
    return "0.0000" if out == "-0.0000" else out


def _referenced_segments(scene: Scene) -> list[tuple[str, str]]:
    segs: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()

    def add(a: str, b: str) -> None:
        seg = (a, b) if a < b else (b, a)
        if seg not in seen:
            seen.add(seg)
            segs.append(seg)

    for seg in scene.drawn_segments:
        add(*seg)
    for s in scene.initial_statements:
        p = s.predicate
        if p in (
            Predicate.PARALLEL,
            Predicate.PERPENDICULAR,
            Predicate.EQUAL_SEGMENTS,
            Predicate.SEGMENT_RATIO,
        ):
            add(*s.groups[0])
            add(*s.groups[1])
        elif p is Predicate.SEGMENT_LENGTH:
            add(*s.groups[0])
        elif p is Predicate.MIDPOINT:
            add(*s.groups[1])
        elif p in (Predicate.ANGLE_MEASURE, Predicate.RIGHT_ANGLE):
            a, v, c = s.groups[0]
            add(v, a)
            add(v, c)
        elif p is Predicate.EQUAL_ANGLES:
            for a, v, c in s.groups:
                add(v, a)
                add(v, c)
        elif p in (Predicate.CONGRUENT_TRIANGLES, Predicate.SIMILAR_TRIANGLES):
            for t in s.groups:
                add(t[0], t[1])
                add(t[1], t[2])
                add(t[0], t[2])
        elif p is Predicate.COLLINEAR:
            pts = s.groups[0]
            best = max(
                ((a, b) for a in pts for b in pts if a < b),
                key=lambda seg: scene.geometry.distance(*seg),
            )
            add(*best)
    return segs


def _circles(scene: Scene) -> list[tuple[str, float]]:
    out: list[tuple[str, float]] = []
    seen: set[tuple[str, float]] = set()
    for s in scene.initial_statements:
        if s.predicate is Predicate.ON_CIRCLE:
            center = s.groups[1][0]
            radius = scene.geometry.distance(*s.groups[2])
            key = (center, round(radius, 9))
            if key not in seen:
                seen.add(key)
                out.append((center, radius))
    return out


_PROBE_DIRECTIONS = [
    (1.0, 0.0),
    (0.7071, -0.7071),
    (0.0, -1.0),
    (-0.7071, -0.7071),
    (-1.0, 0.0),
    (-0.7071, 0.7071),
    (0.0, 1.0),
    (0.7071, 0.7071),
]


def render_svg(scene: Scene, style: DiagramStyle = DiagramStyle()) -> str:
    """Render the scene to an SVG 1.1 document (line/circle/text/path only)."""
    geom = scene.geometry
    x0, y0, x1, y1 = geom.bbox()
    span = max(x1 - x0, y1 - y0, 1e-9)
    margin = 0.05 * span
    scale = style.canvas / (span + 2 * margin)

    def to_svg(p: tuple[float, float]) -> tuple[float, float]:
        return (
            (p[0] - x0 + margin) * scale,
            (y1 - p[1] + margin) * scale,  # flip y: SVG grows downward
        )

    width = (x1 - x0 + 2 * margin) * scale
    height = (y1 - y0 + 2 * margin) * scale
    pos = {label: to_svg(p) for label, p in geom.points.items()}

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
    ]

    for center, radius in _circles(scene):
        cx, cy = pos[center]
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(radius * scale)}" '
            f'fill="none" stroke="black" stroke-width="{_fmt(style.mark_stroke_width)}"/>'
        )

    segments = _referenced_segments(scene)
    for a, b in segments:
        (xa, ya), (xb, yb) = pos[a], pos[b]
        parts.append(
            f'<line x1="{_fmt(xa)}" y1="{_fmt(ya)}" x2="{_fmt(xb)}" y2="{_fmt(yb)}" '
            f'stroke="black" stroke-width="{_fmt(style.stroke_width)}"/>'
        )

    if style.show_right_angle_marks:
        for s in scene.initial_statements:
            if s.predicate is Predicate.RIGHT_ANGLE:
                parts.append(_right_angle_mark(pos, s, style))

    if style.show_equal_tick_marks:
        group = 0
        for s in scene.initial_statements:
            if s.predicate is Predicate.EQUAL_SEGMENTS:
                group += 1
                ticks = min(group, 3)
                for seg in s.groups:
                    parts.extend(_tick_marks(pos, seg, ticks, style))

    if style.show_point_dots:
        for label in geom.points:
            cx, cy = pos[label]
            parts.append(
                f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(style.point_radius)}" '
                'fill="black"/>'
            )

    parts.extend(_labels(scene, pos, segments, style))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _right_angle_mark(pos, s: Statement, style: DiagramStyle) -> str:
    a, v, c = s.groups[0]
    pv, pa, pc = pos[v], pos[a], pos[c]
    ua = _unit((pa[0] - pv[0], pa[1] - pv[1]))
    uc = _unit((pc[0] - pv[0], pc[1] - pv[1]))
    k = style.right_angle_size
    p1 = (pv[0] + k * ua[0], pv[1] + k * ua[1])
    p2 = (pv[0] + k * (ua[0] + uc[0]), pv[1] + k * (ua[1] + uc[1]))
    p3 = (pv[0] + k * uc[0], pv[1] + k * uc[1])
    d = (
        f"M {_fmt(p1[0])} {_fmt(p1[1])} L {_fmt(p2[0])} {_fmt(p2[1])} "
        f"L {_fmt(p3[0])} {_fmt(p3[1])}"
    )
    return (
        f'<path d="{d}" fill="none" stroke="black" '
        f'stroke-width="{_fmt(style.mark_stroke_width)}"/>'
    )


def _tick_marks(pos, seg, ticks: int, style: DiagramStyle) -> list[str]:
    (xa, ya), (xb, yb) = pos[seg[0]], pos[seg[1]]
    ux, uy = _unit((xb - xa, yb - ya))
    nx, ny = -uy, ux
    mx, my = (xa + xb) / 2.0, (ya + yb) / 2.0
    gap = 3.0
    out = []
    for i in range(ticks):
        off = (i - (ticks - 1) / 2.0) * gap
        cx, cy = mx + off * ux, my + off * uy
        t = style.tick_size
        out.append(
            f'<line x1="{_fmt(cx - t * nx)}" y1="{_fmt(cy - t * ny)}" '
            f'x2="{_fmt(cx + t * nx)}" y2="{_fmt(cy + t * ny)}" '
            f'stroke="black" stroke-width="{_fmt(style.mark_stroke_width)}"/>'
        )
    return out


def _unit(v: tuple[float, float]) -> tuple[float, float]:
    n = math.hypot(v[0], v[1])
    return (1.0, 0.0) if n == 0.0 else (v[0] / n, v[1] / n)


def _labels(scene: Scene, pos, segments, style: DiagramStyle) -> list[str]:
    neighbors: dict[str, list[str]] = {label: [] for label in scene.geometry.points}
    for a, b in segments:
        neighbors[a].append(b)
        neighbors[b].append(a)

    anchors: dict[str, tuple[float, float]] = {}
    out = []
    for label in scene.geometry.points:
        px, py = pos[label]
        sx = sy = 0.0
        for other in neighbors[label]:
            ux, uy = _unit((pos[other][0] - px, pos[other][1] - py))
            sx += ux
            sy += uy
        candidates = []
        if math.hypot(sx, sy) > 1e-6:
            candidates.append(_unit((-sx, -sy)))
        candidates.extend(_PROBE_DIRECTIONS)
        anchor = None
        for dx, dy in candidates:
            cand = (px + style.label_offset * dx, py + style.label_offset * dy)
            if all(math.hypot(cand[0] - ax, cand[1] - ay) > 1.0 for ax, ay in anchors.values()):
                anchor = cand
                break
        if anchor is None:
            raise RenderError(f"cannot place label for point {label}")
        anchors[label] = anchor
        out.append(
            f'<text x="{_fmt(anchor[0])}" y="{_fmt(anchor[1])}" '
            f'font-size="{style.font_size}" font-family="sans-serif" '
            f'text-anchor="middle" dominant-baseline="middle">{label}</text>'
        )
    return out
