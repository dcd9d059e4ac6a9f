"""Planar geometry of labels in the (h, g) plane.

Every label is mapped to a point whose first coordinate ``h`` is the margin
side and whose second coordinate ``g`` is the loss side.  Two slope
conventions live here under different names:

* :func:`slope` is the edge slope ``dh/dg`` used by convex hull search.
* :func:`ray_slope` is ``g/h``, the direction of the ray from the origin
  used by angular search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Hashable

from .errors import DegenerateSegment, DuplicateLabel, NonFiniteLoss, ZeroGradient

if TYPE_CHECKING:
    from .losses import BiCriteriaLoss

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LabelPoint:
    """A label identity together with its image in the (h, g) plane."""

    label_id: Hashable
    h: float
    g: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and math.isfinite(self.g)):
            raise ValueError(f"non-finite coordinates for label {self.label_id!r}")

    def lam_value(self, lam: float) -> float:
        """Value of h + lam * g."""
        return self.h + lam * self.g


@dataclass(frozen=True)
class Segment:
    p: LabelPoint
    q: LabelPoint

    def at(self, t: float) -> tuple[float, float]:
        """(h, g) of the point (1 - t) p + t q."""
        return (
            (1.0 - t) * self.p.h + t * self.q.h,
            (1.0 - t) * self.p.g + t * self.q.g,
        )

    @property
    def degenerate(self) -> bool:
        return self.p.h == self.q.h and self.p.g == self.q.g


@dataclass(frozen=True)
class HullState:
    """Labels returned so far, kept sorted by increasing g."""

    vertices: tuple[LabelPoint, ...] = ()
    seen_ids: frozenset = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.vertices)


def slope(p: LabelPoint, q: LabelPoint) -> float:
    """Edge slope (h(p) - h(q)) / (g(p) - g(q))."""
    dg = p.g - q.g
    if dg == 0.0:
        raise DegenerateSegment(f"equal g for labels {p.label_id!r} and {q.label_id!r}")
    return (p.h - q.h) / dg


def ray_slope(h: float, g: float) -> float:
    """Slope g/h of the ray through (h, g); +inf on the g axis."""
    if h == 0.0:
        return math.inf if g >= 0.0 else -math.inf
    return g / h


def insert_sorted(state: HullState, point: LabelPoint) -> HullState:
    """Return a new state with ``point`` inserted in g order."""
    if point.label_id in state.seen_ids:
        raise DuplicateLabel(f"label {point.label_id!r} already present")
    verts = list(state.vertices)
    for v in verts:
        if v.g == point.g:
            raise DuplicateLabel(
                f"label {point.label_id!r} shares g={point.g} with {v.label_id!r}"
            )
    pos = 0
    while pos < len(verts) and verts[pos].g < point.g:
        pos += 1
    verts.insert(pos, point)
    return HullState(tuple(verts), state.seen_ids | {point.label_id})


def upper_hull(points: list[LabelPoint]) -> list[LabelPoint]:
    """Vertices of the part of the hull reachable by some lam >= 0, sorted by g.

    Among points with equal g only the largest h survives; ties in both
    coordinates keep the first occurrence.
    """
    best: dict[float, LabelPoint] = {}
    for p in points:
        cur = best.get(p.g)
        if cur is None or p.h > cur.h:
            best[p.g] = p
    pts = sorted(best.values(), key=lambda p: p.g)
    if not pts:
        return []
    # the lam = 0 end is the highest h; everything with smaller g is dominated
    top = max(range(len(pts)), key=lambda i: (pts[i].h, pts[i].g))
    pts = pts[top:]
    chain: list[LabelPoint] = []
    for p in pts:
        while len(chain) >= 2:
            a, b = chain[-2], chain[-1]
            cross = (b.g - a.g) * (p.h - a.h) - (b.h - a.h) * (p.g - a.g)
            if cross >= 0.0:
                chain.pop()
            else:
                break
        chain.append(p)
    return chain


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9
) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on [lo, hi]; endpoints are also considered."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    candidates = [(f(x), x), (f(lo), lo), (f(hi), hi)]
    val, arg = max(candidates, key=lambda c_: c_[0])
    return arg, val


def golden_max_on_segment(
    loss: "BiCriteriaLoss", s: Segment, tol: float = 1e-9
) -> tuple[float, float]:
    """Parameter t in [0, 1] maximising loss along ``s`` and the value there."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    def f(t: float) -> float:
        v = loss.value(*s.at(t))
        if not math.isfinite(v):
            raise NonFiniteLoss(f"loss is not finite at t={t}")
        return v

    if s.degenerate:
        return 0.0, f(0.0)
    return golden_section_max(f, 0.0, 1.0, tol)


def contour_tangent_slope(loss: "BiCriteriaLoss", at: LabelPoint) -> float:
    """Slope dh/dg of the level curve of ``loss`` through ``at``."""
    dh, dg = loss.grad(at.h, at.g)
    if dh == 0.0 and dg == 0.0:
        raise ZeroGradient(f"both partials vanish at ({at.h}, {at.g})")
    if dh == 0.0:
        return -math.copysign(math.inf, dg)
    return -dg / dh
