"""Convex hull search for bi-criteria losses.

Only lam-oracle calls are used.  Each call either reveals a new vertex of the
upper hull or certifies that the incumbent region is final, so the number of
calls is at most the number of reachable hull vertices plus the closing call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence, Union

from .errors import Exhausted, InvalidParams
from .geometry import LabelPoint, Segment, golden_max_on_segment, golden_section_max, slope, upper_hull
from .losses import BiCriteriaLoss
from .oracle import LAM_INF, EnumerationSpace, LabelSpace

TERM_TOL = 1e-12
RECOVERY_CAP = 64


@dataclass(frozen=True)
class FractionalLabel:
    """Convex combination of one or two labels; ``weight`` sits on the second."""

    endpoints: tuple[LabelPoint, ...]
    weight: float = 0.0

    def __post_init__(self) -> None:
        if len(self.endpoints) not in (1, 2):
            raise InvalidParams("a fractional label has one or two endpoints")
        if not 0.0 <= self.weight <= 1.0:
            raise InvalidParams("weight must lie in [0, 1]")

    @property
    def h(self) -> float:
        if len(self.endpoints) == 1:
            return self.endpoints[0].h
        p, q = self.endpoints
        return (1.0 - self.weight) * p.h + self.weight * q.h

    @property
    def g(self) -> float:
        if len(self.endpoints) == 1:
            return self.endpoints[0].g
        p, q = self.endpoints
        return (1.0 - self.weight) * p.g + self.weight * q.g

    @property
    def integral(self) -> bool:
        return len(self.endpoints) == 1 or self.weight in (0.0, 1.0)

    def integral_point(self) -> Optional[LabelPoint]:
        if len(self.endpoints) == 1:
            return self.endpoints[0]
        if self.weight == 0.0:
            return self.endpoints[0]
        if self.weight == 1.0:
            return self.endpoints[1]
        return None

    def value(self, loss: BiCriteriaLoss) -> float:
        return loss.value(self.h, self.g)

    def components(self) -> list[tuple[LabelPoint, float]]:
        """(label, mixing weight) pairs with positive weight."""
        if len(self.endpoints) == 1:
            return [(self.endpoints[0], 1.0)]
        p, q = self.endpoints
        return [(x, w) for x, w in ((p, 1.0 - self.weight), (q, self.weight)) if w > 0.0]


@dataclass
class HullSearchResult:
    fractional: FractionalLabel
    oracle_calls: int
    vertices: list[LabelPoint]
    lams: list[float] = field(default_factory=list)
    answers: list[LabelPoint] = field(default_factory=list)

    def __iter__(self):
        return iter((self.fractional, self.oracle_calls))


def _lam_value(p: LabelPoint, lam: float) -> float:
    return p.g if math.isinf(lam) else p.h + lam * p.g


def _incumbent(state: Sequence[LabelPoint], loss: BiCriteriaLoss) -> int:
    vals = [loss.value(p.h, p.g) for p in state]
    return max(range(len(state)), key=lambda i: (vals[i], -i))


def get_lambda(state: Sequence[LabelPoint], loss: BiCriteriaLoss) -> float:
    """Query lam separating the incumbent's super-level set from the current hull.

    ``state`` is a hull chain sorted by increasing g.  The lam comes from the
    loss contour tangent at the incumbent, unless a neighbour lies beyond that
    tangent, in which case the edge to the neighbour is used.
    """
    if not state:
        raise InvalidParams("state must be nonempty")
    t = _incumbent(state, loss)
    inc = state[t]
    lam = loss.tangent_lambda(inc.h, inc.g)
    base = _lam_value(inc, lam)
    for j in (t - 1, t + 1):
        if 0 <= j < len(state):
            nb = state[j]
            if _lam_value(nb, lam) > base + TERM_TOL * (1.0 + abs(base)):
                lam = max(-slope(inc, nb), 0.0)
                base = _lam_value(inc, lam)
    return lam


def get_max_fract(state: Sequence[LabelPoint], loss: BiCriteriaLoss, tol: float = 1e-10) -> FractionalLabel:
    """Best point among the incumbent vertex and its two adjacent hull edges."""
    if not state:
        raise InvalidParams("state must be nonempty")
    t = _incumbent(state, loss)
    inc = state[t]
    best = FractionalLabel((inc,))
    best_val = loss.value(inc.h, inc.g)
    for j in (t - 1, t + 1):
        if 0 <= j < len(state):
            p, q = (state[j], inc) if j < t else (inc, state[j])
            w, val = golden_max_on_segment(loss, Segment(p, q), tol)
            if val > best_val:
                best, best_val = FractionalLabel((p, q), w), val
    return best


def _seed_points(space: LabelSpace, warm_start: Iterable[Union[LabelPoint, Hashable]]) -> list[LabelPoint]:
    pts = []
    for s in warm_start:
        lid = s.label_id if isinstance(s, LabelPoint) else s
        pts.append(space.point_of(lid))
    return pts


def convex_hull_search(
    space: LabelSpace,
    loss: BiCriteriaLoss,
    warm_start: Optional[Iterable[Union[LabelPoint, Hashable]]] = None,
    max_calls: int = 100_000,
) -> HullSearchResult:
    """Maximise ``loss`` over the convex hull of the labels using lam-oracle calls.

    The search stops when the oracle answer is already known or does not
    improve on the known hull along the queried direction (this also covers
    labels sharing coordinates and collinear hull points).
    """
    state: list[LabelPoint] = []
    seen: set = set()
    lam = LAM_INF
    if warm_start is not None:
        seeds = _seed_points(space, warm_start)
        if seeds:
            state = upper_hull(seeds)
            seen = {p.label_id for p in state}
            lam = get_lambda(state, loss)
    res = HullSearchResult(FractionalLabel((LabelPoint("?", 0.0, 0.0),)), 0, [])
    calls = 0
    while calls < max_calls:
        ans = space.oracle(lam)
        calls += 1
        y = ans.point
        res.lams.append(lam)
        res.answers.append(y)
        if y.label_id in seen:
            break
        if state:
            known = max(_lam_value(p, lam) for p in state)
            if _lam_value(y, lam) <= known + TERM_TOL * (1.0 + abs(known)):
                break
        seen.add(y.label_id)
        state = upper_hull(state + [y])
        lam = get_lambda(state, loss)
    res.fractional = get_max_fract(state, loss)
    res.oracle_calls = calls
    res.vertices = state
    return res


def _line_bound(loss: BiCriteriaLoss, K: float, lam: float, g_lo: float, g_hi: float) -> float:
    """sup of loss on the line h = K - lam*g for g in [g_lo, g_hi]."""
    if g_hi <= g_lo:
        return loss.value(K - lam * g_lo, g_lo)
    _, val = golden_section_max(lambda g: loss.value(K - lam * g, g), g_lo, g_hi, 1e-10 * (1.0 + g_hi - g_lo))
    return val


def integral_recovery(
    frac: FractionalLabel,
    space: LabelSpace,
    loss: BiCriteriaLoss,
    cap: int = RECOVERY_CAP,
) -> LabelPoint:
    """Best integral label near a fractional optimum, found with ban lists.

    Both endpoints are banned and the ban-list oracle is queried at the edge
    lam.  Every label not yet seen lies under the line through the latest
    answer, so the loss over that line bounds what is left; the loop stops
    once the best seen label reaches the bound.
    """
    pt = frac.integral_point()
    if pt is not None:
        return pt
    p, q = frac.endpoints
    lam = max(-slope(p, q), 0.0)
    # g-range of all labels; everything with g below the max-h label is dominated by it
    top = space.oracle(0.0).point
    far = space.oracle(LAM_INF).point
    g_lo, g_hi = top.g, far.g
    cands = [p, q, top, far]
    best = max(cands, key=lambda c: loss.value(c.h, c.g))
    best_val = loss.value(best.h, best.g)
    banned = {p.label_id, q.label_id}
    for _ in range(cap):
        try:
            ans = space.banlist(lam, banned)
        except Exhausted:
            break
        y = ans.point
        v = loss.value(y.h, y.g)
        if v > best_val:
            best, best_val = y, v
        bound = _line_bound(loss, ans.oracle_value, lam, g_lo, g_hi)
        if best_val >= bound - 1e-12 * (1.0 + abs(bound)):
            break
        banned.add(y.label_id)
    return best


def oscillation_game_instance(eps: float = 0.01) -> EnumerationSpace:
    """A=[2,4], B=[4,2], C=[3+eps,3]: only lam = 1 reaches C."""
    if not eps > 0.0:
        raise InvalidParams("eps must be positive")
    return EnumerationSpace([2.0, 4.0, 3.0 + eps], [4.0, 2.0, 3.0], ["A", "B", "C"])
