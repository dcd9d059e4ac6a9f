"""Searches for argmax of the product objective h(y) * g(y) through lam-oracles.

All routines count oracle calls and keep the best label seen so far.  The
certificate is the upper bound K(lam)^2 / (4 lam) on the optimum, minimised
over the lam values the search queried.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import InvalidParams, NonPositiveLambda
from .geometry import INV_PHI, LabelPoint
from .oracle import LabelSpace, SlopeWindow

REL_TOL = 1e-12


def phi(p: Optional[LabelPoint]) -> float:
    """Product objective; the empty answer counts as 0 (the ground truth)."""
    return 0.0 if p is None else p.h * p.g


@dataclass
class TraceStep:
    lam: float
    window: Optional[SlopeWindow]
    label: Optional[LabelPoint]
    best_value: float


@dataclass
class SearchResult:
    best: Optional[LabelPoint]
    best_value: float
    oracle_calls: int
    certificate: Optional[float] = None
    trace: list[TraceStep] = field(default_factory=list)


@dataclass(frozen=True)
class AngleTask:
    """Open angle between the rays of slope ``slope_lo`` and ``slope_hi``."""

    slope_hi: float
    slope_lo: float
    strict_flag: int = 0
    depth: int = 0
    bound: float = math.inf

    def __post_init__(self) -> None:
        if not self.slope_hi >= self.slope_lo >= 0.0:
            raise InvalidParams("need slope_hi >= slope_lo >= 0")

    @property
    def capacity(self) -> float:
        if self.slope_lo == 0.0:
            return math.inf
        return math.sqrt(self.slope_hi / self.slope_lo)


def suboptimality_certificate(K: float, lam: float) -> float:
    """Upper bound K^2 / (4 lam) on the product objective."""
    if not lam > 0.0:
        raise NonPositiveLambda(f"lam must be positive, got {lam}")
    return K * K / (4.0 * lam)


class _Tracker:
    def __init__(self) -> None:
        self.best: Optional[LabelPoint] = None
        self.best_value = -math.inf
        self.calls = 0
        self.cert = math.inf
        self.trace: list[TraceStep] = []

    def see(self, p: Optional[LabelPoint], lam: float, window=None, strictly: bool = False) -> None:
        if p is not None:
            v = phi(p)
            if v > self.best_value or (not strictly and v == self.best_value):
                self.best, self.best_value = p, v
        self.trace.append(TraceStep(lam, window, p, self.value()))

    def value(self) -> float:
        return max(self.best_value, 0.0) if self.best is None else self.best_value

    def result(self, cert: Optional[float]) -> SearchResult:
        return SearchResult(self.best, self.value(), self.calls, cert, self.trace)


def binary_search_sgd(space: LabelSpace, lam_lo: float, lam_hi: float, tol: float = 1e-6) -> SearchResult:
    """Golden-section minimisation of the convex bound F(l) = K(l^2)^2 / (4 l^2).

    The bracket endpoints are queried first; whenever both ends of the
    bracket return the same label the oracle answer cannot change inside it
    and the search stops.
    """
    if not 0.0 < lam_lo < lam_hi:
        raise InvalidParams("need 0 < lam_lo < lam_hi")
    if not tol > 0.0:
        raise InvalidParams("tol must be positive")
    tr = _Tracker()
    cache: dict[float, tuple[float, LabelPoint]] = {}

    def F(lam: float) -> tuple[float, LabelPoint]:
        if lam not in cache:
            mu = lam * lam
            ans = space.oracle(mu)
            tr.calls += 1
            tr.see(ans.point, mu)
            val = suboptimality_certificate(ans.oracle_value, mu)
            tr.cert = min(tr.cert, val)
            cache[lam] = (val, ans.point)
        return cache[lam]

    a, b = lam_lo, lam_hi
    Fa, ya = F(a)
    Fb, yb = F(b)
    if ya.label_id != yb.label_id:
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        Fc, yc = F(c)
        Fd, yd = F(d)
        while b - a > tol:
            if Fc <= Fd:
                b, yb = d, yd
                d, Fd, yd = c, Fc, yc
                c = b - INV_PHI * (b - a)
                Fc, yc = F(c)
            else:
                a, ya = c, yc
                c, Fc, yc = d, Fd, yd
                d = a + INV_PHI * (b - a)
                Fd, yd = F(d)
            if ya.label_id == yb.label_id:
                break
    return tr.result(tr.cert)


def bisecting_search(space: LabelSpace, lam0: float, max_iters: int = 100) -> SearchResult:
    """Bisect the lam range using the monotonicity of the oracle answer.

    The range L starts as the whole positive axis; while it is unbounded
    above, lam doubles from its lower end.
    """
    if not lam0 > 0.0:
        raise InvalidParams("lam0 must be positive")
    tr = _Tracker()
    H = [-math.inf, math.inf]
    G = [-math.inf, math.inf]
    lo, hi = 0.0, math.inf
    y_lo = y_hi = None
    lam = lam0
    while tr.calls < max_iters:
        ans = space.oracle(lam)
        tr.calls += 1
        y = ans.point
        tr.cert = min(tr.cert, suboptimality_certificate(ans.oracle_value, lam))
        u = (y.h, lam * y.g)
        v = (y.g, y.h / lam)
        H = [max(H[0], min(u)), min(H[1], max(u))]
        G = [max(G[0], min(v)), min(G[1], max(v))]
        if v[0] <= v[1]:
            lo, y_lo = lam, y
        else:
            hi, y_hi = lam, y
        tr.see(y, lam)
        if H[0] > H[1] or G[0] > G[1]:
            break
        if y_lo is not None and y_hi is not None and y_lo.label_id == y_hi.label_id:
            break
        lam = 2.0 * lo if math.isinf(hi) else 0.5 * (lo + hi)
    return tr.result(tr.cert)


def init_window(H_hat: float, G_hat: float, phi_lb: Optional[float] = None) -> tuple[float, float]:
    """Initial slopes (G^2/phi, phi/H^2) bracketing the optimum's slope."""
    if not (H_hat > 0.0 and G_hat > 0.0):
        raise InvalidParams("H_hat and G_hat must be positive")
    if phi_lb is None:
        phi_lb = H_hat * G_hat / 2.0**10
    if not phi_lb > 0.0:
        raise InvalidParams("phi lower bound must be positive")
    return G_hat * G_hat / phi_lb, phi_lb / (H_hat * H_hat)


def angular_search(
    space: LabelSpace,
    lam0: float,
    max_iters: int = 10_000,
    init: Optional[tuple[float, float]] = None,
    priority: bool = False,
    cache: Sequence[LabelPoint] = (),
) -> SearchResult:
    """Split angles with the constrained oracle until none can hold a better label.

    An angle whose bound K^2/(4 lam) from its parent query cannot beat the
    incumbent is dropped without a call, and so is an angle with equal
    bounding slopes.  ``priority`` dequeues the angle with the largest bound
    first; ``cache`` seeds the incumbent with known labels.
    """
    if not lam0 > 0.0:
        raise InvalidParams("lam0 must be positive")
    tr = _Tracker()
    for p in cache:
        tr.see(p, math.nan)
    tr.trace.clear()
    hi0, lo0 = (math.inf, 0.0) if init is None else init
    root = AngleTask(hi0, lo0, 0, 0)
    counter = itertools.count()
    if priority:
        heap: list = [(-root.bound, next(counter), root)]
    else:
        fifo: deque = deque([root])

    def pending() -> bool:
        return bool(heap) if priority else bool(fifo)

    def pop() -> AngleTask:
        return heapq.heappop(heap)[2] if priority else fifo.popleft()

    def push(t: AngleTask) -> None:
        if priority:
            heapq.heappush(heap, (-t.bound, next(counter), t))
        else:
            fifo.append(t)

    while pending() and tr.calls < max_iters:
        task = pop()
        window = SlopeWindow(task.slope_hi, task.slope_lo, task.strict_flag)
        if window.empty or task.bound <= tr.best_value:
            continue
        prod = task.slope_hi * task.slope_lo
        lam = 1.0 / math.sqrt(prod) if 0.0 < prod < math.inf else lam0
        ans = space.constrained(lam, window)
        tr.calls += 1
        y = None if ans is None else ans.point
        tr.see(y, lam, window, strictly=True)
        if y is None:
            continue
        h, g = y.h, y.g
        if h <= 0.0 or g <= 0.0:
            continue
        zp1 = lam * g
        if abs(h - zp1) <= REL_TOL * max(abs(h), abs(zp1)):
            continue
        bound = suboptimality_certificate(ans.oracle_value, lam)
        dz = g / h
        dzp = h / (lam * lam * g)
        dr = 1.0 / lam
        if dz > dzp:
            k1 = AngleTask(dz, dr, 1, task.depth + 1, bound)
            k2 = AngleTask(dr, dzp, 0, task.depth + 1, bound)
        else:
            k1 = AngleTask(dzp, dr, 1, task.depth + 1, bound)
            k2 = AngleTask(dr, dz, 0, task.depth + 1, bound)
        push(k1)
        push(k2)

    rest = [t for _, _, t in heap] if priority else list(fifo)
    open_bounds = [t.bound for t in rest if t.bound > tr.best_value and not SlopeWindow(t.slope_hi, t.slope_lo, t.strict_flag).empty]
    cert = max([tr.value()] + open_bounds)
    return tr.result(cert if math.isfinite(cert) else None)


def angular_v1(first: LabelPoint, lam: float) -> float:
    """Capacity of the first split: max(lam * slope, 1 / (lam * slope))."""
    q = lam * first.g / first.h
    return max(q, 1.0 / q)
