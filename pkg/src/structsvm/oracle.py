"""lam-oracles: argmax of h + lam * g over a label space.

Backends
--------
* :class:`EnumerationSpace`: explicit list of (h, g) points; supports the
  plain, constrained (slope window) and ban-list queries.
* :class:`ChainSpace`: linear-chain model with Hamming loss, decoded by
  Viterbi; ban lists use k-best Viterbi.  Slope windows do not decompose over
  positions, so constrained queries are rejected.
* :class:`MultiLabelSpace`: independent binary labels, either with Hamming
  loss or with the Micro-F1 factor pair.

Ties are always broken toward the smallest label id so every search is
deterministic.  ``lam = math.inf`` means lexicographic max of (g, h).
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import EmptyTruth, Exhausted, InconsistentQuery, InvalidParams, UnsupportedBackend
from .geometry import LabelPoint

LAM_INF = math.inf
MAX_ENUM = 1 << 16


@dataclass(frozen=True)
class OracleAnswer:
    point: LabelPoint
    oracle_value: float

    @property
    def label_id(self) -> Hashable:
        return self.point.label_id


@dataclass(frozen=True)
class SlopeWindow:
    """Admissible slopes g/h of a constrained query.

    ``strict = 0`` keeps  lo < g/h <= hi  (hi*h >= g and lo*h < g);
    ``strict = 1`` keeps lo <= g/h <  hi  (hi*h >  g and lo*h <= g).
    ``hi = inf`` reduces the upper test to h > 0.
    """

    hi: float
    lo: float
    strict: int = 0

    def __post_init__(self) -> None:
        if not (self.hi >= self.lo >= 0.0):
            raise InvalidParams(f"need hi >= lo >= 0, got hi={self.hi}, lo={self.lo}")
        if self.strict not in (0, 1):
            raise InvalidParams("strict must be 0 or 1")

    @property
    def empty(self) -> bool:
        """True when no point can satisfy the window."""
        return self.hi == self.lo or self.lo == math.inf

    def mask(self, h: np.ndarray, g: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        g = np.asarray(g, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            # for h > 0 compare g/h directly so a window bounded by a label's own
            # slope g/h classifies that label exactly
            pos = h > 0.0
            s = np.where(pos, g / np.where(pos, h, 1.0), 0.0)
            if self.strict == 0:
                up_pos, low_pos = s <= self.hi, s > self.lo
            else:
                up_pos, low_pos = s < self.hi, s >= self.lo
            if math.isinf(self.hi):
                upper = h > 0.0
            else:
                upper = self.hi * h >= g if self.strict == 0 else self.hi * h > g
            if math.isinf(self.lo):
                lower = np.zeros_like(upper)
            else:
                lower = self.lo * h < g if self.strict == 0 else self.lo * h <= g
            upper = np.where(pos, up_pos, upper)
            lower = np.where(pos, low_pos, lower)
        return upper & lower

    def admits(self, h: float, g: float) -> bool:
        return bool(self.mask(np.array([h]), np.array([g]))[0])


class LabelSpace:
    """Interface of a label space queried through lam-oracles."""

    def oracle(self, lam: float) -> OracleAnswer:
        raise NotImplementedError

    def constrained(self, lam: float, window: SlopeWindow) -> Optional[OracleAnswer]:
        raise UnsupportedBackend(f"{type(self).__name__} has no constrained oracle")

    def banlist(self, lam: float, banned: Iterable[Hashable]) -> OracleAnswer:
        raise UnsupportedBackend(f"{type(self).__name__} has no ban-list oracle")

    def point_of(self, label_id: Hashable) -> LabelPoint:
        raise NotImplementedError


def lambda_oracle(space: LabelSpace, lam: float) -> OracleAnswer:
    if not (lam >= 0.0):
        raise InvalidParams(f"lam must be >= 0, got {lam}")
    return space.oracle(lam)


def constrained_lambda_oracle(
    space: LabelSpace, lam: float, window: SlopeWindow
) -> Optional[OracleAnswer]:
    return space.constrained(lam, window)


def banlist_oracle(space: LabelSpace, lam: float, banned: Iterable[Hashable]) -> OracleAnswer:
    if not (lam >= 0.0):
        raise InvalidParams(f"lam must be >= 0, got {lam}")
    return space.banlist(lam, banned)


def _answer(point: LabelPoint, lam: float) -> OracleAnswer:
    val = point.g if math.isinf(lam) else point.h + lam * point.g
    return OracleAnswer(point, val)


class EnumerationSpace(LabelSpace):
    """Explicit finite label set; the index order doubles as id order."""

    def __init__(self, h: Sequence[float], g: Sequence[float], ids: Optional[Sequence[Hashable]] = None):
        self.h = np.asarray(h, dtype=float).copy()
        self.g = np.asarray(g, dtype=float).copy()
        if self.h.shape != self.g.shape or self.h.ndim != 1 or len(self.h) == 0:
            raise InvalidParams("h and g must be equal-length nonempty vectors")
        if not (np.all(np.isfinite(self.h)) and np.all(np.isfinite(self.g))):
            raise InvalidParams("coordinates must be finite")
        self.ids = list(range(len(self.h))) if ids is None else list(ids)
        if len(self.ids) != len(self.h):
            raise InvalidParams("ids length mismatch")
        self._index = {lid: i for i, lid in enumerate(self.ids)}

    @classmethod
    def from_points(cls, points: Sequence[LabelPoint]) -> "EnumerationSpace":
        return cls([p.h for p in points], [p.g for p in points], [p.label_id for p in points])

    def __len__(self) -> int:
        return len(self.h)

    def points(self) -> list[LabelPoint]:
        return [LabelPoint(i, float(a), float(b)) for i, a, b in zip(self.ids, self.h, self.g)]

    def point_of(self, label_id: Hashable) -> LabelPoint:
        i = self._index[label_id]
        return LabelPoint(label_id, float(self.h[i]), float(self.g[i]))

    def shifted(self, dh: float) -> "EnumerationSpace":
        return EnumerationSpace(self.h + dh, self.g, self.ids)

    def _best(self, lam: float, mask: Optional[np.ndarray]) -> Optional[OracleAnswer]:
        idx = np.arange(len(self.h)) if mask is None else np.flatnonzero(mask)
        if len(idx) == 0:
            return None
        if math.isinf(lam):
            gs = self.g[idx]
            cand = idx[gs == gs.max()]
            hs = self.h[cand]
            i = int(cand[np.argmax(hs)])
        else:
            vals = self.h[idx] + lam * self.g[idx]
            i = int(idx[np.argmax(vals)])
        return _answer(LabelPoint(self.ids[i], float(self.h[i]), float(self.g[i])), lam)

    def oracle(self, lam: float) -> OracleAnswer:
        return self._best(lam, None)

    def constrained(self, lam: float, window: SlopeWindow) -> Optional[OracleAnswer]:
        if window.empty:
            return None
        return self._best(lam, window.mask(self.h, self.g))

    def banlist(self, lam: float, banned: Iterable[Hashable]) -> OracleAnswer:
        mask = np.ones(len(self.h), dtype=bool)
        for b in banned:
            j = self._index.get(b)
            if j is not None:
                mask[j] = False
        ans = self._best(lam, mask)
        if ans is None:
            raise Exhausted("every label is banned")
        return ans


class ChainSpace(LabelSpace):
    """Linear chain: score(y) = sum_t unary[t, y_t] + sum_t pair[t, y_t, y_t+1].

    h(y) = h_offset + score(y) - score(truth), g(y) = Hamming(y, truth).
    Label ids are state tuples, compared lexicographically.
    """

    def __init__(self, unary, pairwise, truth: Sequence[int], h_offset: float = 0.0):
        self.unary = np.asarray(unary, dtype=float)
        if self.unary.ndim != 2:
            raise InvalidParams("unary must be (length, states)")
        T, S = self.unary.shape
        pw = np.asarray(pairwise, dtype=float)
        if pw.ndim == 2 and pw.shape == (S, S):
            pw = np.broadcast_to(pw, (max(T - 1, 0), S, S)).copy()
        if pw.shape != (max(T - 1, 0), S, S):
            raise InvalidParams(f"pairwise must be (S,S) or (T-1,S,S), got {pw.shape}")
        self.pair = pw
        self.truth = tuple(int(s) for s in truth)
        if len(self.truth) != T or any(not 0 <= s < S for s in self.truth):
            raise InvalidParams("truth must be a length-T state sequence")
        self.length, self.num_states = T, S
        self.h_offset = float(h_offset)
        self._truth_score = self.score(self.truth)

    def score(self, y: Sequence[int]) -> float:
        s = 0.0
        for t, st in enumerate(y):
            s += self.unary[t, st]
        for t in range(self.length - 1):
            s += self.pair[t, y[t], y[t + 1]]
        return float(s)

    def hamming(self, y: Sequence[int]) -> int:
        return sum(1 for a, b in zip(y, self.truth) if a != b)

    def point_of(self, label_id: Hashable) -> LabelPoint:
        y = tuple(label_id)
        return LabelPoint(y, self.h_offset + (self.score(y) - self._truth_score), float(self.hamming(y)))

    def _aug_unary(self, lam: float) -> np.ndarray:
        wrong = np.ones_like(self.unary)
        wrong[np.arange(self.length), list(self.truth)] = 0.0
        if math.isinf(lam):
            if self.num_states < 2:
                return self.unary.copy()
            return np.where(wrong > 0, self.unary, -np.inf)
        return self.unary + lam * wrong

    def _viterbi(self, u: np.ndarray) -> tuple[int, ...]:
        """Best path under unary ``u``; the lexicographically smallest among ties."""
        T, S = u.shape
        if T == 0:
            return ()
        back = np.empty((T, S))
        back[T - 1] = u[T - 1]
        for t in range(T - 2, -1, -1):
            back[t] = u[t] + np.max(self.pair[t] + back[t + 1][None, :], axis=1)
        path = [int(np.argmax(back[0]))]
        for t in range(1, T):
            path.append(int(np.argmax(self.pair[t - 1, path[-1]] + back[t])))
        return tuple(path)

    def oracle(self, lam: float) -> OracleAnswer:
        y = self._viterbi(self._aug_unary(lam))
        return _answer(self.point_of(y), lam)

    def kbest(self, lam: float, k: int) -> list[tuple[int, ...]]:
        """The k best paths under h + lam*g, best first, ties by path order."""
        u = self._aug_unary(lam)
        T, S = u.shape
        beams = [[(-u[0, s], (s,))] for s in range(S)]
        for t in range(1, T):
            new = []
            for s in range(S):
                cand = [
                    (neg - self.pair[t - 1, p[-1], s] - u[t, s], p + (s,))
                    for prev in beams
                    for neg, p in prev
                ]
                new.append(heapq.nsmallest(k, cand))
            beams = new
        return [p for _, p in heapq.nsmallest(k, [c for b in beams for c in b])]

    def banlist(self, lam: float, banned: Iterable[Hashable]) -> OracleAnswer:
        ban = {tuple(b) for b in banned}
        total = self.num_states**self.length
        k = min(len(ban) + 1, total)
        for y in self.kbest(lam, k):
            if y not in ban:
                return _answer(self.point_of(y), lam)
        raise Exhausted("every chain label is banned")

    def enumerate(self, h_offset: Optional[float] = None) -> EnumerationSpace:
        """All labels as an explicit space (ids in lexicographic order)."""
        total = self.num_states**self.length
        if total > MAX_ENUM:
            raise UnsupportedBackend(f"{total} labels is too many to enumerate")
        ids = list(itertools.product(range(self.num_states), repeat=self.length))
        Y = np.array(ids, dtype=int).reshape(len(ids), self.length)
        s = np.zeros(len(ids))
        for t in range(self.length):
            s = s + self.unary[t, Y[:, t]]
        for t in range(self.length - 1):
            s = s + self.pair[t, Y[:, t], Y[:, t + 1]]
        off = self.h_offset if h_offset is None else h_offset
        h = off + (s - self._truth_score)
        g = np.sum(Y != np.array(self.truth)[None, :], axis=1).astype(float)
        return EnumerationSpace(h, g, ids)

    def constrained(self, lam: float, window: SlopeWindow) -> Optional[OracleAnswer]:
        raise UnsupportedBackend("slope windows do not decompose over chain positions")


class MultiLabelSpace(LabelSpace):
    """Independent labels with per-label scores; ids are bitmasks.

    ``convention="hamming"``: h = margin, g = Hamming.
    ``convention="microf1"``: h = Hamming + margin, g = -(|y| + |truth|).
    """

    def __init__(self, scores, truth: Iterable[int], convention: str = "hamming", h_offset: float = 0.0):
        self.scores = np.asarray(scores, dtype=float)
        self.num_labels = len(self.scores)
        self.truth = frozenset(int(t) for t in truth)
        if convention not in ("hamming", "microf1"):
            raise InvalidParams(f"unknown convention {convention!r}")
        if convention == "microf1" and not self.truth:
            raise EmptyTruth("micro-F1 needs a nonempty true label set")
        self.convention = convention
        self.h_offset = float(h_offset)
        self.tmask = np.zeros(self.num_labels, dtype=bool)
        self.tmask[list(self.truth)] = True
        self._truth_score = float(np.sum(self.scores[self.tmask]))

    @staticmethod
    def to_set(mask: int) -> frozenset:
        return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)

    @staticmethod
    def to_mask(labels: Iterable[int]) -> int:
        m = 0
        for i in labels:
            m |= 1 << int(i)
        return m

    def _factors(self, member: np.ndarray) -> tuple[float, float]:
        margin = float(np.sum(self.scores[member])) - self._truth_score
        ham = int(np.sum(member != self.tmask))
        if self.convention == "hamming":
            return self.h_offset + margin, float(ham)
        return self.h_offset + ham + margin, -float(int(member.sum()) + len(self.truth))

    def point_of(self, label_id: Hashable) -> LabelPoint:
        mask = int(label_id)
        member = np.array([(mask >> i) & 1 == 1 for i in range(self.num_labels)], dtype=bool)
        h, g = self._factors(member)
        return LabelPoint(mask, h, g)

    def oracle(self, lam: float) -> OracleAnswer:
        if math.isinf(lam):
            member = ~self.tmask if self.convention == "hamming" else np.zeros(self.num_labels, bool)
        else:
            sign = np.where(self.tmask, -1.0, 1.0)
            if self.convention == "hamming":
                gain = self.scores + lam * sign
            else:
                gain = self.scores + sign - lam
            member = gain > 0.0
        mask = self.to_mask(np.flatnonzero(member))
        return _answer(self.point_of(mask), lam)

    def enumerate(self) -> EnumerationSpace:
        if self.num_labels > 16:
            raise UnsupportedBackend("too many labels to enumerate")
        n = 1 << self.num_labels
        bits = (np.arange(n)[:, None] >> np.arange(self.num_labels)[None, :]) & 1
        member = bits.astype(bool)
        s = np.zeros(n)
        for i in range(self.num_labels):
            s = s + np.where(member[:, i], self.scores[i], 0.0)
        margin = s - self._truth_score
        ham = np.sum(member != self.tmask[None, :], axis=1)
        if self.convention == "hamming":
            h, g = self.h_offset + margin, ham.astype(float)
        else:
            h = self.h_offset + ham + margin
            g = -(member.sum(axis=1) + len(self.truth)).astype(float)
        return EnumerationSpace(h, g, list(range(n)))

    def constrained(self, lam: float, window: SlopeWindow) -> Optional[OracleAnswer]:
        return self.enumerate().constrained(lam, window)

    def banlist(self, lam: float, banned: Iterable[Hashable]) -> OracleAnswer:
        return self.enumerate().banlist(lam, banned)


def three_label_hard_instance(H_hat: float, G_hat: float, eps: float) -> EnumerationSpace:
    """Three labels A=[eps, G], B=[H, eps], C=[H/2, G/2] in (h, g).

    No lam reaches C, the maximiser of h * g.
    """
    if not (H_hat > 0 and G_hat > 0 and 0 < eps < min(H_hat, G_hat) / 4):
        raise InvalidParams("need H, G > 0 and 0 < eps < min(H, G)/4")
    return EnumerationSpace([eps, H_hat, H_hat / 2], [G_hat, eps, G_hat / 2], ["A", "B", "C"])


# --- adversarial consistent label stream ---------------------------------------

HalfPlane = tuple[float, float, float]  # a*h + b*g <= c


@dataclass
class _Rect:
    h0: float
    h1: float
    g0: float
    g1: float

    def corners(self):
        return [(self.h0, self.g0), (self.h0, self.g1), (self.h1, self.g0), (self.h1, self.g1)]

    def center(self):
        return (0.5 * (self.h0 + self.h1), 0.5 * (self.g0 + self.g1))


def _sub_rect_in_open_halfplane(r: _Rect, a: float, b: float, c: float) -> Optional[_Rect]:
    """A nonempty open sub-rectangle of r inside {a*h + b*g < c}, if any."""
    vals = [a * h + b * g for h, g in r.corners()]
    j = int(np.argmin(vals))
    if not vals[j] < c:
        return None
    vh, vg = r.corners()[j]
    ch, cg = r.center()
    frac = 0.5
    for _ in range(200):
        h_lo, h_hi = sorted((vh, vh + frac * (ch - vh)))
        g_lo, g_hi = sorted((vg, vg + frac * (cg - vg)))
        cand = _Rect(h_lo, h_hi, g_lo, g_hi)
        if max(a * h + b * g for h, g in cand.corners()) < c:
            return cand
        frac *= 0.5
    return None


class AdversarialLabelStream:
    """Answer lam-queries over convex regions so a hidden label stays best.

    Keeps an open rectangle of candidate positions for the final optimum.
    Every revealed label has smaller h*g than every point of the rectangle,
    and every point of the rectangle that lies in an earlier query region
    loses to that query's answer, so all answers stay consistent with
    whatever optimum is finally placed inside the rectangle.
    """

    def __init__(self, box: float = 100.0):
        self.rect = _Rect(0.0, box, 0.0, box)
        self.revealed: list[tuple[float, float]] = []

    @staticmethod
    def _check_region(region: Sequence[HalfPlane]) -> None:
        if not region:
            return
        A = np.array([[a, b] for a, b, _ in region], dtype=float)
        c = np.array([cc for _, _, cc in region], dtype=float)
        res = linprog(np.zeros(2), A_ub=A, b_ub=c, bounds=[(None, None)] * 2, method="highs")
        if res.status == 2:
            raise InconsistentQuery("query region is empty")

    @staticmethod
    def _inside(p: tuple[float, float], region: Sequence[HalfPlane]) -> bool:
        return all(a * p[0] + b * p[1] <= c for a, b, c in region)

    def query(self, lam: float, region: Sequence[HalfPlane] = ()) -> Optional[tuple[float, float]]:
        if not lam > 0:
            raise InconsistentQuery("lam must be positive")
        self._check_region(region)
        inside = [p for p in self.revealed if self._inside(p, region)]
        best = max(inside, key=lambda p: (p[0] + lam * p[1], p)) if inside else None
        # pieces of the rectangle where the answer ``best`` stays valid
        pieces: list[HalfPlane] = [(-a, -b, -c) for a, b, c in region]  # outside the region
        if best is not None:
            pieces.append((1.0, lam, best[0] + lam * best[1]))
        for a, b, c in pieces:
            sub = _sub_rect_in_open_halfplane(self.rect, a, b, c)
            if sub is not None:
                self.rect = sub
                return best
        # the whole rectangle sits in the region and beats ``best``: reveal a new label
        y = self._find_point(lam)
        self.revealed.append(y)
        return y

    def _find_point(self, lam: float) -> tuple[float, float]:
        """Reveal a point of the rectangle and shrink it to where h*g is larger
        and h + lam*g is smaller than at the revealed point."""
        r = self.rect
        h, g = r.center()
        if abs(h - lam * g) <= 1e-12 * (abs(h) + abs(lam * g)):
            h = r.h0 + 0.3 * (r.h1 - r.h0)
        th, tg = self._tangent_toward(h, g, lam)
        phi0, line0 = h * g, h + lam * g
        for k in range(1, 200):
            s = 0.5**k
            ph, pg = h + s * (th - h), g + s * (tg - g)
            gain = ph * pg - phi0
            if gain <= 0.0:
                continue
            d = gain / (8.0 * (ph + pg))
            cand = _Rect(ph - 2 * d, ph - d, pg - 2 * d, pg - d)
            if (
                cand.h0 > r.h0 and cand.h1 < r.h1 and cand.g0 > r.g0 and cand.g1 < r.g1
                and cand.h0 * cand.g0 > phi0
                and cand.h1 + lam * cand.g1 < line0
            ):
                self.rect = cand
                return (h, g)
        raise InconsistentQuery("could not shrink the candidate rectangle")

    @staticmethod
    def _tangent_toward(h: float, g: float, lam: float) -> tuple[float, float]:
        """Point of the line h + lam*g = const where h*g peaks."""
        k = h + lam * g
        return k / 2.0, k / (2.0 * lam)

    def final_optimum(self) -> tuple[float, float]:
        return self.rect.center()


def adversarial_label_stream(
    queries: Sequence[tuple[float, Sequence[HalfPlane]]],
) -> tuple[list[Optional[tuple[float, float]]], tuple[float, float]]:
    """Run the consistent-label construction on a fixed query list."""
    game = AdversarialLabelStream()
    answers = [game.query(lam, region) for lam, region in queries]
    return answers, game.final_optimum()
