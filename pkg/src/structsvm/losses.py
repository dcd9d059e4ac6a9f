"""Bi-criteria surrogate losses psi(h, g).

``h`` is the margin-side factor and ``g`` the loss-side factor of a label.
All families are vectorised over numpy arrays and also accept plain floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, EmptyTruth, InvalidParams

LN2 = math.log(2.0)
PROB_SCALE = 2.0 / math.pi
FAMILIES = (
    "margin",
    "slack",
    "genscale",
    "betascale",
    "logloss",
    "probloss",
    "probloss_ext",
    "microf1",
)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class BiCriteriaLoss:
    """A psi family plus its parameters.

    Use the constructors (:meth:`margin`, :meth:`slack`, ...) rather than the
    raw dataclass so that parameter bounds are checked.
    """

    family: str
    alpha: float = 1.0
    beta: float = 1.0
    scale: float = PROB_SCALE

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidParams(f"unknown loss family {self.family!r}")
        if self.family == "genscale":
            # contains margin (1, 0), slack (1, 1) and beta-scaling (1, b)
            if not (self.beta >= 0.0 and 0.0 <= self.alpha - self.beta <= 1.0):
                raise InvalidParams(
                    f"genscale needs 0 <= beta <= alpha <= beta + 1, got alpha={self.alpha}, beta={self.beta}"
                )
        if self.family == "betascale" and not 0.0 <= self.beta <= 1.0:
            raise InvalidParams(f"betascale needs 0 <= beta <= 1, got {self.beta}")
        if self.family in ("probloss", "probloss_ext") and not self.scale > 0.0:
            raise InvalidParams(f"probloss scale must be positive, got {self.scale}")

    # constructors
    @classmethod
    def margin(cls) -> "BiCriteriaLoss":
        return cls("margin")

    @classmethod
    def slack(cls) -> "BiCriteriaLoss":
        return cls("slack")

    @classmethod
    def genscale(cls, alpha: float, beta: float) -> "BiCriteriaLoss":
        return cls("genscale", alpha=alpha, beta=beta)

    @classmethod
    def betascale(cls, beta: float) -> "BiCriteriaLoss":
        return cls("betascale", beta=beta)

    @classmethod
    def logloss(cls) -> "BiCriteriaLoss":
        return cls("logloss")

    @classmethod
    def probloss(cls, scale: float = PROB_SCALE) -> "BiCriteriaLoss":
        return cls("probloss", scale=scale)

    @classmethod
    def probloss_ext(cls, scale: float = PROB_SCALE) -> "BiCriteriaLoss":
        return cls("probloss_ext", scale=scale)

    @classmethod
    def microf1(cls) -> "BiCriteriaLoss":
        return cls("microf1")

    @classmethod
    def from_name(cls, name: str, **params: float) -> "BiCriteriaLoss":
        """Build a loss from a CLI-style name such as ``slack`` or ``genscale``."""
        name = name.lower().replace("-", "_")
        aliases = {"probloss_convex": "probloss_ext", "micro_f1": "microf1", "beta": "betascale"}
        name = aliases.get(name, name)
        kwargs = {k: v for k, v in params.items() if v is not None}
        if name == "genscale":
            return cls.genscale(kwargs.get("alpha", 1.0), kwargs.get("beta", 1.0))
        if name == "betascale":
            return cls.betascale(kwargs.get("beta", 0.5))
        if name in ("probloss", "probloss_ext"):
            return cls(name, scale=kwargs.get("scale", PROB_SCALE))
        return cls(name)

    @property
    def negative_g(self) -> bool:
        """True for families whose g factor lives on the negative axis."""
        return self.family == "microf1"

    def check_domain(self, g) -> None:
        g = np.asarray(g, dtype=float)
        if self.family == "margin":
            return
        if self.family == "microf1":
            if np.any(g >= 0.0):
                raise DomainError("microf1 needs g < 0")
        elif np.any(g < 0.0):
            raise DomainError(f"{self.family} needs g >= 0")

    def value(self, h, g):
        """psi(h, g)."""
        self.check_domain(g)
        h = np.asarray(h, dtype=float)
        g = np.asarray(g, dtype=float)
        fam = self.family
        with np.errstate(divide="ignore", invalid="ignore"):
            if fam == "margin":
                out = h + g
            elif fam == "slack":
                out = (h + 1.0) * g
            elif fam == "genscale":
                out = h * g**self.beta + g**self.alpha
            elif fam == "betascale":
                out = h * g**self.beta + g
            elif fam == "logloss":
                out = g * np.logaddexp(0.0, h) / LN2
            elif fam == "probloss":
                out = _prob_value(h, g, self.scale)
            elif fam == "probloss_ext":
                sq = np.sqrt(g)
                out = np.where(h > 0.0, g + sq * h, _prob_value(np.minimum(h, 0.0), g, self.scale))
            else:
                out = h / (-g)
        return _out(out)

    def grad(self, h, g):
        """(d psi / dh, d psi / dg)."""
        self.check_domain(g)
        h = np.asarray(h, dtype=float)
        g = np.asarray(g, dtype=float)
        fam = self.family
        with np.errstate(divide="ignore", invalid="ignore"):
            if fam == "margin":
                dh, dg = np.ones_like(h + g), np.ones_like(h + g)
            elif fam == "slack":
                dh, dg = g + 0.0 * h, h + 1.0 + 0.0 * g
            elif fam == "genscale":
                dh = g**self.beta + 0.0 * h
                dg = _hpow(h, g, self.beta) + self.alpha * g ** (self.alpha - 1.0)
            elif fam == "betascale":
                dh = g**self.beta + 0.0 * h
                dg = _hpow(h, g, self.beta) + 1.0
            elif fam == "logloss":
                dh = g * _sigmoid(h) / LN2
                dg = np.logaddexp(0.0, h) / LN2 + 0.0 * g
            elif fam == "probloss":
                dh, dg = _prob_grad(h, g, self.scale)
            elif fam == "probloss_ext":
                pdh, pdg = _prob_grad(np.minimum(h, 0.0), g, self.scale)
                sq = np.sqrt(g)
                pos = h > 0.0
                dh = np.where(pos, sq, pdh)
                dg = np.where(pos, 1.0 + h / (2.0 * np.where(sq > 0, sq, 1.0)), pdg)
            else:
                dh = 1.0 / (-g) + 0.0 * h
                dg = h / (g * g)
        return _out(dh), _out(dg)

    def tangent_lambda(self, h: float, g: float) -> float:
        """lam = (d psi/dg) / (d psi/dh), the lam whose oracle line is tangent here.

        Clamped at 0; ``inf`` when d psi/dh vanishes.
        """
        dh, dg = self.grad(h, g)
        if dh <= 0.0:
            return math.inf if dg > 0.0 else 0.0
        lam = dg / dh
        if not math.isfinite(lam):
            return math.inf
        return max(lam, 0.0)


def _hpow(h, g, beta):
    # d/dg of h * g**beta, taken as 0 wherever h == 0 (including g == 0)
    return np.where(h == 0.0, 0.0, beta * h * g ** (beta - 1.0))


def _sigmoid(h):
    return np.where(h >= 0, 1.0 / (1.0 + np.exp(-np.abs(h))), np.exp(-np.abs(h)) / (1.0 + np.exp(-np.abs(h))))


def _prob_value(h, g, scale):
    pos = g > 0.0
    sg = np.where(pos, g, 1.0)
    z = h / np.sqrt(scale * sg)
    return np.where(pos, 2.0 * sg * ndtr(z), 0.0)


def _prob_grad(h, g, scale):
    pos = g > 0.0
    sg = np.where(pos, g, 1.0)
    sigma = np.sqrt(scale * sg)
    z = h / sigma
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    dh = np.where(pos, 2.0 * sg * pdf / sigma, 0.0)
    limit = np.where(h > 0.0, 2.0, np.where(h < 0.0, 0.0, 1.0))
    dg = np.where(pos, 2.0 * ndtr(z) - z * pdf, limit)
    return dh, dg


def psi_value(loss: BiCriteriaLoss, h, g):
    return loss.value(h, g)


def psi_grad(loss: BiCriteriaLoss, h, g):
    return loss.grad(h, g)


def probloss_convex_ext(h: float, g: float, scale: float = PROB_SCALE) -> float:
    """Convex extension of ProbLoss: linear continuation for h > 0."""
    if g <= 0.0:
        raise DomainError(f"convex extension needs g > 0, got {g}")
    return BiCriteriaLoss.probloss_ext(scale).value(h, g)


@dataclass(frozen=True)
class FactorPair:
    h: float
    g: float
    convention: str  # "margin_hamming" or "microf1"


def microf1_factors(y: Iterable, y_true: Iterable, margin: float) -> FactorPair:
    """Factors of the Micro-F1 surrogate for predicted set ``y``."""
    ys, ts = set(y), set(y_true)
    if not ts:
        raise EmptyTruth("y_true must be nonempty")
    ham = len(ys ^ ts)
    return FactorPair(h=ham + margin, g=-float(len(ys) + len(ts)), convention="microf1")


def micro_f1(y: Iterable, y_true: Iterable) -> float:
    ys, ts = set(y), set(y_true)
    denom = len(ys) + len(ts)
    if denom == 0:
        return 1.0
    return 2.0 * len(ys & ts) / denom


@dataclass(frozen=True)
class PropertyReport:
    family: str
    samples: int
    monotone_violations: int
    quasiconcave_violations: int
    diagonal_violations: int

    @property
    def ok(self) -> bool:
        return (
            self.monotone_violations == 0
            and self.quasiconcave_violations == 0
            and self.diagonal_violations == 0
        )


def _sample_box(loss: BiCriteriaLoss, rng: np.random.Generator, n: int):
    h = rng.uniform(-3.0, 3.0, n)
    if loss.negative_g:
        g = rng.uniform(-10.0, -0.5, n)
    else:
        g = rng.uniform(0.05, 5.0, n)
    return h, g


def check_bicriteria_axioms(loss: BiCriteriaLoss, samples: int = 1000, seed: int = 0) -> PropertyReport:
    """Count axiom violations on random points of the nonnegative region.

    Checks monotonicity in each argument, quasi-concavity along random chords
    between points of a common super-level set, and strict increase along
    the diagonal direction.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    rng = np.random.default_rng(seed)
    h, g = _sample_box(loss, rng, 4 * samples)
    v = loss.value(h, g)
    keep = v >= 0.0
    h, g, v = h[keep][:samples], g[keep][:samples], v[keep][:samples]
    n = len(h)
    tol = 1e-12 * (1.0 + np.abs(v))

    d = 1e-3
    mono = int(np.sum(loss.value(h + d, g) < v - tol))
    mono += int(np.sum(loss.value(h, g + d) < v - tol))

    diag = int(np.sum(~(loss.value(h + d, g + d) > v)))

    j = rng.permutation(n)
    t = rng.uniform(0.0, 1.0, n)
    hm = (1.0 - t) * h + t * h[j]
    gm = (1.0 - t) * g + t * g[j]
    vm = loss.value(hm, gm)
    floor = np.minimum(v, v[j])
    qc = int(np.sum(vm < floor - 1e-12 * (1.0 + np.abs(floor))))
    return PropertyReport(loss.family, n, mono, qc, diag)
