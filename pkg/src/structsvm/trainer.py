"""SGD training of linear structured models with bi-criteria losses.

Two model kinds live here: linear chains (per-position state scores plus a
transition matrix) and flat multi-label models (one weight row per label).
Hierarchical models are built in :mod:`structsvm.hierarchy`.

For a training pair (x, y_true) every candidate label y is mapped to
h = f(x, y) - f(x, y_true) and g = task loss, and the example loss is the
max of psi(h, g).  The searches for that max are pluggable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InferenceFailure, InvalidParams, LengthMismatch, StructSVMError
from .hull_search import FractionalLabel, convex_hull_search
from .losses import BiCriteriaLoss
from .oracle import ChainSpace, LabelSpace, MultiLabelSpace
from .slack_search import angular_search, binary_search_sgd, bisecting_search

INFERENCE = ("margin", "binary", "bisecting", "angular", "hull")
MODEL_MAGIC = "structsvm-model"
MODEL_VERSION = "v1"
GRAD_CLIP = 1e6


@dataclass(frozen=True)
class ChainInstance:
    X: np.ndarray  # (length, feature_dim)
    y: tuple

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.X.shape[0] != len(self.y):
            raise LengthMismatch("one feature row per position is required")


@dataclass(frozen=True)
class MultiLabelInstance:
    x: np.ndarray  # (feature_dim,)
    y: frozenset


@dataclass
class StructuredModel:
    kind: str  # "chain" or "multilabel"
    num_states: int  # states for chains, labels for multi-label
    feature_dim: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in ("chain", "multilabel"):
            raise InvalidParams(f"unknown model kind {self.kind!r}")
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.size(self.kind, self.num_states, self.feature_dim),):
            raise InvalidParams("weight length does not match the model dimensions")

    @staticmethod
    def size(kind: str, n: int, d: int) -> int:
        return n * d + (n * n if kind == "chain" else 0)

    @classmethod
    def zeros(cls, kind: str, num_states: int, feature_dim: int) -> "StructuredModel":
        return cls(kind, num_states, feature_dim, np.zeros(cls.size(kind, num_states, feature_dim)))

    @property
    def unary(self) -> np.ndarray:
        n, d = self.num_states, self.feature_dim
        return self.weights[: n * d].reshape(n, d)

    @property
    def transitions(self) -> np.ndarray:
        n, d = self.num_states, self.feature_dim
        return self.weights[n * d :].reshape(n, n)

    def copy(self) -> "StructuredModel":
        return StructuredModel(self.kind, self.num_states, self.feature_dim, self.weights.copy())


@dataclass
class TrainConfig:
    reg_c: float = 1e-3
    learning_rate: float = 0.01
    epochs: int = 10
    inference: str = "margin"
    loss: BiCriteriaLoss = field(default_factory=BiCriteriaLoss.margin)
    seed: int = 0
    decay: float = 0.0
    warm_start: bool = True
    shuffle: bool = True

    def __post_init__(self) -> None:
        if not (self.reg_c > 0 and self.learning_rate > 0):
            raise InvalidParams("reg_c and learning_rate must be positive")
        if self.epochs < 0:
            raise InvalidParams("epochs must be nonnegative")
        if self.inference not in INFERENCE:
            raise InvalidParams(f"inference must be one of {INFERENCE}")
        if self.decay < 0:
            raise InvalidParams("decay must be nonnegative")


@dataclass
class Metrics:
    accuracy: float
    hamming: float
    micro_f1: float
    macro_f1: float


@dataclass
class TrainStats:
    oracle_calls: list[int] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)

    @property
    def mean_calls(self) -> float:
        return float(np.mean(self.oracle_calls)) if self.oracle_calls else 0.0


# --- label spaces -----------------------------------------------------------


def label_space(model: StructuredModel, inst, h_offset: float = 0.0, loss: Optional[BiCriteriaLoss] = None) -> LabelSpace:
    """(h, g) space of ``inst`` under the current weights."""
    if model.kind == "chain":
        unary = inst.X @ model.unary.T
        return ChainSpace(unary, model.transitions, inst.y, h_offset)
    scores = model.unary @ inst.x
    conv = "microf1" if loss is not None and loss.negative_g else "hamming"
    return MultiLabelSpace(scores, inst.y, conv, h_offset)


def _label_key(model: StructuredModel, label):
    """Label id used inside label spaces."""
    if model.kind == "chain":
        return tuple(label)
    return MultiLabelSpace.to_mask(label)


def _add_features(model: StructuredModel, out: np.ndarray, inst, label_id, coef: float) -> None:
    """out += coef * phi(x, label)."""
    n, d = model.num_states, model.feature_dim
    U = out[: n * d].reshape(n, d)
    if model.kind == "chain":
        y = label_id
        np.add.at(U, (np.asarray(y, dtype=int),), coef * inst.X)
        T = out[n * d :].reshape(n, n)
        for t in range(len(y) - 1):
            T[y[t], y[t + 1]] += coef
    else:
        for l in MultiLabelSpace.to_set(label_id):
            U[l] += coef * inst.x


def features(model: StructuredModel, inst, label) -> np.ndarray:
    out = np.zeros_like(model.weights)
    _add_features(model, out, inst, _label_key(model, label), 1.0)
    return out


# --- inference ----------------------------------------------------------------


@dataclass
class InferenceResult:
    fractional: FractionalLabel
    oracle_calls: int
    vertices: list = field(default_factory=list)


def loss_augmented_inference(
    model: StructuredModel, inst, config: TrainConfig, warm: Optional[Sequence] = None
) -> InferenceResult:
    """Run the configured search; the result is expressed with h = margin."""
    loss = config.loss
    method = config.inference
    if method == "margin":
        space = label_space(model, inst, 0.0, loss)
        ans = space.oracle(1.0)
        return InferenceResult(FractionalLabel((ans.point,)), 1)
    if method == "hull":
        space = label_space(model, inst, 0.0, loss)
        res = convex_hull_search(space, loss, warm_start=warm)
        return InferenceResult(res.fractional, res.oracle_calls, [p.label_id for p in res.vertices])
    # product-objective searches use h = 1 + margin
    base = label_space(model, inst, 0.0, loss)
    shifted = label_space(model, inst, 1.0, loss)
    if method == "binary":
        res = binary_search_sgd(shifted, 1e-2, 1e2, 1e-4)
    elif method == "bisecting":
        res = bisecting_search(shifted, 1.0, 60)
    else:
        space = shifted.enumerate() if hasattr(shifted, "enumerate") else shifted
        res = angular_search(space, 1.0)
    if res.best is None:
        truth = _label_key(model, inst.y)
        return InferenceResult(FractionalLabel((base.point_of(truth),)), res.oracle_calls)
    return InferenceResult(FractionalLabel((base.point_of(res.best.label_id),)), res.oracle_calls)


def subgradient_step(
    model: StructuredModel,
    inst,
    result: FractionalLabel,
    loss: BiCriteriaLoss,
    lr: float,
    reg_c: float,
) -> StructuredModel:
    """One stochastic step on reg_c/2 |w|^2 + psi at the inferred label (in place)."""
    grad = reg_c * model.weights
    if result.value(loss) > 0.0:
        truth = _label_key(model, inst.y)
        # chain rule at the fractional point, shared by both endpoints
        dh, _ = loss.grad(result.h, result.g)
        dh = float(np.clip(dh, 0.0, GRAD_CLIP))
        for pt, w in result.components():
            coef = w * dh
            if coef == 0.0 or pt.label_id == truth:
                continue
            _add_features(model, grad, inst, pt.label_id, coef)
            _add_features(model, grad, inst, truth, -coef)
    model.weights = model.weights - lr * grad
    return model


def example_loss(model: StructuredModel, inst, config: TrainConfig) -> float:
    res = loss_augmented_inference(model, inst, config)
    return max(res.fractional.value(config.loss), 0.0)


def objective(model: StructuredModel, data: Sequence, config: TrainConfig) -> float:
    """reg_c/2 |w|^2 + mean example loss under the configured inference."""
    reg = 0.5 * config.reg_c * float(model.weights @ model.weights)
    return reg + float(np.mean([example_loss(model, inst, config) for inst in data]))


def sgd_train(
    data: Sequence,
    config: TrainConfig,
    model: Optional[StructuredModel] = None,
    stats: Optional[TrainStats] = None,
    track_objective: bool = False,
) -> StructuredModel:
    """Plain SGD over shuffled epochs; deterministic given ``config.seed``."""
    if not data:
        raise InvalidParams("training data is empty")
    if model is None:
        model = init_model(data)
    else:
        model = model.copy()
    rng = np.random.default_rng(config.seed)
    warm: dict[int, list] = {}
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(data)) if config.shuffle else np.arange(len(data))
        for i in order:
            i = int(i)
            inst = data[i]
            try:
                seeds = warm.get(i) if (config.warm_start and config.inference == "hull") else None
                res = loss_augmented_inference(model, inst, config, seeds)
            except StructSVMError as exc:
                raise InferenceFailure(i, exc) from exc
            if res.vertices:
                warm[i] = res.vertices
            if stats is not None:
                stats.oracle_calls.append(res.oracle_calls)
            lr = config.learning_rate / (1.0 + config.decay * step)
            subgradient_step(model, inst, res.fractional, config.loss, lr, config.reg_c)
            step += 1
        if track_objective and stats is not None:
            stats.objective.append(objective(model, data, config))
    return model


def init_model(data: Sequence) -> StructuredModel:
    first = data[0]
    if isinstance(first, ChainInstance):
        states = 1 + max(max(inst.y) for inst in data)
        return StructuredModel.zeros("chain", max(states, 2), first.X.shape[1])
    labels = 1 + max((max(inst.y) for inst in data if inst.y), default=0)
    return StructuredModel.zeros("multilabel", labels, first.x.shape[0])


# --- prediction and metrics -------------------------------------------------------


def predict(model: StructuredModel, inst):
    """argmax_y f(x, y); chains decode with Viterbi, multi-label thresholds at 0."""
    if model.kind == "chain":
        T = inst.X.shape[0]
        space = ChainSpace(inst.X @ model.unary.T, model.transitions, (0,) * T)
        return space.oracle(0.0).label_id
    scores = model.unary @ inst.x
    return frozenset(int(l) for l in np.flatnonzero(scores > 0.0))


def _as_sets(label) -> frozenset:
    if isinstance(label, (set, frozenset)):
        return frozenset(label)
    return frozenset(enumerate(label))


def evaluate(pred: Sequence, gold: Sequence, num_labels: Optional[int] = None) -> Metrics:
    """Exact match, Hamming rate, micro-F1 and macro-F1 (0/0 counts as 1)."""
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predictions for {len(gold)} gold labels")
    if not gold:
        raise LengthMismatch("no labels to evaluate")
    sets = isinstance(gold[0], (set, frozenset))
    acc = float(np.mean([_as_sets(p) == _as_sets(g) for p, g in zip(pred, gold)]))
    if sets:
        universe = set().union(*gold, *pred)
        n = num_labels if num_labels is not None else max(len(universe), 1)
        ham = float(np.mean([len(set(p) ^ set(g)) / n for p, g in zip(pred, gold)]))
        classes = sorted(universe) if num_labels is None else range(num_labels)
        members = lambda lab, c: c in lab  # noqa: E731
        units = [(p, g) for p, g in zip(pred, gold)]
    else:
        for p, g in zip(pred, gold):
            if len(p) != len(g):
                raise LengthMismatch("sequence lengths differ")
        ham = float(np.sum([np.sum(np.asarray(p) != np.asarray(g)) for p, g in zip(pred, gold)]) / sum(len(g) for g in gold))
        states = set(s for g in gold for s in g) | set(s for p in pred for s in p)
        classes = sorted(states) if num_labels is None else range(num_labels)
        # each position is one multi-class unit
        units = [({p[t]}, {g[t]}) for p, g in zip(pred, gold) for t in range(len(g))]
        members = lambda lab, c: c in lab  # noqa: E731
    inter = sum(len(_as_sets(p) & _as_sets(g)) for p, g in zip(pred, gold))
    denom = sum(len(p) + len(g) for p, g in zip(pred, gold))
    micro = 1.0 if denom == 0 else 2.0 * inter / denom
    f1s = []
    for c in classes:
        tp = sum(1 for p, g in units if members(p, c) and members(g, c))
        fp = sum(1 for p, g in units if members(p, c) and not members(g, c))
        fn = sum(1 for p, g in units if not members(p, c) and members(g, c))
        f1s.append(1.0 if tp + fp + fn == 0 else 2.0 * tp / (2 * tp + fp + fn))
    macro = float(np.mean(f1s)) if f1s else 1.0
    return Metrics(acc, ham, micro, macro)


# --- model files ------------------------------------------------------------------


def save_model(model: StructuredModel, path: str) -> None:
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION} {model.kind} {model.num_states},{model.feature_dim}"]
    lines += [format(float(w), ".17g") for w in model.weights]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> StructuredModel:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != MODEL_MAGIC or header[1] != MODEL_VERSION:
            raise InvalidParams(f"{path}: not a {MODEL_MAGIC} {MODEL_VERSION} file")
        kind = header[2]
        n, d = (int(v) for v in header[3].split(","))
        weights = np.array([float(line) for line in fh if line.strip()], dtype=float)
    return StructuredModel(kind, n, d, weights)


# --- synthetic data -----------------------------------------------------------------


def planted_chains(
    n: int,
    length: int = 4,
    num_states: int = 2,
    feature_dim: int = 5,
    margin: float = 0.5,
    seed: int = 0,
) -> tuple[list[ChainInstance], StructuredModel]:
    """Chains labelled by a hidden model, kept only when the runner-up trails by ``margin``."""
    rng = np.random.default_rng(seed)
    truth = StructuredModel(
        "chain", num_states, feature_dim,
        rng.normal(size=StructuredModel.size("chain", num_states, feature_dim)),
    )
    data: list[ChainInstance] = []
    while len(data) < n:
        X = rng.normal(size=(length, feature_dim))
        space = ChainSpace(X @ truth.unary.T, truth.transitions, (0,) * length)
        best, second = space.kbest(0.0, 2)
        gap = space.score(best) - space.score(second)
        if gap >= margin:
            data.append(ChainInstance(X, best))
    return data, truth
