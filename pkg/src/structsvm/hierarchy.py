"""Normalized hierarchical SVMs over label trees and DAGs.

A hierarchy is a forest of real nodes hanging under one implicit root that
carries no weight.  Every node n has a budget alpha_n; a leaf's path
budget is the sum of alpha over the leaf and its ancestors.  Models score a
label y (an ancestor-closed node set) by sum_{n in y} sqrt(alpha_n) W_n x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .errors import (
    InvalidHierarchy,
    InvalidLabel,
    InvalidNode,
    InvalidParams,
    NotATree,
    UnsupportedDAG,
)

DEFAULT_T = 1.5


@dataclass(frozen=True)
class HierarchySpec:
    """Parents per node; nodes listed in ``virtual`` are placeholders for the implicit root."""

    parents: tuple[tuple[int, ...], ...]
    virtual: frozenset = frozenset()
    children: tuple[tuple[int, ...], ...] = field(init=False)
    order: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        M = len(self.parents)
        if M == 0:
            raise InvalidHierarchy("hierarchy has no nodes")
        kids: list[list[int]] = [[] for _ in range(M)]
        for n, ps in enumerate(self.parents):
            if n in self.virtual and ps:
                raise InvalidHierarchy(f"virtual node {n} cannot have parents")
            for p in ps:
                if not 0 <= p < M or p == n:
                    raise InvalidHierarchy(f"bad parent {p} for node {n}")
                if p in self.virtual:
                    raise InvalidHierarchy("virtual parents must be stripped")
                kids[p].append(n)
        object.__setattr__(self, "children", tuple(tuple(sorted(k)) for k in kids))
        # Kahn topological order, smallest id first
        indeg = [len(ps) for ps in self.parents]
        ready = sorted(n for n in range(M) if indeg[n] == 0 and n not in self.virtual)
        order: list[int] = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for c in self.children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
                    ready.sort()
        if len(order) != M - len(self.virtual):
            raise InvalidHierarchy("hierarchy contains a cycle")
        object.__setattr__(self, "order", tuple(order))

    @classmethod
    def from_edges(
        cls, edges: Iterable[tuple[int, int]], num_nodes: Optional[int] = None, virtual_root: Optional[int] = None
    ) -> "HierarchySpec":
        edges = [(int(p), int(c)) for p, c in edges]
        M = num_nodes if num_nodes is not None else 1 + max(max(e) for e in edges)
        parents: list[list[int]] = [[] for _ in range(M)]
        for p, c in edges:
            if not (0 <= p < M and 0 <= c < M):
                raise InvalidHierarchy(f"edge ({p}, {c}) out of range")
            if p == virtual_root:
                continue
            if c == virtual_root:
                raise InvalidHierarchy("the implicit root cannot be a child")
            if p not in parents[c]:
                parents[c].append(p)
        virtual = frozenset() if virtual_root is None else frozenset({virtual_root})
        return cls(tuple(tuple(sorted(ps)) for ps in parents), virtual)

    @property
    def num_nodes(self) -> int:
        return len(self.parents)

    @property
    def real_nodes(self) -> tuple[int, ...]:
        return self.order

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(n for n in self.order if not self.parents[n])

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(n for n in sorted(self.order) if not self.children[n])

    @property
    def is_tree(self) -> bool:
        return all(len(self.parents[n]) <= 1 for n in self.order)

    def ancestors(self, n: int) -> frozenset:
        """n together with every ancestor of n."""
        out = {n}
        stack = [n]
        while stack:
            for p in self.parents[stack.pop()]:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return frozenset(out)

    def path_matrix(self, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """(leaves x nodes) incidence of leaf paths, optionally weighted per node."""
        P = np.zeros((len(self.leaves), self.num_nodes))
        for i, l in enumerate(self.leaves):
            P[i, list(self.ancestors(l))] = 1.0
        if weights is not None:
            P = P * weights[None, :]
        return P

    def depth(self, n: int) -> int:
        """Number of nodes on the longest path from a top-level node to n."""
        if not self.parents[n]:
            return 1
        return 1 + max(self.depth(p) for p in self.parents[n])

    def to_edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c in range(self.num_nodes) for p in self.parents[c]]


def load_hierarchy(path: str, virtual_root: Optional[int] = None) -> HierarchySpec:
    """Read ``parent child`` lines (0-based ids, ``#`` comments)."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidHierarchy(f"{path}:{lineno}: expected 'parent child'")
            edges.append((int(parts[0]), int(parts[1])))
    if not edges:
        raise InvalidHierarchy(f"{path}: no edges")
    return HierarchySpec.from_edges(edges, virtual_root=virtual_root)


def save_hierarchy(spec: HierarchySpec, path: str, virtual_root: Optional[int] = None) -> None:
    lines = [f"{p} {c}" for p, c in spec.to_edges()]
    if virtual_root is not None:
        lines += [f"{virtual_root} {r}" for r in spec.roots]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# --- alpha solvers -------------------------------------------------------------


def _tree_scales(spec: HierarchySpec, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Per node: optimal cost factor f(n) of its subtree and own share a(n)."""
    q = 1.0 / (rho - 1.0)
    f = np.zeros(spec.num_nodes)
    a = np.zeros(spec.num_nodes)
    for n in reversed(spec.order):
        kids = spec.children[n]
        if not kids:
            f[n], a[n] = 1.0, 1.0
            continue
        S = float(sum(f[c] for c in kids))
        a[n] = expit(q * math.log(S))
        f[n] = a[n] ** rho + (1.0 - a[n]) ** rho * S
    return f, a


def compute_alpha_rho(spec: HierarchySpec, rho: float = 2.0, relaxed_T: Optional[float] = None) -> np.ndarray:
    """argmin sum alpha^rho subject to every leaf path summing to 1.

    On trees the program separates: a subtree with budget L costs L^rho f(n),
    so every node's share has a closed form.  On DAGs the range-relaxed
    program (1 <= path sum <= T) is solved numerically.
    """
    if not rho > 1.0:
        raise InvalidParams("rho must exceed 1")
    alpha = np.zeros(spec.num_nodes)
    if spec.is_tree:
        _, a = _tree_scales(spec, rho)
        budget = np.zeros(spec.num_nodes)
        for n in spec.order:
            budget[n] = 1.0 if not spec.parents[n] else budget[spec.parents[n][0]] * (1.0 - a[spec.parents[n][0]])
            alpha[n] = budget[n] * a[n]
        return alpha
    T = DEFAULT_T if relaxed_T is None else float(relaxed_T)
    if T < 1.0:
        raise InvalidParams("relaxed_T must be >= 1")
    nodes = list(spec.order)
    P = spec.path_matrix()[:, nodes]
    x0 = np.full(len(nodes), 1.0 / max(spec.depth(l) for l in spec.leaves))
    x0 = x0 * max(1.0, 1.0 / float(np.min(P @ x0)))
    cons = [
        {"type": "ineq", "fun": lambda x: P @ x - 1.0, "jac": lambda x: P},
        {"type": "ineq", "fun": lambda x: T - P @ x, "jac": lambda x: -P},
    ]
    res = minimize(
        lambda x: float(np.sum(np.maximum(x, 0.0) ** rho)),
        x0,
        jac=lambda x: rho * np.maximum(x, 0.0) ** (rho - 1.0),
        bounds=[(0.0, None)] * len(nodes),
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 1000},
    )
    alpha[nodes] = np.maximum(res.x, 0.0)
    return alpha


def compute_alpha_maxmin(spec: HierarchySpec, directional: bool = False, tol: float = 1e-12) -> np.ndarray:
    """Maximise the smallest alpha subject to unit leaf paths, by bisection.

    For a candidate minimum m the greedy assignment gives m to every inner
    node and the rest of the path to each leaf; it is feasible exactly when
    every leaf keeps at least m, and it already respects the directional
    order (children at least their parents).
    """
    if not spec.is_tree:
        raise UnsupportedDAG("max-min weights are only defined for trees here")
    depth = {l: spec.depth(l) for l in spec.leaves}

    def assign(m: float) -> Optional[np.ndarray]:
        alpha = np.zeros(spec.num_nodes)
        for n in spec.order:
            if spec.children[n]:
                alpha[n] = m
        for l in spec.leaves:
            alpha[l] = 1.0 - m * (depth[l] - 1)
            if alpha[l] < m - 1e-15:
                return None
        return alpha

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if assign(mid) is not None:
            lo = mid
        else:
            hi = mid
    out = assign(lo)
    assert out is not None
    if directional:
        for n in spec.order:
            for c in spec.children[n]:
                if out[c] < out[n] - 1e-12:
                    raise InvalidHierarchy("directional order violated")
    return out


def alpha_path_sums(spec: HierarchySpec, alpha: np.ndarray) -> np.ndarray:
    return spec.path_matrix() @ alpha


# --- labels ---------------------------------------------------------------------


def validate_label(spec: HierarchySpec, y: Iterable[int]) -> frozenset:
    """Check that ``y`` is a union of leaf paths; return it as a frozenset."""
    ys = frozenset(int(n) for n in y)
    if not ys:
        raise InvalidLabel("empty label")
    for n in ys:
        if not 0 <= n < spec.num_nodes or n in spec.virtual:
            raise InvalidLabel(f"node {n} is not a real node")
        if not set(spec.parents[n]) <= ys:
            raise InvalidLabel(f"node {n} is present without its parents")
    covered = set()
    for l in spec.leaves:
        if l in ys:
            covered |= spec.ancestors(l)
    if covered != set(ys):
        raise InvalidLabel("label contains nodes that reach no selected leaf")
    return ys


def normalized_attributes(spec: HierarchySpec, alpha: np.ndarray, y: Iterable[int]) -> np.ndarray:
    ys = validate_label(spec, y)
    out = np.zeros(spec.num_nodes)
    idx = sorted(ys)
    out[idx] = np.sqrt(alpha[idx])
    return out


def normalized_error(alpha: np.ndarray, y: Iterable[int], y_prime: Iterable[int], spec: Optional[HierarchySpec] = None) -> float:
    """sqrt of the alpha mass on the symmetric difference of two labels."""
    a, b = frozenset(y), frozenset(y_prime)
    if spec is not None:
        validate_label(spec, a)
        validate_label(spec, b)
    diff = sorted(a ^ b)
    return float(math.sqrt(float(np.sum(np.asarray(alpha)[diff])))) if diff else 0.0


def best_closed_subset(spec: HierarchySpec, r: np.ndarray) -> frozenset:
    """argmax of sum_{n in y} r_n over valid labels of a tree (at least one leaf)."""
    if not spec.is_tree:
        raise UnsupportedDAG("tree dynamic program needs a tree")
    best = np.zeros(spec.num_nodes)
    pick: dict[int, list[int]] = {}
    for n in reversed(spec.order):
        kids = spec.children[n]
        if not kids:
            best[n] = r[n]
            pick[n] = []
            continue
        pos = [c for c in kids if best[c] > 0.0]
        if not pos:
            pos = [max(kids, key=lambda c: (best[c], -c))]
        best[n] = r[n] + float(sum(best[c] for c in pos))
        pick[n] = pos
    roots = spec.roots
    chosen = [n for n in roots if best[n] > 0.0]
    if not chosen:
        chosen = [max(roots, key=lambda n: (best[n], -n))]
    out: set[int] = set()
    stack = list(chosen)
    while stack:
        n = stack.pop()
        out.add(n)
        stack.extend(pick[n])
    return frozenset(out)


def tree_multilabel_argmax(
    spec: HierarchySpec, alpha: np.ndarray, W: np.ndarray, x: np.ndarray, truth: Optional[Iterable[int]] = None
) -> frozenset:
    """Loss-augmented argmax with the decomposed leaf loss (+1 off truth, -1 on truth).

    Without ``truth`` this is plain prediction.
    """
    r = np.sqrt(alpha) * (W @ x)
    if truth is not None:
        t = frozenset(truth)
        for l in spec.leaves:
            r[l] += -1.0 if l in t else 1.0
    return best_closed_subset(spec, r)


# --- shared norm ------------------------------------------------------------------


def argmin_alpha_tree(norms: np.ndarray, spec: HierarchySpec) -> np.ndarray:
    """Exact argmin of sum sq_norm_n / alpha_n with every leaf path <= 1.

    Bottom-up, a subtree with budget L costs N_n / L where
    N_n = (sqrt(b_n) + sqrt(sum of children's N))^2; top-down, each node takes
    the share sqrt(b_n) / (sqrt(b_n) + sqrt(S)) of its budget.  Nodes with zero
    norm get nothing.
    """
    if not spec.is_tree:
        raise NotATree("closed-form alpha needs a tree")
    b = np.asarray(norms, dtype=float)
    if b.shape != (spec.num_nodes,) or np.any(b < 0):
        raise InvalidParams("need one nonnegative squared norm per node")
    N = np.zeros(spec.num_nodes)
    E = np.zeros(spec.num_nodes)
    for n in reversed(spec.order):
        kids = spec.children[n]
        if not kids:
            N[n] = b[n]
            E[n] = 1.0 if b[n] > 0.0 else 0.0
            continue
        S = float(sum(N[c] for c in kids))
        denom = math.sqrt(b[n]) + math.sqrt(S)
        N[n] = denom * denom
        E[n] = math.sqrt(b[n]) / denom if denom > 0.0 else 0.0
    alpha = np.zeros(spec.num_nodes)
    budget = np.zeros(spec.num_nodes)
    for n in spec.order:
        budget[n] = 1.0 if not spec.parents[n] else budget[spec.parents[n][0]] * (1.0 - E[spec.parents[n][0]])
        alpha[n] = budget[n] * E[n]
    return alpha


def alpha_objective(norms: np.ndarray, alpha: np.ndarray) -> float:
    """sum b_n / alpha_n with 0/0 = 0 (inf when a positive norm has no budget)."""
    b = np.asarray(norms, dtype=float)
    a = np.asarray(alpha, dtype=float)
    tot = 0.0
    for bn, an in zip(b, a):
        if bn == 0.0:
            continue
        if an <= 0.0:
            return math.inf
        tot += bn / an
    return tot


def shared_norm_structured(U: np.ndarray, spec: HierarchySpec, iters: int = 5000, tol: float = 1e-15) -> float:
    """Structured shared norm of a (leaves x d) weight matrix.

    Alternates the min-norm node decomposition for fixed alpha with the
    exact alpha update, starting from the rho = 2 weights.
    """
    U = np.asarray(U, dtype=float)
    if U.shape[0] != len(spec.leaves):
        raise InvalidParams("one row per leaf is required")
    alpha = compute_alpha_rho(spec, 2.0)
    P = spec.path_matrix()
    prev = math.inf
    for _ in range(iters):
        V = np.linalg.pinv(P * np.sqrt(alpha)[None, :]) @ U
        val = float(np.sum(V * V))
        node_U = np.sqrt(alpha)[:, None] * V
        alpha = argmin_alpha_tree(np.sum(node_U * node_U, axis=1), spec)
        if prev - val <= tol * max(1.0, val):
            prev = min(prev, val)
            break
        prev = val
    return math.sqrt(prev)


# --- node duplication ---------------------------------------------------------------


def duplicate_node(spec: HierarchySpec, n: int) -> HierarchySpec:
    """Splice a copy n' of inner node n between n and its children.

    Every label containing n then contains n' as well.
    """
    if not 0 <= n < spec.num_nodes or n in spec.virtual:
        raise InvalidNode(f"node {n} does not exist")
    if not spec.children[n]:
        raise InvalidNode("leaves cannot be duplicated")
    new = spec.num_nodes
    parents = [list(ps) for ps in spec.parents]
    for c in spec.children[n]:
        parents[c] = sorted(new if p == n else p for p in parents[c])
    parents.append([n])
    return HierarchySpec(tuple(tuple(ps) for ps in parents), spec.virtual)


# --- models -------------------------------------------------------------------------


LOSSES = ("normalized", "hamming", "zero_one")


@dataclass
class HierModel:
    spec: HierarchySpec
    alpha: np.ndarray
    W: np.ndarray  # (nodes, d); scores use sqrt(alpha) * W
    loss: str = "normalized"
    multilabel: bool = False

    @property
    def U(self) -> np.ndarray:
        return np.sqrt(self.alpha)[:, None] * self.W

    def leaf_scores(self, X: np.ndarray) -> np.ndarray:
        Pa = self.spec.path_matrix(np.sqrt(self.alpha))
        return (np.atleast_2d(X) @ self.W.T) @ Pa.T

    def predict(self, X: np.ndarray) -> list:
        X = np.atleast_2d(X)
        if self.multilabel:
            return [tree_multilabel_argmax(self.spec, self.alpha, self.W, x) for x in X]
        leaves = np.array(self.spec.leaves)
        return [int(v) for v in leaves[np.argmax(self.leaf_scores(X), axis=1)]]


def leaf_loss_matrix(spec: HierarchySpec, alpha: np.ndarray, loss: str) -> np.ndarray:
    leaves = spec.leaves
    paths = [spec.ancestors(l) for l in leaves]
    D = np.zeros((len(leaves), len(leaves)))
    for i, a in enumerate(paths):
        for j, b in enumerate(paths):
            if i == j:
                continue
            if loss == "normalized":
                D[i, j] = normalized_error(alpha, a, b)
            elif loss == "hamming":
                D[i, j] = len(a ^ b)
            elif loss == "zero_one":
                D[i, j] = 1.0
            else:
                raise InvalidParams(f"unknown loss {loss!r}")
    return D


@dataclass
class HierConfig:
    reg_c: float = 1e-3
    learning_rate: float = 0.1
    epochs: int = 20
    seed: int = 0
    decay: float = 0.0


def _train_epochs(model: HierModel, X: np.ndarray, Y: Sequence, cfg: HierConfig, epochs: int, rng, step0: int = 0) -> int:
    spec = model.spec
    sq = np.sqrt(model.alpha)
    step = step0
    if not model.multilabel:
        leaves = spec.leaves
        pos = {l: i for i, l in enumerate(leaves)}
        Pa = spec.path_matrix(sq)
        D = leaf_loss_matrix(spec, model.alpha, model.loss)
        yi = np.array([pos[int(y)] for y in Y])
    for _ in range(epochs):
        for i in rng.permutation(len(X)):
            x = X[i]
            lr = cfg.learning_rate / (1.0 + cfg.decay * step)
            step += 1
            wx = model.W @ x
            model.W *= 1.0 - lr * cfg.reg_c
            if model.multilabel:
                t = frozenset(Y[i])
                yhat = tree_multilabel_argmax(spec, model.alpha, model.W, x, t)
                if yhat == t:
                    continue
                coef = np.zeros(spec.num_nodes)
                coef[list(yhat)] += 1.0
                coef[list(t)] -= 1.0
                coef *= sq
            else:
                s = Pa @ wx
                t = yi[i]
                aug = s - s[t] + D[:, t]
                j = int(np.argmax(aug))
                if j == t or aug[j] <= 0.0:
                    continue
                coef = Pa[j] - Pa[t]
            model.W -= lr * np.outer(coef, x)
    return step


def train_hier(
    X: np.ndarray,
    Y: Sequence,
    spec: HierarchySpec,
    alpha: Optional[np.ndarray],
    cfg: HierConfig,
    loss: str = "normalized",
    multilabel: bool = False,
) -> HierModel:
    """SGD on reg_c/2 sum |W_n|^2 + margin-rescaled hinge with the chosen loss."""
    if alpha is None:
        alpha = np.zeros(spec.num_nodes)
        alpha[list(spec.order)] = 1.0
    X = np.asarray(X, dtype=float)
    model = HierModel(spec, np.asarray(alpha, dtype=float), np.zeros((spec.num_nodes, X.shape[1])), loss, multilabel)
    rng = np.random.default_rng(cfg.seed)
    _train_epochs(model, X, Y, cfg, cfg.epochs, rng)
    return model


def flat_spec(num_leaves: int) -> HierarchySpec:
    return HierarchySpec(tuple(() for _ in range(num_leaves)))


def train_flat(X: np.ndarray, Y: Sequence, spec: HierarchySpec, cfg: HierConfig) -> "FlatModel":
    """Multi-class SVM over the leaves, ignoring the hierarchy."""
    leaves = spec.leaves
    pos = {l: i for i, l in enumerate(leaves)}
    fs = flat_spec(len(leaves))
    inner = train_hier(X, [pos[int(y)] for y in Y], fs, None, cfg, loss="zero_one")
    return FlatModel(inner, leaves)


@dataclass
class FlatModel:
    inner: HierModel
    leaves: tuple

    def predict(self, X: np.ndarray) -> list:
        return [self.leaves[i] for i in self.inner.predict(X)]


def shared_svm_train(
    X: np.ndarray,
    Y: Sequence,
    spec: HierarchySpec,
    cfg: HierConfig,
    alternation_period: float = 5,
    loss: str = "zero_one",
    alpha0: Optional[np.ndarray] = None,
    history: Optional[list] = None,
) -> tuple[HierModel, np.ndarray]:
    """Alternate SGD on V (with U_n = sqrt(alpha_n) V_n) and the exact alpha update.

    After each alpha update U is kept and V is rescaled to U / sqrt(alpha).
    ``history`` receives (objective before, objective after) for every update.
    """
    if not spec.is_tree:
        raise NotATree("shared SVM needs a tree")
    alpha = compute_alpha_rho(spec, 2.0) if alpha0 is None else np.asarray(alpha0, dtype=float)
    X = np.asarray(X, dtype=float)
    model = HierModel(spec, alpha.copy(), np.zeros((spec.num_nodes, X.shape[1])), loss)
    rng = np.random.default_rng(cfg.seed)
    done, step = 0, 0
    period = cfg.epochs if math.isinf(alternation_period) else int(alternation_period)
    if period <= 0:
        raise InvalidParams("alternation_period must be positive")
    while done < cfg.epochs:
        k = min(period, cfg.epochs - done)
        step = _train_epochs(model, X, Y, cfg, k, rng, step)
        done += k
        if done < cfg.epochs and not math.isinf(alternation_period):
            U = model.U
            norms = np.sum(U * U, axis=1)
            before = alpha_objective(norms, model.alpha)
            new_alpha = argmin_alpha_tree(norms, spec)
            after = alpha_objective(norms, new_alpha)
            if history is not None:
                history.append((before, after))
            with np.errstate(divide="ignore", invalid="ignore"):
                V = np.where(new_alpha[:, None] > 0.0, U / np.sqrt(new_alpha)[:, None], 0.0)
            model.alpha, model.W = new_alpha, V
    return model, model.alpha


# --- synthetic data -------------------------------------------------------------------


def unbalanced_hyperplane_data(n: int, d: int, depth: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray, HierarchySpec]:
    """Unit-norm Gaussian points split by nested random hyperplanes.

    Level k splits the current region into a leaf and a region split again,
    so the tree grows in one direction; both children at the last level are
    leaves.  Node 2k-2 is the leaf and 2k-1 the continuing branch of level k.
    """
    if n <= 0 or d <= 0 or depth <= 0:
        raise InvalidParams("n, d and depth must be positive")
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    planes = rng.normal(size=(depth, d))
    parents: list[tuple[int, ...]] = []
    for k in range(depth):
        par = () if k == 0 else (2 * k - 1,)
        parents += [par, par]
    spec = HierarchySpec(tuple(parents))
    y = np.empty(n, dtype=int)
    for i, x in enumerate(X):
        for k in range(depth):
            side = float(planes[k] @ x) > 0.0
            if side or k == depth - 1:
                y[i] = 2 * k if side else 2 * k + 1
                break
    return X, y, spec


def balanced_tree(depth: int, branching: int = 2) -> HierarchySpec:
    """Complete tree with ``depth`` levels of real nodes."""
    parents: list[tuple[int, ...]] = []
    level = []
    for _ in range(branching):
        level.append(len(parents))
        parents.append(())
    for _ in range(depth - 1):
        nxt = []
        for p in level:
            for _ in range(branching):
                nxt.append(len(parents))
                parents.append((p,))
        level = nxt
    return HierarchySpec(tuple(parents))


def balanced_data(n: int, d: int, depth: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray, HierarchySpec]:
    """Gaussian node weights; each point goes to the leaf with largest path score."""
    spec = balanced_tree(depth)
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(spec.num_nodes, d))
    X = rng.normal(size=(n, d))
    scores = (X @ W.T) @ spec.path_matrix().T
    leaves = np.array(spec.leaves)
    return X, leaves[np.argmax(scores, axis=1)], spec


def accuracy(pred: Sequence, gold: Sequence) -> float:
    return float(np.mean([p == g for p, g in zip(pred, gold)]))


def hier_objective(model: HierModel, X: np.ndarray, Y: Sequence, reg_c: float) -> float:
    """reg_c/2 sum |W_n|^2 + mean margin-rescaled hinge."""
    spec = model.spec
    reg = 0.5 * reg_c * float(np.sum(model.W * model.W))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sq = np.sqrt(model.alpha)
    total = 0.0
    if model.multilabel:
        for x, y in zip(X, Y):
            t = frozenset(y)
            yhat = tree_multilabel_argmax(spec, model.alpha, model.W, x, t)
            r = sq * (model.W @ x)
            loss = sum(1 for l in spec.leaves if (l in yhat) != (l in t))
            total += max(0.0, loss + sum(r[n] for n in yhat) - sum(r[n] for n in t))
    else:
        pos = {l: i for i, l in enumerate(spec.leaves)}
        D = leaf_loss_matrix(spec, model.alpha, model.loss)
        S = model.leaf_scores(X)
        for s, y in zip(S, Y):
            t = pos[int(y)]
            total += max(0.0, float(np.max(s - s[t] + D[:, t])))
    return reg + total / max(len(X), 1)


HIER_MAGIC = "structsvm-hier"


def save_hier_model(model: HierModel, path: str) -> None:
    spec = model.spec
    M, d = model.W.shape
    lines = [
        f"{HIER_MAGIC} v1 {model.loss} {int(model.multilabel)} {M},{d}",
        "edges " + " ".join(f"{p}-{c}" for p, c in spec.to_edges()),
        "alpha " + " ".join(format(float(a), ".17g") for a in model.alpha),
    ]
    lines += [" ".join(format(float(v), ".17g") for v in row) for row in model.W]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_hier_model(path: str) -> HierModel:
    with open(path, encoding="ascii") as fh:
        rows = [line.rstrip("\n") for line in fh]
    head = rows[0].split()
    if len(head) != 5 or head[0] != HIER_MAGIC or head[1] != "v1":
        raise InvalidParams(f"{path}: not a {HIER_MAGIC} v1 file")
    M, d = (int(v) for v in head[4].split(","))
    edges = [tuple(int(v) for v in e.split("-")) for e in rows[1].split()[1:]]
    parents: list[list[int]] = [[] for _ in range(M)]
    for p, c in edges:
        parents[c].append(p)
    spec = HierarchySpec(tuple(tuple(sorted(ps)) for ps in parents))
    alpha = np.array([float(v) for v in rows[2].split()[1:]])
    W = np.array([[float(v) for v in r.split()] for r in rows[3 : 3 + M]]).reshape(M, d)
    return HierModel(spec, alpha, W, head[2], bool(int(head[3])))
