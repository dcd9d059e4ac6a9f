"""Command-line entry point: ``structsvm <command> ...``.

Exit codes: 0 ok, 2 file or data problems, 3 bad configuration, 4 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import zlib
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import hierarchy as hz
from .errors import StructSVMError
from .geometry import LabelPoint, upper_hull
from .hull_search import convex_hull_search, integral_recovery
from .losses import BiCriteriaLoss
from .oracle import ChainSpace, EnumerationSpace, LabelSpace, three_label_hard_instance
from .slack_search import angular_search, angular_v1, binary_search_sgd, bisecting_search, phi
from .trainer import (
    ChainInstance,
    MultiLabelInstance,
    StructuredModel,
    TrainConfig,
    TrainStats,
    evaluate,
    load_model,
    objective,
    predict,
    save_model,
    sgd_train,
)

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_USAGE = 0, 2, 3, 4
REPORT_HEADER = ["method", "avg_queries", "avg_time_ms", "fail_max_rate"]
SUITES = ("monotonicity", "k-bound", "angular-subopt", "hull-calls", "alpha-optimality", "invariance")


class DataError(Exception):
    """Malformed input file."""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


# --- file formats ---------------------------------------------------------------------


def token_features(token: str, dim: int) -> np.ndarray:
    v = np.zeros(dim)
    v[zlib.crc32(token.encode("utf-8")) % dim] = 1.0
    return v


def read_sequences(path: str) -> tuple[list[ChainInstance], list[list[str]], int]:
    """Blocks of ``token<TAB>state`` separated by blank lines, after a ``#dim N`` line."""
    dim: Optional[int] = None
    blocks: list[list[tuple[str, int]]] = [[]]
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "dim":
                    dim = int(parts[1])
                continue
            if not line.strip():
                if blocks[-1]:
                    blocks.append([])
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'token<TAB>state'")
            try:
                blocks[-1].append((parts[0], int(parts[1])))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: state must be an integer") from exc
    blocks = [b for b in blocks if b]
    if dim is None or dim <= 0:
        raise DataError(f"{path}: missing '#dim N' line")
    if not blocks:
        raise DataError(f"{path}: no sequences")
    data = [ChainInstance(np.stack([token_features(t, dim) for t, _ in b]), tuple(s for _, s in b)) for b in blocks]
    return data, [[t for t, _ in b] for b in blocks], dim


def write_sequences(path: str, tokens: Sequence[Sequence[str]], labels: Sequence[Sequence[int]], dim: int) -> None:
    out = [f"#dim {dim}"]
    for toks, ys in zip(tokens, labels):
        out += [f"{t}\t{s}" for t, s in zip(toks, ys)]
        out.append("")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out))


def read_multilabel(path: str, dim: Optional[int] = None) -> tuple[list[frozenset], list[dict[int, float]]]:
    """Lines ``l1,l2 idx:val idx:val``; a line may start with features when it has no labels."""
    labels, feats = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            lab: frozenset = frozenset()
            if ":" not in parts[0]:
                try:
                    lab = frozenset(int(v) for v in parts[0].split(",") if v)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad label list") from exc
                parts = parts[1:]
            f: dict[int, float] = {}
            for p in parts:
                try:
                    k, v = p.split(":")
                    f[int(k)] = float(v)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad feature {p!r}") from exc
            labels.append(lab)
            feats.append(f)
    if not labels:
        raise DataError(f"{path}: no instances")
    return labels, feats


def dense(feats: list[dict[int, float]], dim: Optional[int] = None) -> np.ndarray:
    d = dim if dim is not None else 1 + max((max(f) for f in feats if f), default=0)
    X = np.zeros((len(feats), d))
    for i, f in enumerate(feats):
        for k, v in f.items():
            if k >= d:
                raise DataError(f"feature index {k} exceeds dimension {d}")
            X[i, k] = v
    return X


def write_multilabel(path: str, labels: Sequence[Iterable], X: np.ndarray) -> None:
    out = []
    for lab, x in zip(labels, X):
        feats = " ".join(f"{k}:{format(float(v), '.10g')}" for k, v in enumerate(x) if v != 0.0)
        out.append((",".join(str(l) for l in sorted(lab)) + " " + feats).strip())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


# --- commands ---------------------------------------------------------------------------


def _loss_from_args(args) -> BiCriteriaLoss:
    return BiCriteriaLoss.from_name(args.loss, alpha=args.alpha, beta=args.beta, scale=args.scale)


def _emit(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def _hier_data(args):
    spec = hz.load_hierarchy(args.hierarchy)
    labels, feats = read_multilabel(args.data)
    X = dense(feats, args.dim)
    for lab in labels:
        hz.validate_label(spec, lab)
    leafsets = [[l for l in spec.leaves if l in lab] for lab in labels]
    single = all(len(ls) == 1 for ls in leafsets)
    Y = [ls[0] for ls in leafsets] if single else labels
    return spec, X, Y, labels, single


def _hier_predict_sets(model: hz.HierModel, X: np.ndarray) -> list[frozenset]:
    pred = model.predict(X)
    if model.multilabel:
        return list(pred)
    return [model.spec.ancestors(p) for p in pred]


def cmd_train(args) -> int:
    if args.kind == "hier":
        if not args.hierarchy:
            raise UsageError("--kind hier needs --hierarchy")
        spec, X, Y, labels, single = _hier_data(args)
        cfg = hz.HierConfig(reg_c=args.c, learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
        if args.model == "ssvm":
            model, _ = hz.shared_svm_train(X, Y, spec, cfg, args.period, loss="normalized")
        elif args.model == "hsvm":
            model = hz.train_hier(X, Y, spec, None, cfg, loss="hamming" if single else "normalized", multilabel=not single)
        else:
            alpha = hz.compute_alpha_rho(spec, args.rho)
            model = hz.train_hier(X, Y, spec, alpha, cfg, loss="normalized", multilabel=not single)
        hz.save_hier_model(model, args.out)
        pred = _hier_predict_sets(model, X)
        m = evaluate(pred, labels)
        _emit({"objective": hz.hier_objective(model, X, Y, args.c), "train_accuracy": m.accuracy,
               "micro_f1": m.micro_f1, "model": args.out})
        return EXIT_OK
    loss = _loss_from_args(args)
    cfg = TrainConfig(reg_c=args.c, learning_rate=args.lr, epochs=args.epochs, inference=args.infer,
                      loss=loss, seed=args.seed)
    if args.kind == "chain":
        data, _, _ = read_sequences(args.data)
    else:
        labels, feats = read_multilabel(args.data)
        X = dense(feats, args.dim)
        data = [MultiLabelInstance(x, lab) for x, lab in zip(X, labels)]
    stats = TrainStats()
    model = sgd_train(data, cfg, stats=stats)
    save_model(model, args.out)
    preds = [predict(model, inst) for inst in data]
    m = evaluate(preds, [inst.y for inst in data])
    _emit({"objective": objective(model, data, cfg), "train_accuracy": m.accuracy, "hamming": m.hamming,
           "micro_f1": m.micro_f1, "macro_f1": m.macro_f1, "mean_oracle_calls": stats.mean_calls, "model": args.out})
    return EXIT_OK


def _predict_any(args):
    """(predictions, gold) for any model file."""
    with open(args.model, encoding="ascii") as fh:
        head = fh.readline()
    if head.startswith(hz.HIER_MAGIC):
        model = hz.load_hier_model(args.model)
        labels, feats = read_multilabel(args.data)
        X = dense(feats, model.W.shape[1])
        return _hier_predict_sets(model, X), labels, "sets"
    model = load_model(args.model)
    if model.kind == "chain":
        data, _, _ = read_sequences(args.data)
        return [predict(model, inst) for inst in data], [inst.y for inst in data], "seq"
    labels, feats = read_multilabel(args.data)
    X = dense(feats, model.feature_dim)
    data = [MultiLabelInstance(x, lab) for x, lab in zip(X, labels)]
    return [predict(model, inst) for inst in data], labels, "sets"


def cmd_predict(args) -> int:
    preds, _, kind = _predict_any(args)
    lines = [" ".join(str(s) for s in p) if kind == "seq" else ",".join(str(l) for l in sorted(p)) for p in preds]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    preds, gold, _ = _predict_any(args)
    m = evaluate(preds, gold)
    _emit({"accuracy": m.accuracy, "hamming": m.hamming, "micro_f1": m.micro_f1, "macro_f1": m.macro_f1, "n": len(gold)})
    return EXIT_OK


# --- oracle comparison -------------------------------------------------------------------


class CountingSpace(LabelSpace):
    """Wraps a space and counts oracle calls of every kind."""

    def __init__(self, inner: LabelSpace):
        self.inner = inner
        self.calls = 0

    def oracle(self, lam):
        self.calls += 1
        return self.inner.oracle(lam)

    def constrained(self, lam, window):
        self.calls += 1
        return self.inner.constrained(lam, window)

    def banlist(self, lam, banned):
        self.calls += 1
        return self.inner.banlist(lam, banned)

    def point_of(self, label_id):
        return self.inner.point_of(label_id)


def random_instance(rng: np.random.Generator, points: int) -> EnumerationSpace:
    h = rng.uniform(0.01, 10.0, size=points)
    g = rng.uniform(0.01, 10.0, size=points)
    return EnumerationSpace(h, g)


def integer_chain_instance(rng: np.random.Generator, length: int, states: int = 2) -> EnumerationSpace:
    """Enumerated chain with h = 1 + margin; g is the integer Hamming loss."""
    truth = tuple(int(s) for s in rng.integers(0, states, size=length))
    space = ChainSpace(rng.normal(size=(length, states)), rng.normal(size=(states, states)), truth, 1.0)
    return space.enumerate()


def _hull_phi(space: EnumerationSpace) -> tuple[Optional[LabelPoint], int]:
    """Product maximiser via hull search on the space shifted so that slack loss equals h*g."""
    loss = BiCriteriaLoss.slack()
    counted = CountingSpace(space.shifted(-1.0))
    res = convex_hull_search(counted, loss)
    calls = counted.calls
    best = integral_recovery(res.fractional, counted, loss)
    return space.point_of(best.label_id), calls


METHODS: dict[str, Callable[[EnumerationSpace], tuple[Optional[LabelPoint], int]]] = {}


def _register():
    def binary(space):
        r = binary_search_sgd(space, 1e-3, 1e3, 1e-6)
        return r.best, r.oracle_calls

    def bisecting(space):
        r = bisecting_search(space, 1.0, 100)
        return r.best, r.oracle_calls

    def angular(space):
        r = angular_search(space, 1.0)
        return r.best, r.oracle_calls

    def brute(space):
        pts = space.points()
        return max(pts, key=phi), len(pts)

    METHODS.update(binary=binary, bisecting=bisecting, angular=angular, hull=_hull_phi, brute=brute)


_register()


def compare_oracles(stream: str, instances: int, points: int, length: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    spaces: list[EnumerationSpace] = []
    for _ in range(instances):
        if stream == "random":
            spaces.append(random_instance(rng, points))
        elif stream == "hard":
            H, G = rng.uniform(1.0, 10.0, size=2)
            spaces.append(three_label_hard_instance(H, G, 0.01 * min(H, G)))
        elif stream == "chain":
            spaces.append(integer_chain_instance(rng, length))
        else:
            raise UsageError(f"unknown stream {stream!r}")
    stats = {m: [0.0, 0.0, 0] for m in METHODS}
    for space in spaces:
        vals = {}
        for name, fn in METHODS.items():
            t0 = time.perf_counter()
            best, calls = fn(space)
            stats[name][1] += (time.perf_counter() - t0) * 1e3
            stats[name][0] += calls
            vals[name] = phi(best)
        top = max(vals.values())
        for name, v in vals.items():
            if v < top - 1e-9:
                stats[name][2] += 1
    n = len(spaces)
    return [
        {"method": m, "avg_queries": q / n, "avg_time_ms": t / n, "fail_max_rate": f / n}
        for m, (q, t, f) in stats.items()
    ]


def write_report(rows: list[dict], path: Optional[str]) -> None:
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=REPORT_HEADER, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (r[k] if k == "method" else repr(float(r[k]))) for k in REPORT_HEADER})
    finally:
        if path:
            fh.close()


def read_report(path: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != REPORT_HEADER:
            raise DataError(f"{path}: unexpected header {rd.fieldnames}")
        return [{k: (r[k] if k == "method" else float(r[k])) for k in REPORT_HEADER} for r in rd]


def cmd_compare_oracles(args) -> int:
    if args.instances <= 0 or args.points <= 0:
        raise ValueError("instances and points must be positive")
    rows = compare_oracles(args.stream, args.instances, args.points, args.length, args.seed)
    write_report(rows, args.out)
    return EXIT_OK


# --- theory suites -----------------------------------------------------------------------------


def _random_chain_space(rng, max_len: int = 6, max_states: int = 3) -> ChainSpace:
    T = int(rng.integers(1, max_len + 1))
    S = int(rng.integers(2, max_states + 1))
    truth = tuple(int(s) for s in rng.integers(0, S, size=T))
    return ChainSpace(rng.normal(size=(T, S)), rng.normal(size=(S, S)), truth, 1.0)


LAM_GRID = np.logspace(-2, 2, 20)


def suite_monotonicity(seed: int, instances: int = 100, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(instances):
        space = _random_chain_space(rng)
        prev = None
        for lam in LAM_GRID:
            p = space.oracle(lam).point
            if prev is not None and (p.g < prev.g - 1e-9 or p.h > prev.h + 1e-9):
                bad += 1
            prev = p
    return bad == 0, f"{bad} monotonicity violations over {instances} chains x {len(LAM_GRID)} lam"


def suite_k_bound(seed: int, instances: int = 100, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(instances):
        space = _random_chain_space(rng)
        star = max(phi(p) for p in space.enumerate().points())
        for lam in LAM_GRID:
            K = space.oracle(lam).oracle_value
            if K * K / (4.0 * lam) < star - 1e-9 * (1.0 + star):
                bad += 1
    return bad == 0, f"{bad} certificate violations"


def angular_bound_violations(space: EnumerationSpace, iters: int, lam0: float = 1.0) -> int:
    """Count t with Phi* / Phi(best after t calls) > v1^(4/(t+1))."""
    star = max(phi(p) for p in space.points())
    res = angular_search(space, lam0, max_iters=iters)
    if not res.trace or res.trace[0].label is None:
        return 0
    v1 = angular_v1(res.trace[0].label, res.trace[0].lam)
    bad = 0
    for t, step in enumerate(res.trace, 1):
        cur = step.best_value
        if cur <= 0.0 or star / cur > v1 ** (4.0 / (t + 1)) * (1.0 + 1e-9):
            bad += 1
    return bad


def suite_angular_subopt(seed: int, iters: int = 63, instances: int = 30, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = sum(angular_bound_violations(random_instance(rng, 100), iters) for _ in range(instances))
    return bad == 0, f"{bad} suboptimality-bound violations over {instances} instances, {iters} iterations"


def suite_hull_calls(seed: int, instances: int = 50, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    loss = BiCriteriaLoss.slack()
    for _ in range(instances):
        space = random_instance(rng, 30)
        verts = upper_hull(space.points())
        if convex_hull_search(space, loss).oracle_calls > len(verts) + 1:
            bad += 1
    for m in (4, 6, 8):
        for _ in range(instances // 5 + 1):
            space = integer_chain_instance(rng, m)
            if convex_hull_search(space.shifted(-1.0), loss).oracle_calls > m + 2:
                bad += 1
    return bad == 0, f"{bad} call-bound violations"


def random_tree(rng: np.random.Generator, nodes: int) -> hz.HierarchySpec:
    edges = [(int(rng.integers(0, c)), c) for c in range(1, nodes)]
    return hz.HierarchySpec.from_edges(edges, num_nodes=nodes) if edges else hz.HierarchySpec(((),))


def random_feasible_alpha(rng: np.random.Generator, spec: hz.HierarchySpec) -> np.ndarray:
    """Random split of each node's budget between itself and its subtree."""
    alpha = np.zeros(spec.num_nodes)
    budget = np.zeros(spec.num_nodes)
    share = rng.uniform(0.0, 1.0, size=spec.num_nodes)
    for n in spec.order:
        budget[n] = 1.0 if not spec.parents[n] else budget[spec.parents[n][0]] * (1.0 - share[spec.parents[n][0]])
        alpha[n] = budget[n] * (share[n] if spec.children[n] else 1.0)
    return alpha


def suite_alpha_optimality(seed: int, instances: int = 20, draws: int = 1000, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(instances):
        spec = random_tree(rng, int(rng.integers(2, 30)))
        b = rng.uniform(0.0, 2.0, size=spec.num_nodes)
        best = hz.alpha_objective(b, hz.argmin_alpha_tree(b, spec))
        for _ in range(draws):
            if hz.alpha_objective(b, random_feasible_alpha(rng, spec)) < best - 1e-9 * best:
                bad += 1
    return bad == 0, f"{bad} random feasible weights beat the closed form"


def duplication_agreement(seed: int, n: int = 600, d: int = 20, depth: int = 4, node: int = 1, rho: float = 1.01) -> float:
    X, y, spec = hz.unbalanced_hyperplane_data(n, d, depth, seed)
    cut = (2 * n) // 3
    dup = hz.duplicate_node(spec, node)
    cfg = hz.HierConfig(reg_c=1e-3, epochs=10, seed=seed)
    m1 = hz.train_hier(X[:cut], y[:cut], spec, hz.compute_alpha_rho(spec, rho), cfg)
    m2 = hz.train_hier(X[:cut], y[:cut], dup, hz.compute_alpha_rho(dup, rho), cfg)
    return float(np.mean(np.array(m1.predict(X[cut:])) == np.array(m2.predict(X[cut:]))))


def suite_invariance(seed: int, instances: int = 3, **_) -> tuple[bool, str]:
    agree = [duplication_agreement(seed + s) for s in range(instances)]
    return min(agree) >= 0.98, f"min agreement {min(agree):.4f}"


SUITE_FUNCS = {
    "monotonicity": suite_monotonicity,
    "k-bound": suite_k_bound,
    "angular-subopt": suite_angular_subopt,
    "hull-calls": suite_hull_calls,
    "alpha-optimality": suite_alpha_optimality,
    "invariance": suite_invariance,
}


def cmd_theory_check(args) -> int:
    names = args.suite or list(SUITES)
    for s in names:
        if s not in SUITE_FUNCS:
            print(f"unknown suite {s!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
            return EXIT_USAGE
    ok_all = True
    for s in names:
        ok, msg = SUITE_FUNCS[s](seed=args.seed, iters=args.iters)
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'} {s}: {msg}")
    return EXIT_OK if ok_all else 1


# --- generators ----------------------------------------------------------------------------------


def gen_chains(n: int, length: int, states: int, dim: int, vocab: int, seed: int, margin: float = 0.5):
    """Token sequences labelled by a planted chain model over hashed features."""
    rng = np.random.default_rng(seed)
    unary = rng.normal(size=(states, dim))
    trans = rng.normal(size=(states, states))
    words = [f"w{k}" for k in range(vocab)]
    toks, labs = [], []
    while len(toks) < n:
        seq = [words[int(i)] for i in rng.integers(0, vocab, size=length)]
        X = np.stack([token_features(t, dim) for t in seq])
        space = ChainSpace(X @ unary.T, trans, (0,) * length)
        best, second = space.kbest(0.0, 2)
        if space.score(best) - space.score(second) >= margin:
            toks.append(seq)
            labs.append(best)
    return toks, labs


def gen_multilabel(n: int, d: int, labels: int, seed: int):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(labels, d))
    X = np.round(rng.normal(size=(n, d)), 6)
    S = X @ W.T
    # every instance keeps at least its top-scoring label
    return [frozenset(int(l) for l in np.flatnonzero((s > 0.0) | (s == s.max()))) for s in S], X


def cmd_gen(args) -> int:
    for name in ("n", "d"):
        if getattr(args, name) <= 0:
            raise ValueError(f"--{name} must be positive")
    prefix = args.out
    os.makedirs(os.path.dirname(os.path.abspath(prefix)), exist_ok=True)
    if args.hier:
        if args.depth <= 0:
            raise ValueError("--depth must be positive")
        if args.hier == "unbalanced":
            X, y, spec = hz.unbalanced_hyperplane_data(args.n, args.d, args.depth, args.seed)
        else:
            X, y, spec = hz.balanced_data(args.n, args.d, args.depth, args.seed)
        X = np.round(X, 10)
        hz.save_hierarchy(spec, prefix + ".hier")
        write_multilabel(prefix + ".data", [spec.ancestors(int(l)) for l in y], X)
        files = [prefix + ".hier", prefix + ".data"]
    elif args.kind == "chain":
        toks, labs = gen_chains(args.n, args.length, args.states, args.d, args.vocab, args.seed)
        write_sequences(prefix + ".seq", toks, labs, args.d)
        files = [prefix + ".seq"]
    else:
        labs, X = gen_multilabel(args.n, args.d, args.labels, args.seed)
        write_multilabel(prefix + ".ml", labs, X)
        files = [prefix + ".ml"]
    _emit({"files": files, "n": args.n})
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="structsvm", description="Structured SVMs with bi-criteria losses.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", help="train a model")
    common(t)
    t.add_argument("--kind", choices=["chain", "multilabel", "hier"], default="chain")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--loss", default="margin")
    t.add_argument("--alpha", type=float)
    t.add_argument("--beta", type=float)
    t.add_argument("--scale", type=float)
    t.add_argument("--infer", choices=["margin", "binary", "bisecting", "angular", "hull"], default="margin")
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--c", type=float, default=1e-3)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--dim", type=int)
    t.add_argument("--hierarchy")
    t.add_argument("--model", choices=["nhsvm", "hsvm", "ssvm"], default="nhsvm")
    t.add_argument("--rho", type=float, default=2.0)
    t.add_argument("--period", type=int, default=5)
    t.set_defaults(func=cmd_train)

    for name, fn in (("predict", cmd_predict), ("eval", cmd_eval)):
        s = sub.add_parser(name, help=f"{name} with a saved model")
        common(s)
        s.add_argument("--model", required=True)
        s.add_argument("--data", required=True)
        if name == "predict":
            s.add_argument("--out")
        s.set_defaults(func=fn)

    c = sub.add_parser("compare-oracles", help="compare product-objective searches")
    common(c)
    c.add_argument("--stream", choices=["random", "hard", "chain"], default="random")
    c.add_argument("--instances", type=int, default=200)
    c.add_argument("--points", type=int, default=50)
    c.add_argument("--length", type=int, default=6)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare_oracles)

    th = sub.add_parser("theory-check", help="run property suites")
    common(th)
    th.add_argument("--suite", action="append")
    th.add_argument("--iters", type=int, default=63)
    th.set_defaults(func=cmd_theory_check)

    g = sub.add_parser("gen", help="write synthetic datasets")
    common(g)
    g.add_argument("--hier", choices=["unbalanced", "balanced"])
    g.add_argument("--kind", choices=["chain", "multilabel"], default="chain")
    g.add_argument("--depth", type=int, default=4)
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--d", type=int, default=20)
    g.add_argument("--length", type=int, default=6)
    g.add_argument("--states", type=int, default=3)
    g.add_argument("--vocab", type=int, default=50)
    g.add_argument("--labels", type=int, default=6)
    g.add_argument("--out", default="synthetic")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DataError) as exc:
        where = getattr(exc, "filename", None)
        print(f"error: {exc}" if where is None or str(where) in str(exc) else f"error: {where}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (StructSVMError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
