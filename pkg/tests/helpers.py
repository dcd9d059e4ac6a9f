"""Independent reference computations shared by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull

from structsvm.losses import BiCriteriaLoss
from structsvm.oracle import ChainSpace, EnumerationSpace


def brute_chain_labels(space: ChainSpace):
    """All state sequences with their (h, g), by direct scoring."""
    out = []
    for y in itertools.product(range(space.num_states), repeat=space.length):
        out.append((y, space.h_offset + space.score(y) - space.score(space.truth), sum(a != b for a, b in zip(y, space.truth))))
    return out


def random_chain(rng: np.random.Generator, max_len: int = 8, max_states: int = 3, h_offset: float = 0.0) -> ChainSpace:
    T = int(rng.integers(1, max_len + 1))
    S = int(rng.integers(2, max_states + 1))
    truth = tuple(int(s) for s in rng.integers(0, S, size=T))
    return ChainSpace(rng.normal(size=(T, S)), rng.normal(size=(T - 1, S, S)) if T > 1 else rng.normal(size=(S, S)), truth, h_offset)


def random_points(rng: np.random.Generator, n: int, loss: BiCriteriaLoss) -> EnumerationSpace:
    h = rng.uniform(-1.0, 3.0, size=n)
    if loss.negative_g:
        g = rng.uniform(-10.0, -1.0, size=n)
        h = rng.uniform(0.0, 5.0, size=n)
    else:
        g = rng.uniform(0.0, 5.0, size=n)
    return EnumerationSpace(h, g)


def reachable_hull(h: np.ndarray, g: np.ndarray):
    """Vertices and edges of the hull facing the (h+, g+) quadrant, via scipy's Qhull.

    Returns (vertex indices, list of (i, j) edges).
    """
    pts = np.column_stack([h, g])
    hull = ConvexHull(pts)
    edges = []
    verts = set()
    for simplex, eq in zip(hull.simplices, hull.equations):
        nh, ng = eq[0], eq[1]
        if nh >= -1e-12 and ng >= -1e-12:
            i, j = int(simplex[0]), int(simplex[1])
            edges.append((i, j))
            verts.update((i, j))
    # the lam = 0 and lam = inf extremes are reachable even through degenerate faces
    verts.add(int(np.lexsort((g, h))[-1]))
    verts.add(int(np.lexsort((h, g))[-1]))
    return sorted(verts), edges


def brute_hull_max(loss: BiCriteriaLoss, h: np.ndarray, g: np.ndarray) -> float:
    """Maximum of psi over the reachable hull boundary (bounded Brent per edge)."""
    verts, edges = reachable_hull(h, g)
    best = max(float(loss.value(h[i], g[i])) for i in verts)
    for i, j in edges:
        f = lambda t: -float(loss.value((1 - t) * h[i] + t * h[j], (1 - t) * g[i] + t * g[j]))  # noqa: E731
        r = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(r.fun))
    return best


def tree_from_parent_draws(rng: np.random.Generator, nodes: int):
    from structsvm.hierarchy import HierarchySpec

    return HierarchySpec.from_edges([(int(rng.integers(0, c)), c) for c in range(1, nodes)], num_nodes=nodes)


def numeric_alpha_objective(b: np.ndarray, spec) -> float:
    """Independent optimum of sum b_n / alpha_n under path sums <= 1, via a conic solver."""
    cp = pytest.importorskip("cvxpy")
    active = [n for n in range(spec.num_nodes) if b[n] > 0]
    a = cp.Variable(len(active), pos=True)
    pos = {n: k for k, n in enumerate(active)}
    cons = []
    for leaf in spec.leaves:
        idx = [pos[n] for n in spec.ancestors(leaf) if n in pos]
        if idx:
            cons.append(cp.sum(a[idx]) <= 1)
    obj = cp.Minimize(cp.sum(cp.multiply(b[active], cp.inv_pos(a))))
    prob = cp.Problem(obj, cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return float(prob.value)


def approx_equal(a: float, b: float, tol: float) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
