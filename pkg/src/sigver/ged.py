"""Graph dissimilarities for keypoint graphs.

Three routes to the same edit model (node substitution costs the Euclidean
label distance, node insertion/deletion a constant, edge substitution is
free, edge insertion/deletion a constant):

  * :func:`hed` - Hausdorff-style lower bound, quadratic time
  * :func:`bp` - assignment-based upper bound (optimal matching of a
    local cost matrix, then the true cost of the induced edit path)
  * :func:`exact_ged_small` - branch-and-bound over all node maps, only
    for tiny graphs; serves as the reference the bounds are checked against

For any pair, ``hed <= exact <= bp``. Distances are normalized by the cost
of deleting one graph entirely and inserting the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, ParameterError
from .graph import KeypointGraph

_BIG = 1e15


@dataclass(frozen=True)
class CostParams:
    """Constant costs: ``node_cost`` per node edit, ``edge_cost`` per edge edit."""

    node_cost: float = 12.5
    edge_cost: float = 200.0

    def __post_init__(self):
        if self.node_cost < 0 or self.edge_cost < 0:
            raise ParameterError("edit costs must be nonnegative")


@dataclass(frozen=True)
class GedResult:
    raw_cost: float
    normalizer: float
    normalized: float
    method: str


def node_substitution_cost(u_label, v_label, params: CostParams | None = None) -> float:
    """Euclidean distance between two node labels (params carried for symmetry)."""
    dx = float(u_label[0]) - float(v_label[0])
    dy = float(u_label[1]) - float(v_label[1])
    return math.hypot(dx, dy)


def ged_max(g1: KeypointGraph, g2: KeypointGraph, params: CostParams) -> float:
    """Cost of deleting all of g1 and inserting all of g2."""
    return (g1.node_count + g2.node_count) * params.node_cost + (
        g1.edge_count + g2.edge_count
    ) * params.edge_cost


def _normalized(raw: float, normalizer: float, snap: bool) -> float:
    if normalizer == 0.0:
        return 0.0
    q = raw / normalizer
    # guard float roundoff at the upper bound; anything further is a bug
    if snap and 1.0 < q <= 1.0 + 1e-9:
        return 1.0
    return q


def _result(raw: float, g1, g2, params, method: str, snap: bool) -> GedResult:
    normalizer = ged_max(g1, g2, params)
    return GedResult(float(raw), float(normalizer), _normalized(raw, normalizer, snap), method)


def hed(g1: KeypointGraph, g2: KeypointGraph, params: CostParams) -> GedResult:
    """Hausdorff lower bound on the edit cost.

    Each node independently picks its cheapest fate. Removal or insertion
    costs the node edit plus half an edge edit per incident edge; matching
    u to v costs half of (label distance + half edge cost per degree
    difference), halved because both directions count the pair.
    """
    n1, n2 = g1.node_count, g2.node_count
    half_edge = params.edge_cost / 2.0
    if n1 == 0 and n2 == 0:
        return _result(0.0, g1, g2, params, "HED", snap=True)
    deg1 = g1.degrees().astype(np.float64)
    deg2 = g2.degrees().astype(np.float64)
    del1 = params.node_cost + deg1 * half_edge
    ins2 = params.node_cost + deg2 * half_edge
    if n1 == 0:
        raw = float(ins2.sum())
    elif n2 == 0:
        raw = float(del1.sum())
    else:
        diff = g1.labels[:, None, :] - g2.labels[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        sub = (dist + np.abs(deg1[:, None] - deg2[None, :]) * half_edge) / 2.0
        raw = float(np.minimum(sub.min(axis=1), del1).sum()) + float(
            np.minimum(sub.min(axis=0), ins2).sum()
        )
    return _result(raw, g1, g2, params, "HED", snap=True)


def induced_edit_cost(
    g1: KeypointGraph, g2: KeypointGraph, mapping: np.ndarray, params: CostParams
) -> float:
    """True edit cost of a node map (``mapping[i] = j`` or -1 for deletion).

    Edges follow the map: a g1 edge whose endpoint images form a g2 edge is
    substituted for free, every other edge on either side is deleted or
    inserted at the constant edge cost.
    """
    cost = 0.0
    used = set()
    for i in range(g1.node_count):
        j = int(mapping[i])
        if j < 0:
            cost += params.node_cost
        else:
            used.add(j)
            cost += node_substitution_cost(g1.labels[i], g2.labels[j])
    cost += (g2.node_count - len(used)) * params.node_cost
    e2 = set(g2.edges)
    preserved = 0
    for u, v in g1.edges:
        a, b = int(mapping[u]), int(mapping[v])
        if a >= 0 and b >= 0 and ((a, b) if a < b else (b, a)) in e2:
            preserved += 1
    cost += params.edge_cost * (
        (g1.edge_count - preserved) + (g2.edge_count - preserved)
    )
    return cost


def bp(g1: KeypointGraph, g2: KeypointGraph, params: CostParams) -> GedResult:
    """Assignment-based upper bound on the edit cost.

    Builds the (n+m) x (n+m) local cost matrix (substitution block with the
    degree-difference edge term, removal and insertion diagonals), solves
    the assignment optimally, and prices the induced edit path at its true
    cost, which can only overestimate the optimum.
    """
    n, m = g1.node_count, g2.node_count
    half_edge = params.edge_cost / 2.0
    deg1 = g1.degrees().astype(np.float64)
    deg2 = g2.degrees().astype(np.float64)
    size = n + m
    if size == 0:
        return _result(0.0, g1, g2, params, "BP", snap=False)
    c = np.full((size, size), _BIG, dtype=np.float64)
    if n and m:
        diff = g1.labels[:, None, :] - g2.labels[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        c[:n, :m] = dist + np.abs(deg1[:, None] - deg2[None, :]) * half_edge
    for i in range(n):
        c[i, m + i] = params.node_cost + deg1[i] * half_edge
    for j in range(m):
        c[n + j, j] = params.node_cost + deg2[j] * half_edge
    c[n:, m:] = 0.0
    rows, cols = linear_sum_assignment(c)
    mapping = np.full(n, -1, dtype=np.int64)
    for r, col in zip(rows, cols):
        if r < n and col < m:
            mapping[r] = col
    raw = induced_edit_cost(g1, g2, mapping, params)
    return _result(raw, g1, g2, params, "BP", snap=False)


_EXACT_LIMIT = 12


def exact_ged_small(g1: KeypointGraph, g2: KeypointGraph, params: CostParams) -> GedResult:
    """Optimal edit cost by branch-and-bound over node maps.

    Refuses pairs with more than 12 nodes in total; the search enumerates
    every injective partial map, pruning with an admissible per-node bound,
    and prices edges incrementally as each map entry is fixed.
    """
    n, m = g1.node_count, g2.node_count
    if n + m > _EXACT_LIMIT:
        raise ParameterError(
            f"exact search limited to {_EXACT_LIMIT} total nodes, got {n + m}"
        )
    sub = np.zeros((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            sub[i, j] = node_substitution_cost(g1.labels[i], g2.labels[j])
    nbr1 = [0] * n
    for u, v in g1.edges:
        nbr1[u] |= 1 << v
        nbr1[v] |= 1 << u
    nbr2 = [0] * m
    for u, v in g2.edges:
        nbr2[u] |= 1 << v
        nbr2[v] |= 1 << u
    node_cost = params.node_cost
    edge_cost = params.edge_cost
    m2 = g2.edge_count

    # admissible lower bound on what each still-unmapped g1 node must pay
    per_node_floor = [
        min(node_cost, float(sub[i].min())) if m else node_cost for i in range(n)
    ]
    suffix_floor = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_floor[i] = suffix_floor[i + 1] + per_node_floor[i]

    best = float(ged_max(g1, g2, params))
    mapping = [-1] * n
    best_found = [best]

    def leaf_cost(partial: float, used_mask: int, covered: int) -> float:
        unused = m - bin(used_mask).count("1")
        return partial + unused * node_cost + (m2 - covered) * edge_cost

    def recurse(i: int, partial: float, used_mask: int, covered: int) -> None:
        remaining_ins = m - bin(used_mask).count("1") - (n - i)
        bound = partial + suffix_floor[i]
        if remaining_ins > 0:
            bound += remaining_ins * node_cost
        if bound >= best_found[0]:
            return
        if i == n:
            total = leaf_cost(partial, used_mask, covered)
            if total < best_found[0]:
                best_found[0] = total
            return
        my_e1 = nbr1[i]
        # try every unused target, then deletion
        for j in range(m):
            if used_mask >> j & 1:
                continue
            delta = float(sub[i, j])
            cov = 0
            my_e2 = nbr2[j]
            for k in range(i):
                e1 = my_e1 >> k & 1
                fk = mapping[k]
                e2 = 1 if (fk >= 0 and (my_e2 >> fk & 1)) else 0
                if e1 != e2:
                    delta += edge_cost
                if e2:
                    cov += 1
            mapping[i] = j
            recurse(i + 1, partial + delta, used_mask | (1 << j), covered + cov)
        delta = node_cost
        for k in range(i):
            if my_e1 >> k & 1:
                delta += edge_cost
        mapping[i] = -1
        recurse(i + 1, partial + delta, used_mask, covered)
        mapping[i] = -2

    recurse(0, 0.0, 0, 0)
    return _result(best_found[0], g1, g2, params, "EXACT", snap=True)


_METHODS = {"hed": hed, "bp": bp, "exact": exact_ged_small}


def d_ged(
    g_ref: KeypointGraph,
    g_test: KeypointGraph,
    params: CostParams,
    method: str = "hed",
) -> float:
    """Normalized graph distance in [0, 1]-ish; exactly 1 against empty.

    Empty-vs-empty is undefined (no edit mass to compare) and raises.
    """
    if method not in _METHODS:
        raise ParameterError(f"unknown method '{method}', want one of {sorted(_METHODS)}")
    if g_ref.is_empty and g_test.is_empty:
        raise DomainError("distance between two empty graphs is undefined")
    if params.node_cost <= 0:
        raise ParameterError("node_cost must be positive to normalize")
    return _METHODS[method](g_ref, g_test, params).normalized
