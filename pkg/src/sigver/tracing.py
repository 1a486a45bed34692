"""Deterministic walks over raster skeletons.

The raw 8-neighborhood of a thinned skeleton still contains redundant
diagonal links (a diagonal step whose two axial corner pixels carry the
same connection). Dropping those leaves every non-branching pixel with at
most two usable neighbors, so walks along strokes are unambiguous. The
raw neighbor counts are kept for classifying pixels: an endpoint has
exactly one ink 8-neighbor, a junction has three or more.

Everything here is ordered: pixels by raster position (y, then x),
directions clockwise starting north. Given the same mask, every function
returns the same result on every run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# clockwise from north, (dx, dy) with y growing downward
NEIGHBOR_STEPS = (
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
)

SQRT2 = math.sqrt(2.0)


def neighbor_counts(ink: np.ndarray) -> np.ndarray:
    """Number of ink 8-neighbors per pixel, same shape as ``ink``."""
    p = np.pad(ink, 1, constant_values=False)
    count = np.zeros(ink.shape, dtype=np.uint8)
    for dx, dy in NEIGHBOR_STEPS:
        count += p[1 + dy : p.shape[0] - 1 + dy, 1 + dx : p.shape[1] - 1 + dx]
    return count


def raster_order(pixels) -> list[tuple[int, int]]:
    """Sort (x, y) pixels by row, then column."""
    return sorted(pixels, key=lambda p: (p[1], p[0]))


def pruned_neighbors(ink: np.ndarray) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
    """Traceable adjacency: all ink pixels to their usable neighbors.

    A diagonal link is dropped when either axial corner pixel between the
    two endpoints is ink; the axial route carries the connection, so
    connectivity is preserved. Neighbor tuples keep the clockwise order.
    """
    h, w = ink.shape
    adj: dict[tuple[int, int], tuple[tuple[int, int], ...]] = {}
    ys, xs = np.nonzero(ink)
    for y, x in zip(ys.tolist(), xs.tolist()):
        out = []
        for dx, dy in NEIGHBOR_STEPS:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or not ink[ny, nx]:
                continue
            if dx != 0 and dy != 0:
                if ink[y, nx] or ink[ny, x]:
                    continue
            out.append((nx, ny))
        adj[(x, y)] = tuple(out)
    return adj


def endpoints_and_junctions(ink: np.ndarray) -> tuple[list, list]:
    """Raster-ordered endpoint pixels (1 raw neighbor) and junctions (>= 3)."""
    counts = neighbor_counts(ink)
    ys, xs = np.nonzero(ink & (counts == 1))
    endpoints = [(int(x), int(y)) for y, x in zip(ys, xs)]
    ys, xs = np.nonzero(ink & (counts >= 3))
    junctions = [(int(x), int(y)) for y, x in zip(ys, xs)]
    return endpoints, junctions


def components(ink: np.ndarray) -> list[list[tuple[int, int]]]:
    """8-connected components as raster-ordered pixel lists, in raster order."""
    h, w = ink.shape
    seen = np.zeros_like(ink, dtype=bool)
    comps = []
    ys, xs = np.nonzero(ink)
    for y0, x0 in zip(ys.tolist(), xs.tolist()):
        if seen[y0, x0]:
            continue
        stack = [(x0, y0)]
        seen[y0, x0] = True
        comp = []
        while stack:
            x, y = stack.pop()
            comp.append((x, y))
            for dx, dy in NEIGHBOR_STEPS:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and ink[ny, nx] and not seen[ny, nx]:
                    seen[ny, nx] = True
                    stack.append((nx, ny))
        comps.append(raster_order(comp))
    return comps


def loop_representatives(ink: np.ndarray, keypoints: set) -> list[tuple[int, int]]:
    """One pixel per component that contains no keypoint: leftmost, ties topmost."""
    reps = []
    for comp in components(ink):
        if any(p in keypoints for p in comp):
            continue
        reps.append(min(comp, key=lambda p: (p[0], p[1])))
    return reps


@dataclass
class Arc:
    """A maximal pixel chain between split points.

    ``pixels`` includes both terminal pixels; a closed arc repeats its
    first pixel at the end. ``end_split`` is False only for chains that
    dead-end on a pixel that is neither a split point nor the start.
    """

    pixels: list = field(default_factory=list)
    closed: bool = False
    end_split: bool = True


def step_length(a: tuple[int, int], b: tuple[int, int]) -> float:
    """1 for an axial step, sqrt(2) for a diagonal one."""
    return SQRT2 if (a[0] != b[0] and a[1] != b[1]) else 1.0


def extract_arcs(
    ink: np.ndarray,
    split_points: set,
    seeds: list,
) -> list[Arc]:
    """Walk every traceable link exactly once, splitting at ``split_points``.

    Seeds are visited in the given order, their neighbors clockwise; each
    step is marked in both directions so no chain is produced twice. Chains
    terminate on reaching a split point or the seed itself (a closed loop);
    they can also dead-end on a pixel with no unused neighbor.
    """
    adj = pruned_neighbors(ink)
    walked: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    arcs: list[Arc] = []
    for seed in seeds:
        for first in adj.get(seed, ()):
            if (seed, first) in walked:
                continue
            chain = [seed, first]
            walked.add((seed, first))
            walked.add((first, seed))
            prev, cur = seed, first
            closed = False
            end_split = True
            while cur not in split_points:
                if cur == seed:
                    closed = True
                    break
                options = [
                    p for p in adj[cur] if p != prev and (cur, p) not in walked
                ]
                if not options:
                    end_split = cur == seed
                    closed = cur == seed
                    break
                nxt = options[0]
                walked.add((cur, nxt))
                walked.add((nxt, cur))
                chain.append(nxt)
                prev, cur = cur, nxt
            else:
                closed = cur == seed
            arcs.append(Arc(pixels=chain, closed=closed, end_split=end_split or closed))
    return arcs


def sample_chain(chain: list, spacing: float, include_end: bool = False) -> tuple[list, float]:
    """Interior pixels where cumulative travel first reaches ``spacing``.

    Walking the chain, travel accumulates 1 per axial and sqrt(2) per
    diagonal step and resets to zero at each emitted pixel. The terminal
    pixel is only eligible with ``include_end`` (used for chains that
    dead-end instead of reaching a keypoint). Returns the emitted pixels
    and the leftover travel past the last one.
    """
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    out = []
    travel = 0.0
    for k in range(1, len(chain)):
        travel += step_length(chain[k - 1], chain[k])
        if k == len(chain) - 1 and not include_end:
            break
        if travel >= spacing:
            out.append(chain[k])
            travel = 0.0
    return out, travel
