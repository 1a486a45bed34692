"""Tree-structured stroke models built from skeletons.

Node placement runs in three phases: structural pixels first (stroke
endpoints and junctions), then greedy sampling along the strokes at the
spacing parameter, then farthest-first gap filling that stops once every
remaining skeleton pixel is closer than sqrt(2)/2 times the spacing to
some node. Nodes are joined by repeatedly linking the two nearest
disconnected ones, which is exactly a Euclidean minimum spanning tree in
Kruskal order; the node nearest the centroid becomes the root.

Each non-root node stores the offset from itself to its parent in the
rest pose; matching penalizes squared deviation from these offsets. The
angle-augmented variant also stores a stroke tangent per node, estimated
on junction-split arcs and smoothed along each arc with a 1-D Gaussian
(sigma 2) applied to the doubled-angle unit vectors, which is immune to
the half-turn wraparound of undirected directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import tracing
from ..errors import DomainError, InputError, ParameterError
from ..imaging import SkeletonImage

FORMAT_HEADER = "sigver-inkball 1"
TANGENT_SIGMA = 2.0


@dataclass(frozen=True)
class InkballModel:
    """Rooted tree over integer pixel positions.

    ``positions`` is (n, 2) int64 in (x, y); ``parents[i]`` is the parent
    index or -1 for the root, which is always index 0. ``offsets[i]`` is
    parent position minus own position in the rest pose. ``tangents`` is
    None for plain models, else undirected stroke angles in [0, pi).
    ``subtree_sizes[i]`` counts i and all its descendants.
    """

    positions: np.ndarray
    parents: np.ndarray
    offsets: np.ndarray
    subtree_sizes: np.ndarray
    tangents: np.ndarray | None
    source: str = ""
    spacing: float = 0.0

    def __post_init__(self):
        n = self.positions.shape[0]
        if n == 0:
            raise InputError("a model needs at least one node")
        if self.parents[0] != -1 or np.any(self.parents[1:] < 0):
            raise InputError("root must be index 0, all others parented")
        if np.any(self.parents[1:] >= np.arange(1, n)):
            raise InputError("parents must precede children")
        if self.tangents is not None and len(self.tangents) != n:
            raise InputError("one tangent per node required")

    @property
    def node_count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def augmented(self) -> bool:
        return self.tangents is not None

    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for i in range(1, self.node_count):
            out[int(self.parents[i])].append(i)
        return out

    def bounding_box(self) -> tuple[int, int]:
        """(width, height) extent of the rest pose."""
        spans = self.positions.max(axis=0) - self.positions.min(axis=0)
        return int(spans[0]), int(spans[1])


def angle_diff(a: float, b: float) -> float:
    """Distance between undirected angles, in [0, pi/2]."""
    d = (a - b) % math.pi
    return min(d, math.pi - d)


def _smooth_angles(angles: np.ndarray, closed: bool) -> np.ndarray:
    """Gaussian-smooth undirected angles along a chain.

    Works on (cos 2a, sin 2a) so that angles just below pi and just above 0
    average correctly. Open chains renormalize the kernel mass inside the
    chain; closed chains wrap around. Where the doubled vectors cancel out
    the raw angle is kept.
    """
    n = len(angles)
    r = math.ceil(3.0 * TANGENT_SIGMA)
    kernel = np.exp(
        -np.arange(-r, r + 1, dtype=np.float64) ** 2 / (2.0 * TANGENT_SIGMA**2)
    )
    kernel /= kernel.sum()
    cx = np.cos(2.0 * angles)
    sx = np.sin(2.0 * angles)
    if closed and n > 1:
        idx = (np.arange(n)[:, None] + np.arange(-r, r + 1)[None, :]) % n
        sm_c = (cx[idx] * kernel[None, :]).sum(axis=1)
        sm_s = (sx[idx] * kernel[None, :]).sum(axis=1)
    else:
        sm_c = np.zeros(n)
        sm_s = np.zeros(n)
        mass = np.zeros(n)
        for k in range(-r, r + 1):
            w = kernel[k + r]
            lo = max(0, -k)
            hi = min(n, n - k)
            if lo >= hi:
                continue
            sm_c[lo:hi] += w * cx[lo + k : hi + k]
            sm_s[lo:hi] += w * sx[lo + k : hi + k]
            mass[lo:hi] += w
        sm_c /= mass
        sm_s /= mass
    out = np.mod(0.5 * np.arctan2(sm_s, sm_c), math.pi)
    tiny = np.hypot(sm_c, sm_s) < 1e-12
    out[tiny] = angles[tiny]
    return out


def compute_tangents(skel: SkeletonImage) -> np.ndarray:
    """Per-pixel stroke angle map in [0, pi); NaN off the skeleton.

    The skeleton is split into arcs at junctions; raw angles come from the
    central difference of arc neighbors (one-sided at open ends) and are
    smoothed per arc. A pixel shared by several arcs (a junction) keeps
    the value of the lowest-numbered arc in extraction order. Isolated
    pixels sit on no arc and get angle 0.
    """
    ink = skel.ink
    h, w = ink.shape
    angle_map = np.full((h, w), np.nan, dtype=np.float64)
    if not ink.any():
        return angle_map
    endpoints, junctions = tracing.endpoints_and_junctions(ink)
    split = set(endpoints) | set(junctions)
    reps = tracing.loop_representatives(ink, split)
    seeds = tracing.raster_order(split) + reps
    for arc in tracing.extract_arcs(ink, split, seeds):
        pixels = arc.pixels
        closed = arc.closed and len(pixels) > 1
        if closed:
            pixels = pixels[:-1]
        pts = np.array(pixels, dtype=np.float64)
        n = len(pts)
        if n == 1:
            raw = np.zeros(1)
        else:
            nxt = np.roll(pts, -1, axis=0)
            prv = np.roll(pts, 1, axis=0)
            if not closed:
                nxt[-1] = pts[-1]
                prv[0] = pts[0]
            d = nxt - prv
            raw = np.mod(np.arctan2(d[:, 1], d[:, 0]), math.pi)
        smooth = _smooth_angles(raw, closed)
        for (x, y), a in zip(pixels, smooth):
            if np.isnan(angle_map[y, x]):
                angle_map[y, x] = a
    ys, xs = np.nonzero(ink)
    isolated = np.isnan(angle_map[ys, xs])
    angle_map[ys[isolated], xs[isolated]] = 0.0
    return angle_map


def _phase_nodes(ink: np.ndarray, spacing: float) -> list[tuple[int, int]]:
    """Node pixels from the three placement phases, in insertion order."""
    endpoints, junctions = tracing.endpoints_and_junctions(ink)
    structural = tracing.raster_order(set(endpoints) | set(junctions))
    nodes = list(structural)
    have = set(nodes)

    split = set(structural)
    for arc in tracing.extract_arcs(ink, split, structural):
        samples, _ = tracing.sample_chain(
            arc.pixels, spacing, include_end=not arc.end_split
        )
        for pixel in samples:
            if pixel not in have:
                have.add(pixel)
                nodes.append(pixel)

    ys, xs = np.nonzero(ink)
    pts = np.column_stack([xs, ys]).astype(np.float64)
    if nodes:
        d2 = np.full(len(pts), np.inf)
        for nx, ny in nodes:
            cand = (pts[:, 0] - nx) ** 2 + (pts[:, 1] - ny) ** 2
            np.minimum(d2, cand, out=d2)
    else:
        d2 = np.full(len(pts), np.inf)
    stop = spacing * spacing / 2.0  # (sqrt(2)/2 * spacing)^2
    while True:
        k = int(np.argmax(d2))
        if d2[k] < stop:
            break
        nx, ny = int(pts[k, 0]), int(pts[k, 1])
        nodes.append((nx, ny))
        cand = (pts[:, 0] - nx) ** 2 + (pts[:, 1] - ny) ** 2
        np.minimum(d2, cand, out=d2)
    return nodes


def _minimum_spanning_edges(positions: np.ndarray) -> list[tuple[int, int]]:
    """Kruskal on all pairs: repeatedly link the nearest disconnected pair."""
    n = len(positions)
    if n == 1:
        return []
    diff = positions[:, None, :] - positions[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    iu, ju = np.triu_indices(n, k=1)
    order = np.lexsort((ju, iu, d2[iu, ju]))
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges = []
    for idx in order:
        a, b = int(iu[idx]), int(ju[idx])
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            edges.append((a, b))
            if len(edges) == n - 1:
                break
    return edges


def build_model(
    skel: SkeletonImage, spacing: float, augmented: bool = False, source: str = ""
) -> InkballModel:
    """Build the part tree of a skeleton; empty skeletons are rejected."""
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    ink = skel.ink
    if not ink.any():
        raise DomainError("cannot build a model from an empty skeleton")

    pixels = _phase_nodes(ink, spacing)
    positions = np.array(pixels, dtype=np.int64)
    n = len(positions)

    adjacency: list[list[int]] = [[] for _ in range(n)]
    for a, b in _minimum_spanning_edges(positions.astype(np.float64)):
        adjacency[a].append(b)
        adjacency[b].append(a)

    centroid = positions.mean(axis=0)
    d2c = ((positions - centroid) ** 2).sum(axis=1)
    root = int(np.argmin(d2c))

    # breadth-first reindex, root first, children by original index
    order = [root]
    parent_of = {root: -1}
    head = 0
    while head < len(order):
        cur = order[head]
        head += 1
        for nb in sorted(adjacency[cur]):
            if nb not in parent_of:
                parent_of[nb] = cur
                order.append(nb)
    new_index = {old: new for new, old in enumerate(order)}
    positions = positions[order]
    parents = np.array(
        [-1] + [new_index[parent_of[order[i]]] for i in range(1, n)], dtype=np.int64
    )
    offsets = np.zeros((n, 2), dtype=np.int64)
    for i in range(1, n):
        offsets[i] = positions[parents[i]] - positions[i]
    sizes = np.ones(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        sizes[parents[i]] += sizes[i]

    tangents = None
    if augmented:
        angle_map = compute_tangents(skel)
        tangents = np.array(
            [angle_map[y, x] for x, y in positions], dtype=np.float64
        )
    return InkballModel(
        positions=positions,
        parents=parents,
        offsets=offsets,
        subtree_sizes=sizes,
        tangents=tangents,
        source=source,
        spacing=float(spacing),
    )


def save_model(model: InkballModel, path) -> None:
    """Versioned text format: header, provenance, node and parent lines."""
    lines = [
        FORMAT_HEADER,
        f"source {model.source}",
        f"spacing {model.spacing!r}",
        f"augmented {1 if model.augmented else 0}",
        "root 0",
        f"nodes {model.node_count}",
    ]
    for i in range(model.node_count):
        x, y = int(model.positions[i, 0]), int(model.positions[i, 1])
        if model.augmented:
            lines.append(f"{i} {x} {y} {float(model.tangents[i])!r}")
        else:
            lines.append(f"{i} {x} {y}")
    lines.append("parents")
    for i in range(1, model.node_count):
        lines.append(f"{i} {int(model.parents[i])}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> InkballModel:
    """Parse the text format written by :func:`save_model`."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    try:
        if lines[0] != FORMAT_HEADER:
            raise InputError(f"{path}: unsupported model format '{lines[0]}'")
        source = lines[1].split(" ", 1)[1] if " " in lines[1] else ""
        spacing = float(lines[2].split(" ", 1)[1])
        augmented = lines[3].split(" ", 1)[1] == "1"
        if lines[4] != "root 0":
            raise InputError(f"{path}: root must be node 0")
        n = int(lines[5].split(" ", 1)[1])
        positions = np.zeros((n, 2), dtype=np.int64)
        tangents = np.zeros(n, dtype=np.float64) if augmented else None
        for i in range(n):
            parts = lines[6 + i].split(" ")
            positions[int(parts[0])] = (int(parts[1]), int(parts[2]))
            if augmented:
                tangents[int(parts[0])] = float(parts[3])
        if lines[6 + n] != "parents":
            raise InputError(f"{path}: missing parents section")
        parents = np.full(n, -1, dtype=np.int64)
        for k in range(n - 1):
            child, par = lines[7 + n + k].split(" ")
            parents[int(child)] = int(par)
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed model file: {exc}") from exc
    offsets = np.zeros((n, 2), dtype=np.int64)
    for i in range(1, n):
        offsets[i] = positions[parents[i]] - positions[i]
    sizes = np.ones(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        sizes[parents[i]] += sizes[i]
    return InkballModel(
        positions=positions,
        parents=parents,
        offsets=offsets,
        subtree_sizes=sizes,
        tangents=tangents,
        source=source,
        spacing=spacing,
    )
