"""Keypoint graphs extracted from signature skeletons.

Nodes sit on structural pixels (stroke endpoints, junctions, one marker
pixel per closed loop) plus evenly spaced sample pixels inserted along the
strokes: walking away from the last node, a new node is added as soon as
the traveled distance reaches the spacing parameter. Edges connect nodes
that are consecutive along a traced stroke. Node labels are the pixel
coordinates shifted so their mean is (0, 0); edges are unlabeled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tracing
from .errors import DomainError, InputError, ParameterError
from .imaging import SkeletonImage

FORMAT_HEADER = "sigver-graph 1"


@dataclass(frozen=True)
class KeypointGraph:
    """Undirected graph with 2-D node labels.

    ``labels`` is (n, 2) float64 in (x, y); ``edges`` holds index pairs
    (u, v) with u < v, no duplicates, no self loops. ``source`` and
    ``spacing`` record where the graph came from.
    """

    labels: np.ndarray
    edges: tuple
    source: str = ""
    spacing: float = 0.0

    def __post_init__(self):
        lab = self.labels
        if not isinstance(lab, np.ndarray) or lab.ndim != 2 or lab.shape[1] != 2:
            raise InputError("labels must be an (n, 2) array")
        n = lab.shape[0]
        for u, v in self.edges:
            if not (0 <= u < v < n):
                raise InputError(f"bad edge ({u}, {v}) for {n} nodes")
        if len(set(self.edges)) != len(self.edges):
            raise InputError("duplicate edges")

    @property
    def node_count(self) -> int:
        return int(self.labels.shape[0])

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def is_empty(self) -> bool:
        return self.node_count == 0

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def empty_graph(source: str = "", spacing: float = 0.0) -> KeypointGraph:
    return KeypointGraph(np.zeros((0, 2), dtype=np.float64), (), source, spacing)


def center_normalize(labels: np.ndarray) -> np.ndarray:
    """Shift labels so their mean is the origin; rejects the empty graph."""
    if labels.shape[0] == 0:
        raise DomainError("cannot center an empty set of labels")
    return labels.astype(np.float64) - labels.mean(axis=0, dtype=np.float64)


def extract_keypoint_graph(
    skel: SkeletonImage, spacing: float, source: str = ""
) -> KeypointGraph:
    """Build the keypoint graph of a skeleton at the given node spacing.

    An empty skeleton yields the (flagged) empty graph. Otherwise every
    structural pixel becomes a node, strokes are walked in raster order,
    sample nodes are inserted on the fly, and consecutive nodes along each
    walk are connected. Self loops (a loop shorter than the spacing) and
    duplicate edges are dropped. Labels are centered.
    """
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    ink = skel.ink
    if not ink.any():
        return empty_graph(source, spacing)

    endpoints, junctions = tracing.endpoints_and_junctions(ink)
    keypoints = set(endpoints) | set(junctions)
    reps = tracing.loop_representatives(ink, keypoints)
    split = keypoints | set(reps)
    seeds = tracing.raster_order(split)

    node_ids: dict[tuple[int, int], int] = {}
    node_pixels: list[tuple[int, int]] = []

    def node_of(pixel) -> int:
        if pixel not in node_ids:
            node_ids[pixel] = len(node_pixels)
            node_pixels.append(pixel)
        return node_ids[pixel]

    for pixel in seeds:
        node_of(pixel)

    edges: set[tuple[int, int]] = set()

    def connect(a: int, b: int) -> None:
        if a != b:
            edges.add((a, b) if a < b else (b, a))

    for arc in tracing.extract_arcs(ink, split, seeds):
        samples, _ = tracing.sample_chain(
            arc.pixels, spacing, include_end=not arc.end_split
        )
        last = node_of(arc.pixels[0])
        for pixel in samples:
            nxt = node_of(pixel)
            connect(last, nxt)
            last = nxt
        if arc.end_split:
            connect(last, node_of(arc.pixels[-1]))

    labels = center_normalize(np.array(node_pixels, dtype=np.float64))
    return KeypointGraph(labels, tuple(sorted(edges)), source, float(spacing))


def save_graph(graph: KeypointGraph, path) -> None:
    """Versioned text format: header, provenance, node lines, edge lines."""
    lines = [
        FORMAT_HEADER,
        f"source {graph.source}",
        f"spacing {graph.spacing!r}",
        f"nodes {graph.node_count}",
    ]
    for i in range(graph.node_count):
        x, y = float(graph.labels[i, 0]), float(graph.labels[i, 1])
        lines.append(f"{i} {x!r} {y!r}")
    lines.append(f"edges {graph.edge_count}")
    for u, v in graph.edges:
        lines.append(f"{u} {v}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> KeypointGraph:
    """Parse the text format written by :func:`save_graph`."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise InputError(f"cannot read graph {path}: {exc}") from exc
    try:
        if lines[0] != FORMAT_HEADER:
            raise InputError(f"{path}: unsupported graph format '{lines[0]}'")
        source = lines[1].split(" ", 1)[1] if " " in lines[1] else ""
        spacing = float(lines[2].split(" ", 1)[1])
        n = int(lines[3].split(" ", 1)[1])
        labels = np.zeros((n, 2), dtype=np.float64)
        for i in range(n):
            idx, x, y = lines[4 + i].split(" ")
            labels[int(idx)] = (float(x), float(y))
        m = int(lines[4 + n].split(" ", 1)[1])
        edges = []
        for k in range(m):
            u, v = lines[5 + n + k].split(" ")
            edges.append((int(u), int(v)))
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed graph file: {exc}") from exc
    return KeypointGraph(labels, tuple(edges), source, spacing)
