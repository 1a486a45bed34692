"""Brute-force reference implementations for cross-checking.

Everything here recomputes a result of the optimized library code by the
most direct method available: explicit minimization over every grid cell,
every placement, or every threshold, with none of the envelope, caching,
or assignment machinery of the real implementations. They are quadratic
to exponential and exist only for tests and the built-in self test; keep
inputs tiny.

Grid geometry, tie rules, and truncation conventions are part of the
definitions being checked and therefore appear in both routes; the code
is otherwise disjoint.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import DomainError, ParameterError
from .ged import CostParams, ged_max
from .graph import KeypointGraph
from .imaging import SkeletonImage
from .inkball.match import ANGLE_BINS, MatchParams, bin_of_angle
from .inkball.model import InkballModel, angle_diff, compute_tangents


def naive_gdt(values: np.ndarray, offset: tuple[int, int] = (0, 0)) -> np.ndarray:
    """min over cells u of ||(v - u) - offset||^2 + values[u], per cell v.

    Enumerates every source cell and relaxes the whole grid against it.
    """
    vals = np.asarray(values, dtype=np.float64)
    ox, oy = int(offset[0]), int(offset[1])
    h, w = vals.shape
    vx, vy = np.meshgrid(np.arange(w), np.arange(h))
    out = np.full((h, w), np.inf)
    for uy in range(h):
        for ux in range(w):
            spring = (vx - ux - ox) ** 2 + (vy - uy - oy) ** 2
            np.minimum(out, spring + vals[uy, ux], out=out)
    return out


def _grid_geometry(obs: SkeletonImage, margin: tuple[int, int]):
    mx, my = margin
    h, w = obs.ink.shape
    vx, vy = np.meshgrid(np.arange(w + 2 * mx), np.arange(h + 2 * my))
    ys, xs = np.nonzero(obs.ink)
    pixels = [(int(x) + mx, int(y) + my) for y, x in zip(ys, xs)]
    return vx, vy, pixels


def naive_placement(
    obs: SkeletonImage,
    params: MatchParams,
    node_angle: float | None = None,
    margin: tuple[int, int] = (0, 0),
) -> np.ndarray:
    """Per-cell minimum ink distance, weighted per pixel when augmented.

    The augmented weight is evaluated pixel by pixel from that pixel's own
    tangent bin, never through a per-bin distance transform.
    """
    if obs.ink_count == 0:
        raise DomainError("placement field of an empty observation is undefined")
    vx, vy, pixels = _grid_geometry(obs, margin)
    out = np.full(vx.shape, np.inf)
    if params.augmented:
        if node_angle is None:
            raise ParameterError("augmented matching needs node tangents")
        tangents = compute_tangents(obs)
        centers = [(b + 0.5) * math.pi / ANGLE_BINS for b in range(ANGLE_BINS)]
        a = bin_of_angle(node_angle)
        mx, my = margin
        for px, py in pixels:
            b = bin_of_angle(float(tangents[py - my, px - mx]))
            delta = 1.0 + params.angle_weight * angle_diff(centers[a], centers[b])
            dist = np.sqrt((vx - px) ** 2 + (vy - py) ** 2)
            np.minimum(out, delta * dist, out=out)
    else:
        for px, py in pixels:
            np.minimum(out, (vx - px) ** 2 + (vy - py) ** 2, out=out)
        out = np.sqrt(out)
    return out


def _naive_ink_squares(
    model: InkballModel, obs: SkeletonImage, params: MatchParams
) -> list:
    """Squared per-node data terms on the padded grid, by pixel scans."""
    margin = model.bounding_box()
    vx, vy, pixels = _grid_geometry(obs, margin)
    if not params.augmented:
        sq = np.full(vx.shape, np.inf)
        for px, py in pixels:
            np.minimum(sq, (vx - px) ** 2 + (vy - py) ** 2, out=sq)
        return [sq] * model.node_count
    tangents = compute_tangents(obs)
    centers = [(b + 0.5) * math.pi / ANGLE_BINS for b in range(ANGLE_BINS)]
    mx, my = margin
    pixel_bins = [
        bin_of_angle(float(tangents[py - my, px - mx])) for px, py in pixels
    ]
    by_bin: dict = {}
    fields = []
    for i in range(model.node_count):
        a = bin_of_angle(float(model.tangents[i]))
        if a not in by_bin:
            best = np.full(vx.shape, np.inf)
            for (px, py), b in zip(pixels, pixel_bins):
                delta = 1.0 + params.angle_weight * angle_diff(
                    centers[a], centers[b]
                )
                dist = np.sqrt((vx - px) ** 2 + (vy - py) ** 2)
                np.minimum(best, delta * dist, out=best)
            by_bin[a] = best * best
        fields.append(by_bin[a])
    return fields


def naive_tree_match(
    model: InkballModel,
    obs: SkeletonImage,
    params: MatchParams,
    truncated: bool = True,
) -> float:
    """Bottom-up minimization with every envelope replaced by a cell scan.

    Same recursion, same per-subtree caps when ``truncated``; each child
    message is an explicit minimum over all child cells for every parent
    cell.
    """
    if obs.ink_count == 0:
        raise DomainError("cannot match against an empty observation")
    if model.augmented != params.augmented:
        raise ParameterError(
            "model and parameters disagree about tangent augmentation"
        )
    ink_sq = _naive_ink_squares(model, obs, params)
    h, w = ink_sq[0].shape
    vx, vy = np.meshgrid(np.arange(w), np.arange(h))
    pending: dict = {}
    for i in range(model.node_count - 1, -1, -1):
        field = params.data_weight * ink_sq[i]
        if i in pending:
            field = field + pending.pop(i)
        if truncated:
            field = np.minimum(
                field, float(model.subtree_sizes[i]) * params.energy_cap
            )
        if i == 0:
            return float(field.min())
        ox, oy = int(model.offsets[i, 0]), int(model.offsets[i, 1])
        message = np.full((h, w), np.inf)
        for uy in range(h):
            for ux in range(w):
                spring = (vx - ux - ox) ** 2 + (vy - uy - oy) ** 2
                np.minimum(message, spring + field[uy, ux], out=message)
        parent = int(model.parents[i])
        if parent in pending:
            pending[parent] += message
        else:
            pending[parent] = message
    raise DomainError("model has no root")  # pragma: no cover


def full_config_search(
    model: InkballModel, obs: SkeletonImage, params: MatchParams
) -> float:
    """Global minimum of the untruncated energy over every joint placement.

    Enumerates the full cross product of node positions, so it is limited
    to very small models on very small grids; use it to certify the other
    two routes on toy inputs.
    """
    n = model.node_count
    ink_sq = _naive_ink_squares(model, obs, params)
    h, w = ink_sq[0].shape
    cells = [(x, y) for y in range(h) for x in range(w)]
    if len(cells) ** n > 2_000_000:
        raise ParameterError(
            f"exhaustive search over {len(cells)}^{n} placements is too large"
        )
    flat = [field.reshape(-1) for field in ink_sq]
    best = math.inf
    for placement in itertools.product(range(len(cells)), repeat=n):
        energy = 0.0
        for i, cell in enumerate(placement):
            energy += params.data_weight * flat[i][cell]
            if i > 0:
                px, py = cells[placement[int(model.parents[i])]]
                x, y = cells[cell]
                dx = px - x - int(model.offsets[i, 0])
                dy = py - y - int(model.offsets[i, 1])
                energy += dx * dx + dy * dy
        if energy < best:
            best = energy
    return best


def naive_hed(
    g1: KeypointGraph, g2: KeypointGraph, params: CostParams | None = None
) -> float:
    """Normalized Hausdorff-style edit bound, one node pair at a time."""
    params = params or CostParams()
    deg1 = g1.degrees()
    deg2 = g2.degrees()
    half_edge = params.edge_cost / 2.0

    def sub(i: int, j: int) -> float:
        dx = g1.labels[i, 0] - g2.labels[j, 0]
        dy = g1.labels[i, 1] - g2.labels[j, 1]
        dist = math.sqrt(dx * dx + dy * dy)
        return (dist + abs(int(deg1[i]) - int(deg2[j])) * half_edge) / 2.0

    raw = 0.0
    for i in range(g1.node_count):
        best = params.node_cost + int(deg1[i]) * half_edge
        for j in range(g2.node_count):
            best = min(best, sub(i, j))
        raw += best
    for j in range(g2.node_count):
        best = params.node_cost + int(deg2[j]) * half_edge
        for i in range(g1.node_count):
            best = min(best, sub(i, j))
        raw += best
    normalizer = ged_max(g1, g2, params)
    if normalizer == 0.0:
        return 0.0
    q = raw / normalizer
    if 1.0 < q <= 1.0 + 1e-9:
        return 1.0
    return q


def naive_eer(genuine_scores, forgery_scores) -> tuple:
    """Equal error rate by counting both sides at every useful threshold."""
    genuine = list(genuine_scores)
    forgery = list(forgery_scores)
    if not genuine or not forgery:
        raise DomainError("equal error rate needs scores on both sides")
    values = sorted(set(genuine) | set(forgery))
    thresholds = [values[0] - 1.0]
    for i in range(len(values) - 1):
        thresholds.append(values[i])
        thresholds.append((values[i] + values[i + 1]) / 2.0)
    thresholds.append(values[-1])
    thresholds.append(values[-1] + 1.0)

    def rates(t: float) -> tuple:
        accepted_forgeries = 0
        for s in forgery:
            if s < t:
                accepted_forgeries += 1
        rejected_genuine = 0
        for s in genuine:
            if s >= t:
                rejected_genuine += 1
        return (
            100.0 * accepted_forgeries / len(forgery),
            100.0 * rejected_genuine / len(genuine),
        )

    prev = None
    for t in thresholds:
        far, frr = rates(t)
        if far == frr:
            return far, t
        if far > frr:
            pt, pfar, pfrr = prev
            span = (far - pfar) - (frr - pfrr)
            frac = (pfrr - pfar) / span
            return pfar + frac * (far - pfar), pt + frac * (t - pt)
        prev = (t, far, frr)
    raise DomainError("threshold sweep never crossed")  # pragma: no cover
