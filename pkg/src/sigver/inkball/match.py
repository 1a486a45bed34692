"""Deformable matching of stroke models against observed skeletons.

The match energy of a model placed over an observation sums, per node, the
squared distance from the node to the nearest observation ink (weighted by
``data_weight``) and, per non-root node, the squared deviation of its
parent offset from the rest pose. Minimizing over all placements runs
bottom-up over the tree: each child hands its parent the lower envelope of
``deformation + child energy`` over all child positions, computed with the
separable quadratic lower-envelope transform in linear time per node. A
subtree of k nodes never contributes more than ``k * energy_cap``, which
bounds the damage of unmatchable parts.

The angle-augmented variant scales the ink distance by
``1 + angle_weight * angle_diff(node tangent, ink tangent)`` with both
tangents quantized into ``ANGLE_BINS`` bins, so the field for a node bin
is an exact minimum over per-bin distance transforms.

All fields live on the observation grid padded by the model bounding box
on each side, so the whole model can slide fully off the ink when the cap
makes that optimal. Results are independent of any extra padding beyond
that and therefore of how work is batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ParameterError
from ..imaging import SkeletonImage
from .model import InkballModel, angle_diff, build_model, compute_tangents

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


ANGLE_BINS = 16
_INF = 1e20


@dataclass(frozen=True)
class MatchParams:
    """Knobs of the match energy.

    ``data_weight`` scales the ink-distance term, ``energy_cap`` is the
    per-node truncation bound, ``angle_weight`` the tangent mismatch
    penalty slope used when ``augmented`` is set.
    """

    energy_cap: float = 64.0
    angle_weight: float = 64.0
    data_weight: float = 1.0
    augmented: bool = False

    def __post_init__(self):
        if self.energy_cap <= 0:
            raise ParameterError("energy_cap must be positive")
        if self.angle_weight < 0 or self.data_weight < 0:
            raise ParameterError("weights must be nonnegative")


@dataclass(frozen=True)
class EnergyField:
    """Scalar field over a pixel grid; ``origin`` is the observation-frame
    coordinate (x, y) of cell [0, 0]."""

    values: np.ndarray
    origin: tuple[int, int] = (0, 0)


@njit(cache=True)
def _envelope_pass(values, out):
    """One separable pass of the quadratic lower-envelope transform.

    For every column x of ``values`` (axis 0 being the scan axis):
    ``out[q, x] = min_p (q - p)^2 + values[p, x]``.
    """
    n, width = values.shape
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    for x in range(width):
        k = 0
        v[0] = 0
        z[0] = -_INF
        z[1] = _INF
        for q in range(1, n):
            fq = values[q, x] + q * q
            while True:
                p = v[k]
                s = (fq - (values[p, x] + p * p)) / (2.0 * (q - p))
                if s <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = _INF
        k = 0
        for q in range(n):
            while z[k + 1] < q:
                k += 1
            p = v[k]
            out[q, x] = (q - p) * (q - p) + values[p, x]


def _envelope_2d(values: np.ndarray) -> np.ndarray:
    """min over all cells p of squared distance to p plus values[p]."""
    tmp = np.empty_like(values)
    _envelope_pass(values, tmp)
    tmp_t = np.ascontiguousarray(tmp.T)
    out_t = np.empty_like(tmp_t)
    _envelope_pass(tmp_t, out_t)
    return np.ascontiguousarray(out_t.T)


def gdt_quadratic(field: EnergyField, offset: tuple[int, int] = (0, 0)) -> EnergyField:
    """Lower envelope with a rest offset, over the field's own grid.

    ``out(v) = min_u ||(v - u) - offset||^2 + in(u)`` with u ranging over
    the grid. The offset must be integral; it turns into an index shift of
    the unshifted transform, evaluated on a sufficiently padded copy so
    every requested cell sees the true minimum.
    """
    ox, oy = offset
    if ox != int(ox) or oy != int(oy):
        raise ParameterError(f"offset must be integral, got {offset}")
    ox, oy = int(ox), int(oy)
    vals = np.asarray(field.values, dtype=np.float64)
    if vals.ndim != 2 or vals.size == 0:
        raise ParameterError("field must be a nonempty 2-D array")
    px, py = abs(ox), abs(oy)
    padded = np.full((vals.shape[0] + 2 * py, vals.shape[1] + 2 * px), _INF)
    padded[py : py + vals.shape[0], px : px + vals.shape[1]] = vals
    full = _envelope_2d(padded)
    out = full[
        py - oy : py - oy + vals.shape[0], px - ox : px - ox + vals.shape[1]
    ]
    return EnergyField(np.ascontiguousarray(out), field.origin)


def squared_distance_field(mask: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest True cell."""
    if not mask.any():
        raise DomainError("distance field of an empty mask is undefined")
    seed = np.where(mask, 0.0, _INF)
    return _envelope_2d(seed)


def _padded_mask(obs: SkeletonImage, margin: tuple[int, int]) -> np.ndarray:
    mx, my = margin
    h, w = obs.ink.shape
    mask = np.zeros((h + 2 * my, w + 2 * mx), dtype=bool)
    mask[my : my + h, mx : mx + w] = obs.ink
    return mask


def _bin_centers() -> np.ndarray:
    return (np.arange(ANGLE_BINS) + 0.5) * math.pi / ANGLE_BINS


def bin_of_angle(angle: float) -> int:
    """Index of the tangent bin containing ``angle``."""
    k = int(math.floor((angle % math.pi) / math.pi * ANGLE_BINS))
    return min(k, ANGLE_BINS - 1)


class _Observation:
    """Per-observation fields on a padded grid, shared by all model nodes.

    Normal mode keeps one squared distance field. Augmented mode keeps one
    distance field per ink-tangent bin and combines them lazily into one
    weighted field per node-tangent bin.
    """

    def __init__(
        self,
        obs: SkeletonImage,
        params: MatchParams,
        margin: tuple[int, int],
        tangent_map: np.ndarray | None = None,
    ):
        self.params = params
        self.margin = margin
        mask = _padded_mask(obs, margin)
        if params.augmented:
            if tangent_map is None:
                tangent_map = compute_tangents(obs)
            mx, my = margin
            bins = np.full(mask.shape, -1, dtype=np.int64)
            ys, xs = np.nonzero(obs.ink)
            for y, x in zip(ys.tolist(), xs.tolist()):
                bins[y + my, x + mx] = bin_of_angle(float(tangent_map[y, x]))
            self._bin_dist = {}
            for b in range(ANGLE_BINS):
                sel = bins == b
                if sel.any():
                    self._bin_dist[b] = np.sqrt(squared_distance_field(sel))
            self._node_bin_sq: dict[int, np.ndarray] = {}
        else:
            self._plain_sq = squared_distance_field(mask)

    def ink_term(self, node_angle: float | None) -> np.ndarray:
        """Squared (possibly angle-weighted) ink distance for one node."""
        if not self.params.augmented:
            return self._plain_sq
        if node_angle is None:
            raise ParameterError("augmented matching needs node tangents")
        a = bin_of_angle(node_angle)
        if a not in self._node_bin_sq:
            centers = _bin_centers()
            best = None
            for b, dist in self._bin_dist.items():
                delta = 1.0 + self.params.angle_weight * angle_diff(
                    centers[a], centers[b]
                )
                cand = delta * dist
                best = cand if best is None else np.minimum(best, cand)
            self._node_bin_sq[a] = best * best
        return self._node_bin_sq[a]


def placement_field(
    obs: SkeletonImage,
    params: MatchParams,
    node_angle: float | None = None,
    margin: tuple[int, int] = (0, 0),
) -> EnergyField:
    """Distance from every candidate node position to the observation ink.

    Plain mode is the exact Euclidean distance transform of the skeleton;
    augmented mode returns the minimum over ink pixels of the bin-weighted
    distance for the given node tangent. Values are distances, not squares.
    """
    if obs.ink_count == 0:
        raise DomainError("placement field of an empty observation is undefined")
    ctx = _Observation(obs, params, margin)
    if params.augmented:
        field = np.sqrt(ctx.ink_term(node_angle))
    else:
        field = np.sqrt(ctx._plain_sq)
    return EnergyField(field, (-margin[0], -margin[1]))


def _match_on(
    model: InkballModel, ctx: _Observation
) -> tuple[float, tuple[float, float]]:
    """Bottom-up energy minimization on a prepared observation context."""
    params = ctx.params
    n = model.node_count
    pending: dict[int, np.ndarray] = {}
    root_field = None
    for i in range(n - 1, -1, -1):
        angle = float(model.tangents[i]) if model.augmented else None
        field = params.data_weight * ctx.ink_term(angle)
        if i in pending:
            field = field + pending.pop(i)
        cap = float(model.subtree_sizes[i]) * params.energy_cap
        capped = np.minimum(field, cap)
        if i == 0:
            root_field = capped
            break
        shifted = gdt_quadratic(
            EnergyField(capped), (int(model.offsets[i, 0]), int(model.offsets[i, 1]))
        ).values
        parent = int(model.parents[i])
        if parent in pending:
            pending[parent] += shifted
        else:
            pending[parent] = shifted
    flat = int(np.argmin(root_field))
    gy, gx = divmod(flat, root_field.shape[1])
    mx, my = ctx.margin
    return float(root_field[gy, gx]), (float(gx - mx), float(gy - my))


def match(
    model: InkballModel, obs: SkeletonImage, params: MatchParams
) -> tuple[float, tuple[float, float]]:
    """Minimal deformation-plus-data energy and the root position reaching it.

    The root ranges over the observation padded by the model bounding box
    on each side; ties resolve to the first grid cell in raster order. A
    model matched against the skeleton it was built from reaches energy 0.
    """
    if obs.ink_count == 0:
        raise DomainError("cannot match against an empty observation")
    if model.augmented != params.augmented:
        raise ParameterError(
            "model and parameters disagree about tangent augmentation"
        )
    bw, bh = model.bounding_box()
    ctx = _Observation(obs, params, (bw, bh))
    return _match_on(model, ctx)


def d_inkball(
    reference: SkeletonImage,
    test: SkeletonImage,
    spacing: float,
    params: MatchParams,
) -> float:
    """Model the reference, match it against the test, divide by node count.

    Asymmetric by construction: the reference side is structured into a
    tree, the test side stays raw ink.
    """
    model = build_model(reference, spacing, augmented=params.augmented)
    energy, _ = match(model, test, params)
    return energy / model.node_count
