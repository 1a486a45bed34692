"""Reference-set score normalization, acceptance, and score fusion.

Everything here consumes precomputed pairwise distances; nothing ever
recomputes a graph or inkball comparison. Distances are keyed by directed
(reference id, test id) pairs because the inkball distance is asymmetric.

A user's reference set is summarized by its baseline: the average over
references of the distance to the nearest other reference. Dividing by
the baseline makes scores invariant to a global rescaling of the distance,
so one decision threshold can serve every user. Fusion z-normalizes each
system's normalized distances with statistics gathered from all users'
leave-one-out reference values and combines them with a fixed weight.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .errors import (
    DataError,
    DegenerateBaselineError,
    DegenerateFusionError,
    DomainError,
    InputError,
    ParameterError,
)

SCORES_HEADER = "sigver-scores 1"


def _pair(distances, rid: str, tid: str) -> float:
    try:
        return distances[(rid, tid)]
    except KeyError:
        raise DataError(f"missing distance for pair ({rid}, {tid})") from None


def _nearest_other(rid: str, reference_ids, distances) -> float:
    return min(_pair(distances, rid, other) for other in reference_ids if other != rid)


def reference_baseline(reference_ids, distances, epsilon: float | None = None) -> float:
    """Average distance from each reference to its nearest other reference.

    Needs at least two references. A baseline of zero means the references
    are mutually identical and normalization is impossible; that is an
    error unless a fallback ``epsilon`` is supplied.
    """
    ids = list(reference_ids)
    if len(ids) < 2:
        raise DomainError(f"need at least 2 references, got {len(ids)}")
    total = sum(_nearest_other(rid, ids, distances) for rid in ids)
    baseline = total / len(ids)
    if baseline == 0.0:
        if epsilon is None:
            raise DegenerateBaselineError(
                "references are mutually identical (baseline 0)"
            )
        return epsilon
    return baseline


def verification_score(
    reference_ids, test_id: str, distances, epsilon: float | None = None
) -> float:
    """Distance from the nearest reference, normalized by the baseline."""
    ids = list(reference_ids)
    baseline = reference_baseline(ids, distances, epsilon)
    return min(_pair(distances, rid, test_id) for rid in ids) / baseline


def accept(score: float, threshold: float) -> bool:
    """Accept as genuine iff the score is strictly below the threshold."""
    return score < threshold


@dataclass(frozen=True)
class FusionStats:
    """Population mean and deviation of leave-one-out reference scores."""

    mean: float
    deviation: float


def loo_reference_values(reference_ids, distances, epsilon: float | None = None) -> list:
    """Per-reference nearest-other distances over the baseline."""
    ids = list(reference_ids)
    baseline = reference_baseline(ids, distances, epsilon)
    return [_nearest_other(rid, ids, distances) / baseline for rid in ids]


def fusion_stats(
    reference_sets, distances, epsilon: float | None = None
) -> FusionStats:
    """Mean and population deviation over all users' leave-one-out values.

    Both moments average per user first, then across users, so users with
    different reference counts weigh equally. Zero deviation makes the
    z-normalization undefined and raises unless ``epsilon`` is given.
    """
    if not reference_sets:
        raise DomainError("fusion statistics need at least one reference set")
    per_user = {
        user: loo_reference_values(ids, distances, epsilon)
        for user, ids in reference_sets.items()
    }
    mean = sum(
        sum(vals) / len(vals) for vals in per_user.values()
    ) / len(per_user)
    var = sum(
        sum((v - mean) ** 2 for v in vals) / len(vals) for vals in per_user.values()
    ) / len(per_user)
    deviation = var**0.5
    if deviation == 0.0:
        if epsilon is None:
            raise DegenerateFusionError("reference scores have zero spread")
        deviation = epsilon
    return FusionStats(mean, deviation)


def mcs_score(
    reference_ids,
    test_id: str,
    weight: float,
    graph_distances,
    inkball_distances,
    graph_stats: FusionStats,
    inkball_stats: FusionStats,
    epsilon: float | None = None,
) -> float:
    """Weighted multi-classifier score, minimized over the references.

    Per reference, both systems' baseline-normalized distances are
    z-normalized with their fusion statistics and mixed as
    ``weight * graph + (1 - weight) * inkball``; the best reference wins.
    ``weight`` 1 or 0 reduces to an affine transform of the single-system
    score, preserving its ranking.
    """
    if not 0.0 <= weight <= 1.0:
        raise ParameterError(f"fusion weight must be in [0, 1], got {weight}")
    ids = list(reference_ids)
    base_g = reference_baseline(ids, graph_distances, epsilon)
    base_i = reference_baseline(ids, inkball_distances, epsilon)
    best = None
    for rid in ids:
        zg = (_pair(graph_distances, rid, test_id) / base_g - graph_stats.mean) / (
            graph_stats.deviation
        )
        zi = (_pair(inkball_distances, rid, test_id) / base_i - inkball_stats.mean) / (
            inkball_stats.deviation
        )
        combined = weight * zg + (1.0 - weight) * zi
        if best is None or combined < best:
            best = combined
    return best


@dataclass
class ScoreMatrix:
    """Directed pairwise distances for one user under one system.

    ``entries`` maps (reference id, test id) to a distance; the
    reference-vs-reference block (both ids references, unequal) is part of
    the matrix. ``params_key`` fingerprints every upstream parameter so a
    stale file is recognized and recomputed.
    """

    system: str
    user: str
    params_key: str
    entries: dict = field(default_factory=dict)

    def save_csv(self, path) -> None:
        rows = sorted(self.entries.items())
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(f"# {SCORES_HEADER}\n")
            fh.write(f"# system {self.system}\n")
            fh.write(f"# user {self.user}\n")
            fh.write(f"# params {self.params_key}\n")
            writer = csv.writer(fh)
            writer.writerow(["reference_id", "test_id", "distance"])
            for (rid, tid), value in rows:
                writer.writerow([rid, tid, repr(float(value))])

    @classmethod
    def load_csv(cls, path) -> "ScoreMatrix":
        try:
            with open(path, "r", encoding="ascii", newline="") as fh:
                head = [fh.readline().rstrip("\n") for _ in range(4)]
                if head[0] != f"# {SCORES_HEADER}":
                    raise InputError(f"{path}: unsupported score format")
                system = head[1].removeprefix("# system ")
                user = head[2].removeprefix("# user ")
                params_key = head[3].removeprefix("# params ")
                reader = csv.reader(fh)
                header = next(reader, None)
                if header != ["reference_id", "test_id", "distance"]:
                    raise InputError(f"{path}: malformed score header")
                entries = {}
                for row in reader:
                    if len(row) != 3:
                        raise InputError(f"{path}: malformed score row {row!r}")
                    entries[(row[0], row[1])] = float(row[2])
        except OSError as exc:
            raise InputError(f"cannot read scores {path}: {exc}") from exc
        except ValueError as exc:
            raise InputError(f"{path}: malformed score file: {exc}") from exc
        return cls(system=system, user=user, params_key=params_key, entries=entries)
