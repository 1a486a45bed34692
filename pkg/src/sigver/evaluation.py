"""Trial construction, error rates, and equal-error-rate search.

A run is evaluated twice over the same genuine test scores: once against
random forgeries (genuine signatures of the other users) and once against
skilled forgeries (deliberate imitations). All rates are percentages of
pooled or per-user trial sets, and a test is accepted when its score is
strictly below the decision threshold.

The equal-error search sweeps a finite candidate set: one threshold below
every score, every observed score, every midpoint between consecutive
distinct scores, and one above. Between candidates neither rate can change,
so the sweep is exhaustive; the crossing is linearly interpolated when the
rates jump past each other.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import DomainError, ParameterError, ProtocolError


@dataclass(frozen=True)
class TrialSet:
    """Who plays which role, per user: ids only, no scores yet."""

    users: tuple
    references: dict
    positives: dict
    skilled: dict
    random: dict


def build_trials(genuine_by_user, forgery_by_user, references_per_user: int) -> TrialSet:
    """Split each user's genuine signatures into references and positives.

    The first ``references_per_user`` genuine signatures (in manifest
    order) become the reference set, the remainder the positive trials.
    Skilled forgeries are the user's own forgery list; random forgeries
    are the first genuine signature of every other user.
    """
    if references_per_user < 2:
        raise ParameterError(
            f"need at least 2 references per user, got {references_per_user}"
        )
    users = tuple(genuine_by_user)
    if len(users) < 2:
        raise ProtocolError("random-forgery trials need at least 2 users")
    short = [
        user
        for user in users
        if len(genuine_by_user[user]) <= references_per_user
    ]
    if short:
        raise ProtocolError(
            "users with too few genuine signatures for "
            f"{references_per_user} references: {', '.join(short)}"
        )
    references = {u: list(genuine_by_user[u][:references_per_user]) for u in users}
    positives = {u: list(genuine_by_user[u][references_per_user:]) for u in users}
    skilled = {u: list(forgery_by_user.get(u, [])) for u in users}
    random = {
        u: [genuine_by_user[other][0] for other in users if other != u] for u in users
    }
    return TrialSet(
        users=users,
        references=references,
        positives=positives,
        skilled=skilled,
        random=random,
    )


@dataclass(frozen=True)
class ScoredTrials:
    """Verification scores for every trial, grouped by user and role."""

    genuine: dict
    skilled: dict
    random: dict

    def pooled_genuine(self) -> list:
        return [s for user in self.genuine for s in self.genuine[user]]

    def pooled_skilled(self) -> list:
        return [s for user in self.skilled for s in self.skilled[user]]

    def pooled_random(self) -> list:
        return [s for user in self.random for s in self.random[user]]


def frr_at(genuine_scores, threshold: float) -> float:
    """Percent of genuine trials rejected (score not below threshold)."""
    scores = list(genuine_scores)
    if not scores:
        raise DomainError("false-rejection rate needs at least one genuine trial")
    return 100.0 * sum(1 for s in scores if s >= threshold) / len(scores)


def far_at(forgery_scores, threshold: float) -> float:
    """Percent of forgery trials accepted (score below threshold)."""
    scores = list(forgery_scores)
    if not scores:
        raise DomainError("false-acceptance rate needs at least one forgery trial")
    return 100.0 * sum(1 for s in scores if s < threshold) / len(scores)


def candidate_thresholds(genuine_scores, forgery_scores) -> list:
    """Every threshold at which either error rate can change, plus sentinels."""
    values = sorted(set(genuine_scores) | set(forgery_scores))
    if not values:
        raise DomainError("threshold sweep needs at least one score")
    out = [values[0] - 1.0]
    for left, right in zip(values, values[1:]):
        out.append(left)
        out.append((left + right) / 2.0)
    out.append(values[-1])
    out.append(values[-1] + 1.0)
    return out


def eer_global(genuine_scores, forgery_scores) -> tuple:
    """Pooled equal error rate and its threshold, both interpolated.

    Walks the candidate thresholds until the false-acceptance rate first
    reaches the false-rejection rate. An exact meeting is returned as is;
    otherwise the crossing of the two line segments between the
    bracketing candidates is returned.
    """
    genuine = list(genuine_scores)
    forgery = list(forgery_scores)
    if not genuine or not forgery:
        raise DomainError("equal error rate needs scores on both sides")
    thresholds = candidate_thresholds(genuine, forgery)
    prev_t = prev_far = prev_frr = None
    for t in thresholds:
        far = far_at(forgery, t)
        frr = frr_at(genuine, t)
        if far >= frr:
            if far == frr:
                return far, t
            # prev_t exists: at the lowest candidate no forgery is accepted
            # and every genuine is rejected, so far < frr there.
            span = (far - prev_far) - (frr - prev_frr)
            frac = (prev_frr - prev_far) / span
            return (
                prev_far + frac * (far - prev_far),
                prev_t + frac * (t - prev_t),
            )
        prev_t, prev_far, prev_frr = t, far, frr
    raise DomainError("threshold sweep never crossed")  # pragma: no cover


def eer_user(genuine_by_user, forgery_by_user) -> float:
    """Mean of per-user equal error rates."""
    users = list(genuine_by_user)
    if not users:
        raise DomainError("per-user equal error rate needs at least one user")
    total = 0.0
    for user in users:
        genuine = genuine_by_user[user]
        forgery = forgery_by_user.get(user, [])
        if not genuine or not forgery:
            raise ProtocolError(
                f"user {user} lacks trials on one side of the per-user "
                "equal error rate"
            )
        total += eer_global(genuine, forgery)[0]
    return total / len(users)


def aer(frr: float, far: float) -> float:
    """Average error rate: midpoint of rejection and acceptance rates."""
    return (frr + far) / 2.0


def det_points(genuine_scores, forgery_scores) -> list:
    """(threshold, false-acceptance, false-rejection) rows of the trade-off.

    One row per candidate threshold, ascending, with runs of identical
    rate pairs collapsed to their first threshold.
    """
    rows = []
    for t in candidate_thresholds(list(genuine_scores), list(forgery_scores)):
        far = far_at(forgery_scores, t)
        frr = frr_at(genuine_scores, t)
        if rows and rows[-1][1] == far and rows[-1][2] == frr:
            continue
        rows.append((t, far, frr))
    return rows


@dataclass(frozen=True)
class EvalReport:
    """Every headline rate of one system at one decision threshold."""

    threshold: float
    frr: float
    far_random: float
    eer_user_random: float
    eer_global_random: float
    far_skilled: float
    aer_skilled: float
    eer_user_skilled: float
    eer_global_skilled: float
    det_skilled: list
    det_random: list


_COLUMNS = (
    ("FRR", "frr"),
    ("FAR_RF", "far_random"),
    ("EER_user_RF", "eer_user_random"),
    ("EER_global_RF", "eer_global_random"),
    ("FAR_SF", "far_skilled"),
    ("AER_SF", "aer_skilled"),
    ("EER_user_SF", "eer_user_skilled"),
    ("EER_global_SF", "eer_global_skilled"),
)


def evaluate_at(scored: ScoredTrials, threshold: float) -> EvalReport:
    """All rates of one scored run at a fixed decision threshold."""
    genuine = scored.pooled_genuine()
    skilled = scored.pooled_skilled()
    random = scored.pooled_random()
    frr = frr_at(genuine, threshold)
    far_sf = far_at(skilled, threshold)
    return EvalReport(
        threshold=threshold,
        frr=frr,
        far_random=far_at(random, threshold),
        eer_user_random=eer_user(scored.genuine, scored.random),
        eer_global_random=eer_global(genuine, random)[0],
        far_skilled=far_sf,
        aer_skilled=aer(frr, far_sf),
        eer_user_skilled=eer_user(scored.genuine, scored.skilled),
        eer_global_skilled=eer_global(genuine, skilled)[0],
        det_skilled=det_points(genuine, skilled),
        det_random=det_points(genuine, random),
    )


def format_report_table(reports) -> str:
    """Fixed-width table of (label, report) rows, percentages to 2 places."""
    rows = list(reports)
    headers = ["system"] + [name for name, _ in _COLUMNS]
    cells = [
        [label] + [f"{getattr(report, attr):.2f}" for _, attr in _COLUMNS]
        for label, report in rows
    ]
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in cells)) if cells else len(headers[i])
        for i in range(len(headers))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in cells:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(row))))
    return "\n".join(lines) + "\n"


def save_report_csv(reports, path) -> None:
    """Machine-readable companion of the table: full-precision values."""
    rows = list(reports)
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["system", "threshold"] + [name for name, _ in _COLUMNS])
        for label, report in rows:
            writer.writerow(
                [label, repr(report.threshold)]
                + [repr(getattr(report, attr)) for _, attr in _COLUMNS]
            )


def save_det_csv(points, path) -> None:
    """Trade-off curve rows as threshold, acceptance, rejection columns."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "far", "frr"])
        for t, far, frr in points:
            writer.writerow([repr(t), repr(far), repr(frr)])
