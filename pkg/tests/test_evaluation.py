"""Trial construction, error rates, equal-error search, report formats."""

from __future__ import annotations

import numpy as np
import pytest

from sigver.errors import DomainError, ParameterError, ProtocolError
from sigver.evaluation import (
    ScoredTrials,
    aer,
    build_trials,
    candidate_thresholds,
    det_points,
    eer_global,
    eer_user,
    evaluate_at,
    far_at,
    format_report_table,
    frr_at,
    save_det_csv,
    save_report_csv,
)
from sigver.oracles import naive_eer


def _toy_corpus(n_users=3, n_genuine=6, n_forgery=3):
    genuine = {
        f"u{k}": [f"u{k}/g{i:02d}" for i in range(1, n_genuine + 1)]
        for k in range(1, n_users + 1)
    }
    forgery = {
        f"u{k}": [f"u{k}/f{i:02d}" for i in range(1, n_forgery + 1)]
        for k in range(1, n_users + 1)
    }
    return genuine, forgery


def test_build_trials_counts_and_roles():
    genuine, forgery = _toy_corpus()
    trials = build_trials(genuine, forgery, references_per_user=3)
    assert trials.users == ("u1", "u2", "u3")
    assert trials.references["u1"] == ["u1/g01", "u1/g02", "u1/g03"]
    assert trials.positives["u1"] == ["u1/g04", "u1/g05", "u1/g06"]
    assert trials.skilled["u1"] == ["u1/f01", "u1/f02", "u1/f03"]
    # random forgeries: the first genuine of every other user
    assert trials.random["u1"] == ["u2/g01", "u3/g01"]
    assert trials.random["u2"] == ["u1/g01", "u3/g01"]


def test_build_trials_protocol_errors():
    genuine, forgery = _toy_corpus()
    with pytest.raises(ParameterError):
        build_trials(genuine, forgery, references_per_user=1)
    with pytest.raises(ProtocolError):
        build_trials({"u1": genuine["u1"]}, forgery, references_per_user=3)
    short = dict(genuine)
    short["u2"] = short["u2"][:3]  # exactly as many as the reference count
    with pytest.raises(ProtocolError) as err:
        build_trials(short, forgery, references_per_user=3)
    assert "u2" in str(err.value)


def test_error_rates_are_percentages():
    genuine = [0.1, 0.5, 0.9]
    forgery = [0.2, 0.5, 0.8]
    assert frr_at(genuine, 0.5) == 100.0 * 2 / 3  # 0.5 itself is rejected
    assert far_at(forgery, 0.5) == 100.0 * 1 / 3  # only 0.2 is accepted
    assert frr_at(genuine, 2.0) == 0.0
    assert far_at(forgery, 2.0) == 100.0
    with pytest.raises(DomainError):
        frr_at([], 0.5)
    with pytest.raises(DomainError):
        far_at([], 0.5)


def test_candidate_thresholds_convention():
    got = candidate_thresholds([0.1, 0.3], [0.3])
    assert got == [0.1 - 1.0, 0.1, 0.2, 0.3, 1.3]


def test_eer_exact_meeting_point():
    rate, threshold = eer_global([0.1, 0.2, 0.3], [0.25, 0.4, 0.5])
    assert rate == 100.0 / 3.0
    assert threshold == 0.275


def test_eer_separable_scores():
    rate, threshold = eer_global([0.1, 0.2], [0.8, 0.9])
    assert rate == 0.0
    assert threshold == 0.5


def test_eer_identical_score_sets():
    rate, threshold = eer_global([0.3], [0.3])
    assert rate == 50.0
    assert threshold == 0.8


def test_eer_requires_both_sides():
    with pytest.raises(DomainError):
        eer_global([], [0.5])
    with pytest.raises(DomainError):
        eer_global([0.5], [])


def test_eer_matches_counting_oracle(rng):
    for _ in range(60):
        n_g = int(rng.integers(2, 30))
        n_f = int(rng.integers(2, 30))
        genuine = np.round(rng.random(n_g) * 3.0, 2).tolist()
        forgery = np.round(rng.random(n_f) * 3.0 + rng.random() * 0.5, 2).tolist()
        rate, threshold = eer_global(genuine, forgery)
        o_rate, o_threshold = naive_eer(genuine, forgery)
        assert abs(rate - o_rate) <= 1e-9
        assert abs(threshold - o_threshold) <= 1e-9
        assert 0.0 <= rate <= 100.0


def test_eer_user_averages_per_user():
    genuine = {"u1": [0.3], "u2": [0.1, 0.2]}
    forgery = {"u1": [0.3], "u2": [0.8, 0.9]}
    assert eer_user(genuine, forgery) == (50.0 + 0.0) / 2.0
    with pytest.raises(ProtocolError) as err:
        eer_user({"u1": [0.3]}, {"u1": []})
    assert "u1" in str(err.value)


def test_aer_is_the_midpoint():
    assert aer(0.0, 0.0) == 0.0
    assert aer(8.00, 10.76) == (8.00 + 10.76) / 2.0


def test_det_points_collapse_and_order():
    points = det_points([0.1, 0.2], [0.15, 0.3])
    thresholds = [t for t, _, _ in points]
    assert thresholds == sorted(thresholds)
    fars = [far for _, far, _ in points]
    frrs = [frr for _, _, frr in points]
    assert fars == sorted(fars)  # acceptance only grows with the threshold
    assert frrs == sorted(frrs, reverse=True)
    assert all(
        (a[1], a[2]) != (b[1], b[2]) for a, b in zip(points, points[1:])
    )
    assert points[0][1] == 0.0 and points[0][2] == 100.0
    assert points[-1][1] == 100.0 and points[-1][2] == 0.0


def _scored_example():
    return ScoredTrials(
        genuine={"u1": [0.5, 0.7], "u2": [0.4, 0.6]},
        skilled={"u1": [0.9, 1.4], "u2": [1.1, 0.8]},
        random={"u1": [1.5, 2.0], "u2": [1.8, 1.2]},
    )


def test_evaluate_at_integration():
    scored = _scored_example()
    report = evaluate_at(scored, threshold=0.65)
    assert report.threshold == 0.65
    assert report.frr == 25.0  # only the 0.7 trial is rejected -> 1 of 4
    assert report.far_skilled == 0.0
    assert report.far_random == 0.0
    assert report.aer_skilled == aer(report.frr, report.far_skilled)
    assert report.eer_global_skilled == eer_global(
        scored.pooled_genuine(), scored.pooled_skilled()
    )[0]
    assert report.det_skilled == det_points(
        scored.pooled_genuine(), scored.pooled_skilled()
    )


def test_report_table_layout():
    report = evaluate_at(_scored_example(), threshold=0.65)
    table = format_report_table([("ged", report), ("mcs", report)])
    lines = table.splitlines()
    assert lines[0].split() == [
        "system",
        "FRR",
        "FAR_RF",
        "EER_user_RF",
        "EER_global_RF",
        "FAR_SF",
        "AER_SF",
        "EER_user_SF",
        "EER_global_SF",
    ]
    assert len(lines) == 3
    assert lines[1].startswith("ged")
    assert "25.00" in lines[1]


def test_report_and_det_csv(tmp_path):
    report = evaluate_at(_scored_example(), threshold=0.75)
    report_path = tmp_path / "report.csv"
    save_report_csv([("ged", report)], report_path)
    lines = report_path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["system", "threshold", "FRR"]
    assert lines[1].split(",")[0] == "ged"
    assert float(lines[1].split(",")[2]) == report.frr

    det_path = tmp_path / "det.csv"
    save_det_csv(report.det_skilled, det_path)
    det_lines = det_path.read_text().splitlines()
    assert det_lines[0] == "threshold,far,frr"
    assert len(det_lines) == len(report.det_skilled) + 1
