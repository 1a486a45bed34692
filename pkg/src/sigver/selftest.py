"""Built-in cross-checks of the optimized code against brute force.

Four suites compare the production implementations with the
reimplementations in :mod:`sigver.oracles` on seeded random inputs and
print one PASS/FAIL line each. The implementations under test are
injectable so the harness itself can be shown to catch a planted bug.

Everything is sized to finish in well under a minute.
"""

from __future__ import annotations

import sys

import numpy as np

from .evaluation import eer_global
from .ged import CostParams, bp, exact_ged_small, hed
from .graph import KeypointGraph
from .imaging import SkeletonImage
from .inkball.match import EnergyField, MatchParams, gdt_quadratic, match
from .inkball.model import build_model
from .oracles import naive_eer, naive_gdt, naive_hed, naive_tree_match

_TOL = 1e-9


def random_graph(rng, max_nodes: int = 6) -> KeypointGraph:
    """Random labeled graph: uniform 2-D labels, sparse random edges."""
    n = int(rng.integers(1, max_nodes + 1))
    labels = rng.uniform(-50.0, 50.0, size=(n, 2))
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < 0.35
    ]
    return KeypointGraph(np.asarray(labels, dtype=np.float64), tuple(edges), "", 1.0)


def random_blob(rng, height: int, width: int, fill: float) -> SkeletonImage:
    """Random nonempty ink mask."""
    while True:
        mask = rng.random((height, width)) < fill
        if mask.any():
            return SkeletonImage(mask)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _TOL * max(1.0, abs(a), abs(b))


def _suite_ged(rng, hed_impl) -> tuple:
    params = CostParams()
    failures = []
    pairs = 150
    for k in range(pairs):
        g1 = random_graph(rng)
        g2 = random_graph(rng)
        h = hed_impl(g1, g2, params).normalized
        e = exact_ged_small(g1, g2, params).normalized
        b = bp(g1, g2, params).normalized
        nh = naive_hed(g1, g2, params)
        if h > e + _TOL:
            failures.append(f"pair {k}: lower bound {h!r} above exact {e!r}")
        if e > b + _TOL:
            failures.append(f"pair {k}: exact {e!r} above assignment bound {b!r}")
        if not _close(h, nh):
            failures.append(f"pair {k}: vectorized {h!r} vs looped {nh!r}")
        if k % 10 == 0 and hed_impl(g1, g1, params).normalized != 0.0:
            failures.append(f"pair {k}: self distance nonzero")
    return f"graph-edit bounds ({pairs} pairs)", failures


def _suite_tree(rng, match_impl) -> tuple:
    failures = []
    models = 30
    for k in range(models):
        augmented = bool(k % 2)
        ref = random_blob(rng, 7, 7, 0.35)
        obs = random_blob(rng, 7, 7, 0.35)
        model = build_model(ref, spacing=2.0, augmented=augmented)
        cap = 3.0 if k % 3 == 0 else 1e12
        params = MatchParams(
            energy_cap=cap,
            angle_weight=32.0,
            data_weight=1.0,
            augmented=augmented,
        )
        got, _pos = match_impl(model, obs, params)
        want = naive_tree_match(model, obs, params, truncated=True)
        if not _close(got, want):
            failures.append(
                f"model {k} (cap {cap}): energy {got!r} vs brute force {want!r}"
            )
    return f"tree matching ({models} models)", failures


def _suite_gdt(rng, gdt_impl) -> tuple:
    failures = []
    fields = 60
    for k in range(fields):
        h = int(rng.integers(1, 15))
        w = int(rng.integers(1, 15))
        vals = rng.integers(0, 400, size=(h, w)).astype(np.float64)
        offset = (int(rng.integers(-6, 7)), int(rng.integers(-6, 7)))
        got = gdt_impl(EnergyField(vals), offset).values
        want = naive_gdt(vals, offset)
        if not np.array_equal(got, want):
            diff = np.abs(got - want)
            worst = np.unravel_index(int(np.argmax(diff)), diff.shape)
            cell = (int(worst[0]), int(worst[1]))
            failures.append(
                f"field {k} {h}x{w} offset {offset}: max dev "
                f"{float(diff.max())!r} at {cell}, got {float(got[worst])!r} "
                f"want {float(want[worst])!r}"
            )
    return f"distance transform ({fields} fields)", failures


def _suite_eer(rng, eer_impl) -> tuple:
    failures = []
    sets = 120
    for k in range(sets):
        ng = int(rng.integers(2, 40))
        nf = int(rng.integers(2, 40))
        genuine = np.round(rng.uniform(0.0, 3.0, size=ng), 2).tolist()
        forgery = np.round(rng.uniform(0.5, 4.0, size=nf), 2).tolist()
        rate, threshold = eer_impl(genuine, forgery)
        want_rate, want_threshold = naive_eer(genuine, forgery)
        if abs(rate - want_rate) > _TOL or abs(threshold - want_threshold) > _TOL:
            failures.append(
                f"set {k}: rate {rate!r}/{want_rate!r} "
                f"threshold {threshold!r}/{want_threshold!r}"
            )
    return f"error rates ({sets} score sets)", failures


def run_selftest(
    seed: int = 0,
    stream=None,
    hed_impl=hed,
    match_impl=match,
    gdt_impl=gdt_quadratic,
    eer_impl=eer_global,
) -> int:
    """Run all suites; print one line each; return 0 iff everything passed."""
    stream = stream if stream is not None else sys.stdout
    suites = (
        lambda r: _suite_ged(r, hed_impl),
        lambda r: _suite_tree(r, match_impl),
        lambda r: _suite_gdt(r, gdt_impl),
        lambda r: _suite_eer(r, eer_impl),
    )
    failed = 0
    for index, suite in enumerate(suites):
        rng = np.random.default_rng([seed, index])
        name, failures = suite(rng)
        if failures:
            failed += 1
            print(f"FAIL {name}: {len(failures)} mismatches", file=stream)
            for line in failures[:3]:
                print(f"     {line}", file=stream)
        else:
            print(f"PASS {name}", file=stream)
    print(
        "self test OK" if failed == 0 else f"self test FAILED ({failed} suites)",
        file=stream,
    )
    return 0 if failed == 0 else 1
