"""Batch pipeline stages: ingest, extract, match, evaluate.

Each stage reads what the previous one left in the cache and is
independently resumable: artifacts are content-addressed, score matrices
are per-user files that record their parameter fingerprint, and
recomputation happens exactly for what is missing or stale. All outputs
are byte-deterministic — worker count and scheduling never change a
single artifact byte, and nothing time- or host-dependent is written.

Parallel stages hand whole tasks (one image, or one user's matrix gaps
for one system) to worker processes; collected results come back in task
order, so writes happen in a fixed order too.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .cache import (
    Cache,
    artifact_key,
    atomic_write_text,
    file_digest,
)
from .config import RunConfig, graph_key, model_key, scores_key, skeleton_key
from .errors import CacheMissError, DataError
from .evaluation import (
    ScoredTrials,
    TrialSet,
    build_trials,
    eer_global,
    evaluate_at,
    format_report_table,
    save_det_csv,
    save_report_csv,
)
from .ged import CostParams, d_ged
from .graph import extract_keypoint_graph, load_graph, save_graph
from .imaging import load_grayscale, load_skeleton_pgm, preprocess, save_pgm
from .inkball.match import MatchParams, _match_on, _Observation
from .inkball.model import build_model, compute_tangents, load_model, save_model
from .manifest import DatasetManifest, load_manifest, serialize_manifest
from .verify import ScoreMatrix, fusion_stats, mcs_score, verification_score

SYSTEMS = ("ged", "inkball", "mcs")


def _atomic_artifact(write_fn, path: Path) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    write_fn(tmp)
    os.replace(tmp, path)


def _resolve_jobs(config: RunConfig, override: int | None) -> int:
    jobs = config.jobs if override is None else override
    if jobs == 0:
        jobs = os.cpu_count() or 1
    return max(jobs, 1)


def _run_tasks(worker, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(worker, tasks))


# ---------------------------------------------------------------- ingest


@dataclass(frozen=True)
class IngestStats:
    dataset: str
    users: int
    genuine: int
    forgery: int


def run_ingest(manifest_path, cache_root, config: RunConfig) -> IngestStats:
    """Validate a manifest, decode every image once, persist the file list."""
    manifest = load_manifest(manifest_path)
    missing = manifest.missing_files()
    if missing:
        raise DataError(
            "manifest names missing files:\n  " + "\n  ".join(missing)
        )
    id_map = manifest.id_map()
    for sid in sorted(id_map):
        load_grayscale(id_map[sid])
    cache = Cache(cache_root)
    cache.ensure()
    atomic_write_text(cache.manifest_path, serialize_manifest(manifest))
    return IngestStats(
        dataset=manifest.name,
        users=len(manifest.users),
        genuine=sum(len(manifest.genuine[u]) for u in manifest.users),
        forgery=sum(len(manifest.forgery[u]) for u in manifest.users),
    )


# --------------------------------------------------------------- extract


@dataclass(frozen=True)
class ExtractStats:
    images: int
    computed: dict
    cached: dict
    graph_nodes: tuple
    model_nodes: tuple


def _summary(values: list) -> tuple:
    """(min, median, mean, max) of a list of counts."""
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        return (0, 0.0, 0.0, 0)
    mid = n // 2
    median = (
        float(ordered[mid])
        if n % 2
        else (ordered[mid - 1] + ordered[mid]) / 2.0
    )
    return (ordered[0], median, sum(ordered) / n, ordered[-1])


def _extract_worker(task):
    (sid, image_path, cfg, paths, have, debug_dir) = task
    computed = {"skeleton": False, "graph": False, "model": False}
    skel = None
    if not have["skeleton"] or debug_dir is not None:
        gray = load_grayscale(image_path)
        enhanced, binary, skel = preprocess(
            gray, cfg.sigma_narrow, cfg.sigma_wide, cfg.binarize_threshold
        )
        if debug_dir is not None:
            stem = sid.replace("/", "_")
            dbg = Path(debug_dir)
            dbg.mkdir(parents=True, exist_ok=True)
            save_pgm(enhanced, dbg / f"{stem}_enhanced.pgm")
            save_pgm(binary, dbg / f"{stem}_binary.pgm")
            save_pgm(skel, dbg / f"{stem}_skeleton.pgm")
        if not have["skeleton"]:
            _atomic_artifact(
                lambda p: save_pgm(skel, p), Path(paths["skeleton"])
            )
            computed["skeleton"] = True
    if not (have["graph"] and have["model"]) and skel is None:
        skel = load_skeleton_pgm(paths["skeleton"])
    if not have["graph"]:
        graph = extract_keypoint_graph(skel, cfg.graph_spacing, source=sid)
        if graph.is_empty:
            raise DataError(f"{sid}: empty skeleton, no graph to extract")
        _atomic_artifact(lambda p: save_graph(graph, p), Path(paths["graph"]))
        computed["graph"] = True
    if not have["model"]:
        if skel.ink_count == 0:
            raise DataError(f"{sid}: empty skeleton, no part model to build")
        model = build_model(
            skel, cfg.inkball_spacing, augmented=cfg.augmented, source=sid
        )
        _atomic_artifact(lambda p: save_model(model, p), Path(paths["model"]))
        computed["model"] = True
    return sid, computed


def artifact_paths(cache: Cache, config: RunConfig, image_path) -> dict:
    """Cache locations of the three per-image artifacts."""
    digest = file_digest(image_path)
    return {
        "skeleton": cache.skeleton_path(artifact_key(digest, skeleton_key(config))),
        "graph": cache.graph_path(artifact_key(digest, graph_key(config))),
        "model": cache.model_path(artifact_key(digest, model_key(config))),
    }


def run_extract(
    cache_root,
    config: RunConfig,
    jobs: int | None = None,
    debug_dir=None,
) -> ExtractStats:
    """Turn every manifest image into skeleton, graph, and model artifacts."""
    cache = Cache(cache_root)
    manifest = load_manifest(cache.require_manifest())
    cache.ensure()
    id_map = manifest.id_map()
    tasks = []
    cached = {"skeleton": 0, "graph": 0, "model": 0}
    all_paths = {}
    for sid in sorted(id_map):
        paths = artifact_paths(cache, config, id_map[sid])
        all_paths[sid] = paths
        have = {kind: paths[kind].is_file() for kind in paths}
        for kind in cached:
            cached[kind] += int(have[kind])
        if not all(have.values()) or debug_dir is not None:
            tasks.append(
                (
                    sid,
                    str(id_map[sid]),
                    config,
                    {k: str(v) for k, v in paths.items()},
                    have,
                    str(debug_dir) if debug_dir is not None else None,
                )
            )
    results = _run_tasks(_extract_worker, tasks, _resolve_jobs(config, jobs))
    computed = {"skeleton": 0, "graph": 0, "model": 0}
    for _sid, flags in results:
        for kind in computed:
            computed[kind] += int(flags[kind])
    graph_counts = [load_graph(all_paths[sid]["graph"]).node_count for sid in sorted(id_map)]
    model_counts = [load_model(all_paths[sid]["model"]).node_count for sid in sorted(id_map)]
    return ExtractStats(
        images=len(id_map),
        computed=computed,
        cached=cached,
        graph_nodes=_summary(graph_counts),
        model_nodes=_summary(model_counts),
    )


# ----------------------------------------------------------------- match


@dataclass(frozen=True)
class MatchStats:
    pairs_computed: dict
    pairs_cached: dict


def _trials_from_manifest(manifest: DatasetManifest, references: int) -> TrialSet:
    return build_trials(
        {u: manifest.genuine_ids(u) for u in manifest.users},
        {u: manifest.forgery_ids(u) for u in manifest.users},
        references,
    )


def _user_pairs(trials: TrialSet, user: str) -> list:
    refs = trials.references[user]
    tests = trials.positives[user] + trials.skilled[user] + trials.random[user]
    pairs = [(r, s) for r in refs for s in refs if s != r]
    pairs.extend((r, t) for r in refs for t in tests)
    return pairs


def _match_worker(task):
    (system, user, pairs, paths, cfg) = task
    out = {}
    if system == "ged":
        params = CostParams(node_cost=cfg.node_cost, edge_cost=cfg.edge_cost)
        graphs = {}
        for rid, tid in pairs:
            for sid in (rid, tid):
                if sid not in graphs:
                    graphs[sid] = load_graph(paths[sid]["graph"])
            out[(rid, tid)] = d_ged(graphs[rid], graphs[tid], params, method="hed")
        return system, user, out
    params = MatchParams(
        energy_cap=cfg.energy_cap,
        angle_weight=cfg.angle_weight,
        data_weight=cfg.data_weight,
        augmented=cfg.augmented,
    )
    models = {}
    by_test: dict = {}
    for rid, tid in pairs:
        by_test.setdefault(tid, []).append(rid)
    for tid in sorted(by_test):
        obs = load_skeleton_pgm(paths[tid]["skeleton"])
        if obs.ink_count == 0:
            raise DataError(f"{tid}: empty skeleton cannot be matched against")
        tangent_map = compute_tangents(obs) if cfg.augmented else None
        for rid in by_test[tid]:
            if rid not in models:
                models[rid] = load_model(paths[rid]["model"])
            model = models[rid]
            ctx = _Observation(
                obs, params, model.bounding_box(), tangent_map=tangent_map
            )
            energy, _pos = _match_on(model, ctx)
            out[(rid, tid)] = energy / model.node_count
    return system, user, out


def run_match(
    cache_root,
    config: RunConfig,
    jobs: int | None = None,
    references: int | None = None,
) -> MatchStats:
    """Fill every per-user distance matrix both systems need."""
    cache = Cache(cache_root)
    manifest = load_manifest(cache.require_manifest())
    trials = _trials_from_manifest(
        manifest, references if references is not None else manifest.references
    )
    id_map = manifest.id_map()
    all_paths = {
        sid: {k: str(v) for k, v in artifact_paths(cache, config, id_map[sid]).items()}
        for sid in id_map
    }
    for sid, paths in sorted(all_paths.items()):
        for kind in ("skeleton", "graph", "model"):
            if not Path(paths[kind]).is_file():
                raise CacheMissError(
                    f"{sid}: {kind} artifact missing; run extract first"
                )
    existing = {}
    tasks = []
    pairs_cached = {"ged": 0, "inkball": 0}
    for system in ("ged", "inkball"):
        key = scores_key(config, system)
        cache.scores_dir(system, key).mkdir(parents=True, exist_ok=True)
        for user in manifest.users:
            pairs = _user_pairs(trials, user)
            path = cache.scores_path(system, key, user)
            present = {}
            if path.is_file():
                matrix = ScoreMatrix.load_csv(path)
                if matrix.params_key == key:
                    present = matrix.entries
            todo = [p for p in pairs if p not in present]
            pairs_cached[system] += len(pairs) - len(todo)
            existing[(system, user)] = present
            if todo:
                needed = sorted({sid for pair in todo for sid in pair})
                tasks.append(
                    (
                        system,
                        user,
                        todo,
                        {sid: all_paths[sid] for sid in needed},
                        config,
                    )
                )
    results = _run_tasks(_match_worker, tasks, _resolve_jobs(config, jobs))
    pairs_computed = {"ged": 0, "inkball": 0}
    for system, user, fresh in results:
        pairs_computed[system] += len(fresh)
        entries = dict(existing[(system, user)])
        entries.update(fresh)
        key = scores_key(config, system)
        matrix = ScoreMatrix(
            system=system, user=user, params_key=key, entries=entries
        )
        _atomic_artifact(
            lambda p, m=matrix: m.save_csv(p),
            cache.scores_path(system, key, user),
        )
    return MatchStats(pairs_computed=pairs_computed, pairs_cached=pairs_cached)


# -------------------------------------------------------------- evaluate


@dataclass(frozen=True)
class EvaluateResult:
    reports: dict
    thresholds: dict
    threshold_sources: dict
    fusion: dict
    out_dir: Path


def _load_system_entries(
    cache: Cache, config: RunConfig, manifest: DatasetManifest, system: str
) -> dict:
    key = scores_key(config, system)
    merged = {}
    for user in manifest.users:
        path = cache.scores_path(system, key, user)
        if not path.is_file():
            raise CacheMissError(
                f"no {system} scores for user {user}; run match first"
            )
        matrix = ScoreMatrix.load_csv(path)
        if matrix.params_key != key:
            raise CacheMissError(
                f"{path} was computed with different parameters; run match first"
            )
        merged.update(matrix.entries)
    return merged


def _score_system(trials: TrialSet, entries: dict, epsilon: float | None) -> ScoredTrials:
    def scores(role: dict) -> dict:
        return {
            user: [
                verification_score(trials.references[user], tid, entries, epsilon)
                for tid in role[user]
            ]
            for user in trials.users
        }

    return ScoredTrials(
        genuine=scores(trials.positives),
        skilled=scores(trials.skilled),
        random=scores(trials.random),
    )


def _score_fused(
    trials: TrialSet,
    weight: float,
    ged_entries: dict,
    ink_entries: dict,
    stats: tuple,
    epsilon: float | None,
) -> ScoredTrials:
    ged_stats, ink_stats = stats

    def scores(role: dict) -> dict:
        return {
            user: [
                mcs_score(
                    trials.references[user],
                    tid,
                    weight,
                    ged_entries,
                    ink_entries,
                    ged_stats,
                    ink_stats,
                    epsilon,
                )
                for tid in role[user]
            ]
            for user in trials.users
        }

    return ScoredTrials(
        genuine=scores(trials.positives),
        skilled=scores(trials.skilled),
        random=scores(trials.random),
    )


def run_evaluate(
    cache_root,
    config: RunConfig,
    out_dir,
    references: int | None = None,
    allow_degenerate: bool = False,
) -> EvaluateResult:
    """Score all trials, pick thresholds, and write the report files."""
    cache = Cache(cache_root)
    manifest = load_manifest(cache.require_manifest())
    trials = _trials_from_manifest(
        manifest, references if references is not None else manifest.references
    )
    epsilon = 1e-9 if allow_degenerate else None
    ged_entries = _load_system_entries(cache, config, manifest, "ged")
    ink_entries = _load_system_entries(cache, config, manifest, "inkball")
    ged_stats = fusion_stats(trials.references, ged_entries, epsilon)
    ink_stats = fusion_stats(trials.references, ink_entries, epsilon)
    scored = {
        "ged": _score_system(trials, ged_entries, epsilon),
        "inkball": _score_system(trials, ink_entries, epsilon),
        "mcs": _score_fused(
            trials,
            config.fusion_weight,
            ged_entries,
            ink_entries,
            (ged_stats, ink_stats),
            epsilon,
        ),
    }
    configured = {
        "ged": config.decision_threshold_ged,
        "inkball": config.decision_threshold_inkball,
        "mcs": config.decision_threshold_mcs,
    }
    thresholds = {}
    sources = {}
    reports = {}
    for system in SYSTEMS:
        if configured[system] is not None:
            thresholds[system] = configured[system]
            sources[system] = "configured"
        else:
            thresholds[system] = eer_global(
                scored[system].pooled_genuine(), scored[system].pooled_skilled()
            )[1]
            sources[system] = "skilled-forgery equal-error point"
        reports[system] = evaluate_at(scored[system], thresholds[system])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        "signature verification report",
        f"dataset {manifest.name}  users {len(manifest.users)}  "
        f"references {len(trials.references[manifest.users[0]])}",
        "",
        format_report_table([(s, reports[s]) for s in SYSTEMS]).rstrip("\n"),
        "",
    ]
    for system in SYSTEMS:
        lines.append(
            f"threshold {system} {thresholds[system]!r} ({sources[system]})"
        )
    lines.append(
        f"fusion ged mean {ged_stats.mean!r} deviation {ged_stats.deviation!r}"
    )
    lines.append(
        f"fusion inkball mean {ink_stats.mean!r} deviation {ink_stats.deviation!r}"
    )
    atomic_write_text(out / "report.txt", "\n".join(lines) + "\n")
    save_report_csv([(s, reports[s]) for s in SYSTEMS], out / "report.csv")
    for system in SYSTEMS:
        save_det_csv(reports[system].det_skilled, out / f"det_{system}_skilled.csv")
        save_det_csv(reports[system].det_random, out / f"det_{system}_random.csv")
    return EvaluateResult(
        reports=reports,
        thresholds=thresholds,
        threshold_sources=sources,
        fusion={"ged": ged_stats, "inkball": ink_stats},
        out_dir=out,
    )
