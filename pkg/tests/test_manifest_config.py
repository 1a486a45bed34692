"""Manifests, run configuration, and the content-addressed cache keys."""

from __future__ import annotations

import os

import pytest

from sigver.cache import (
    CACHE_ENV,
    Cache,
    artifact_key,
    atomic_write_text,
    file_digest,
    params_hash,
    resolve_cache_root,
)
from sigver.config import (
    RunConfig,
    graph_key,
    load_config,
    model_key,
    scores_key,
    serialize_config,
    skeleton_key,
)
from sigver.errors import CacheMissError, InputError, ManifestError, ParameterError
from sigver.manifest import load_manifest, serialize_manifest


def _write_corpus(root, users=("alice", "bob"), n_genuine=2, n_forgery=1):
    lines = ["dataset toy", "dpi 300", "references 2"]
    for user in users:
        lines.append(f"user {user}")
        for i in range(n_genuine):
            p = root / f"{user}_g{i}.pgm"
            p.write_bytes(b"P5\n1 1\n255\n\x00")
            lines.append(f"genuine {p.name}")
        for i in range(n_forgery):
            p = root / f"{user}_f{i}.pgm"
            p.write_bytes(b"P5\n1 1\n255\n\x00")
            lines.append(f"forgery {p.name}")
    manifest = root / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def test_manifest_parse_and_ids(tmp_path):
    path = _write_corpus(tmp_path)
    m = load_manifest(path)
    assert m.name == "toy"
    assert m.dpi == 300
    assert m.references == 2
    assert m.users == ("alice", "bob")
    assert m.genuine_ids("alice") == ["alice/g01", "alice/g02"]
    assert m.forgery_ids("bob") == ["bob/f01"]
    id_map = m.id_map()
    assert id_map["alice/g01"] == (tmp_path / "alice_g0.pgm").resolve()
    assert all(p.is_absolute() for p in id_map.values())
    assert m.missing_files() == []


def test_manifest_glob_expansion_is_sorted(tmp_path):
    for name in ("b.pgm", "a.pgm", "c.pgm"):
        (tmp_path / name).write_bytes(b"x")
    (tmp_path / "m.txt").write_text("user u1\ngenuine *.pgm\n")
    m = load_manifest(tmp_path / "m.txt")
    assert [p.name for p in m.genuine["u1"]] == ["a.pgm", "b.pgm", "c.pgm"]
    assert m.references == 10  # the default when the directive is absent


def test_manifest_errors(tmp_path):
    def load(text):
        p = tmp_path / "m.txt"
        p.write_text(text)
        return load_manifest(p)

    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "absent.txt")
    with pytest.raises(ManifestError, match="no users"):
        load("dataset empty\n")
    with pytest.raises(ManifestError, match="duplicate user"):
        load("user a\ngenuine x.pgm\nuser a\n")
    with pytest.raises(ManifestError, match="ASCII"):
        load("user café\n")
    with pytest.raises(ManifestError, match="without '/'"):
        load("user a/b\n")
    with pytest.raises(ManifestError, match="at least 2"):
        load("references 1\nuser a\ngenuine x.pgm\n")
    with pytest.raises(ManifestError, match="unknown directive"):
        load("wibble 3\n")
    with pytest.raises(ManifestError, match="before any user"):
        load("genuine x.pgm\n")
    with pytest.raises(ManifestError, match="matched no files"):
        load("user a\ngenuine nothing-*.pgm\n")
    with pytest.raises(ManifestError, match="without genuine"):
        load("user a\nforgery x.pgm\n")
    with pytest.raises(ManifestError, match="needs an argument"):
        load("user\n")


def test_manifest_serialize_round_trips(tmp_path):
    m = load_manifest(_write_corpus(tmp_path))
    normalized = tmp_path / "normalized.txt"
    normalized.write_text(serialize_manifest(m))
    again = load_manifest(normalized)
    assert again.users == m.users
    assert again.genuine == m.genuine
    assert again.forgery == m.forgery
    assert again.references == m.references
    # serialization is stable: absolute paths, no globs left
    assert serialize_manifest(again) == serialize_manifest(m)


def test_config_defaults_and_round_trip(tmp_path):
    cfg = RunConfig()
    assert cfg.graph_spacing == 25.0
    assert cfg.inkball_spacing == 6.0
    assert cfg.node_cost == 12.5
    assert cfg.edge_cost == 200.0
    assert cfg.augmented is True
    assert cfg.binarize_threshold is None
    path = tmp_path / "run.cfg"
    path.write_text(serialize_config(cfg))
    assert load_config(path) == cfg


def test_config_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "graph_spacing 50\n"
        "# a comment\n"
        "augmented false\n"
        "binarize_threshold 128\n"
        "decision_threshold_ged 1.25\n"
        "jobs 4\n"
    )
    cfg = load_config(path)
    assert cfg.graph_spacing == 50.0
    assert cfg.augmented is False
    assert cfg.binarize_threshold == 128
    assert cfg.decision_threshold_ged == 1.25
    assert cfg.jobs == 4
    assert cfg.sigma_narrow == 1.0  # untouched default


def test_config_rejects_unknown_and_malformed(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("graph_spacinng 50\n")
    with pytest.raises(ParameterError, match="unknown config key"):
        load_config(path)
    path.write_text("graph_spacing\n")
    with pytest.raises(ParameterError, match="key value"):
        load_config(path)
    path.write_text("augmented maybe\n")
    with pytest.raises(ParameterError, match="bad value"):
        load_config(path)
    with pytest.raises(ParameterError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_config_validation():
    with pytest.raises(ParameterError):
        RunConfig(sigma_narrow=2.0, sigma_wide=1.0)
    with pytest.raises(ParameterError):
        RunConfig(graph_spacing=0.0)
    with pytest.raises(ParameterError):
        RunConfig(fusion_weight=1.5)
    with pytest.raises(ParameterError):
        RunConfig(jobs=-1)
    with pytest.raises(ParameterError):
        RunConfig(binarize_threshold=300)


def test_cache_keys_change_with_relevant_parameters():
    base = RunConfig()
    assert skeleton_key(base) == skeleton_key(RunConfig(graph_spacing=50.0))
    assert graph_key(base) != graph_key(RunConfig(graph_spacing=50.0))
    assert model_key(base) == model_key(RunConfig(graph_spacing=50.0))
    assert model_key(base) != model_key(RunConfig(augmented=False))
    assert scores_key(base, "ged") != scores_key(RunConfig(node_cost=10.0), "ged")
    assert scores_key(base, "inkball") == scores_key(
        RunConfig(node_cost=10.0), "inkball"
    )
    assert scores_key(base, "inkball") != scores_key(
        RunConfig(energy_cap=32.0), "inkball"
    )
    with pytest.raises(ParameterError):
        scores_key(base, "mcs")


def test_artifact_keys_are_stable_and_distinct(tmp_path):
    image = tmp_path / "img.pgm"
    image.write_bytes(b"P5\n1 1\n255\n\x00")
    digest = file_digest(image)
    assert digest == file_digest(image)
    key = artifact_key(digest, "params v1")
    assert key == artifact_key(digest, "params v1")
    assert key != artifact_key(digest, "params v2")
    assert len(key) == 16
    assert len(params_hash("params v1")) == 8
    with pytest.raises(InputError):
        file_digest(tmp_path / "absent.pgm")


def test_resolve_cache_root(tmp_path, monkeypatch):
    assert resolve_cache_root(tmp_path / "c") == tmp_path / "c"
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "env"))
    assert resolve_cache_root(None) == tmp_path / "env"
    monkeypatch.delenv(CACHE_ENV)
    with pytest.raises(InputError):
        resolve_cache_root(None)


def test_cache_layout_and_manifest_requirement(tmp_path):
    cache = Cache(tmp_path / "cache")
    cache.ensure()
    for sub in ("skeletons", "graphs", "models", "scores"):
        assert (tmp_path / "cache" / sub).is_dir()
    assert cache.skeleton_path("abc").name == "abc.pgm"
    assert cache.graph_path("abc").name == "abc.txt"
    assert cache.scores_path("ged", "params", "u1").parent.name == (
        f"ged-{params_hash('params')}"
    )
    with pytest.raises(CacheMissError):
        cache.require_manifest()
    atomic_write_text(cache.manifest_path, "dataset x\n")
    assert cache.require_manifest() == cache.manifest_path
    assert cache.manifest_path.read_text() == "dataset x\n"
    assert not list(cache.root.glob("*.tmp*"))
