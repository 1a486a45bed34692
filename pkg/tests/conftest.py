"""Shared fixtures: seeded generators and pipeline runs over synthetic data.

The expensive fixtures are session-scoped and read-only; tests that need
to mutate a cache copy it first.
"""

from __future__ import annotations

import shutil

import numpy as np
import pytest

from sigver.cli import main as cli_main
from sigver.synth import write_synthetic_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def run_pipeline(root, manifest, jobs: int = 1, config=None) -> dict:
    """Ingest, extract, match, evaluate; returns the directory layout."""
    cache = root / "cache"
    out = root / "out"
    cfg = ["--config", str(config)] if config else []
    assert cli_main(["ingest", "--manifest", str(manifest), "--cache", str(cache)] + cfg) == 0
    assert cli_main(["extract", "--cache", str(cache), "--jobs", str(jobs)] + cfg) == 0
    assert cli_main(["match", "--cache", str(cache), "--jobs", str(jobs)] + cfg) == 0
    assert cli_main(["evaluate", "--cache", str(cache), "--out", str(out)] + cfg) == 0
    return {"root": root, "cache": cache, "out": out, "manifest": manifest}


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory):
    """The standard 10-user corpus: 6 genuine + 3 forgeries per user."""
    root = tmp_path_factory.mktemp("corpus10")
    manifest = write_synthetic_dataset(root / "data")
    return {"root": root, "manifest": manifest}


@pytest.fixture(scope="session")
def synthetic_run(synthetic_corpus, tmp_path_factory):
    """Full two-worker pipeline over the 10-user corpus. Read-only."""
    root = tmp_path_factory.mktemp("run10")
    return run_pipeline(root, synthetic_corpus["manifest"], jobs=2)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A quick 3-user corpus for command-line behavior tests."""
    root = tmp_path_factory.mktemp("corpus3")
    manifest = write_synthetic_dataset(
        root / "data", n_users=3, n_genuine=4, n_forgery=2, seed=11
    )
    return {"root": root, "manifest": manifest}


@pytest.fixture(scope="session")
def small_run(small_corpus, tmp_path_factory):
    """Full single-worker pipeline over the 3-user corpus. Read-only."""
    root = tmp_path_factory.mktemp("run3")
    return run_pipeline(root, small_corpus["manifest"], jobs=1)


@pytest.fixture
def small_run_copy(small_run, tmp_path):
    """A private mutable copy of the small run's cache and outputs."""
    copied = {"manifest": small_run["manifest"], "root": tmp_path}
    for key in ("cache", "out"):
        dst = tmp_path / key
        shutil.copytree(small_run[key], dst)
        copied[key] = dst
    return copied
