"""Content-addressed artifact store shared by all pipeline stages.

Layout under one cache root, which serves exactly one dataset:

    manifest.txt              normalized manifest persisted at ingest
    skeletons/<key>.pgm       thinned binary images
    graphs/<key>.txt          keypoint graphs
    models/<key>.txt          inkball models
    scores/<system>-<h8>/<user>.csv   distance matrices per user

``<key>`` is the first 16 hex digits of a digest over the source image
bytes plus the canonical parameter string of the producing stage, so a
parameter change simply addresses different artifacts and never
invalidates anything in place. Writes go through a temporary file and an
atomic rename; a killed run leaves either the old artifact or none.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

from .errors import CacheMissError, InputError

CACHE_ENV = "SIGVER_CACHE"


def resolve_cache_root(explicit=None) -> Path:
    """Command-line path if given, else the environment override."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    raise InputError(
        f"no cache directory: pass --cache or set {CACHE_ENV}"
    )


def file_digest(path) -> str:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return hashlib.sha256(data).hexdigest()


def artifact_key(image_digest: str, params: str) -> str:
    blob = f"{image_digest}\n{params}".encode("ascii")
    return hashlib.sha256(blob).hexdigest()[:16]


def params_hash(params: str) -> str:
    """Short tag distinguishing score directories of different runs."""
    return hashlib.sha256(params.encode("ascii")).hexdigest()[:8]


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


class Cache:
    """Path arithmetic over one cache root; creates directories lazily."""

    def __init__(self, root):
        self.root = Path(root)

    def ensure(self) -> None:
        for sub in ("skeletons", "graphs", "models", "scores"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.txt"

    def require_manifest(self) -> Path:
        if not self.manifest_path.is_file():
            raise CacheMissError(
                f"{self.root} has no ingested manifest; run ingest first"
            )
        return self.manifest_path

    def skeleton_path(self, key: str) -> Path:
        return self.root / "skeletons" / f"{key}.pgm"

    def graph_path(self, key: str) -> Path:
        return self.root / "graphs" / f"{key}.txt"

    def model_path(self, key: str) -> Path:
        return self.root / "models" / f"{key}.txt"

    def scores_dir(self, system: str, params: str) -> Path:
        return self.root / "scores" / f"{system}-{params_hash(params)}"

    def scores_path(self, system: str, params: str, user: str) -> Path:
        return self.scores_dir(system, params) / f"{user}.csv"
