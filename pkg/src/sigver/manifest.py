"""Dataset manifests: which image files belong to which user and role.

A manifest is a line-oriented text file read top to bottom:

    dataset <name>            optional, informational
    dpi <number>              optional, informational
    references <count>        optional, default 10: genuine signatures per
                              user reserved as the reference set
    user <id>                 starts a user block
    genuine <path-or-glob>    appends files to the current user
    forgery <path-or-glob>    likewise for skilled forgeries

Blank lines and '#' comments are ignored. Relative paths and globs
resolve against the manifest's own directory; a glob expands sorted, so
file order is reproducible. Line order is significant: the first
``references`` genuine entries of each user form its reference set.

Every file gets a stable id like ``u01/g03`` — user id, role letter, and
1-based position — independent of where the files live, so score
matrices stay comparable across machines.
"""

from __future__ import annotations

import glob as globlib
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

_GLOB_CHARS = set("*?[")


@dataclass(frozen=True)
class DatasetManifest:
    """Parsed, fully expanded manifest with absolute file paths."""

    name: str
    dpi: int | None
    references: int
    users: tuple
    genuine: dict
    forgery: dict
    base_dir: Path

    def genuine_ids(self, user: str) -> list:
        return [f"{user}/g{i + 1:02d}" for i in range(len(self.genuine[user]))]

    def forgery_ids(self, user: str) -> list:
        return [f"{user}/f{i + 1:02d}" for i in range(len(self.forgery[user]))]

    def id_map(self) -> dict:
        """Every sample id mapped to its absolute path."""
        out = {}
        for user in self.users:
            for sid, path in zip(self.genuine_ids(user), self.genuine[user]):
                out[sid] = path
            for sid, path in zip(self.forgery_ids(user), self.forgery[user]):
                out[sid] = path
        return out

    def missing_files(self) -> list:
        return sorted(
            str(path) for path in self.id_map().values() if not path.is_file()
        )


def _expand(token: str, base: Path, lineno: int) -> list:
    path = Path(token)
    if not _GLOB_CHARS & set(token):
        return [path if path.is_absolute() else base / path]
    pattern = token if path.is_absolute() else str(base / token)
    matches = sorted(globlib.glob(pattern))
    if not matches:
        raise ManifestError(f"line {lineno}: glob {token!r} matched no files")
    return [Path(m) for m in matches]


def load_manifest(path) -> DatasetManifest:
    """Parse and expand a manifest file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent.resolve()
    name = "unnamed"
    dpi = None
    references = 10
    users: list = []
    genuine: dict = {}
    forgery: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        directive = parts[0]
        arg = parts[1].strip() if len(parts) > 1 else ""
        if not arg:
            raise ManifestError(f"line {lineno}: {directive!r} needs an argument")
        if directive == "dataset":
            name = arg
        elif directive == "dpi":
            try:
                dpi = int(arg)
            except ValueError:
                raise ManifestError(f"line {lineno}: dpi must be an integer") from None
        elif directive == "references":
            try:
                references = int(arg)
            except ValueError:
                raise ManifestError(
                    f"line {lineno}: references must be an integer"
                ) from None
            if references < 2:
                raise ManifestError(f"line {lineno}: references must be at least 2")
        elif directive == "user":
            if arg in genuine:
                raise ManifestError(f"line {lineno}: duplicate user {arg!r}")
            if "/" in arg or not arg.isascii():
                raise ManifestError(
                    f"line {lineno}: user id must be ASCII without '/'"
                )
            current = arg
            users.append(arg)
            genuine[arg] = []
            forgery[arg] = []
        elif directive in ("genuine", "forgery"):
            if current is None:
                raise ManifestError(
                    f"line {lineno}: {directive} entry before any user"
                )
            target = genuine if directive == "genuine" else forgery
            target[current].extend(_expand(arg, base, lineno))
        else:
            raise ManifestError(f"line {lineno}: unknown directive {directive!r}")
    if not users:
        raise ManifestError(f"{path}: manifest declares no users")
    empty = [u for u in users if not genuine[u]]
    if empty:
        raise ManifestError(
            f"{path}: users without genuine signatures: {', '.join(empty)}"
        )
    return DatasetManifest(
        name=name,
        dpi=dpi,
        references=references,
        users=tuple(users),
        genuine={u: [p.resolve() for p in genuine[u]] for u in users},
        forgery={u: [p.resolve() for p in forgery[u]] for u in users},
        base_dir=base,
    )


def serialize_manifest(manifest: DatasetManifest) -> str:
    """Normalized form: absolute paths, no globs, one file per line."""
    lines = [f"dataset {manifest.name}"]
    if manifest.dpi is not None:
        lines.append(f"dpi {manifest.dpi}")
    lines.append(f"references {manifest.references}")
    for user in manifest.users:
        lines.append(f"user {user}")
        for path in manifest.genuine[user]:
            lines.append(f"genuine {path}")
        for path in manifest.forgery[user]:
            lines.append(f"forgery {path}")
    return "\n".join(lines) + "\n"
