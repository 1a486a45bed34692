"""Run configuration: every tunable of the pipeline in one flat file.

The file holds ``key value`` lines (# comments and blank lines ignored);
every key has a default, so an empty or absent file is a valid
configuration. Unknown keys are rejected rather than ignored — a typo
silently reverting a parameter to its default would poison cached
results.

The canonical parameter strings built here feed the content-addressed
cache: two runs share an artifact exactly when the bytes of the source
image and the relevant parameter string agree.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ParameterError


@dataclass(frozen=True)
class RunConfig:
    """All pipeline parameters with their stock defaults."""

    sigma_narrow: float = 1.0
    sigma_wide: float = 2.0
    binarize_threshold: int | None = None
    graph_spacing: float = 25.0
    node_cost: float = 12.5
    edge_cost: float = 200.0
    inkball_spacing: float = 6.0
    energy_cap: float = 64.0
    angle_weight: float = 64.0
    augmented: bool = True
    data_weight: float = 1.0
    fusion_weight: float = 0.5
    decision_threshold_ged: float | None = None
    decision_threshold_inkball: float | None = None
    decision_threshold_mcs: float | None = None
    jobs: int = 0

    def __post_init__(self):
        if self.sigma_narrow <= 0 or self.sigma_wide <= 0:
            raise ParameterError("blur widths must be positive")
        if self.sigma_narrow >= self.sigma_wide:
            raise ParameterError(
                "sigma_narrow must be smaller than sigma_wide"
            )
        if self.binarize_threshold is not None and not (
            0 <= self.binarize_threshold <= 255
        ):
            raise ParameterError("binarize_threshold must be in [0, 255] or otsu")
        if self.graph_spacing <= 0 or self.inkball_spacing <= 0:
            raise ParameterError("sampling spacings must be positive")
        if self.node_cost <= 0 or self.edge_cost < 0:
            raise ParameterError(
                "node_cost must be positive and edge_cost nonnegative"
            )
        if self.energy_cap <= 0:
            raise ParameterError("energy_cap must be positive")
        if self.angle_weight < 0 or self.data_weight < 0:
            raise ParameterError("weights must be nonnegative")
        if not 0.0 <= self.fusion_weight <= 1.0:
            raise ParameterError("fusion_weight must be in [0, 1]")
        if self.jobs < 0:
            raise ParameterError("jobs must be 0 (all cores) or positive")


_FLOAT_KEYS = {
    "sigma_narrow",
    "sigma_wide",
    "graph_spacing",
    "node_cost",
    "edge_cost",
    "inkball_spacing",
    "energy_cap",
    "angle_weight",
    "data_weight",
    "fusion_weight",
}
_OPTIONAL_FLOAT_KEYS = {
    "decision_threshold_ged",
    "decision_threshold_inkball",
    "decision_threshold_mcs",
}


def _parse_value(key: str, text: str):
    try:
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _OPTIONAL_FLOAT_KEYS:
            return None if text == "none" else float(text)
        if key == "binarize_threshold":
            return None if text == "otsu" else int(text)
        if key == "augmented":
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        if key == "jobs":
            return int(text)
    except ValueError:
        raise ParameterError(f"bad value {text!r} for config key {key}") from None
    raise ParameterError(f"unknown config key {key!r}")


def load_config(path) -> RunConfig:
    """Defaults overridden by whatever the file sets."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ParameterError(f"{path} line {lineno}: expected 'key value'")
        key, value = parts[0], parts[1].strip()
        if key not in known:
            raise ParameterError(f"{path} line {lineno}: unknown config key {key!r}")
        overrides[key] = _parse_value(key, value)
    return replace(RunConfig(), **overrides)


def _format_value(key: str, value) -> str:
    if value is None:
        return "otsu" if key == "binarize_threshold" else "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def serialize_config(config: RunConfig) -> str:
    return (
        "\n".join(
            f"{f.name} {_format_value(f.name, getattr(config, f.name))}"
            for f in fields(RunConfig)
        )
        + "\n"
    )


def skeleton_key(config: RunConfig) -> str:
    """Canonical parameters of the image -> skeleton stage."""
    thr = "otsu" if config.binarize_threshold is None else config.binarize_threshold
    return (
        f"skeleton dog {config.sigma_narrow!r} {config.sigma_wide!r} thr {thr}"
    )


def graph_key(config: RunConfig) -> str:
    return f"{skeleton_key(config)} | graph {config.graph_spacing!r}"


def model_key(config: RunConfig) -> str:
    aug = "aug" if config.augmented else "plain"
    return f"{skeleton_key(config)} | inkball {config.inkball_spacing!r} {aug}"


def scores_key(config: RunConfig, system: str) -> str:
    """Everything that can change one system's distance matrix."""
    if system == "ged":
        return (
            f"{graph_key(config)} | ged hed "
            f"{config.node_cost!r} {config.edge_cost!r}"
        )
    if system == "inkball":
        return (
            f"{model_key(config)} | match {config.energy_cap!r} "
            f"{config.angle_weight!r} {config.data_weight!r}"
        )
    raise ParameterError(f"unknown score system {system!r}")
