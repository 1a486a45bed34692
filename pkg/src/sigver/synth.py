"""Deterministic synthetic handwriting-like corpus.

Each user gets a reproducible "style": a few smoothly modulated strokes at
fixed canvas positions. Genuine samples re-render the style under small
endpoint, amplitude, and phase jitter; forgeries start from the same
style but add much larger modulation changes plus a global shear and
scale, imitating an imitator who reproduces the layout but not the
dynamics. Everything derives from explicit seed sequences, so any sample
can be regenerated independently of render order.

The corpus exists for tests and the built-in self checks; it makes no
attempt to look like any particular real dataset.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .imaging import GrayImage, save_pgm

CANVAS_HEIGHT = 96
CANVAS_WIDTH = 150
INK_VALUE = 30
_MARGIN = 14
_KIND_CODES = {"genuine": 1, "forgery": 2}


def _user_style(seed: int, user: int) -> list:
    """Stroke parameter tuples defining one user's signature."""
    rng = np.random.default_rng([seed, user, 0])
    strokes = []
    for _ in range(3):
        x0 = rng.uniform(_MARGIN, CANVAS_WIDTH * 0.35)
        x1 = rng.uniform(CANVAS_WIDTH * 0.6, CANVAS_WIDTH - _MARGIN)
        y0 = rng.uniform(_MARGIN, CANVAS_HEIGHT - _MARGIN)
        y1 = rng.uniform(_MARGIN, CANVAS_HEIGHT - _MARGIN)
        strokes.append(
            {
                "ends": np.array([x0, y0, x1, y1]),
                "amps": rng.uniform(4.0, 11.0, size=2),
                "freqs": np.array([rng.uniform(1.0, 2.2), rng.uniform(2.8, 4.5)]),
                "phases": rng.uniform(0.0, 2.0 * math.pi, size=2),
            }
        )
    return strokes


def _stroke_points(stroke: dict) -> np.ndarray:
    """Dense (x, y) polyline of one modulated stroke."""
    x0, y0, x1, y1 = stroke["ends"]
    length = math.hypot(x1 - x0, y1 - y0)
    n = max(16, int(length * 4))
    t = np.linspace(0.0, 1.0, n)
    bx = x0 + (x1 - x0) * t
    by = y0 + (y1 - y0) * t
    nx, ny = -(y1 - y0) / max(length, 1e-9), (x1 - x0) / max(length, 1e-9)
    wave = np.zeros_like(t)
    for amp, freq, phase in zip(stroke["amps"], stroke["freqs"], stroke["phases"]):
        wave += amp * np.sin(2.0 * math.pi * freq * t + phase)
    # taper keeps stroke ends anchored so jitter mostly bends the middle
    wave *= np.sin(math.pi * t) ** 0.5
    return np.stack([bx + wave * nx, by + wave * ny], axis=1)


def _jitter_style(strokes: list, rng, kind: str) -> list:
    out = []
    for stroke in strokes:
        if kind == "genuine":
            ends = stroke["ends"] + rng.normal(0.0, 1.0, size=4)
            amps = stroke["amps"] * rng.uniform(0.93, 1.07, size=2)
            freqs = stroke["freqs"].copy()
            phases = stroke["phases"] + rng.normal(0.0, 0.12, size=2)
        else:
            ends = stroke["ends"] + rng.normal(0.0, 3.0, size=4)
            amps = stroke["amps"] * rng.uniform(0.6, 1.5, size=2)
            freqs = stroke["freqs"] + rng.uniform(-0.5, 0.5, size=2)
            phases = stroke["phases"] + rng.normal(0.0, 0.9, size=2)
        out.append({"ends": ends, "amps": amps, "freqs": freqs, "phases": phases})
    return out


def _stamp_disks(canvas: np.ndarray, points: np.ndarray, radius: float) -> None:
    r = int(math.ceil(radius))
    span = np.arange(-r, r + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    disk = (dx * dx + dy * dy) <= radius * radius
    h, w = canvas.shape
    for x, y in points:
        cx, cy = int(round(x)), int(round(y))
        x_lo, x_hi = max(cx - r, 0), min(cx + r + 1, w)
        y_lo, y_hi = max(cy - r, 0), min(cy + r + 1, h)
        if x_lo >= x_hi or y_lo >= y_hi:
            continue
        window = disk[y_lo - cy + r : y_hi - cy + r, x_lo - cx + r : x_hi - cx + r]
        region = canvas[y_lo:y_hi, x_lo:x_hi]
        region[window] = np.minimum(region[window], INK_VALUE)


def render_signature(seed: int, user: int, kind: str, index: int) -> GrayImage:
    """One reproducible sample: white canvas, dark modulated strokes."""
    if kind not in _KIND_CODES:
        raise ParameterError(f"kind must be genuine or forgery, got {kind!r}")
    strokes = _user_style(seed, user)
    rng = np.random.default_rng([seed, user, _KIND_CODES[kind], index])
    strokes = _jitter_style(strokes, rng, kind)
    canvas = np.full((CANVAS_HEIGHT, CANVAS_WIDTH), 255, dtype=np.uint8)
    cx, cy = CANVAS_WIDTH / 2.0, CANVAS_HEIGHT / 2.0
    if kind == "forgery":
        shear = rng.uniform(-0.18, 0.18)
        scale = rng.uniform(0.88, 1.12)
    for stroke in strokes:
        points = _stroke_points(stroke)
        if kind == "forgery":
            x = cx + scale * (points[:, 0] - cx) + shear * (points[:, 1] - cy)
            y = cy + scale * (points[:, 1] - cy)
            points = np.stack([x, y], axis=1)
        _stamp_disks(canvas, points, radius=1.7)
    return GrayImage(canvas)


def write_synthetic_dataset(
    directory,
    n_users: int = 10,
    n_genuine: int = 6,
    n_forgery: int = 3,
    seed: int = 7,
    references: int = 3,
) -> Path:
    """Render a full corpus to PGM files plus a manifest; returns its path."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    lines = ["dataset synthetic", f"references {references}"]
    for user in range(1, n_users + 1):
        uid = f"u{user:02d}"
        (root / uid).mkdir(exist_ok=True)
        lines.append(f"user {uid}")
        for idx in range(1, n_genuine + 1):
            rel = f"{uid}/g{idx:02d}.pgm"
            save_pgm(render_signature(seed, user, "genuine", idx), root / rel)
            lines.append(f"genuine {rel}")
        for idx in range(1, n_forgery + 1):
            rel = f"{uid}/f{idx:02d}.pgm"
            save_pgm(render_signature(seed, user, "forgery", idx), root / rel)
            lines.append(f"forgery {rel}")
    manifest = root / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="ascii")
    return manifest
