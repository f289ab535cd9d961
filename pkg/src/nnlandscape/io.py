"""Flat text formats for ground truth, weights and key=value configs."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import GroundTruth
from .optimize import Weights

__all__ = [
    "FormatError",
    "format_gt",
    "format_weights",
    "parse_config",
    "parse_gt",
    "parse_weights",
    "read_config",
    "read_gt",
    "read_weights",
    "write_gt",
    "write_weights",
]


class FormatError(ValueError):
    """A text file does not follow the expected layout."""


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _numbers(line: str, count: int, what: str) -> np.ndarray:
    parts = line.split()
    if len(parts) != count:
        raise FormatError(f"{what}: expected {count} numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise FormatError(f"{what}: {exc}") from None


def _lines(text: str) -> list:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def format_gt(gt: GroundTruth) -> str:
    """Header ``d m noise_std``, then a_star, then one line per row of B_star."""
    out = [f"{gt.d} {gt.m} {_fmt(gt.noise_std)}", _row(gt.a_star)]
    out += [_row(r) for r in gt.B_star]
    return "\n".join(out) + "\n"


def parse_gt(text: str) -> GroundTruth:
    lines = _lines(text)
    if not lines:
        raise FormatError("empty ground-truth file")
    head = lines[0].split()
    if len(head) != 3:
        raise FormatError("ground-truth header must be 'd m noise_std'")
    try:
        d, m, noise = int(head[0]), int(head[1]), float(head[2])
    except ValueError as exc:
        raise FormatError(f"bad header: {exc}") from None
    if len(lines) != 2 + m:
        raise FormatError(f"expected {2 + m} lines, got {len(lines)}")
    a = _numbers(lines[1], m, "a_star")
    B = np.vstack([_numbers(lines[2 + i], d, f"row {i}") for i in range(m)])
    return GroundTruth(a, B, noise)


def format_weights(w: Weights) -> str:
    """Header ``m d has_a``, then a (when present), then the rows of B."""
    m, d = w.B.shape
    has_a = w.a is not None
    out = [f"{m} {d} {int(has_a)}"]
    if has_a:
        out.append(_row(w.a))
    out += [_row(r) for r in w.B]
    return "\n".join(out) + "\n"


def parse_weights(text: str) -> Weights:
    lines = _lines(text)
    if not lines:
        raise FormatError("empty weights file")
    head = lines[0].split()
    if len(head) != 3:
        raise FormatError("weights header must be 'm d has_a'")
    try:
        m, d, has_a = int(head[0]), int(head[1]), int(head[2])
    except ValueError as exc:
        raise FormatError(f"bad header: {exc}") from None
    if has_a not in (0, 1):
        raise FormatError("has_a must be 0 or 1")
    if len(lines) != 1 + has_a + m:
        raise FormatError(f"expected {1 + has_a + m} lines, got {len(lines)}")
    a = _numbers(lines[1], m, "a") if has_a else None
    B = np.vstack([_numbers(lines[1 + has_a + i], d, f"row {i}") for i in range(m)])
    return Weights(B, a)


def parse_config(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Values stay strings."""
    cfg = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError(f"line {n}: empty key")
        cfg[key.replace("-", "_")] = value
    return cfg


def read_gt(path) -> GroundTruth:
    return parse_gt(Path(path).read_text())


def write_gt(path, gt: GroundTruth) -> None:
    Path(path).write_text(format_gt(gt))


def read_weights(path) -> Weights:
    return parse_weights(Path(path).read_text())


def write_weights(path, w: Weights) -> None:
    Path(path).write_text(format_weights(w))


def read_config(path) -> dict:
    return parse_config(Path(path).read_text())
