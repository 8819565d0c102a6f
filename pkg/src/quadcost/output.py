"""CSV/JSON writers and optional static SVG rendering.

Files are written to a temporary sibling and renamed into place. CSV floats
use 17 significant digits so that binary64 values round-trip exactly.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = [
    "fmt_float",
    "render_paths_svg",
    "render_surface_svg",
    "write_csv",
    "write_json",
    "write_text_atomic",
]


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_text_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt_float(v)


def write_csv(path, header, rows) -> Path:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return write_text_atomic(path, "\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, obj) -> Path:
    return write_text_atomic(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "quadcost"
    return plt


def _save_svg(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    os.replace(tmp, path)
    return path


def render_surface_svg(path, s_grid, xi_grid, values, merton_dollars=None, title="G0 + sqrt(eps) G1") -> Path:
    """Heat map of a surface over a rectangular ``(s, xi)`` grid, with the Merton curve overlaid."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(s_grid, xi_grid, values, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax)
    if merton_dollars is not None:
        s_line = np.unique(s_grid)
        ax.plot(s_line, merton_dollars / s_line, "w--", lw=1, label="Merton line")
        ax.legend(loc="upper right")
    ax.set_xlabel("s")
    ax.set_ylabel("xi")
    ax.set_title(title)
    try:
        return _save_svg(fig, path)
    finally:
        plt.close(fig)


def render_paths_svg(path, times, series: dict, ylabel="wealth", title=None) -> Path:
    """Line chart of one or more aligned series against time."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, ys in series.items():
        ax.plot(times[: len(ys)], ys, lw=0.8, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    try:
        return _save_svg(fig, path)
    finally:
        plt.close(fig)
