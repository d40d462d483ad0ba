"""CSV/JSON/SVG writers. Files are written to a temp name then renamed."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    # repr of a Python float is the shortest round-trip decimal, locale-free
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def meta_line(meta: dict | None) -> str:
    if not meta:
        return ""
    return "# " + " ".join(f"{k}={fmt(v) if not isinstance(v, str) else v}" for k, v in meta.items()) + "\n"


def atomic_write_text(path, text: str) -> Path:
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


def csv_text(columns, rows, meta: dict | None = None) -> str:
    lines = [meta_line(meta), ",".join(columns) + "\n"]
    lines.extend(",".join(fmt(v) for v in row) + "\n" for row in rows)
    return "".join(lines)


def write_csv(path, columns, rows, meta: dict | None = None) -> Path:
    return atomic_write_text(path, csv_text(columns, rows, meta))


def trajectory_rows(traj):
    """Rows for a Trajectory with undershoot below zero clamped away."""
    return np.column_stack([traj.times, traj.clamped()])


def control_rows(sol):
    return np.column_stack([sol.t, np.maximum(sol.S, 0.0), np.maximum(sol.R, 0.0),
                            sol.lambda1, sol.lambda2, sol.h1, sol.h2])


CONTROL_COLUMNS = ("t", "S", "R", "lambda1", "lambda2", "h1", "h2")
ATLAS_COLUMNS = ("R_s", "R_r", "h_s", "region")


def write_json(path, payload) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def overlay_plot(path, series, *, xlabel: str, ylabel: str, title: str = "") -> Path:
    """Line plot of ``series`` = [(label, x, y), ...] saved as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "amrcontrol", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for label, x, y in series:
            ax.plot(x, y, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".{path.name}.tmp")
        try:
            fig.savefig(tmp, format="svg", metadata={"Date": None})
            os.replace(tmp, path)
        finally:
            plt.close(fig)
            if tmp.exists():
                tmp.unlink()
    return path
