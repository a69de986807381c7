"""SVG line charts of the metric CSV, one series per sweep value."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import read_metrics  # noqa: E402

# keep text as <text> elements so legends stay searchable
matplotlib.rcParams["svg.fonttype"] = "none"

GROUPS = {
    "alignment": ("align_emp", "empirical kernel alignment"),
    "dof": ("dof", "degrees of freedom"),
    "test_mse": ("test_mse", "test error"),
    "param_align": ("param_align", "parameter alignment"),
}


def _series_key(rows):
    for key in ("tilde_sigma", "sigma", "mode"):
        if len({r[key] for r in rows}) > 1:
            return key
    return "sigma"


def _groups_for(key):
    if key == "tilde_sigma":
        return ("dof", "test_mse")
    if key == "mode":
        return ("test_mse", "alignment")
    return ("alignment", "dof")


def emit_plots(csv_path, out_dir) -> dict:
    """Write one SVG per metric group; returns ``{path: [series labels]}``.

    Seeds are averaged per step.  The series variable is whichever of
    tilde_sigma, sigma, mode varies across the file.
    """
    rows = read_metrics(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    key = _series_key(rows)
    series = defaultdict(lambda: defaultdict(list))
    for r in rows:
        series[r[key]][r["step"]].append(r)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for group in _groups_for(key):
        column, label = GROUPS[group]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        labels = []
        for value in sorted(series):
            steps = sorted(series[value])
            ys = [np.nanmean([r[column] for r in series[value][s]]) for s in steps]
            name = f"{key}={value:g}" if isinstance(value, float) else f"{key}={value}"
            ax.plot(steps, ys, marker="o" if len(steps) == 1 else None, label=name)
            labels.append(name)
        ax.set_xlabel("step")
        ax.set_ylabel(label)
        ax.legend()
        fig.tight_layout()
        path = out / f"{group}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written[str(path)] = labels
    return written
