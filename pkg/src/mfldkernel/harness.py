"""Experiment orchestration: sweeps over seeds and parameters, CSV and summary output.

``metrics.csv`` has one row per evaluation with the columns of
:data:`mfldkernel.runner.CSV_COLUMNS`; floats are written with ``repr`` so
they round-trip exactly.  ``summary.json`` holds the config, the final row
of every run, per-point seed averages and timing.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from collections import defaultdict
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dynamics import lsi_alpha, max_stable_eta
from .runner import CSV_COLUMNS, MetricsRecord, run_mfld

log = logging.getLogger(__name__)


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class MetricsWriter:
    """Streams metric rows to CSV, flushing after every row."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(CSV_COLUMNS)

    def write(self, record: MetricsRecord):
        row = record.as_row()
        self._writer.writerow([format_value(row[c]) for c in CSV_COLUMNS])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> list[dict]:
    """Parse a metrics CSV back into typed dicts."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise ValueError(f"{path}: header does not match the metrics schema")
        rows = []
        for raw in reader:
            row = {}
            for key in CSV_COLUMNS:
                value = raw[key]
                if value is None:
                    raise ValueError(f"{path}: row {reader.line_num} is missing columns")
                if key in ("run_id", "mode"):
                    row[key] = value
                elif key in ("seed", "step"):
                    row[key] = int(value)
                else:
                    row[key] = float(value)
            rows.append(row)
    return rows


def run_metadata(config: RunConfig, c_l: float) -> dict:
    hyper = config.hyper
    return {"lsi_alpha": lsi_alpha(hyper, c_l), "c_l": c_l, "max_stable_eta": max_stable_eta(hyper, c_l)}


def _seed_average(finals: list[dict]) -> list[dict]:
    groups = defaultdict(list)
    for row in finals:
        groups[(row["mode"], row["sigma"], row["tilde_sigma"])].append(row)
    out = []
    for (mode, sigma, ts), rows in sorted(groups.items()):
        entry = {"mode": mode, "sigma": sigma, "tilde_sigma": ts, "n_seeds": len(rows)}
        for key in ("G", "U", "train_mse", "test_mse", "align_emp", "align_pop", "param_align", "dof"):
            entry[key] = float(np.mean([r[key] for r in rows]))
        out.append(entry)
    return out


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def run_experiment(config: RunConfig, out_dir=None) -> dict:
    """Run every (sweep point, seed) of ``config`` and write CSV plus summary.

    Returns the summary dict.  Errors (including divergence) propagate after
    the rows produced so far have been flushed.
    """
    out = Path(out_dir if out_dir is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "metrics.csv"
    t0 = time.perf_counter()
    finals, runs = [], []
    with MetricsWriter(csv_path) as writer:
        for run_cfg in config.expand():
            log.info("running %s seed=%d sigma=%g tilde_sigma=%g", run_cfg.mode, run_cfg.seed, run_cfg.sigma,
                     run_cfg.tilde_sigma)
            result = run_mfld(run_cfg, on_record=writer.write)
            final = result.records[-1].as_row()
            finals.append(final)
            c_l = float(np.max(np.abs(result.dataset.Y)))
            runs.append({"run_id": final["run_id"], "seed": run_cfg.seed, **run_metadata(run_cfg, c_l),
                         "final": final})
    summary = {
        "config": config.to_dict(),
        "csv": str(csv_path),
        "runs": runs,
        "seed_averages": _seed_average(finals),
        "runtime_s": time.perf_counter() - t0,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(_json_safe(summary), fh, indent=2)
    return summary


def baseline_frozen_features(config: RunConfig, out_dir=None) -> dict:
    """Fixed-kernel comparator: the initial features with only the ridge solve."""
    return run_experiment(config.replace(mode="frozen"), out_dir)
