import csv
import json
import math
import re

import numpy as np
import pytest

from mfldkernel.cli import main
from mfldkernel.config import RunConfig, get_preset
from mfldkernel.harness import baseline_frozen_features, read_metrics, run_experiment
from mfldkernel.plots import emit_plots
from mfldkernel.runner import CSV_COLUMNS, run_mfld

TINY = RunConfig(d=4, n_train=40, n_test=30, particles=12, steps=20, eval_every=10, mc_samples_alignment=200)

EXPECTED_HEADER = ("run_id,seed,mode,step,G,U,train_mse,test_mse,align_emp,align_pop,align_pop_stderr,"
                   "param_align,dof,mean_w_sq,mean_a_sq,sigma,tilde_sigma,wall_ms")


def _csv_without(path, drop=("wall_ms",)):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    keep = [i for i, name in enumerate(rows[0]) if name not in drop]
    return [[r[i] for i in keep] for r in rows]


def test_csv_schema_and_summary(tmp_path):
    summary = run_experiment(TINY, tmp_path)
    text = (tmp_path / "metrics.csv").read_text(encoding="utf-8")
    assert text.splitlines()[0] == EXPECTED_HEADER
    assert ",".join(CSV_COLUMNS) == EXPECTED_HEADER
    rows = read_metrics(tmp_path / "metrics.csv")
    assert [r["step"] for r in rows] == [0, 10, 20]
    assert all(math.isfinite(r[k]) for r in rows for k in ("G", "U", "test_mse", "align_emp", "align_pop", "dof"))
    saved = json.loads((tmp_path / "summary.json").read_text())
    assert saved["config"]["lambda"] == TINY.lambda_
    assert saved["runs"][0]["final"]["step"] == 20
    assert summary["seed_averages"][0]["n_seeds"] == 1
    assert saved["runs"][0]["lsi_alpha"] >= 0


def test_floats_round_trip_exactly(tmp_path):
    result = run_mfld(TINY)
    run_experiment(TINY, tmp_path)
    rows = read_metrics(tmp_path / "metrics.csv")
    assert rows[-1]["G"] == result.records[-1].G
    assert rows[-1]["test_mse"] == result.records[-1].test_mse


def test_steps_zero_gives_single_row(tmp_path):
    run_experiment(TINY.replace(steps=0), tmp_path)
    assert len(read_metrics(tmp_path / "metrics.csv")) == 1


def test_rerun_is_identical_except_wall_time(tmp_path):
    run_experiment(TINY, tmp_path / "a")
    run_experiment(TINY, tmp_path / "b")
    assert _csv_without(tmp_path / "a" / "metrics.csv") == _csv_without(tmp_path / "b" / "metrics.csv")


def test_sweep_expansion_writes_every_run(tmp_path):
    cfg = TINY.replace(steps=4, eval_every=2, n_seeds=2, sweep_param="sigma", sweep_values=(0.0, 0.5))
    summary = run_experiment(cfg, tmp_path)
    rows = read_metrics(tmp_path / "metrics.csv")
    assert len({r["run_id"] for r in rows}) == 4
    assert [a["sigma"] for a in summary["seed_averages"]] == [0.0, 0.5]


def test_frozen_baseline_has_constant_kernel(tmp_path):
    baseline_frozen_features(TINY, tmp_path)
    rows = read_metrics(tmp_path / "metrics.csv")
    assert {r["mode"] for r in rows} == {"frozen"}
    for key in ("align_emp", "dof", "param_align", "test_mse"):
        assert len({r[key] for r in rows}) == 1


def test_frozen_error_stabilises_as_width_doubles():
    cfg = get_preset("separation").replace(mode="frozen", steps=0, mc_samples_alignment=0)
    errs = [run_mfld(cfg.replace(particles=N)).records[-1].test_mse for N in (500, 1000, 2000, 4000)]
    rel = np.abs(np.diff(errs)) / np.array(errs[:-1])
    assert np.all(rel < 0.10), errs


def test_plots_reject_empty_csv(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text(EXPECTED_HEADER + "\n", encoding="utf-8")
    out = tmp_path / "fig"
    with pytest.raises(ValueError):
        emit_plots(path, out)
    assert not out.exists() or not any(out.iterdir())


def test_plots_single_row_uses_markers(tmp_path):
    run_experiment(TINY.replace(steps=0), tmp_path)
    written = emit_plots(tmp_path / "metrics.csv", tmp_path / "fig")
    assert len(written) == 2
    for path in written:
        assert "<path" in open(path, encoding="utf-8").read()


def test_fig1_style_sweep_gives_two_charts_with_three_series(tmp_path):
    cfg = get_preset("paper-fig1").replace(d=4, n_train=40, n_test=20, particles=10, steps=6, eval_every=3,
                                          n_seeds=2, mc_samples_alignment=0)
    run_experiment(cfg, tmp_path)
    written = emit_plots(tmp_path / "metrics.csv", tmp_path / "fig")
    assert sorted(p.rsplit("/", 1)[-1] for p in written) == ["alignment.svg", "dof.svg"]
    for path, labels in written.items():
        assert labels == ["sigma=0", "sigma=0.5", "sigma=1"]
        svg = open(path, encoding="utf-8").read()
        assert all(lbl in svg for lbl in labels)


def test_fig2_style_sweep_plots_dof_and_test_error(tmp_path):
    cfg = get_preset("paper-fig2").replace(d=4, n_train=40, n_test=20, particles=10, steps=4, eval_every=2,
                                          n_seeds=1, mc_samples_alignment=0)
    run_experiment(cfg, tmp_path)
    written = emit_plots(tmp_path / "metrics.csv", tmp_path / "fig")
    assert sorted(p.rsplit("/", 1)[-1] for p in written) == ["dof.svg", "test_mse.svg"]


def _write_config(tmp_path, **overrides):
    raw = {"d": 4, "n_train": 30, "n_test": 10, "particles": 8, "steps": 4, "eval_every": 2,
           "mc_samples_alignment": 0, **overrides}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_cli_train_modes(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    for sub in ("train", "train-ln", "baseline"):
        out = tmp_path / sub
        assert main([sub, "--config", cfg, "--seed", "3", "--out", str(out)]) == 0
        rows = read_metrics(out / "metrics.csv")
        assert {r["seed"] for r in rows} == {3}
    assert "wrote" in capsys.readouterr().out
    assert {r["mode"] for r in read_metrics(tmp_path / "train-ln" / "metrics.csv")} == {"label_noise"}


def test_cli_check_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert len(re.findall(r"^PASS", out, flags=re.M)) == 6


def test_cli_plot(tmp_path, capsys):
    run_experiment(TINY, tmp_path)
    assert main(["plot", str(tmp_path / "metrics.csv"), "--out", str(tmp_path / "fig")]) == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["plot", str(bad), "--out", str(tmp_path / "fig2")]) == 4


def test_cli_exit_codes(tmp_path):
    assert main(["train", "--preset", "no-such-preset"]) == 2
    assert main(["train", "--config", _write_config(tmp_path, eta=-1)]) == 2
    assert main(["train", "--config", str(tmp_path / "missing.json")]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["train", "--config", _write_config(tmp_path), "--out", str(blocker)]) == 4
    assert main(["train", "--config", _write_config(tmp_path, eta=1e9, **{"lambda": 1.0}),
                 "--out", str(tmp_path / "div")]) == 3
    # rows produced before the divergence are flushed
    assert len(read_metrics(tmp_path / "div" / "metrics.csv")) >= 1


@pytest.mark.slow
def test_fig1_preset_runs_with_finite_metrics(sweep):
    rows, _ = sweep("paper-fig1")
    assert len({r["run_id"] for r in rows}) == 15
    for r in rows:
        for key in ("G", "U", "train_mse", "test_mse", "align_emp", "dof", "param_align", "mean_w_sq"):
            assert np.isfinite(r[key]), (r["run_id"], r["step"], key)
