"""Training loop for one run: plain MFLD, label noise, or the frozen-feature baseline.

Checkpoint format (little-endian)::

    8 bytes   magic  b"MFLDCKP1"
    int64     step   index of the next step to execute
    int64     seed   run seed (noise streams are keyed by (seed, step), so
                     the step counter is the whole RNG cursor)
    ...              particle snapshot, see :mod:`mfldkernel.particles`
"""

from __future__ import annotations

import logging
import math
import struct
import time
from dataclasses import asdict, dataclass

import numpy as np

from .config import RunConfig
from .data import Dataset, gen_synthetic
from .diagnostics import (
    degrees_of_freedom,
    empirical_alignment,
    parameter_alignment,
    population_alignment,
    test_loss,
)
from .dynamics import MeasureState, evaluate_measure, mfld_step
from .errors import SnapshotFormatError, UndefinedAlignmentError
from .features import FeatureModel
from .label_noise import noisy_mfld_step
from .particles import ParticleCloud, dump_cloud, init_cloud, load_cloud, weighted_sigma
from .ridge import objectives

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "run_id", "seed", "mode", "step", "G", "U", "train_mse", "test_mse", "align_emp", "align_pop",
    "align_pop_stderr", "param_align", "dof", "mean_w_sq", "mean_a_sq", "sigma", "tilde_sigma", "wall_ms",
)

CHECKPOINT_MAGIC = b"MFLDCKP1"
_CKPT_HEADER = struct.Struct("<8sqq")

MODEL = FeatureModel.TANH_AFFINE


@dataclass(frozen=True)
class MetricsRecord:
    run_id: str
    seed: int
    mode: str
    step: int
    G: float
    U: float
    train_mse: float
    test_mse: float
    align_emp: float
    align_pop: float
    align_pop_stderr: float
    param_align: float
    dof: float
    mean_w_sq: float
    mean_a_sq: float
    sigma: float
    tilde_sigma: float
    wall_ms: float

    def as_row(self) -> dict:
        return asdict(self)


@dataclass
class Checkpoint:
    step: int
    seed: int
    cloud: ParticleCloud

    def to_bytes(self) -> bytes:
        return _CKPT_HEADER.pack(CHECKPOINT_MAGIC, self.step, self.seed) + dump_cloud(self.cloud)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Checkpoint":
        if len(buf) < _CKPT_HEADER.size:
            raise SnapshotFormatError("truncated checkpoint")
        magic, step, seed = _CKPT_HEADER.unpack_from(buf)
        if magic != CHECKPOINT_MAGIC:
            raise SnapshotFormatError(f"bad checkpoint magic {magic!r}")
        return cls(step=step, seed=seed, cloud=load_cloud(buf[_CKPT_HEADER.size:]))

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def run_id_for(config: RunConfig) -> str:
    return f"{config.mode}-s{config.seed}-sigma{config.sigma:g}-ts{config.tilde_sigma:g}"


def evaluate(config: RunConfig, dataset: Dataset, state: MeasureState, step: int, wall_ms: float) -> MetricsRecord:
    """Full diagnostics at the measure held by ``state``."""
    hyper = config.hyper
    cloud, sol = state.cloud, state.sol
    obj = objectives(sol, dataset.Y, cloud, hyper)
    sigma = sol.sigma if sol.sigma is not None else weighted_sigma(state.H, cloud.weights)
    try:
        align_emp = float(np.mean([empirical_alignment(sigma, dataset.f_clean[:, t])
                                   for t in range(dataset.f_clean.shape[1])]))
    except UndefinedAlignmentError:
        align_emp = math.nan
    if config.mc_samples_alignment > 0:
        try:
            align_pop, align_se = population_alignment(MODEL, cloud, dataset.target, dataset.d,
                                                       config.mc_samples_alignment, config.seed, step)
        except UndefinedAlignmentError:
            align_pop, align_se = math.nan, math.nan
    else:
        align_pop, align_se = math.nan, math.nan
    return MetricsRecord(
        run_id=run_id_for(config),
        seed=config.seed,
        mode=config.mode,
        step=step,
        G=obj.G,
        U=obj.U,
        train_mse=obj.train_mse,
        test_mse=test_loss(MODEL, cloud, sol, dataset.test_X, dataset.test_Y_clean),
        align_emp=align_emp,
        align_pop=align_pop,
        align_pop_stderr=align_se,
        param_align=parameter_alignment(cloud, dataset.target.directions),
        dof=degrees_of_freedom(sigma, hyper.bar_lambda_a, dataset.n),
        mean_w_sq=obj.w_sq_norm,
        mean_a_sq=obj.a_sq_norm,
        sigma=config.sigma,
        tilde_sigma=config.tilde_sigma if config.mode == "label_noise" else 0.0,
        wall_ms=wall_ms,
    )


@dataclass
class RunResult:
    config: RunConfig
    records: list
    cloud: ParticleCloud
    dataset: Dataset


def make_dataset(config: RunConfig) -> Dataset:
    return gen_synthetic(config.d, config.n_train, config.n_test, config.target, config.sigma,
                         config.kappa, config.seed)


def run_mfld(config: RunConfig, resume: Checkpoint | None = None, on_record=None,
             checkpoint_path=None, checkpoint_every: int = 0) -> RunResult:
    """Run ``config.steps`` steps and evaluate every ``eval_every`` steps and at the end.

    Rows are emitted for steps 0, eval_every, 2 * eval_every, ... and for the
    final measure at step ``config.steps``.  ``on_record`` is called with each
    row as soon as it is available.
    """
    config.validate()
    hyper = config.hyper.validate_strict()
    dataset = make_dataset(config)
    if resume is not None:
        if resume.seed != config.seed:
            raise ValueError("checkpoint seed does not match the config seed")
        cloud, start = resume.cloud, resume.step
    else:
        cloud, start = init_cloud(config.particles, config.d_prime, config.lambda_w, config.seed), 0
    step_fn = noisy_mfld_step if config.mode == "label_noise" else mfld_step
    records = []
    t0 = time.perf_counter()

    def emit(state, step):
        rec = evaluate(config, dataset, state, step, 1e3 * (time.perf_counter() - t0))
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    if config.mode == "frozen":
        # features never move; only the ridge solve runs
        state = evaluate_measure(MODEL, cloud, dataset.X, dataset.Y, hyper, config.solver)
        for step in range(start, config.steps + 1):
            if step % config.eval_every == 0 or step == config.steps:
                emit(state, step)
        return RunResult(config, records, cloud, dataset)

    for step in range(start, config.steps):
        state = evaluate_measure(MODEL, cloud, dataset.X, dataset.Y, hyper, config.solver)
        if step % config.eval_every == 0:
            emit(state, step)
        cloud, _ = step_fn(cloud, dataset, MODEL, hyper, config.seed, step, solver=config.solver, state=state)
        if checkpoint_path is not None and checkpoint_every and (step + 1) % checkpoint_every == 0:
            Checkpoint(step + 1, config.seed, cloud).save(checkpoint_path)
    emit(evaluate_measure(MODEL, cloud, dataset.X, dataset.Y, hyper, config.solver), config.steps)
    log.info("%s finished %d steps in %.1f s", run_id_for(config), config.steps - start, time.perf_counter() - t0)
    return RunResult(config, records, cloud, dataset)
