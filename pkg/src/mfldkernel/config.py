"""Run configuration, JSON config files and named presets.

A config file is a flat JSON object whose keys are the field names of
:class:`RunConfig` (``lambda`` is accepted for ``lambda_``).  Two optional
keys describe a sweep: ``sweep_param`` names one numeric field and
``sweep_values`` lists its values; ``n_seeds`` repeats every point over
consecutive seeds starting at ``seed``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields

from .data import TARGET_KINDS
from .errors import ConfigError
from .ridge import Hyperparams

MODES = ("mfld", "label_noise", "frozen")
SOLVERS = ("dense", "woodbury", "auto")
SWEEPABLE = ("sigma", "tilde_sigma", "eta", "lambda_", "lambda_a", "lambda_w", "particles", "n_train")


@dataclass(frozen=True)
class RunConfig:
    d: int = 15
    n_train: int = 500
    n_test: int = 2000
    particles: int = 500
    steps: int = 2000
    eval_every: int = 25
    seed: int = 0
    eta: float = 0.2
    lambda_: float = 0.004
    lambda_a: float = 0.25
    lambda_w: float = 0.25
    sigma: float = 0.0
    tilde_sigma: float = 0.0
    target: str = "product12"
    kappa: float = 2.0
    mode: str = "mfld"
    mc_samples_alignment: int = 20000
    solver: str = "dense"
    output: str = "runs"
    n_seeds: int = 1
    sweep_param: str | None = None
    sweep_values: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        self.validate()

    def validate(self):
        for name in ("d", "n_train", "n_test", "particles", "eval_every", "n_seeds"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.target not in TARGET_KINDS:
            raise ConfigError(f"target must be one of {TARGET_KINDS}, got {self.target!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.mc_samples_alignment != 0 and self.mc_samples_alignment < 100:
            raise ConfigError("mc_samples_alignment must be 0 (disabled) or at least 100")
        if self.sigma < 0 or self.tilde_sigma < 0:
            raise ConfigError("sigma and tilde_sigma must be non-negative")
        for name in ("eta", "lambda_", "lambda_a", "lambda_w"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.sweep_param is not None:
            if self.sweep_param not in SWEEPABLE:
                raise ConfigError(f"sweep_param must be one of {SWEEPABLE}")
            if not self.sweep_values:
                raise ConfigError("sweep_values must be non-empty when sweep_param is set")

    @property
    def hyper(self) -> Hyperparams:
        return Hyperparams(lambda_=self.lambda_, lambda_a=self.lambda_a, lambda_w=self.lambda_w,
                           eta=self.eta, tilde_sigma=self.tilde_sigma)

    @property
    def d_prime(self) -> int:
        return self.d + 1

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def expand(self) -> list["RunConfig"]:
        """Single-run configs for every (sweep value, seed) pair."""
        points = [{}] if self.sweep_param is None else [{self.sweep_param: v} for v in self.sweep_values]
        runs = []
        for point in points:
            for k in range(self.n_seeds):
                runs.append(self.replace(seed=self.seed + k, n_seeds=1, sweep_param=None, sweep_values=(), **point))
        return runs

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            key = "lambda" if f.name == "lambda_" else f.name
            value = getattr(self, f.name)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out


def from_dict(raw: dict) -> RunConfig:
    names = {f.name for f in fields(RunConfig)}
    kwargs = {}
    for key, value in raw.items():
        name = "lambda_" if key == "lambda" else key
        if name not in names:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[name] = value
    try:
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def read_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return raw


def load_config(path) -> RunConfig:
    return from_dict(read_config_file(path))


_DESK = RunConfig()

PRESETS: dict[str, RunConfig] = {
    "desk": _DESK,
    # intrinsic-noise sweep, desk scale
    "paper-fig1": _DESK.replace(mode="mfld", n_seeds=5, sweep_param="sigma", sweep_values=(0.0, 0.5, 1.0)),
    # full width and iteration count; not meant for CI
    "paper-fig1-full": _DESK.replace(n_train=1000, particles=2000, steps=10000, eval_every=100, mode="mfld",
                                     n_seeds=5, sweep_param="sigma", sweep_values=(0.0, 0.5, 1.0)),
    "paper-fig2": _DESK.replace(mode="label_noise", sigma=0.5, n_seeds=5, sweep_param="tilde_sigma",
                                sweep_values=(0.0, 0.5, 1.0)),
    "paper-fig2-full": _DESK.replace(n_train=1000, particles=2000, steps=10000, eval_every=100, mode="label_noise",
                                     sigma=0.5, n_seeds=5, sweep_param="tilde_sigma", sweep_values=(0.0, 0.5, 1.0)),
    "separation": _DESK.replace(d=30, target="single_index_tanh", n_seeds=5),
}


def get_preset(name: str) -> RunConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
