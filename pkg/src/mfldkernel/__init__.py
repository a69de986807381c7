"""Two-timescale mean-field Langevin training of two-layer networks.

The second layer is solved exactly (kernel ridge regression) at every step
and the first-layer particles follow noisy gradient descent on the first
variation of the resulting objective.
"""

from .config import PRESETS, RunConfig, get_preset, load_config
from .data import Dataset, gen_synthetic
from .dynamics import first_variation, grad_first_variation, lsi_alpha, mfld_step
from .features import FeatureModel, feature_grad, feature_matrix, feature_value
from .label_noise import noisy_mfld_step, regularized_objective, sample_label_noise, sigma_condition
from .particles import ParticleCloud, init_cloud, mixture_measure, weighted_sigma
from .ridge import Hyperparams, RidgeSolution, fit_second_layer, objectives, predict, second_layer_values
from .runner import MetricsRecord, run_mfld

__version__ = "0.1.0"
