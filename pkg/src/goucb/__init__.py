"""Global optimization with a parametric surrogate and a gradient-based confidence ellipsoid."""
from .acquisition import AcquisitionConfig, project_to_ball, select_point, ucb_value
from .bench import RunConfig, calibrate_beta_scale, run_one, run_suite
from .engine import (BetaSchedule, ConfidenceBall, GeometryConstants, UCBEngine, beta, init_covariance,
                     lemma_diagnostics, mahalanobis_sq, rank_one_update, solve_w_hat)
from .errors import ConfigError, InputError, NumericalError, StateError
from .model import AffineModel, TwoLayerSigmoidNet, evaluate, gradient_norm_bound
from .objectives import NoisyOracle, RegretTrace, f1, f2, f3, get_objective, select_output
from .phase1 import Dataset, Phase1Config, expected_loss, fit, sample_uniform

__version__ = "0.1.0"
