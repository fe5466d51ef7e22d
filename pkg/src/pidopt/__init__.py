"""PID-family adaptive gradient optimizers and their benchmark harness.

The nine step rules (momentum SGD, Adam, AMSGrad, DiffGrad, PID, AdaPID,
AdaPID-AMS, AdaPID-Diff, IAdaPID-ADG) live in :mod:`pidopt.optimizers`;
:class:`pidopt.estimator.MlpClassifier` wraps them in a scikit-learn
compatible classifier; :mod:`pidopt.oracle` holds the independent scalar
re-implementations every rule is verified against.
"""

from .core import FloatVector, HyperParams, OptimizerState, bias_correct, modulation_factor
from .data import Batch, Dataset, batch_iter, load_idx, save_idx, synth_blobs
from .estimator import MlpClassifier
from .harness import RunConfig, RunMetrics, SynthSpec, run_ablation, run_synth, \
    run_training, write_metrics_csv
from .network import MlpModel, evaluate, forward, he_init, mlp_loss_and_grad, \
    params_to_vector, set_params_from_vector
from .objectives import quadratic_eval, rosenbrock_eval
from .optimizers import ALGORITHMS, Optimizer, StepResult, adam_step, adapid_ams_step, \
    adapid_diff_step, adapid_step, amsgrad_step, diffgrad_step, iadapid_adg_step, \
    init_state, momentum_sgd_step, pid_step
from .oracle import ScalarState, finite_diff_grad, scalar_step
from .verification import verify

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "Batch",
    "Dataset",
    "FloatVector",
    "HyperParams",
    "MlpClassifier",
    "MlpModel",
    "Optimizer",
    "OptimizerState",
    "RunConfig",
    "RunMetrics",
    "ScalarState",
    "StepResult",
    "SynthSpec",
    "adam_step",
    "adapid_ams_step",
    "adapid_diff_step",
    "adapid_step",
    "amsgrad_step",
    "batch_iter",
    "bias_correct",
    "diffgrad_step",
    "evaluate",
    "finite_diff_grad",
    "forward",
    "he_init",
    "iadapid_adg_step",
    "init_state",
    "load_idx",
    "mlp_loss_and_grad",
    "modulation_factor",
    "momentum_sgd_step",
    "params_to_vector",
    "pid_step",
    "quadratic_eval",
    "rosenbrock_eval",
    "run_ablation",
    "run_synth",
    "run_training",
    "save_idx",
    "scalar_step",
    "set_params_from_vector",
    "synth_blobs",
    "verify",
    "write_metrics_csv",
]
