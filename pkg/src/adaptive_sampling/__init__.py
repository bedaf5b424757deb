"""Adaptive sampling for Wi-Fi signal mapping with Gaussian process regression."""

from .engine import ScenarioConfig, StepRecord, TrialLog, run_trial
from .field import FieldParams, GroundTruthField, generate, measure
from .gp import GpModel, Hyperparams, TrainingSet, fit, log_marginal_likelihood, predict
from .grid import GridSpec

__version__ = "0.1.0"

__all__ = [
    "FieldParams", "GpModel", "GridSpec", "GroundTruthField", "Hyperparams", "ScenarioConfig",
    "StepRecord", "TrainingSet", "TrialLog", "fit", "generate", "log_marginal_likelihood",
    "measure", "predict", "run_trial",
]
