"""Recurrent discrete-time hazard model: configuration, losses, training and prediction."""
from .checkpoint import load_checkpoint, save_checkpoint
from .config import BINARY, SURVIVAL, ModelConfig, ModelConfigError
from .losses import binary_mse_loss, calibration_loss, likelihood_loss, rank_loss
from .network import Batch, ModelParams, forward, init_params, loss_and_grad, make_batch
from .training import (
    CurveEnsemble,
    TrainingError,
    TrainReport,
    gradient_check,
    predict_curves,
    train,
    two_copies,
)

__all__ = [
    "BINARY", "SURVIVAL", "Batch", "CurveEnsemble", "ModelConfig", "ModelConfigError", "ModelParams",
    "TrainReport", "TrainingError", "binary_mse_loss", "calibration_loss", "forward", "gradient_check",
    "init_params", "likelihood_loss", "load_checkpoint", "loss_and_grad", "make_batch", "predict_curves",
    "rank_loss", "save_checkpoint", "train", "two_copies",
]
