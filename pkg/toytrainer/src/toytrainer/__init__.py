"""Desk-scale segmentation training harness.

Trains a tiny vision transformer on a synthetic shapes dataset, both on
plain images and on copies encrypted by the external `ppss` tool at
several shuffle widths, then reports how segmentation quality moves with
the width. All interaction with the tool goes through its CLI and file
formats; no code is shared.
"""

from .config import ConfigError, ExperimentConfig, variant_sub_block_size
from .errors import (
    CipherMismatchError,
    HarnessError,
    IncompleteMatrixError,
    TrainingDivergedError,
)
from .matrix import MatrixResult, MatrixRow, TrendReport, build_trend_report, run_experiment_matrix
from .model import TinySegViT, count_parameters
from .primary import validate_cipher_tool
from .scoring import InternalScores, pool_labels, scores_from_confusion
from .shapes import generate_shapes_dataset, make_sample
from .train import RunResult, train_and_eval

__version__ = "0.1.0"

__all__ = [
    "CipherMismatchError",
    "ConfigError",
    "ExperimentConfig",
    "HarnessError",
    "IncompleteMatrixError",
    "InternalScores",
    "MatrixResult",
    "MatrixRow",
    "RunResult",
    "TinySegViT",
    "TrainingDivergedError",
    "TrendReport",
    "build_trend_report",
    "count_parameters",
    "generate_shapes_dataset",
    "make_sample",
    "pool_labels",
    "run_experiment_matrix",
    "scores_from_confusion",
    "train_and_eval",
    "validate_cipher_tool",
    "variant_sub_block_size",
]
