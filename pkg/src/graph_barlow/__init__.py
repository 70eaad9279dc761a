"""Graph Barlow Twins and Graph HSIC: negative-sample-free self-supervised node embeddings."""

__version__ = "0.1.0"

from .augment import AugmentationParams, GraphView, augment
from .dataset import load_dataset, save_dataset
from .encoders import Encoder, EncoderConfig, load_checkpoint, save_checkpoint
from .graph import DataSplit, Graph, SparseMatrix, make_splits, normalized_adjacency
from .losses import CrossCorrelation, bt_loss, cross_correlation, hsic_loss, normalize_columns
from .optim import ScheduleConfig, adamw_step, lr_at
from .probe import (
    COARSE_GRID,
    DENSE_GRID,
    LinearProbe,
    ProbeReport,
    evaluate_embeddings,
    fit_probe,
    reg_grid_search,
    score,
)
from .sbm import SbmConfig, generate_sbm
from .search import augmentation_grid_search
from .training import TrainConfig, TrainResult, embed, train

__all__ = [
    "AugmentationParams",
    "COARSE_GRID",
    "CrossCorrelation",
    "DENSE_GRID",
    "DataSplit",
    "Encoder",
    "EncoderConfig",
    "Graph",
    "GraphView",
    "LinearProbe",
    "ProbeReport",
    "SbmConfig",
    "ScheduleConfig",
    "SparseMatrix",
    "TrainConfig",
    "TrainResult",
    "adamw_step",
    "augment",
    "augmentation_grid_search",
    "bt_loss",
    "cross_correlation",
    "embed",
    "evaluate_embeddings",
    "fit_probe",
    "generate_sbm",
    "hsic_loss",
    "load_checkpoint",
    "load_dataset",
    "lr_at",
    "make_splits",
    "normalize_columns",
    "normalized_adjacency",
    "reg_grid_search",
    "save_checkpoint",
    "save_dataset",
    "score",
    "train",
]
