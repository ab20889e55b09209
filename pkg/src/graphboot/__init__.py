"""Bootstrapped self-supervised node representation learning.

An online GCN tower learns to predict the projections of a slowly-moving
target twin over two stochastic augmentations of one graph; no negative
samples are involved. The package also ships the linear-evaluation harness
used to score the learned embeddings.
"""

from .augment import (
    AdjacencyAugmentation,
    NodeAugmentation,
    ViewConfig,
    heat_diffusion,
    make_view,
    node_dropout,
    node_feature_dropout,
    ppr_diffusion,
    sparsify,
    sparsify_top_k,
)
from .dataio import load_dataset, save_dataset
from .errors import CheckpointError, DataFormatError, NumericError, UsageError
from .evaluate import EvalConfig, EvalReport, LinearClassifier, accuracy, evaluate_protocol, fit_linear
from .graph import (
    Graph,
    LabeledDataset,
    PropagationMatrix,
    degree_vector,
    normalize_adjacency,
    row_normalize_features,
    spmm,
)
from .nn import (
    AdamState,
    GcnEncoder,
    LinearLayer,
    Mlp,
    adam_step,
    bootstrap_loss,
    gcn_backward,
    gcn_forward,
    glorot_init,
    l2_normalize_backward,
    l2_normalize_rows,
    mlp_backward,
    mlp_forward,
)
from .rng import RngState, make_rng
from .sparse import SparseMatrix
from .trainer import DgbModel, TrainConfig, TrainReport, ema_update, embed, init_model, train, train_epoch

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AdjacencyAugmentation",
    "CheckpointError",
    "DataFormatError",
    "DgbModel",
    "EvalConfig",
    "EvalReport",
    "GcnEncoder",
    "Graph",
    "LabeledDataset",
    "LinearClassifier",
    "LinearLayer",
    "Mlp",
    "NodeAugmentation",
    "NumericError",
    "PropagationMatrix",
    "RngState",
    "SparseMatrix",
    "TrainConfig",
    "TrainReport",
    "UsageError",
    "ViewConfig",
    "accuracy",
    "adam_step",
    "bootstrap_loss",
    "degree_vector",
    "ema_update",
    "embed",
    "evaluate_protocol",
    "fit_linear",
    "gcn_backward",
    "gcn_forward",
    "glorot_init",
    "heat_diffusion",
    "init_model",
    "l2_normalize_backward",
    "l2_normalize_rows",
    "load_dataset",
    "make_rng",
    "make_view",
    "mlp_backward",
    "mlp_forward",
    "node_dropout",
    "node_feature_dropout",
    "normalize_adjacency",
    "ppr_diffusion",
    "row_normalize_features",
    "save_dataset",
    "sparsify",
    "sparsify_top_k",
    "spmm",
    "train",
    "train_epoch",
]
