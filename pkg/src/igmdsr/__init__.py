"""Input-guided deep non-negative matrix factorization (IG-MDSR-NMF / IG-MDSR-RNMF)."""

__version__ = "0.1.0"

from .baseline import NmfResult, nmf_multiplicative
from .errors import DomainError, InputError, NumericError, ParameterError, ShapeError
from .metrics import (
    knn_accuracy,
    pairwise_distances,
    rank_matrix,
    relative_reconstruction_error,
    trustworthiness,
)
from .model import (
    ArchitectureSpec,
    ForwardTrace,
    ModelParams,
    Variant,
    default_layer_schedule,
    extract_factors,
    forward,
    xavier_init,
)
from .preprocess import FoldedDataset, RawDataset, fold, reduced_dim, unfold, zscore_normalize
from .training import TrainConfig, TrainLog, backward, cost, fit
