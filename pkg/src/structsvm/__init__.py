"""Structured SVM training with bi-criteria surrogate losses and normalized hierarchies."""

from .errors import StructSVMError
from .geometry import LabelPoint, upper_hull
from .hull_search import FractionalLabel, convex_hull_search, integral_recovery
from .losses import BiCriteriaLoss
from .oracle import ChainSpace, EnumerationSpace, MultiLabelSpace, SlopeWindow
from .slack_search import angular_search, binary_search_sgd, bisecting_search
from .trainer import TrainConfig, sgd_train

__all__ = [
    "BiCriteriaLoss",
    "ChainSpace",
    "EnumerationSpace",
    "FractionalLabel",
    "LabelPoint",
    "MultiLabelSpace",
    "SlopeWindow",
    "StructSVMError",
    "TrainConfig",
    "angular_search",
    "binary_search_sgd",
    "bisecting_search",
    "convex_hull_search",
    "integral_recovery",
    "sgd_train",
    "upper_hull",
]
__version__ = "0.1.0"
