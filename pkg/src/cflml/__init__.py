"""Multiple closed-form local metric learning for k-nearest-neighbor classification."""

from .classify import Model, Prediction, evaluate, knn_query, predict, select_metric
from .dataset import Dataset, SplitSpec, Standardizer, fit_standardizer, load_bundled, load_csv, split
from .group import EvolutionConfig, MetricGroup, Strategy, TrainReport, Variant, evolve, train_variant
from .metric import Metric
from .neighborhood import CenterMode, FilterKind

__version__ = "0.1.0"

__all__ = [
    "CenterMode", "Dataset", "EvolutionConfig", "FilterKind", "Metric", "MetricGroup", "Model",
    "Prediction", "SplitSpec", "Standardizer", "Strategy", "TrainReport", "Variant", "evaluate",
    "evolve", "fit_standardizer", "knn_query", "load_bundled", "load_csv", "predict",
    "select_metric", "split", "train_variant",
]
