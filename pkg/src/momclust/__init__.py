"""Robust center-based clustering: Bregman divergences, power-mean aggregators
and median-of-means estimation fitted by Adagrad."""
from .aggregate import Aggregator, get_aggregator, harmonic, min_aggregator, power_mean
from .bregman import Divergence, eval_divergence, get_divergence, sqeuclidean
from .metrics import ari, diss, precision_recall
from .model import Centroids, Partition, erm_objective, make_partition, mom_objective
from .solver import FitResult, SolverConfig, assign_labels, fit, lloyd
from .synth import Dataset, ScenarioSpec, generate, true_centroids

__version__ = "0.1.0"
