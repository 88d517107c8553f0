"""Fairness-aware multi-objective reinforcement learning toolkit."""

__version__ = "0.1.0"

from .dominance import (FrontSet, LAMBDA_LORENZ, LORENZ, PARETO,
                        crowding_distance, dominates, extract_front,
                        lambda_lorenz_dominates, lambda_transform,
                        lorenz_dominates, lorenz_vector, pareto_dominates,
                        sort_ascending)
from .metrics import (MetricsRecord, eum, front_metrics,
                      generate_equidistant_weights, gini_index, hypervolume,
                      sen_welfare, set_sen_welfare, total_efficiency)

__all__ = [
    "FrontSet", "LAMBDA_LORENZ", "LORENZ", "PARETO",
    "crowding_distance", "dominates", "extract_front",
    "lambda_lorenz_dominates", "lambda_transform", "lorenz_dominates",
    "lorenz_vector", "pareto_dominates", "sort_ascending",
    "MetricsRecord", "eum", "front_metrics", "generate_equidistant_weights",
    "gini_index", "hypervolume", "sen_welfare", "set_sen_welfare",
    "total_efficiency",
]
