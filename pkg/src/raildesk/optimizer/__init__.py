"""Event-graph optimization: model building, branch-and-bound, hints."""

from .model import (
    Decisions,
    DisjKey,
    Event,
    Model,
    SolveParams,
    SolveStatus,
    build_model,
    objective_value,
)
from .solver import EMPTY_HINTS, HintSet, Solution, lower_bound, solve
from .hints import (
    HistoryRecord,
    make_hints,
    predict_profiles,
    situation_features,
)

__all__ = [
    "Decisions",
    "DisjKey",
    "EMPTY_HINTS",
    "Event",
    "HintSet",
    "HistoryRecord",
    "Model",
    "Solution",
    "SolveParams",
    "SolveStatus",
    "build_model",
    "lower_bound",
    "make_hints",
    "objective_value",
    "predict_profiles",
    "situation_features",
    "solve",
]
