"""Social-status analysis of communication networks.

Graph construction from event logs, status-correlated structural metrics,
a label-shuffling null model and a triangle factor graph classifier.
"""

from .errors import (
    BudgetExceeded,
    ConfigError,
    DegenerateNull,
    DegenerateTraining,
    EmptyDataset,
    EmptyGraph,
    FormatError,
    ModelVersionError,
    NumericalError,
    PartialLabels,
    ShapeError,
    StatusNetError,
)
from .graph import MANAGER, SUBORDINATE, UNKNOWN, CommGraph, StatusLabels
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BudgetExceeded",
    "CommGraph",
    "ConfigError",
    "DegenerateNull",
    "DegenerateTraining",
    "EmptyDataset",
    "EmptyGraph",
    "FormatError",
    "MANAGER",
    "ModelVersionError",
    "NumericalError",
    "PartialLabels",
    "SUBORDINATE",
    "ShapeError",
    "StatusLabels",
    "StatusNetError",
    "UNKNOWN",
]
