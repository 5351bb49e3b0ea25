"""Degree-sequence models of Erdos-Renyi random graphs: exact identities,
samplers and Monte Carlo decay experiments."""

from .errors import CapacityError, DegenerateInputError, NumericError, ParameterError
from .models import ZERO, Event, ModelParams, SequenceStats

__all__ = [
    "CapacityError",
    "DegenerateInputError",
    "Event",
    "ModelParams",
    "NumericError",
    "ParameterError",
    "SequenceStats",
    "ZERO",
]
