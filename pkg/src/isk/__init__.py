"""Ising model with a Sherrington-Kirkpatrick perturbation in a field.

Exact enumeration, transfer matrices and Metropolis sampling for the
pressure; the replica-symmetric functional; pressure fluctuations.
"""

from .disorder import DisorderSample, sample_disorder, sample_fields
from .errors import (ConvergenceError, DegenerateError, DomainError, ISKError, SizeError,
                     UnsupportedError)
from .hamiltonians import EnergyModel, ModelParams
from .lattice import BoxGeometry, InteractionKernel

__all__ = [
    "BoxGeometry",
    "InteractionKernel",
    "DisorderSample",
    "sample_disorder",
    "sample_fields",
    "ModelParams",
    "EnergyModel",
    "ISKError",
    "DomainError",
    "SizeError",
    "UnsupportedError",
    "DegenerateError",
    "ConvergenceError",
]
