"""Transformation-based MCMC with singleton-epsilon block updates."""

__version__ = "0.1.0"

from tmcmc.errors import ChainError, DomainError, NonFiniteError, TMCMCError
from tmcmc.moves import MoveProbabilities, MoveTable, log_move_prob_ratio, sample_move
from tmcmc.samplers import (
    ChainResult,
    GaussianMHKernel,
    HMCKernel,
    HmcConfig,
    KernelConfig,
    RWMHKernel,
    Schedule,
    SequentialRWMHKernel,
    Target,
    TMCMCKernel,
    run_chain,
)
from tmcmc.transforms import TransformFamily, apply_move, conjugate

__all__ = [
    "ChainError",
    "ChainResult",
    "DomainError",
    "GaussianMHKernel",
    "HMCKernel",
    "HmcConfig",
    "KernelConfig",
    "MoveProbabilities",
    "MoveTable",
    "NonFiniteError",
    "RWMHKernel",
    "Schedule",
    "SequentialRWMHKernel",
    "TMCMCError",
    "TMCMCKernel",
    "Target",
    "TransformFamily",
    "apply_move",
    "conjugate",
    "log_move_prob_ratio",
    "run_chain",
    "sample_move",
]
