"""Partial vector freezing for secure aggregation.

Each user's vector is split into groups of ``lambda`` entries; only
``delta + 1`` linear combinations per group go through a secure-aggregation
backend, the rest are published as an underdetermined frozen vector.
"""

from .core import compression_ratio, freeze, pad_and_group, thaw
from .errors import CommitmentMismatch, ConfigurationError, ResultForgery, UnrecoverableRoundError
from .field import DEFAULT_FIELD, MERSENNE_61, SMALL_FIELD, FieldConfig
from .linalg import FieldMatrix, FreezeMatrixSet, generate_freeze_matrices, privacy_check, rank, rref
from .orchestrator import RoundConfig, RoundReport, run_adversarial_round, run_campaign, run_round

__version__ = "0.1.0"
__all__ = [
    "CommitmentMismatch",
    "ConfigurationError",
    "DEFAULT_FIELD",
    "FieldConfig",
    "FieldMatrix",
    "FreezeMatrixSet",
    "MERSENNE_61",
    "ResultForgery",
    "RoundConfig",
    "RoundReport",
    "SMALL_FIELD",
    "UnrecoverableRoundError",
    "compression_ratio",
    "freeze",
    "generate_freeze_matrices",
    "pad_and_group",
    "privacy_check",
    "rank",
    "rref",
    "run_adversarial_round",
    "run_campaign",
    "run_round",
    "thaw",
]
