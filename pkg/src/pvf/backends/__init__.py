"""Secure-aggregation backends: plain oracle, pairwise masking, Paillier."""

from .base import HE, PLAIN, AggregationOutcome, BackendDescriptor, default_threshold, mask_descriptor
from .mask import MaskServer, MaskUser, mask_backend_round
from .paillier import EncryptedVector, HEServer, Keypair, decrypt_sum, he_backend_round
from .plain import plain_aggregate
from .shamir import ShamirShare, shamir_reconstruct, shamir_share

__all__ = [
    "AggregationOutcome",
    "BackendDescriptor",
    "EncryptedVector",
    "HE",
    "HEServer",
    "Keypair",
    "MaskServer",
    "MaskUser",
    "PLAIN",
    "ShamirShare",
    "decrypt_sum",
    "default_threshold",
    "he_backend_round",
    "mask_backend_round",
    "mask_descriptor",
    "plain_aggregate",
    "shamir_reconstruct",
    "shamir_share",
]
