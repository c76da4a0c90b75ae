"""Secure coded caching against colluding users.

Secret-sharing precoding, cache placement, padded coded delivery and
decoding, an exact security verifier, and the analytic memory/rate bounds.
"""

__version__ = "0.1.0"

from .bounds import achievable_points, gap_ratio, outer_bound, rc_of_t
from .gf import FieldSpec, build_cauchy, gf_add, gf_inv, gf_mul, mat_inverse, mat_rank
from .scheme import (
    FileLibrary,
    decode,
    deliver,
    derive_params,
    make_key_pool,
    place,
    precode,
    rate_pair,
)
from .security import (
    brute_force_mi_oracle,
    build_observation_system,
    sweep_all_colluding_sets,
    verify_zero_leakage,
)
from .sharing import SharingParams, leakage_rank_check, make_shares, reconstruct

__all__ = [
    "FieldSpec",
    "build_cauchy",
    "gf_add",
    "gf_inv",
    "gf_mul",
    "mat_inverse",
    "mat_rank",
    "SharingParams",
    "make_shares",
    "reconstruct",
    "leakage_rank_check",
    "FileLibrary",
    "derive_params",
    "precode",
    "make_key_pool",
    "place",
    "deliver",
    "decode",
    "rate_pair",
    "build_observation_system",
    "verify_zero_leakage",
    "sweep_all_colluding_sets",
    "brute_force_mi_oracle",
    "achievable_points",
    "rc_of_t",
    "outer_bound",
    "gap_ratio",
]
