"""Storage and arithmetic cost accounting for the sensing schemes.

Counts follow the vector-format convention: permutations and row
selections are stored as integer index vectors, never as binary matrices,
and only distinct float entries of the projection blocks are counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .config import Scheme, SchemeConfig


class StorageMode(str, Enum):
    FRAME_BASED = "frame"
    SEPARABLE = "separable"


@dataclass(frozen=True)
class StorageProfile:
    phi_floats: int
    r_ints: int
    d_ints: int


@dataclass(frozen=True)
class SamplingCost:
    adds: int
    mults: int


def _phi_floats_one_axis(config: SchemeConfig) -> int:
    if config.scheme == Scheme.FULL_GRM:
        return config.m * config.n
    if config.scheme in (Scheme.BCS, Scheme.BSRM):
        # one distinct block per sub-signal, but only the m_i selected rows
        # of each block are ever stored
        return config.m * config.block_size
    # shared blocks must be stored whole: ceil(m / block_size) square blocks
    return math.ceil(config.m / config.block_size) * config.block_size**2


def storage_profile(config: SchemeConfig, mode: StorageMode = StorageMode.FRAME_BASED) -> StorageProfile:
    """Distinct stored scalars for one scheme.

    ``config`` describes the 1D scheme being counted. In SEPARABLE mode it
    is interpreted as the per-axis scheme of a Kronecker sampler and every
    count is doubled (one operator per image axis).
    """
    mode = StorageMode(mode)
    axes = 2 if mode == StorageMode.SEPARABLE else 1
    has_perm = config.scheme in (Scheme.BSRM, Scheme.RSRM)
    r_ints = config.passes * config.n if has_perm else 0
    d_ints = config.m if has_perm else 0
    return StorageProfile(
        phi_floats=axes * _phi_floats_one_axis(config),
        r_ints=axes * r_ints,
        d_ints=axes * d_ints,
    )


def sampling_cost(config: SchemeConfig) -> SamplingCost:
    """Additions and multiplications for one application of the operator.

    Sub-sampling and row selection are index moves with zero arithmetic,
    so every block scheme costs sum_i m_i * block_size = m * block_size
    regardless of the number of passes; full GRM costs m * n.
    """
    if config.scheme == Scheme.FULL_GRM:
        ops = config.m * config.n
    else:
        ops = config.m * config.block_size
    return SamplingCost(adds=ops, mults=ops)
