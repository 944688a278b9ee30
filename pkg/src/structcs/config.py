"""Scheme configuration: the full parameterization of a sensing operator."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import InvalidConfigError, TooFewMeasurementsError

_SEED_MAX = 2**64


class Scheme(str, Enum):
    """Supported sensing-matrix families."""

    FULL_GRM = "grm"
    BCS = "bcs"
    BSRM = "bsrm"
    RSRM = "rsrm"


class Normalization(str, Enum):
    RAW = "raw"
    UNBIASED = "unbiased"


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of one sensing scheme.

    Parameters
    ----------
    n : int
        Signal dimension.
    block_size : int
        Sub-signal length (must divide ``n``).
    subrate : float
        Measurement ratio in (0, 1]; ``m = floor(subrate * n)``.
    passes : int
        Number of full sub-sampling passes; every input index is selected
        exactly ``passes`` times. Fixed to 1 for all schemes except RSRM.
    scheme : Scheme
        Matrix family.
    seed_perm, seed_rows, seed_blocks : int
        Independent 64-bit seeds for the sub-sampling permutations, the
        row selections, and the orthonormal block bank. Together they act
        as the operator's key material.
    normalization : Normalization
        RAW applies the selected block rows as-is; UNBIASED rescales each
        sub-signal by sqrt(block_size / (passes * m_i)) so that
        E||y||^2 = ||x||^2.
    """

    n: int
    block_size: int
    subrate: float
    passes: int = 1
    scheme: Scheme = Scheme.RSRM
    seed_perm: int = 0
    seed_rows: int = 0
    seed_blocks: int = 0
    normalization: Normalization = Normalization.UNBIASED

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfigError(f"signal dimension must be positive, got n={self.n}")
        if self.block_size < 1:
            raise InvalidConfigError(f"block size must be positive, got {self.block_size}")
        if self.n % self.block_size != 0:
            raise InvalidConfigError(
                f"block size must divide the signal dimension: "
                f"n={self.n} is not a multiple of block_size={self.block_size}"
            )
        if not 0.0 < self.subrate <= 1.0:
            raise InvalidConfigError(f"subrate must lie in (0, 1], got {self.subrate}")
        if self.passes < 1:
            raise InvalidConfigError(f"passes must be a positive integer, got {self.passes}")
        if self.scheme == Scheme.FULL_GRM:
            if self.block_size != self.n or self.passes != 1:
                raise InvalidConfigError(
                    "full GRM sensing requires block_size == n and passes == 1"
                )
        elif self.scheme in (Scheme.BCS, Scheme.BSRM) and self.passes != 1:
            raise InvalidConfigError(f"{self.scheme.value} requires passes == 1")
        for name in ("seed_perm", "seed_rows", "seed_blocks"):
            seed = getattr(self, name)
            if not 0 <= int(seed) < _SEED_MAX:
                raise InvalidConfigError(f"{name} must be a 64-bit unsigned integer")
        if self.m < self.num_subsignals:
            raise TooFewMeasurementsError(
                f"m={self.m} measurements cannot cover c={self.num_subsignals} "
                f"sub-signals with at least one measurement each"
            )

    @property
    def m(self) -> int:
        """Total measurement count, floor(subrate * n)."""
        # tiny nudge so that an exactly-representable subrate like 64/256
        # never rounds down one measurement
        return int(math.floor(self.subrate * self.n + 1e-9))

    @property
    def num_subsignals(self) -> int:
        """Number of sub-sampled signals c = passes * n / block_size."""
        return self.passes * (self.n // self.block_size)

    @property
    def subsamplers_per_pass(self) -> int:
        return self.n // self.block_size

    def with_seeds(self, seed_perm: int, seed_rows: int, seed_blocks: int) -> "SchemeConfig":
        return replace(
            self, seed_perm=int(seed_perm), seed_rows=int(seed_rows), seed_blocks=int(seed_blocks)
        )

    @classmethod
    def from_measurements(cls, n: int, block_size: int, m: int, **kwargs) -> "SchemeConfig":
        """Build a config from an explicit measurement count instead of a subrate."""
        if not 0 < m <= n:
            raise InvalidConfigError(f"measurement count must lie in [1, n], got m={m}")
        config = cls(n=n, block_size=block_size, subrate=m / n, **kwargs)
        if config.m != m:
            raise InvalidConfigError(f"subrate {m}/{n} does not reproduce m={m}")
        return config


def derive_seed_triple(master_seed: int) -> tuple[int, int, int]:
    """Expand one master seed into the (perm, rows, blocks) seed triple."""
    import numpy as np

    state = np.random.SeedSequence(int(master_seed)).generate_state(3, dtype=np.uint64)
    return tuple(int(s) for s in state)
