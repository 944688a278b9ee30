"""Test-signal generators: random sparse, block sparse, and compressible classes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InvalidSignalError
from .transforms import dct_forward, dct_inverse


class SignalKind(str, Enum):
    RANDOM_SPARSE = "random_sparse"
    BLOCK_SPARSE = "block_sparse"
    COMPRESSIBLE = "compressible"
    EXTERNAL = "external"


class Basis(str, Enum):
    IDENTITY = "identity"
    DCT = "dct"


@dataclass(frozen=True, eq=False)
class SignalInstance:
    """A test signal with its ground-truth sparsity metadata."""

    values: np.ndarray
    kind: SignalKind
    support: np.ndarray | None = None
    basis: Basis = Basis.IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.support is not None:
            object.__setattr__(self, "support", np.asarray(self.support, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def sparsity(self) -> int | None:
        return None if self.support is None else int(self.support.size)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _normalized(values: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(values)
    if norm == 0.0:
        raise InvalidSignalError("cannot normalize an all-zero signal")
    return values / norm


def gen_random_sparse(n: int, s: int, seed=0) -> SignalInstance:
    """Unit-norm signal with s standard-normal values at uniform random locations."""
    if not 0 < s <= n:
        raise InvalidSignalError(f"sparsity must lie in [1, n], got s={s} for n={n}")
    rng = _rng(seed)
    support = np.sort(rng.choice(n, size=s, replace=False))
    values = np.zeros(n)
    values[support] = rng.standard_normal(s)
    return SignalInstance(_normalized(values), SignalKind.RANDOM_SPARSE, support)


def gen_block_sparse(n: int, s: int, block_size: int, block_sparsity: int, seed=0) -> SignalInstance:
    """Unit-norm signal whose support lies inside a few contiguous blocks.

    Chooses ``block_sparsity`` of the ``n // block_size`` blocks uniformly,
    then places ``s`` nonzeros uniformly inside them.
    """
    if block_size < 1 or n % block_size != 0:
        raise InvalidSignalError(f"block size {block_size} must divide n={n}")
    num_blocks = n // block_size
    if not 0 < block_sparsity <= num_blocks:
        raise InvalidSignalError(
            f"block sparsity must lie in [1, {num_blocks}], got {block_sparsity}"
        )
    if not 0 < s <= block_sparsity * block_size:
        raise InvalidSignalError(
            f"s={s} nonzeros cannot fit in {block_sparsity} blocks of {block_size}"
        )
    rng = _rng(seed)
    blocks = np.sort(rng.choice(num_blocks, size=block_sparsity, replace=False))
    positions = np.concatenate([np.arange(b * block_size, (b + 1) * block_size) for b in blocks])
    support = np.sort(rng.choice(positions, size=s, replace=False))
    values = np.zeros(n)
    values[support] = rng.standard_normal(s)
    return SignalInstance(_normalized(values), SignalKind.BLOCK_SPARSE, support)


def gen_compressible(n: int, decay: float = 1.5, seed=0) -> SignalInstance:
    """Unit-norm signal with power-law DCT coefficients |c_k| = k^-decay."""
    if decay <= 0:
        raise InvalidSignalError(f"decay exponent must be positive, got {decay}")
    rng = _rng(seed)
    magnitudes = np.arange(1, n + 1, dtype=np.float64) ** (-decay)
    signs = rng.choice([-1.0, 1.0], size=n)
    values = dct_inverse(signs * magnitudes)
    return SignalInstance(_normalized(values), SignalKind.COMPRESSIBLE, None, Basis.DCT)


def best_s_term_error(x, s: int, basis: Basis = Basis.IDENTITY) -> float:
    """Relative l2 error of the best s-term approximation in the given basis."""
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= s <= x.size:
        raise InvalidSignalError(f"s must lie in [0, n], got s={s}")
    coeffs = x if Basis(basis) == Basis.IDENTITY else dct_forward(x)
    total = np.linalg.norm(coeffs)
    if total == 0.0:
        return 0.0
    order = np.argsort(np.abs(coeffs))[::-1]
    tail = coeffs[order[s:]]
    return float(np.linalg.norm(tail) / total)


def load_signal_text(path) -> SignalInstance:
    """Read a plain-text signal file of newline-separated decimals."""
    values = np.loadtxt(Path(path), dtype=np.float64, ndmin=1)
    if values.ndim != 1 or values.size == 0:
        raise InvalidSignalError(f"{path}: expected one decimal per line")
    return SignalInstance(values, SignalKind.EXTERNAL)


@dataclass(frozen=True)
class SignalSpec:
    """Parameter bundle for drawing signals of one class (picklable, for sweeps)."""

    kind: SignalKind
    s: int = 8
    block_size: int = 64
    block_sparsity: int = 2
    decay: float = 1.5

    def generate(self, n: int, seed) -> SignalInstance:
        kind = SignalKind(self.kind)
        if kind == SignalKind.RANDOM_SPARSE:
            return gen_random_sparse(n, self.s, seed)
        if kind == SignalKind.BLOCK_SPARSE:
            return gen_block_sparse(n, self.s, self.block_size, self.block_sparsity, seed)
        if kind == SignalKind.COMPRESSIBLE:
            return gen_compressible(n, self.decay, seed)
        raise InvalidSignalError(f"cannot generate signals of kind {self.kind}")

    @property
    def label(self) -> str:
        return SignalKind(self.kind).value
