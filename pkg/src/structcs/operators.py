"""Structured sensing operators built from sub-sampling, orthonormal blocks, and row selection.

Every operator here factors as  rows-of-blocks applied to sub-sampled signal
slices: measurement block i is ``scale_i * B_{a(i)}[rows_i, :] @ x[samplers_i]``
where ``B`` is a bank of square orthonormal matrices, ``a`` assigns each
sub-signal to a bank entry, ``rows_i`` selects which orthonormal rows it
consumes, and ``samplers_i`` lists which input samples feed it. The four
supported families differ only in how those pieces are drawn:

* full GRM     -- one sub-signal covering the input, one orthonormalized
                  Gaussian matrix, leading rows kept.
* BCS          -- contiguous sub-signals, one fresh block per sub-signal,
                  random rows.
* BSRM         -- sub-signals cut from one global random permutation, one
                  fresh block per sub-signal, a uniform m-subset of all rows.
* RSRM         -- sub-signals are random low-resolution decimations
                  (one sample per decimation group), blocks shared across
                  consecutive sub-signals with disjoint row consumption.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import Normalization, Scheme, SchemeConfig
from .errors import DensifyRefusedError, DimensionMismatchError, InvalidConfigError

DENSIFY_LIMIT = 4096

_FORMAT_TAG = "structcs-operator/1"


@dataclass(frozen=True, eq=False)
class RestrictedPermutation:
    """Sub-sampling stage: c index lists, each selecting one sub-signal.

    ``sub_samplers[i]`` holds the input indices feeding sub-signal i, in
    sub-signal order. Index lists have distinct entries; across lists an
    input index may repeat (once per pass for RSRM).
    """

    sub_samplers: list

    def __post_init__(self):
        object.__setattr__(
            self,
            "sub_samplers",
            [np.asarray(s, dtype=np.int64) for s in self.sub_samplers],
        )

    def __len__(self) -> int:
        return len(self.sub_samplers)

    def concatenated(self) -> np.ndarray:
        return np.concatenate([s for s in self.sub_samplers]) if self.sub_samplers else np.empty(0, np.int64)


@dataclass(frozen=True, eq=False)
class RowSelection:
    """Per-sub-signal lists of orthonormal row indices, each in [0, block_size)."""

    rows: list

    def __post_init__(self):
        object.__setattr__(self, "rows", [np.asarray(r, dtype=np.int64) for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class OrthoBlockBank:
    """Bank of square matrices with orthonormal rows plus a sub-signal -> block map."""

    blocks: list
    assignment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "blocks", [np.asarray(b, dtype=np.float64) for b in self.blocks])
        object.__setattr__(self, "assignment", np.asarray(self.assignment, dtype=np.int64))

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)


def gen_rrp(n: int, block_size: int, seed) -> RestrictedPermutation:
    """Generate one restricted-random-permutation pass.

    The input is split into ``block_size`` contiguous decimation groups of
    ``n // block_size`` samples each. Every group is permuted independently
    and sub-sampler i takes the i-th entry of each group's permutation, so
    each of the ``n // block_size`` sub-samplers picks exactly one sample
    per group (a random low-resolution decimation) and together they cover
    [0, n) exactly once.

    Parameters
    ----------
    n : int
        Signal dimension.
    block_size : int
        Length of each sub-sampler; must divide ``n``.
    seed : int or numpy.random.Generator
        Seed or generator driving the group permutations.
    """
    if block_size < 1 or n < 1 or n % block_size != 0:
        raise InvalidConfigError(
            f"restricted permutation requires block_size | n, got n={n}, block_size={block_size}"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(int(seed))
    group = n // block_size  # group size == number of sub-samplers per pass
    picks = np.empty((group, block_size), dtype=np.int64)
    for j in range(block_size):
        picks[:, j] = rng.permutation(group) + j * group
    return RestrictedPermutation([picks[i] for i in range(group)])


def selection_counts(perm: RestrictedPermutation, n: int) -> tuple[int, int]:
    """Min and max number of times each input index is selected across sub-samplers.

    The minimum may be 0 when some index never appears; callers decide
    whether that is admissible.
    """
    flat = perm.concatenated()
    if flat.size and (flat.min() < 0 or flat.max() >= n):
        raise InvalidConfigError("sub-sampler index out of range")
    counts = np.bincount(flat, minlength=n)
    return int(counts.min()), int(counts.max())


def _orthonormal_block(size: int, rng: np.random.Generator) -> np.ndarray:
    """Square matrix with orthonormal rows from a QR-orthonormalized GRM."""
    gauss = rng.standard_normal((size, size))
    q, r = np.linalg.qr(gauss)
    # fix the QR sign ambiguity so the draw is canonical
    signs = np.where(np.diag(r) >= 0.0, 1.0, -1.0)
    return (q * signs).T


def _spread_remainder(counts: np.ndarray, remainder: int, rng: np.random.Generator) -> None:
    if remainder:
        counts[rng.choice(len(counts), size=remainder, replace=False)] += 1


@dataclass(frozen=True, eq=False)
class StructuredOperator:
    """A composed sensing operator with structured ``apply``/``adjoint``.

    Instances are immutable after construction and safe to share across
    threads; ``apply`` and ``adjoint`` are pure functions of their inputs.
    """

    config: SchemeConfig
    perm: RestrictedPermutation
    row_selection: RowSelection
    bank: OrthoBlockBank
    scales: np.ndarray

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def num_subsignals(self) -> int:
        return len(self.perm)

    @property
    def measurement_counts(self) -> np.ndarray:
        return self.row_selection.counts

    def measurement_offsets(self) -> np.ndarray:
        """Start offset of each sub-signal's measurements in the output vector."""
        return np.concatenate([[0], np.cumsum(self.measurement_counts)])

    def effective_block(self, i: int) -> np.ndarray:
        """Unscaled m_i x block_size matrix acting on sub-signal i."""
        block = self.bank.blocks[self.bank.assignment[i]]
        return block[self.row_selection.rows[i], :]

    def unbiased_scales(self) -> np.ndarray:
        """Per-sub-signal factors making E||y||^2 = ||x||^2 regardless of config."""
        counts = self.measurement_counts.astype(np.float64)
        scales = np.zeros(len(counts))
        nz = counts > 0
        scales[nz] = np.sqrt(self.config.block_size / (self.config.passes * counts[nz]))
        return scales

    def apply(self, x) -> np.ndarray:
        """Measure ``x``: concatenation of the scaled per-sub-signal projections.

        Accepts a vector of length n or an (n, k) batch of columns.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (1, 2) or x.shape[0] != self.n:
            raise DimensionMismatchError(
                f"expected input with leading dimension {self.n}, got shape {x.shape}"
            )
        return self._apply_scaled(x, self.scales)

    def _apply_scaled(self, x: np.ndarray, scales: np.ndarray) -> np.ndarray:
        parts = []
        for i in range(self.num_subsignals):
            sub = x[self.perm.sub_samplers[i]]
            parts.append(scales[i] * (self.effective_block(i) @ sub))
        return np.concatenate(parts, axis=0)

    def adjoint(self, y) -> np.ndarray:
        """Transpose action: scatter blockwise back-projections through the sub-samplers.

        Input indices selected by several sub-samplers accumulate one
        contribution per selection.
        """
        y = np.asarray(y, dtype=np.float64)
        if y.ndim not in (1, 2) or y.shape[0] != self.m:
            raise DimensionMismatchError(
                f"expected input with leading dimension {self.m}, got shape {y.shape}"
            )
        out = np.zeros((self.n,) + y.shape[1:], dtype=np.float64)
        offsets = self.measurement_offsets()
        for i in range(self.num_subsignals):
            yi = y[offsets[i] : offsets[i + 1]]
            contrib = self.scales[i] * (self.effective_block(i).T @ yi)
            np.add.at(out, self.perm.sub_samplers[i], contrib)
        return out

    def densify(self) -> np.ndarray:
        """Materialize the m x n matrix. Refused for n > 4096."""
        if self.n > DENSIFY_LIMIT:
            raise DensifyRefusedError(
                f"refusing to materialize a dense {self.m}x{self.n} matrix (n > {DENSIFY_LIMIT})"
            )
        dense = np.zeros((self.m, self.n))
        offsets = self.measurement_offsets()
        for i in range(self.num_subsignals):
            rows = slice(offsets[i], offsets[i + 1])
            dense[rows, :][:, self.perm.sub_samplers[i]] = self.scales[i] * self.effective_block(i)
        return dense

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "format": _FORMAT_TAG,
            "config": {
                "n": cfg.n,
                "block_size": cfg.block_size,
                "subrate": cfg.subrate,
                "passes": cfg.passes,
                "scheme": cfg.scheme.value,
                "normalization": cfg.normalization.value,
                "seed_perm": cfg.seed_perm,
                "seed_rows": cfg.seed_rows,
                "seed_blocks": cfg.seed_blocks,
            },
            "derived": {
                "m": self.m,
                "num_subsignals": self.num_subsignals,
                "measurement_counts": self.measurement_counts.tolist(),
                "num_blocks": self.bank.num_blocks,
            },
            "sub_samplers": [s.tolist() for s in self.perm.sub_samplers],
            "row_selections": [r.tolist() for r in self.row_selection.rows],
            "block_assignment": self.bank.assignment.tolist(),
            "blocks": [b.tolist() for b in self.bank.blocks],
            "scales": self.scales.tolist(),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "StructuredOperator":
        if data.get("format") != _FORMAT_TAG:
            raise InvalidConfigError(f"unrecognized operator document format: {data.get('format')!r}")
        cfg = data["config"]
        config = SchemeConfig(
            n=cfg["n"],
            block_size=cfg["block_size"],
            subrate=cfg["subrate"],
            passes=cfg["passes"],
            scheme=Scheme(cfg["scheme"]),
            normalization=Normalization(cfg["normalization"]),
            seed_perm=cfg["seed_perm"],
            seed_rows=cfg["seed_rows"],
            seed_blocks=cfg["seed_blocks"],
        )
        return cls(
            config=config,
            perm=RestrictedPermutation(data["sub_samplers"]),
            row_selection=RowSelection(data["row_selections"]),
            bank=OrthoBlockBank(data["blocks"], data["block_assignment"]),
            scales=np.asarray(data["scales"], dtype=np.float64),
        )

    @classmethod
    def from_json(cls, text: str) -> "StructuredOperator":
        return cls.from_dict(json.loads(text))


def _build_rsrm_parts(config: SchemeConfig):
    n, block_size = config.n, config.block_size
    c = config.num_subsignals

    rng_perm = np.random.default_rng(config.seed_perm)
    samplers = []
    for _ in range(config.passes):
        samplers.extend(gen_rrp(n, block_size, rng_perm).sub_samplers)
    perm = RestrictedPermutation(samplers)

    rng_rows = np.random.default_rng(config.seed_rows)
    counts = np.full(c, config.m // c, dtype=np.int64)
    _spread_remainder(counts, config.m - int(counts.sum()), rng_rows)

    # pack sub-signals into shared blocks in order, opening a fresh block
    # whenever the current one has too few unconsumed rows
    assignment = np.empty(c, dtype=np.int64)
    block_loads = []
    for i in range(c):
        if not block_loads or block_loads[-1] + counts[i] > block_size:
            block_loads.append(0)
        assignment[i] = len(block_loads) - 1
        block_loads[-1] += counts[i]

    rows = [None] * c
    for b_idx in range(len(block_loads)):
        order = rng_rows.permutation(block_size)
        offset = 0
        for i in np.flatnonzero(assignment == b_idx):
            rows[i] = np.sort(order[offset : offset + counts[i]])
            offset += counts[i]

    rng_blocks = np.random.default_rng(config.seed_blocks)
    blocks = [_orthonormal_block(block_size, rng_blocks) for _ in range(len(block_loads))]
    return perm, RowSelection(rows), OrthoBlockBank(blocks, assignment)


def _build_bcs_parts(config: SchemeConfig):
    block_size = config.block_size
    c = config.num_subsignals
    perm = RestrictedPermutation(
        [np.arange(i * block_size, (i + 1) * block_size) for i in range(c)]
    )
    rng_rows = np.random.default_rng(config.seed_rows)
    counts = np.full(c, config.m // c, dtype=np.int64)
    _spread_remainder(counts, config.m - int(counts.sum()), rng_rows)
    rows = [np.sort(rng_rows.choice(block_size, size=int(k), replace=False)) for k in counts]
    rng_blocks = np.random.default_rng(config.seed_blocks)
    blocks = [_orthonormal_block(block_size, rng_blocks) for _ in range(c)]
    return perm, RowSelection(rows), OrthoBlockBank(blocks, np.arange(c))


def _build_bsrm_parts(config: SchemeConfig):
    n, block_size = config.n, config.block_size
    c = config.num_subsignals
    rng_perm = np.random.default_rng(config.seed_perm)
    shuffled = rng_perm.permutation(n)
    perm = RestrictedPermutation(
        [shuffled[i * block_size : (i + 1) * block_size] for i in range(c)]
    )
    # one global uniform m-subset of all c*block_size rows: sub-signal sizes
    # m_i come out unequal
    rng_rows = np.random.default_rng(config.seed_rows)
    chosen = np.sort(rng_rows.choice(c * block_size, size=config.m, replace=False))
    rows = [chosen[(chosen // block_size) == i] % block_size for i in range(c)]
    rng_blocks = np.random.default_rng(config.seed_blocks)
    blocks = [_orthonormal_block(block_size, rng_blocks) for _ in range(c)]
    return perm, RowSelection(rows), OrthoBlockBank(blocks, np.arange(c))


def _build_full_grm_parts(config: SchemeConfig):
    perm = RestrictedPermutation([np.arange(config.n)])
    rows = RowSelection([np.arange(config.m)])
    rng_blocks = np.random.default_rng(config.seed_blocks)
    bank = OrthoBlockBank([_orthonormal_block(config.n, rng_blocks)], np.zeros(1, np.int64))
    return perm, rows, bank


def build_operator(config: SchemeConfig) -> StructuredOperator:
    """Construct the sensing operator described by ``config``.

    Construction is deterministic: identical configs (seeds included)
    produce bit-identical operators.
    """
    builders = {
        Scheme.RSRM: _build_rsrm_parts,
        Scheme.BCS: _build_bcs_parts,
        Scheme.BSRM: _build_bsrm_parts,
        Scheme.FULL_GRM: _build_full_grm_parts,
    }
    perm, rows, bank = builders[config.scheme](config)
    op = StructuredOperator(config, perm, rows, bank, scales=np.ones(len(perm)))
    if config.normalization == Normalization.UNBIASED:
        op = StructuredOperator(config, perm, rows, bank, scales=op.unbiased_scales())
    return op


@dataclass(frozen=True, eq=False)
class KroneckerOperator:
    """Separable 2D sampling: left operator on columns, right operator on rows."""

    left: StructuredOperator
    right: StructuredOperator

    @property
    def in_shape(self) -> tuple[int, int]:
        return (self.left.n, self.right.n)

    @property
    def out_shape(self) -> tuple[int, int]:
        return (self.left.m, self.right.m)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.in_shape:
            raise DimensionMismatchError(
                f"expected a {self.in_shape} array, got shape {x.shape}"
            )
        cols_measured = self.left.apply(x)
        return self.right.apply(cols_measured.T).T

    def adjoint(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != self.out_shape:
            raise DimensionMismatchError(
                f"expected a {self.out_shape} array, got shape {y.shape}"
            )
        rows_back = self.right.adjoint(y.T).T
        return self.left.adjoint(rows_back)


def kron_apply(kop: KroneckerOperator, x) -> np.ndarray:
    """Separable measurement of a 2D signal (columns by ``left``, rows by ``right``)."""
    return kop.apply(x)


class RowSubsetOperator:
    """View of an operator with a subset of its measurement rows kept.

    Used for erasure experiments; duck-types the apply/adjoint interface
    the solvers need.
    """

    def __init__(self, base, kept_indices):
        kept = np.asarray(kept_indices, dtype=np.int64)
        if kept.size == 0:
            raise InvalidConfigError("cannot keep zero measurement rows")
        if kept.min() < 0 or kept.max() >= base.m:
            raise DimensionMismatchError("kept row index out of range")
        self.base = base
        self.kept = kept
        self.n = base.n
        self.m = int(kept.size)

    def apply(self, x):
        return self.base.apply(x)[self.kept]

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape[0] != self.m:
            raise DimensionMismatchError(
                f"expected input with leading dimension {self.m}, got shape {y.shape}"
            )
        full = np.zeros((self.base.m,) + y.shape[1:])
        full[self.kept] = y
        return self.base.adjoint(full)

    def densify(self):
        return self.base.densify()[self.kept]
