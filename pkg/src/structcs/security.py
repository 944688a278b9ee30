"""Measurement-security metrics: energy leakage, decorrelation, erasure robustness.

Block-based sampling lets an eavesdropper reconstruct a low-resolution
picture from per-block measurement energies alone; the leakage metric
quantifies that with a Pearson correlation against the true low-resolution
intensity map. Erasure robustness measures how recovery degrades when a
random subset of measurements is lost.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import SchemeConfig
from .errors import InvalidConfigError, InvalidSignalError, UndefinedCorrelationError
from .operators import KroneckerOperator, RowSubsetOperator, StructuredOperator, build_operator
from .recon import iht, kcs_recover, omp, psnr
from .signals import SignalInstance


@dataclass(frozen=True, eq=False)
class LeakageReport:
    """Per-sub-signal measurement energies and their correlation with the LR image."""

    energy_map: np.ndarray
    correlation: float
    scheme: str


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.std() == 0.0 or b.std() == 0.0:
        raise UndefinedCorrelationError("correlation undefined: one side is constant")
    return float(np.corrcoef(a, b)[0, 1])


def blocks_to_vector(image: np.ndarray, block_shape: tuple[int, int]) -> np.ndarray:
    """Vectorize an image block by block (row-major blocks, row-major pixels)."""
    image = np.asarray(image, dtype=np.float64)
    bh, bw = block_shape
    height, width = image.shape
    if height % bh or width % bw:
        raise InvalidConfigError(
            f"block shape {block_shape} does not tile image shape {image.shape}"
        )
    tiles = image.reshape(height // bh, bh, width // bw, bw).transpose(0, 2, 1, 3)
    return tiles.reshape(-1)


def block_mean_square(image: np.ndarray, block_shape: tuple[int, int]) -> np.ndarray:
    """Per-block mean-square pixel intensity: the reference low-resolution map."""
    image = np.asarray(image, dtype=np.float64)
    bh, bw = block_shape
    tiles = image.reshape(image.shape[0] // bh, bh, image.shape[1] // bw, bw)
    return (tiles**2).mean(axis=(1, 3)).reshape(-1)


def subsignal_energies(op: StructuredOperator, x: np.ndarray) -> np.ndarray:
    """Measurement energy of each sub-signal."""
    y = op.apply(x)
    offsets = op.measurement_offsets()
    return np.array(
        [float(np.sum(y[offsets[i] : offsets[i + 1]] ** 2)) for i in range(op.num_subsignals)]
    )


def block_energy_leakage(
    config: SchemeConfig, image: np.ndarray, block_shape: tuple[int, int] = (8, 8)
) -> LeakageReport:
    """Sample an image under ``config`` and correlate sub-signal energies with its LR map.

    The image is vectorized block by block so that block-based sampling
    maps block j onto sub-signal j; the reference value for block j is its
    mean-square pixel intensity. With several passes the reference map is
    tiled once per pass.
    """
    image = np.asarray(image, dtype=np.float64)
    x = blocks_to_vector(image, block_shape)
    if x.size != config.n:
        raise InvalidConfigError(
            f"config n={config.n} does not match image size {x.size}"
        )
    if block_shape[0] * block_shape[1] != config.block_size:
        raise InvalidConfigError(
            f"config block_size={config.block_size} does not match pixel block {block_shape}"
        )
    reference = np.tile(block_mean_square(image, block_shape), config.passes)
    op = build_operator(config)
    energies = subsignal_energies(op, x)
    return LeakageReport(energies, pearson(energies, reference), config.scheme.value)


def adjacent_correlation(seq) -> float:
    """Lag-1 Pearson correlation of a sequence."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 1 or seq.size < 3:
        raise InvalidSignalError(f"need a 1D sequence of length >= 3, got shape {seq.shape}")
    return pearson(seq[:-1], seq[1:])


@dataclass(frozen=True)
class ErasureResult:
    erase_fraction: float
    trials: int
    successes: int

    @property
    def recovery_rate(self) -> float:
        return self.successes / self.trials


def _erasure_trial(args) -> bool:
    (op, signal_source, n_erase, seed, trial, solver, s_max, success_tol) = args
    seeds = np.random.SeedSequence([int(seed), trial]).generate_state(2, dtype=np.uint64)
    signal = signal_source(int(seeds[0])) if callable(signal_source) else signal_source
    values = signal.values if isinstance(signal, SignalInstance) else np.asarray(signal, float)
    erase_rng = np.random.default_rng(int(seeds[1]))
    kept = np.sort(erase_rng.choice(op.m, size=op.m - n_erase, replace=False))
    sub_op = RowSubsetOperator(op, kept) if n_erase else op
    y = sub_op.apply(values)
    sparsity = s_max
    if sparsity is None:
        sparsity = signal.sparsity if isinstance(signal, SignalInstance) else None
    if sparsity is None:
        raise InvalidConfigError("s_max required for signals without support metadata")
    if solver == "omp":
        result = omp(sub_op, y, s_max=sparsity)
    elif solver == "iht":
        result = iht(sub_op, y, s=sparsity, max_iters=300)
    else:
        raise InvalidConfigError(f"unknown erasure solver {solver!r}")
    error = np.linalg.norm(result.estimate - values) / np.linalg.norm(values)
    return bool(error <= success_tol)


def erasure_robustness(
    op: StructuredOperator,
    signal_source,
    erase_fraction: float,
    trials: int,
    seed: int = 0,
    solver: str = "omp",
    s_max: int | None = None,
    success_tol: float = 1e-6,
    jobs: int = 1,
) -> ErasureResult:
    """Exact-recovery rate under uniform random measurement loss.

    Per trial: draw a signal (``signal_source`` is either a fixed
    SignalInstance or a callable mapping a seed to one), delete a uniform
    random subset of ``round(erase_fraction * m)`` measurements together
    with the matching operator rows, solve, and count the trial as a
    success when the relative l2 error is below ``success_tol``. Trials are
    independent; the result does not depend on ``jobs``.
    """
    if not 0.0 <= erase_fraction < 1.0:
        raise InvalidConfigError(f"erase fraction must lie in [0, 1), got {erase_fraction}")
    n_erase = int(round(erase_fraction * op.m))
    if op.m - n_erase < 1:
        raise InvalidConfigError("cannot erase every measurement")
    tasks = [
        (op, signal_source, n_erase, seed, trial, solver, s_max, success_tol)
        for trial in range(trials)
    ]
    if jobs > 1:
        # signal_source must be picklable here (e.g. functools.partial of a
        # module-level generator), not a lambda
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_erasure_trial, tasks))
    else:
        outcomes = [_erasure_trial(t) for t in tasks]
    return ErasureResult(float(erase_fraction), trials, int(sum(outcomes)))


def erasure_sweep(op, signal_source, fractions, trials: int, seed: int = 0, **kwargs):
    """Recovery-rate table over a list of erase fractions."""
    return [
        erasure_robustness(op, signal_source, float(f), trials, seed=seed, **kwargs)
        for f in fractions
    ]


def erasure_image_psnr(
    kop: KroneckerOperator,
    image: np.ndarray,
    erase_fraction: float,
    trials: int,
    seed: int = 0,
    lam: float = 1.0,
    max_iters: int = 600,
    peak: float = 255.0,
) -> tuple[float, list[float]]:
    """Mean PSNR of separable 2D recovery when measurement entries are erased.

    Per trial a uniform random subset of the 2D measurement entries is
    dropped (masked out of the data term) and the image is recovered from
    the rest. Returns the mean and per-trial PSNR values.
    """
    if not 0.0 <= erase_fraction < 1.0:
        raise InvalidConfigError(f"erase fraction must lie in [0, 1), got {erase_fraction}")
    image = np.asarray(image, dtype=np.float64)
    y = kop.apply(image)
    n_erase = int(round(erase_fraction * y.size))
    if y.size - n_erase < 1:
        raise InvalidConfigError("cannot erase every measurement")
    scores = []
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), trial]).generate_state(1)[0])
        mask = np.ones(y.shape, dtype=bool)
        if n_erase:
            mask.flat[rng.choice(y.size, size=n_erase, replace=False)] = False
        result = kcs_recover(np.where(mask, y, 0.0), kop, lam=lam, max_iters=max_iters, mask=mask)
        scores.append(psnr(image, np.clip(result.estimate, 0.0, peak), peak))
    return float(np.mean(scores)), scores
