"""Empirical and exact restricted-isometry evaluation.

The empirical estimator measures how far measurement energies of a signal
set deviate from input energies; the exact oracle enumerates every column
support of a dense matrix. The satisfaction sweep reproduces the standard
protocol: draw fresh operators and fresh signal sets per trial, then count
the fraction of operators whose worst-case deviation stays below each
isometry-constant level.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import Normalization, Scheme, SchemeConfig
from .errors import EnumerationTooLargeError, InvalidSignalError
from .operators import StructuredOperator, build_operator, selection_counts
from .signals import SignalInstance, SignalSpec

ENUMERATION_LIMIT = 10**6


@dataclass(frozen=True, eq=False)
class RIPEstimate:
    """Empirical isometry constant over a signal set.

    ``delta`` is the worst deviation ``|ratio - 1|`` where ``ratios`` holds
    the per-signal measurement-to-signal energy ratios; ``min_uses`` and
    ``max_uses`` count how often the least- and most-selected input index
    feeds the operator's sub-samplers.
    """

    delta: float
    ratios: np.ndarray
    min_uses: int
    max_uses: int


@dataclass(frozen=True, eq=False)
class SatisfactionCurve:
    """Fraction of trial operators whose empirical delta stays below each level."""

    delta_grid: np.ndarray
    fraction_satisfying: np.ndarray


def default_delta_grid(step: float = 0.02) -> np.ndarray:
    """Levels 'step, 2*step, ...' strictly inside (0, 1)."""
    count = int(round(1.0 / step)) - 1
    return np.round(np.arange(1, count + 1) * step, 10)


def estimate_delta(op: StructuredOperator, signals) -> RIPEstimate:
    """Empirical isometry constant of ``op`` over a list of signals.

    Ratios are computed with the unbiased-normalized application so that a
    perfectly isometric operator yields ratios of exactly 1.
    """
    values = [sig.values if isinstance(sig, SignalInstance) else np.asarray(sig, float) for sig in signals]
    if not values:
        raise InvalidSignalError("need at least one signal")
    stack = np.column_stack(values)
    norms_sq = np.sum(stack**2, axis=0)
    if np.any(norms_sq == 0.0):
        raise InvalidSignalError("zero signals are not admissible for RIP estimation")
    measured = op._apply_scaled(stack, op.unbiased_scales())
    ratios = np.sum(measured**2, axis=0) / norms_sq
    lo, hi = selection_counts(op.perm, op.n)
    return RIPEstimate(float(np.max(np.abs(ratios - 1.0))), ratios, lo, hi)


def exact_rip_delta(dense: np.ndarray, s: int) -> float:
    """Exact isometry constant of a dense matrix at sparsity ``s``.

    Enumerates all size-``s`` column supports and tracks the worst singular
    value excursion; refuses when the enumeration would be too large.
    """
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 2:
        raise InvalidSignalError(f"expected a matrix, got shape {dense.shape}")
    m, n = dense.shape
    if not 0 < s <= n:
        raise InvalidSignalError(f"sparsity must lie in [1, {n}], got {s}")
    if n > 32 and math.comb(n, s) > ENUMERATION_LIMIT:
        raise EnumerationTooLargeError(
            f"C({n},{s}) supports exceed the enumeration limit of {ENUMERATION_LIMIT}"
        )
    worst = 0.0
    for support in combinations(range(n), s):
        svals = np.linalg.svd(dense[:, support], compute_uv=False)
        hi = svals[0] ** 2
        lo = svals[-1] ** 2 if m >= s else 0.0
        worst = max(worst, hi - 1.0, 1.0 - lo)
    return float(worst)


# -- composed-operator bound check ---------------------------------------------


@dataclass(frozen=True)
class BoundCheckReport:
    """Outcome of checking the composed-operator isometry bound per signal."""

    passed: bool
    violations: int
    num_signals: int
    delta_star: float
    min_uses: int
    max_uses: int
    worst_lower_margin: float
    worst_upper_margin: float


def block_rip_delta(op: StructuredOperator, s: int) -> float:
    """Max exact isometry constant over the operator's unscaled effective blocks."""
    worst = 0.0
    for i in range(op.num_subsignals):
        block = op.effective_block(i)
        worst = max(worst, exact_rip_delta(block, s))
    return worst


def max_subsignal_sparsity(op: StructuredOperator, signals) -> int:
    """Largest nonzero count among all sub-sampled views of the given signals."""
    worst = 0
    for sig in signals:
        values = sig.values if isinstance(sig, SignalInstance) else np.asarray(sig, float)
        for sampler in op.perm.sub_samplers:
            worst = max(worst, int(np.count_nonzero(values[sampler])))
    return worst


def check_composed_bound(op: StructuredOperator, signals, delta_star: float) -> BoundCheckReport:
    """Check (p/q)(1-d*)||a||^2 <= ||Phi a||^2 / q <= (1+d*)||a||^2 per signal.

    Uses the raw (unscaled) block action, with p and q the min and max
    selection counts of the operator's sub-samplers and d* supplied by the
    exact per-block oracle.
    """
    lo_uses, hi_uses = selection_counts(op.perm, op.n)
    violations = 0
    worst_lower = np.inf
    worst_upper = np.inf
    ones = np.ones(op.num_subsignals)
    for sig in signals:
        values = sig.values if isinstance(sig, SignalInstance) else np.asarray(sig, float)
        energy = float(values @ values)
        measured = float(np.sum(op._apply_scaled(values, ones) ** 2)) / hi_uses
        lower = (lo_uses / hi_uses) * (1.0 - delta_star) * energy
        upper = (1.0 + delta_star) * energy
        worst_lower = min(worst_lower, measured - lower)
        worst_upper = min(worst_upper, upper - measured)
        if measured < lower or measured > upper:
            violations += 1
    return BoundCheckReport(
        passed=violations == 0,
        violations=violations,
        num_signals=len(signals),
        delta_star=float(delta_star),
        min_uses=lo_uses,
        max_uses=hi_uses,
        worst_lower_margin=float(worst_lower),
        worst_upper_margin=float(worst_upper),
    )


# -- satisfaction sweep -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SweepResult:
    scheme: Scheme
    passes: int
    n: int
    block_size: int
    m: int
    signal_class: str
    curve: SatisfactionCurve
    trial_deltas: np.ndarray


def _run_trial(scheme, passes, n, block_size, m, spec, master_seed, combo_index, trial, signals_per_trial):
    op_seeds = np.random.SeedSequence([master_seed, combo_index, trial, 0]).generate_state(3, dtype=np.uint64)
    config = SchemeConfig.from_measurements(
        n=n,
        block_size=block_size,
        m=m,
        passes=passes,
        scheme=scheme,
        seed_perm=int(op_seeds[0]),
        seed_rows=int(op_seeds[1]),
        seed_blocks=int(op_seeds[2]),
        normalization=Normalization.UNBIASED,
    )
    op = build_operator(config)
    sig_seeds = np.random.SeedSequence([master_seed, combo_index, trial, 1]).generate_state(
        signals_per_trial, dtype=np.uint64
    )
    signals = [spec.generate(n, int(s)) for s in sig_seeds]
    return estimate_delta(op, signals).delta


def _run_trial_packed(args):
    return _run_trial(*args)


def satisfaction_sweep(
    schemes,
    n: int,
    block_sizes,
    measurement_counts,
    signal_spec: SignalSpec,
    trials: int,
    signals_per_trial: int,
    delta_grid: np.ndarray | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> list[SweepResult]:
    """Monte-Carlo satisfaction curves for every (scheme, block size, m) combination.

    ``schemes`` is a list of (Scheme, passes) pairs. Each trial draws a
    fresh operator and a fresh signal set from seeds derived off ``seed``,
    so results are reproducible and independent of ``jobs``.
    """
    if delta_grid is None:
        delta_grid = default_delta_grid()
    delta_grid = np.asarray(delta_grid, dtype=np.float64)

    combos = []
    for scheme, passes in schemes:
        for block_size in block_sizes:
            for m in measurement_counts:
                combos.append((Scheme(scheme), int(passes), int(block_size), int(m)))

    tasks = []
    for combo_index, (scheme, passes, block_size, m) in enumerate(combos):
        for trial in range(trials):
            tasks.append(
                (scheme, passes, n, block_size, m, signal_spec, int(seed), combo_index, trial, signals_per_trial)
            )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            deltas = list(pool.map(_run_trial_packed, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        deltas = [_run_trial_packed(t) for t in tasks]

    results = []
    for combo_index, (scheme, passes, block_size, m) in enumerate(combos):
        trial_deltas = np.array(deltas[combo_index * trials : (combo_index + 1) * trials])
        fractions = np.mean(trial_deltas[:, None] <= delta_grid[None, :], axis=0)
        results.append(
            SweepResult(
                scheme=scheme,
                passes=passes,
                n=n,
                block_size=block_size,
                m=m,
                signal_class=signal_spec.label,
                curve=SatisfactionCurve(delta_grid, fractions),
                trial_deltas=trial_deltas,
            )
        )
    return results


def sweep_rows(results) -> list[tuple]:
    """Flatten sweep results to (scheme,n,n_B,m,b,signal_class,delta,fraction) rows."""
    rows = []
    for res in results:
        for delta, fraction in zip(res.curve.delta_grid, res.curve.fraction_satisfying):
            rows.append(
                (
                    res.scheme.value,
                    res.n,
                    res.block_size,
                    res.m,
                    res.passes,
                    res.signal_class,
                    float(delta),
                    float(fraction),
                )
            )
    return rows
