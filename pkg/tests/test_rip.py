import numpy as np
import pytest

from structcs.config import Normalization, Scheme
from structcs.errors import EnumerationTooLargeError, InvalidSignalError
from structcs.operators import selection_counts
from structcs.rip import (
    block_rip_delta,
    check_composed_bound,
    default_delta_grid,
    estimate_delta,
    exact_rip_delta,
    max_subsignal_sparsity,
    satisfaction_sweep,
    sweep_rows,
)
from structcs.signals import SignalInstance, SignalKind, SignalSpec, gen_random_sparse

from conftest import eigen_rip_delta_with_extremals, make_operator


# -- estimate_delta -----------------------------------------------------------------


def test_estimate_delta_orthonormal_square_is_zero():
    op = make_operator(Scheme.FULL_GRM, n=48, block_size=48, m=48, seed=0)
    signals = [gen_random_sparse(48, 4, seed=k) for k in range(20)]
    est = estimate_delta(op, signals)
    assert est.delta <= 1e-10
    assert est.min_uses == est.max_uses == 1


def test_estimate_delta_single_exact_signal_gives_zero():
    op = make_operator(Scheme.FULL_GRM, n=16, block_size=16, m=16, seed=1)
    est = estimate_delta(op, [gen_random_sparse(16, 3, seed=2)])
    assert est.delta < 1e-10
    assert np.allclose(est.ratios, 1.0)


def test_estimate_delta_matches_direct_recomputation():
    op = make_operator(Scheme.RSRM, n=64, block_size=16, m=24, seed=3)
    signals = [gen_random_sparse(64, 4, seed=100 + k) for k in range(500)]
    est = estimate_delta(op, signals)
    # independent recomputation signal by signal with the unbiased scaling
    scales = op.unbiased_scales()
    worst = 0.0
    for sig in signals:
        y = op._apply_scaled(sig.values, scales)
        ratio = float(np.sum(y**2) / np.sum(sig.values**2))
        worst = max(worst, abs(ratio - 1.0))
    assert est.delta == pytest.approx(worst, abs=0.0)


def test_estimate_delta_rejects_zero_signal():
    op = make_operator(Scheme.RSRM, n=64, block_size=16, m=24, seed=3)
    zero = SignalInstance(np.zeros(64), SignalKind.EXTERNAL)
    with pytest.raises(InvalidSignalError):
        estimate_delta(op, [zero])


def test_estimate_delta_union_monotonicity():
    op = make_operator(Scheme.RSRM, n=64, block_size=16, m=24, seed=4)
    group_a = [gen_random_sparse(64, 4, seed=k) for k in range(50)]
    group_b = [gen_random_sparse(64, 4, seed=1000 + k) for k in range(50)]
    da = estimate_delta(op, group_a).delta
    db = estimate_delta(op, group_b).delta
    dab = estimate_delta(op, group_a + group_b).delta
    assert dab == pytest.approx(max(da, db), abs=0.0)


# -- exact_rip_delta ---------------------------------------------------------------


def test_exact_rip_delta_identity_is_zero():
    for s in (1, 2, 3):
        assert exact_rip_delta(np.eye(8), s) == 0.0


def test_exact_rip_delta_duplicated_column_is_one():
    phi = np.zeros((4, 2))
    phi[0, 0] = 1.0
    phi[0, 1] = 1.0
    assert exact_rip_delta(phi, 2) == pytest.approx(1.0, abs=1e-12)


def test_exact_rip_delta_matches_eigen_brute_force():
    rng = np.random.default_rng(5)
    gauss = rng.standard_normal((6, 12))
    q, _ = np.linalg.qr(gauss.T)
    phi = q.T * np.sqrt(12 / 6)
    ours = exact_rip_delta(phi, 2)
    independent, _ = eigen_rip_delta_with_extremals(phi, 2)
    assert ours == pytest.approx(independent, abs=1e-10)


def test_exact_rip_delta_nondecreasing_in_s():
    op = make_operator(Scheme.RSRM, n=16, block_size=8, m=8, seed=6)
    dense = op.densify()
    deltas = [exact_rip_delta(dense, s) for s in (1, 2, 3, 4)]
    assert all(deltas[i] <= deltas[i + 1] + 1e-12 for i in range(3))


def test_exact_rip_delta_enumeration_guard():
    with pytest.raises(EnumerationTooLargeError):
        exact_rip_delta(np.zeros((10, 64)), 8)


def test_exact_rip_delta_wide_support_rank_deficient():
    # m < s forces a zero singular value, hence delta >= 1
    phi = np.ones((1, 3))
    assert exact_rip_delta(phi, 2) >= 1.0


# -- composed bound ------------------------------------------------------------------


def test_composed_bound_holds_with_exact_block_constant():
    op = make_operator(Scheme.RSRM, n=32, block_size=8, m=16, seed=7, normalization=Normalization.RAW)
    signals = [gen_random_sparse(32, 2, seed=k) for k in range(1000)]
    s_star = max_subsignal_sparsity(op, signals)
    delta_star = block_rip_delta(op, s_star)
    report = check_composed_bound(op, signals, delta_star)
    assert report.passed
    assert report.violations == 0


def test_composed_bound_zero_signal_holds_with_equality():
    op = make_operator(Scheme.RSRM, n=32, block_size=8, m=16, seed=7)
    zero = SignalInstance(np.zeros(32), SignalKind.EXTERNAL)
    report = check_composed_bound(op, [zero], delta_star=0.3)
    assert report.passed


def test_composed_bound_understated_constant_is_detected():
    # sensitivity probe: halving the exact constant must produce violations
    op = make_operator(Scheme.RSRM, n=32, block_size=8, m=16, seed=7)
    signals = [gen_random_sparse(32, 2, seed=k) for k in range(1000)]
    delta_star = block_rip_delta(op, max_subsignal_sparsity(op, signals))
    report = check_composed_bound(op, signals, delta_star / 2.0)
    assert not report.passed
    assert report.violations > 0


def test_composed_bound_respects_pass_count():
    op = make_operator(Scheme.RSRM, n=32, block_size=8, m=16, passes=2, seed=8)
    assert selection_counts(op.perm, 32) == (2, 2)
    signals = [gen_random_sparse(32, 2, seed=k) for k in range(200)]
    delta_star = block_rip_delta(op, max_subsignal_sparsity(op, signals))
    report = check_composed_bound(op, signals, delta_star)
    assert report.passed
    assert report.min_uses == report.max_uses == 2


def test_unbiased_estimate_never_exceeds_blockwise_bound():
    # with equal selection counts, the unbiased empirical delta is capped by
    # the worst exact constant of the unbiased-scaled blocks
    op = make_operator(Scheme.RSRM, n=32, block_size=8, m=16, passes=2, seed=9)
    signals = [gen_random_sparse(32, 2, seed=k) for k in range(500)]
    s_star = max_subsignal_sparsity(op, signals)
    scales = op.unbiased_scales() * np.sqrt(op.config.passes)
    delta_star = max(
        exact_rip_delta(scales[i] * op.effective_block(i), s_star)
        for i in range(op.num_subsignals)
    )
    est = estimate_delta(op, signals)
    assert est.delta <= delta_star + 1e-10


# -- satisfaction sweep ---------------------------------------------------------------


def test_default_delta_grid_strictly_inside_unit_interval():
    grid = default_delta_grid(0.02)
    assert grid[0] == pytest.approx(0.02)
    assert grid[-1] == pytest.approx(0.98)
    assert np.all(np.diff(grid) > 0)


def test_sweep_single_trial_is_step_function():
    spec = SignalSpec(kind=SignalKind.RANDOM_SPARSE, s=4)
    [result] = satisfaction_sweep(
        [(Scheme.RSRM, 1)], n=64, block_sizes=[16], measurement_counts=[24],
        signal_spec=spec, trials=1, signals_per_trial=50, seed=1,
    )
    fractions = result.curve.fraction_satisfying
    assert set(np.unique(fractions)) <= {0.0, 1.0}
    assert np.all(np.diff(fractions) >= 0.0)


def test_sweep_fraction_matches_threshold_count():
    spec = SignalSpec(kind=SignalKind.RANDOM_SPARSE, s=4)
    [result] = satisfaction_sweep(
        [(Scheme.BCS, 1)], n=64, block_sizes=[16], measurement_counts=[24],
        signal_spec=spec, trials=25, signals_per_trial=30, seed=2,
    )
    grid = result.curve.delta_grid
    for idx in (5, 20, 40):
        expected = np.mean(result.trial_deltas <= grid[idx])
        assert result.curve.fraction_satisfying[idx] == pytest.approx(expected, abs=0.0)


def test_sweep_curves_monotone_and_bounded():
    spec = SignalSpec(kind=SignalKind.BLOCK_SPARSE, s=8, block_size=64, block_sparsity=2)
    results = satisfaction_sweep(
        [(Scheme.RSRM, 1), (Scheme.BCS, 1)], n=256, block_sizes=[64],
        measurement_counts=[64], signal_spec=spec, trials=20, signals_per_trial=50, seed=3,
    )
    for res in results:
        f = res.curve.fraction_satisfying
        assert np.all((0.0 <= f) & (f <= 1.0))
        assert np.all(np.diff(f) >= 0.0)


def test_sweep_deterministic_and_jobs_independent():
    spec = SignalSpec(kind=SignalKind.RANDOM_SPARSE, s=4)
    kwargs = dict(
        schemes=[(Scheme.RSRM, 1)], n=64, block_sizes=[16], measurement_counts=[24],
        signal_spec=spec, trials=8, signals_per_trial=20, seed=4,
    )
    serial = satisfaction_sweep(**kwargs)
    parallel = satisfaction_sweep(**kwargs, jobs=2)
    assert np.array_equal(serial[0].trial_deltas, parallel[0].trial_deltas)


def test_sweep_rows_schema():
    spec = SignalSpec(kind=SignalKind.RANDOM_SPARSE, s=4)
    results = satisfaction_sweep(
        [(Scheme.RSRM, 2)], n=64, block_sizes=[16], measurement_counts=[24],
        signal_spec=spec, trials=2, signals_per_trial=10, seed=5,
    )
    rows = sweep_rows(results)
    assert len(rows) == len(results[0].curve.delta_grid)
    scheme, n, n_b, m, b, signal_class, delta, fraction = rows[0]
    assert (scheme, n, n_b, m, b, signal_class) == ("rsrm", 64, 16, 24, 2, "random_sparse")
    assert 0.0 < delta < 1.0 and 0.0 <= fraction <= 1.0
