"""Shared fixtures and independent reference implementations for the tests."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from structcs.config import Normalization, Scheme, SchemeConfig, derive_seed_triple
from structcs.operators import build_operator
from structcs.signals import SignalInstance, SignalKind


class DenseOperator:
    """Thin adapter exposing apply/adjoint for an explicit matrix (test oracle)."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.m, self.n = self.matrix.shape

    def apply(self, x):
        return self.matrix @ x

    def adjoint(self, y):
        return self.matrix.T @ y

    def densify(self):
        return self.matrix.copy()


def make_config(scheme, n, block_size, m, passes=1, seed=0, normalization=Normalization.UNBIASED):
    seed_perm, seed_rows, seed_blocks = derive_seed_triple(seed)
    return SchemeConfig.from_measurements(
        n=n,
        block_size=block_size,
        m=m,
        passes=passes,
        scheme=scheme,
        seed_perm=seed_perm,
        seed_rows=seed_rows,
        seed_blocks=seed_blocks,
        normalization=normalization,
    )


def make_operator(scheme, n, block_size, m, passes=1, seed=0, normalization=Normalization.UNBIASED):
    return build_operator(make_config(scheme, n, block_size, m, passes, seed, normalization))


def eigen_rip_delta_with_extremals(dense, s):
    """Brute-force RIP constant via Gram eigendecompositions.

    Deliberately independent of the library's svd-based oracle. Also
    returns the per-support extremal unit vectors, which achieve the
    returned constant.
    """
    dense = np.asarray(dense, dtype=np.float64)
    n = dense.shape[1]
    worst = 0.0
    extremals = []
    for support in itertools.combinations(range(n), s):
        gram = dense[:, support].T @ dense[:, support]
        evals, evecs = np.linalg.eigh(gram)
        worst = max(worst, abs(evals[-1] - 1.0), abs(1.0 - evals[0]))
        for which in (0, -1):
            vec = np.zeros(n)
            vec[list(support)] = evecs[:, which]
            extremals.append(SignalInstance(vec, SignalKind.RANDOM_SPARSE, np.asarray(support)))
    return worst, extremals


def sign_pattern_signals(n, s):
    """Every s-support with every sign pattern (up to global sign), unit norm."""
    signals = []
    for support in itertools.combinations(range(n), s):
        for signs in itertools.product((1.0, -1.0), repeat=s - 1):
            vec = np.zeros(n)
            vec[list(support)] = np.concatenate([[1.0], signs]) / np.sqrt(s)
            signals.append(SignalInstance(vec, SignalKind.RANDOM_SPARSE, np.asarray(support)))
    return signals


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250809)


ALL_SCHEMES = (Scheme.FULL_GRM, Scheme.BCS, Scheme.BSRM, Scheme.RSRM)
