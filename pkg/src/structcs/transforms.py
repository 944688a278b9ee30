"""Orthonormal DCT-II pairs used as the sparsifying transform."""

from __future__ import annotations

import numpy as np
from scipy.fft import dct, dctn, idct, idctn


def dct_forward(x: np.ndarray) -> np.ndarray:
    """Orthonormal 1D DCT-II along the first axis."""
    return dct(np.asarray(x, dtype=np.float64), type=2, norm="ortho", axis=0)


def dct_inverse(coeffs: np.ndarray) -> np.ndarray:
    return idct(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho", axis=0)


def dct2_forward(x: np.ndarray) -> np.ndarray:
    """Orthonormal 2D DCT-II."""
    return dctn(np.asarray(x, dtype=np.float64), type=2, norm="ortho")


def dct2_inverse(coeffs: np.ndarray) -> np.ndarray:
    return idctn(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho")
