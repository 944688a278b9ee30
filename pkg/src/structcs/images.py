"""Synthetic desk-scale test images and access to the bundled copies.

The bundled corpus is three deterministic 128x128 grayscale images with
natural-image statistics (strong local smoothness and a wide brightness
range) so that block-energy experiments have realistic structure to leak.
No photographic data ships with the package.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .errors import InvalidSignalError
from .pgm import read_pgm

BUNDLED_IMAGE_NAMES = ("blobs", "gradient_bars", "plasma")

# (kind, seed) recipe behind each bundled file, kept so the corpus can be
# regenerated and its integrity tested
BUNDLED_IMAGE_RECIPES = {
    "blobs": ("blobs", 7),
    "gradient_bars": ("gradient_bars", 3),
    "plasma": ("plasma", 11),
}


def _to_uint8(field: np.ndarray, low: float = 5.0, high: float = 250.0) -> np.ndarray:
    field = field - field.min()
    peak = field.max()
    if peak > 0:
        field = field / peak
    return np.rint(low + (high - low) * field).astype(np.uint8)


def synthetic_image(kind: str, size: int = 128, seed: int = 0) -> np.ndarray:
    """Deterministic grayscale test image of the requested kind."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / float(size)
    if kind == "blobs":
        field = 0.65 * xx + 0.2 * yy
        for _ in range(6):
            cx, cy = rng.uniform(0.1, 0.9, size=2)
            radius = rng.uniform(0.06, 0.22)
            amp = rng.uniform(0.5, 1.4)
            field += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * radius**2))
    elif kind == "gradient_bars":
        field = 1.3 * (1 - yy) * (1 - xx)
        field += 0.45 * (np.sin(2 * np.pi * 3.0 * xx) > 0.3) * yy
        field += 0.25 * np.sin(2 * np.pi * (1.5 * yy + 0.7 * xx))
    elif kind == "plasma":
        # 1/f^2.4 filtered noise: smooth large-scale brightness structure
        spectrum = np.fft.fft2(rng.standard_normal((size, size)))
        fy = np.fft.fftfreq(size)[:, None]
        fx = np.fft.fftfreq(size)[None, :]
        radius = np.sqrt(fx**2 + fy**2)
        radius[0, 0] = 1.0
        field = np.real(np.fft.ifft2(spectrum / radius**2.4))
    else:
        raise InvalidSignalError(f"unknown synthetic image kind: {kind!r}")
    return _to_uint8(field)


def load_bundled_image(name: str) -> np.ndarray:
    """Load one of the bundled 128x128 PGM test images by name."""
    if name not in BUNDLED_IMAGE_NAMES:
        raise InvalidSignalError(
            f"unknown bundled image {name!r}; available: {', '.join(BUNDLED_IMAGE_NAMES)}"
        )
    ref = resources.files("structcs").joinpath(f"data/{name}.pgm")
    with resources.as_file(ref) as path:
        return read_pgm(path)


def regenerate_bundled_images(dest_dir) -> None:
    """Write the bundled corpus from its recipes into ``dest_dir``."""
    from pathlib import Path

    from .pgm import write_pgm

    dest = Path(dest_dir)
    dest.mkdir(parents=True, exist_ok=True)
    for name, (kind, seed) in BUNDLED_IMAGE_RECIPES.items():
        write_pgm(dest / f"{name}.pgm", synthetic_image(kind, 128, seed))
