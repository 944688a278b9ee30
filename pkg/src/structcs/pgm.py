"""Binary 8-bit PGM (P5) reading and writing."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidSignalError


def _read_token(stream) -> bytes:
    """Next whitespace-delimited token, skipping '#' comment lines."""
    token = b""
    while True:
        ch = stream.read(1)
        if not ch:
            break
        if ch == b"#":
            while ch and ch != b"\n":
                ch = stream.read(1)
            continue
        if ch.isspace():
            if token:
                break
            continue
        token += ch
    if not token:
        raise InvalidSignalError("truncated PGM header")
    return token


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a (height, width) uint8 array."""
    with open(Path(path), "rb") as fh:
        if _read_token(fh) != b"P5":
            raise InvalidSignalError(f"{path}: not a binary (P5) PGM file")
        width = int(_read_token(fh))
        height = int(_read_token(fh))
        maxval = int(_read_token(fh))
        if not 0 < maxval <= 255:
            raise InvalidSignalError(f"{path}: only 8-bit PGM supported, maxval={maxval}")
        raw = fh.read(width * height)
    if len(raw) != width * height:
        raise InvalidSignalError(f"{path}: truncated PGM pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width)


def write_pgm(path, image: np.ndarray, comments: tuple[str, ...] = ()) -> None:
    """Write an array as binary PGM, clipping to [0, 255].

    ``comments`` are embedded as '#'-prefixed header lines (one per entry),
    which is where output provenance lives.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise InvalidSignalError(f"expected a 2D image, got shape {image.shape}")
    pixels = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    height, width = pixels.shape
    with open(Path(path), "wb") as fh:
        fh.write(b"P5\n")
        for comment in comments:
            fh.write(b"# " + comment.encode("ascii", "replace") + b"\n")
        fh.write(f"{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
