"""Binary PPM (P6, 8-bit RGB) reading and writing.

P6 is the mandatory image format for the batch tools: dependency-free and
bit-exact, so outputs stay reproducible across platforms.
"""

from __future__ import annotations

import numpy as np

from .errors import PpmError


def read_ppm_bytes(data: bytes) -> np.ndarray:
    """Decode a binary P6 buffer into an (H, W, 3) uint8 array."""
    if not data.startswith(b"P6"):
        raise PpmError("not a binary PPM (missing P6 magic)")
    # Header: magic, width, height, maxval; '#' comments allowed between tokens.
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise PpmError("truncated PPM header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end == -1 else end + 1
        elif ch.isdigit():
            end = pos
            while end < len(data) and data[end : end + 1].isdigit():
                end += 1
            tokens.append(int(data[pos:end]))
            pos = end
        else:
            raise PpmError(f"unexpected byte {ch!r} in PPM header")
    width, height, maxval = tokens
    if maxval != 255:
        raise PpmError(f"only maxval 255 supported, got {maxval}")
    if width < 1 or height < 1:
        raise PpmError(f"bad dimensions {width}x{height}")
    pos += 1  # single whitespace byte separates header from pixel data
    expected = width * height * 3
    pixels = data[pos : pos + expected]
    if len(pixels) != expected:
        raise PpmError(f"expected {expected} pixel bytes, got {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3).copy()


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_ppm_bytes(fh.read())


def write_ppm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise PpmError(f"expected (H, W, 3) uint8 image, got {image.shape} {image.dtype}")
    height, width = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (width, height))
        fh.write(image.tobytes())
