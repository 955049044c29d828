"""Portable Float Map reader/writer.

Header: "PF" (3-channel) or "Pf" (1-channel), then "width height", then a
scale line whose sign encodes endianness (negative = little-endian). Pixel
rows are 32-bit floats stored bottom-to-top.
"""

import numpy as np


class PfmError(ValueError):
    pass


def pfm_write(image, path):
    """Write a (H, W) or (H, W, 3) float image; little-endian, scale -1."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim == 2:
        header = b"Pf"
    elif img.ndim == 3 and img.shape[2] == 3:
        header = b"PF"
    else:
        raise PfmError(f"unsupported image shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise PfmError("PFM requires finite pixel values")
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(img[::-1]).astype("<f4").tobytes())


def _read_token(f):
    tok = b""
    while True:
        ch = f.read(1)
        if not ch:
            raise PfmError("truncated header")
        if ch in b" \t\r\n":
            if tok:
                return tok
            continue
        tok += ch


def pfm_read(path):
    """Read a PFM file into a float32 array of shape (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic not in (b"PF", b"Pf"):
            raise PfmError(f"bad magic token {magic!r}, expected 'PF' or 'Pf'")
        channels = 3 if magic == b"PF" else 1
        try:
            w = int(_read_token(f))
            h = int(_read_token(f))
            scale = float(_read_token(f))
        except ValueError as e:
            raise PfmError(f"malformed header: {e}") from e
        if w <= 0 or h <= 0 or scale == 0:
            raise PfmError(f"invalid header values w={w} h={h} scale={scale}")
        dtype = "<f4" if scale < 0 else ">f4"
        payload = f.read(4 * w * h * channels)
        if len(payload) != 4 * w * h * channels:
            raise PfmError(
                f"truncated payload: expected {4 * w * h * channels} bytes, "
                f"got {len(payload)}")
    data = np.frombuffer(payload, dtype=dtype).astype(np.float32)
    shape = (h, w) if channels == 1 else (h, w, 3)
    return data.reshape(shape)[::-1].copy()
