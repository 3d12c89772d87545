"""Readers and writers for the on-disk formats the tools exchange.

Maps travel as PFM (float32, scale header encodes endianness, rows stored
bottom-up, invalid pixels written as +Inf) or as 16-bit PNG with the
value = raw / 256 convention and raw 0 reserved for invalid pixels.
Images travel as 8-bit PNG / PPM / PGM and are normalized to [0, 1] on
load. All writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np
from PIL import Image

from .core import DdcvError, ImageBuffer, ScalarMap

PNG16_SCALE = 256.0
PNG16_MAX = 65535


class FileFormatError(DdcvError):
    """Raised for unreadable or out-of-range file content."""


def _atomic_write(path, data: bytes):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-io-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _infer_kind(path, kind):
    if kind is not None:
        return kind.lower()
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pfm":
        return "pfm"
    if ext == ".png":
        return "png16"
    raise FileFormatError(f"cannot infer map format from {path!r}")


# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------

def _read_pfm_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if c == b"":
            raise FileFormatError("truncated PFM header")
        if c in b" \t\n\r":
            if tok:
                return tok
            continue
        tok += c


def read_pfm(path) -> ScalarMap:
    with open(path, "rb") as f:
        magic = _read_pfm_token(f)
        if magic not in (b"Pf", b"PF"):
            raise FileFormatError(f"not a PFM file: bad magic {magic!r}")
        try:
            W = int(_read_pfm_token(f))
            H = int(_read_pfm_token(f))
            scale = float(_read_pfm_token(f))
        except ValueError as e:
            raise FileFormatError(f"malformed PFM header: {e}") from None
        if W <= 0 or H <= 0 or W * H > 10 ** 9:
            raise FileFormatError(f"unreasonable PFM dimensions {W}x{H}")
        if scale == 0.0:
            raise FileFormatError("PFM scale must be nonzero")
        channels = 3 if magic == b"PF" else 1
        count = W * H * channels
        raw = f.read(count * 4)
        if len(raw) != count * 4:
            raise FileFormatError("truncated PFM pixel data")
    dt = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    data = np.frombuffer(raw, dtype=dt).astype(np.float64)
    if channels == 3:
        data = data.reshape(H, W, 3).mean(axis=2).ravel()
    vals = data.reshape(H, W)[::-1, :]  # stored bottom-up
    valid = np.isfinite(vals)
    return ScalarMap(np.where(valid, vals, 0.0), valid)


def write_pfm(m: ScalarMap, path):
    vals = np.where(m.valid, m.values, np.inf).astype(np.float32)
    header = f"Pf\n{m.width} {m.height}\n-1.0\n".encode("ascii")
    body = vals[::-1, :].astype("<f4").tobytes()
    _atomic_write(path, header + body)


# ---------------------------------------------------------------------------
# 16-bit PNG maps
# ---------------------------------------------------------------------------

def read_png16(path) -> ScalarMap:
    with Image.open(path) as im:
        if im.mode not in ("I", "I;16", "I;16B"):
            raise FileFormatError(f"expected a 16-bit grayscale PNG, got mode {im.mode!r}")
        raw = np.asarray(im, dtype=np.int64)
    if raw.ndim != 2:
        raise FileFormatError("expected a single-channel PNG")
    if raw.min() < 0 or raw.max() > PNG16_MAX:
        raise FileFormatError("PNG16 sample out of 16-bit range")
    valid = raw > 0
    return ScalarMap(np.where(valid, raw / PNG16_SCALE, 0.0), valid)


def write_png16(m: ScalarMap, path):
    if np.any(m.values[m.valid] < 0.0):
        raise FileFormatError("PNG16 cannot encode negative values")
    raw = np.rint(m.values * PNG16_SCALE)
    if np.any(raw[m.valid] > PNG16_MAX):
        raise FileFormatError(f"value exceeds the PNG16 range (max {PNG16_MAX / PNG16_SCALE})")
    # raw 0 means invalid, so a valid value rounding to 0 is nudged to 1
    raw = np.where(m.valid, np.maximum(raw, 1), 0).astype(np.uint16)
    im = Image.fromarray(raw)  # uint16 -> mode I;16
    import io

    buf = io.BytesIO()
    im.save(buf, format="PNG")
    _atomic_write(path, buf.getvalue())


def read_map(path, kind=None) -> ScalarMap:
    kind = _infer_kind(path, kind)
    if kind == "pfm":
        return read_pfm(path)
    if kind == "png16":
        return read_png16(path)
    raise FileFormatError(f"unknown map format {kind!r}")


def write_map(m: ScalarMap, path, kind=None):
    kind = _infer_kind(path, kind)
    if kind == "pfm":
        write_pfm(m, path)
    elif kind == "png16":
        write_png16(m, path)
    else:
        raise FileFormatError(f"unknown map format {kind!r}")


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def read_image(path) -> ImageBuffer:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK") else "L")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return ImageBuffer(arr)


def write_image(img: ImageBuffer, path):
    arr = np.rint(img.intensities * 255.0).astype(np.uint8)
    ext = os.path.splitext(path)[1].lower()
    if arr.shape[2] == 1:
        im = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        im = Image.fromarray(arr, mode="RGB")
    fmt = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM"}.get(ext)
    if fmt is None:
        raise FileFormatError(f"unsupported image extension {ext!r}")
    import io

    buf = io.BytesIO()
    im.save(buf, format=fmt)
    _atomic_write(path, buf.getvalue())


def write_confidence_png(C: ScalarMap, path):
    """8-bit color rendering of a confidence map: blue (0) to red (1),
    invalid pixels black."""
    v = np.clip(C.values, 0.0, 1.0)
    r = v
    g = 4.0 * v * (1.0 - v) * 0.6
    b = 1.0 - v
    rgb = np.stack([r, g, b], axis=2)
    rgb[~C.valid] = 0.0
    write_image(ImageBuffer(rgb), path)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_text(text: str, path):
    _atomic_write(path, text.encode("utf-8"))
