"""Core map types and neighborhood geometry shared by all kernels.

All dense maps are stored row-major as float64 ``(H, W)`` arrays with an
accompanying boolean validity mask. Arrays are frozen after construction;
every operation returns a new map and propagates invalidity (a pixel is
valid in a result only if it was valid in every input).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DdcvError(Exception):
    """Base error for this package."""


class DegenerateInputError(DdcvError):
    """Raised when an input is unusable (e.g. constant disparity map)."""


def _as_float2d(values) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class ScalarMap:
    """Dense 2-D grid of real values with a per-pixel validity mask.

    Used for disparity maps, relative depth maps, confidence maps and
    per-pixel error maps alike.
    """

    values: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        values = _as_float2d(self.values)
        if self.valid is None:
            valid = np.ones(values.shape, dtype=bool)
        else:
            valid = np.asarray(self.valid, dtype=bool)
            if valid.shape != values.shape:
                raise ValueError("valid mask shape does not match values shape")
        values = np.ascontiguousarray(values)
        valid = np.ascontiguousarray(valid)
        values.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def same_shape(self, other: "ScalarMap") -> bool:
        return self.shape == other.shape

    def with_values(self, values) -> "ScalarMap":
        return ScalarMap(values, self.valid.copy())

    def _binary(self, other, op) -> "ScalarMap":
        if not isinstance(other, ScalarMap):
            other = ScalarMap(np.full(self.shape, float(other)))
        if other.shape != self.shape:
            raise ValueError("shape mismatch")
        return ScalarMap(op(self.values, other.values), self.valid & other.valid)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)


def map_stats(m: ScalarMap) -> dict:
    """Min / max / mean over the valid pixels of a map."""
    vals = m.values[m.valid]
    if vals.size == 0:
        raise DegenerateInputError("map has no valid pixels")
    return {"min": float(vals.min()), "max": float(vals.max()), "mean": float(vals.mean())}


@dataclass(frozen=True)
class ImageBuffer:
    """Dense 1- or 3-channel image with intensities in [0, 1].

    Stored as a float64 ``(H, W, C)`` array.
    """

    intensities: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.intensities, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3 or a.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W) or (H, W, 1|3) array, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("empty image")
        if np.nanmin(a) < 0.0 or np.nanmax(a) > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "intensities", a)

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @property
    def width(self) -> int:
        return self.intensities.shape[1]

    @property
    def channels(self) -> int:
        return self.intensities.shape[2]

    @property
    def shape(self):
        return self.intensities.shape[:2]


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Square sampling window centered on a pixel.

    ``window`` is the odd number of taps per side; ``dilation`` is the pixel
    stride between taps. The center tap is never part of the neighborhood.
    Taps falling outside the map are skipped ("shrink" border policy), so
    the neighbor count varies near borders.
    """

    window: int = 11
    dilation: int = 1

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.dilation < 1:
            raise ValueError("dilation must be >= 1")

    @property
    def half(self) -> int:
        return self.window // 2

    @property
    def max_taps(self) -> int:
        return self.window * self.window - 1

    def offsets(self) -> np.ndarray:
        """All (di, dj) tap offsets in row-major order, center excluded."""
        h, d = self.half, self.dilation
        offs = [
            (di * d, dj * d)
            for di in range(-h, h + 1)
            for dj in range(-h, h + 1)
            if not (di == 0 and dj == 0)
        ]
        return np.array(offs, dtype=np.int64)

    def half_offsets(self) -> np.ndarray:
        """One offset per unordered neighbor pair: (di, dj) with di > 0, or
        di == 0 and dj > 0. Vote and scale computations are symmetric in the
        pair, so each pair needs to be visited once."""
        offs = self.offsets()
        keep = (offs[:, 0] > 0) | ((offs[:, 0] == 0) & (offs[:, 1] > 0))
        return offs[keep]


def neighborhood(p, spec: NeighborhoodSpec, bounds) -> list:
    """In-bounds neighbors of pixel ``p`` = (row, col) on a (H, W) map.

    Returns (row, col) tuples in row-major tap order, excluding ``p``.
    """
    i, j = p
    H, W = bounds
    if not (0 <= i < H and 0 <= j < W):
        raise ValueError(f"pixel {p} outside bounds {bounds}")
    out = []
    for di, dj in spec.offsets():
        qi, qj = i + di, j + dj
        if 0 <= qi < H and 0 <= qj < W:
            out.append((qi, qj))
    return out


def step(x: float) -> int:
    """Heaviside-style step: 1 for x >= 0, else 0. Rejects non-finite input."""
    if not np.isfinite(x):
        raise ValueError(f"step() requires finite input, got {x!r}")
    return 1 if x >= 0 else 0


def neighbor_counts(height: int, width: int, spec: NeighborhoodSpec) -> np.ndarray:
    """Per-pixel neighbor count m under the shrink border policy (no mask)."""
    h, d = spec.half, spec.dilation
    ks = np.arange(-h, h + 1) * d
    ci = ((np.arange(height)[:, None] + ks >= 0) & (np.arange(height)[:, None] + ks < height)).sum(1)
    cj = ((np.arange(width)[:, None] + ks >= 0) & (np.arange(width)[:, None] + ks < width)).sum(1)
    return ci[:, None] * cj[None, :] - 1
