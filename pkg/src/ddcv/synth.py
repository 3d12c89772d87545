"""Synthetic rectified stereo scenes with known disparity.

The right image carries the texture; the left image is produced by sampling
the right image at x - D(x) with the same linear interpolation the warping
operator uses, so reconstructing the left view at the true disparity is
exact down to the last bit. A right-view disparity map is generated too,
analytically for planar ramps (where left-right consistency is then exact)
and by forward splatting with hole filling otherwise.

Noise textures come from a linear congruential generator,
state <- (1664525 * state + 1013904223) mod 2^32, value = state / 2^32,
filled row-major, so they are reproducible from the seed in any language.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .core import ImageBuffer, ScalarMap
from .losses import _warp_arrays

LAYOUTS = ("planar-ramp", "piecewise-planar", "step-edge")
TEXTURES = ("flat", "sinusoidal", "noise", "textureless-band")
DEPTH_TRANSFORMS = ("affine", "power")
CORRUPTIONS = ("none", "salt", "region")

DISPARITY_FLOOR = 0.1


@dataclass(frozen=True)
class SceneSpec:
    width: int = 128
    height: int = 128
    layout: str = "planar-ramp"
    texture: str = "noise"
    depth_transform: str = "affine"
    depth_a: float = 3.0
    depth_b: float = 7.0
    corruption: str = "none"
    salt_fraction: float = 0.05
    magnitude: float = 20.0
    n_boxes: int = 4
    seed: int = 0
    d0: float = 8.0
    gx: float = 0.05
    gy: float = 0.02

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError("scene must be at least 8x8")
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}")
        if self.texture not in TEXTURES:
            raise ValueError(f"texture must be one of {TEXTURES}")
        if self.depth_transform not in DEPTH_TRANSFORMS:
            raise ValueError(f"depth_transform must be one of {DEPTH_TRANSFORMS}")
        if self.corruption not in CORRUPTIONS:
            raise ValueError(f"corruption must be one of {CORRUPTIONS}")
        if not 0.0 <= self.salt_fraction <= 1.0:
            raise ValueError("salt_fraction must lie in [0, 1]")
        if self.layout == "planar-ramp" and not self.gx < 1.0:
            raise ValueError("ramp slope gx must be < 1 for an invertible warp")
        if self.depth_transform == "affine" and not self.depth_a > 0.0:
            raise ValueError("affine depth transform needs a positive slope")
        if self.d0 <= 0.0:
            raise ValueError("base disparity d0 must be > 0")


@dataclass(frozen=True)
class Scene:
    IL: ImageBuffer
    IR: ImageBuffer
    D_gt: ScalarMap
    D_est: ScalarMap
    Dt: ScalarMap
    D_right: ScalarMap
    corruption_mask: np.ndarray


def _lcg_uniform(seed: int, shape) -> np.ndarray:
    n = int(np.prod(shape))
    out = np.empty(n, dtype=np.float64)
    s = seed & 0xFFFFFFFF
    for i in range(n):
        s = (1664525 * s + 1013904223) & 0xFFFFFFFF
        out[i] = s / 4294967296.0
    return out.reshape(shape)


def _texture(spec: SceneSpec) -> np.ndarray:
    H, W = spec.height, spec.width
    y, x = np.mgrid[0:H, 0:W].astype(np.float64)
    if spec.texture == "flat":
        return np.full((H, W), 0.5)
    if spec.texture == "sinusoidal":
        return 0.5 + 0.25 * np.sin(2 * np.pi * x / 7.3) + 0.2 * np.sin(2 * np.pi * y / 11.1)
    tex = _lcg_uniform(spec.seed, (H, W))
    tex = uniform_filter(tex, size=3, mode="nearest")
    if spec.texture == "textureless-band":
        tex[H // 3: 2 * H // 3, :] = 0.5
    return np.clip(tex, 0.0, 1.0)


def _ground_truth(spec: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    H, W = spec.height, spec.width
    y, x = np.mgrid[0:H, 0:W].astype(np.float64)
    if spec.layout == "step-edge":
        return spec.d0 + 6.0 * (x >= W / 2)
    D = spec.d0 + spec.gx * x + spec.gy * y
    if spec.layout == "piecewise-planar":
        for _ in range(spec.n_boxes):
            bw = int(rng.integers(W // 8, W // 3))
            bh = int(rng.integers(H // 8, H // 3))
            i0 = int(rng.integers(0, H - bh))
            j0 = int(rng.integers(0, W - bw))
            D[i0: i0 + bh, j0: j0 + bw] += float(rng.uniform(4.0, 10.0))
    return D


def _right_disparity(spec: SceneSpec, D: np.ndarray) -> np.ndarray:
    H, W = D.shape
    if spec.layout == "planar-ramp":
        # closed form: the ramp seen from the right camera is again a ramp
        y, xr = np.mgrid[0:H, 0:W].astype(np.float64)
        return (spec.d0 + spec.gy * y + spec.gx * xr) / (1.0 - spec.gx)
    # forward splat with a max-disparity depth test, then fill the holes
    DR = np.full((H, W), -1.0)
    xs = np.arange(W, dtype=np.float64)[None, :] - D
    for i in range(H):
        for j in range(W):
            t = xs[i, j]
            if t < 0 or t > W - 1:
                continue
            for c in (int(np.floor(t)), int(np.ceil(t))):
                if 0 <= c < W and D[i, j] > DR[i, c]:
                    DR[i, c] = D[i, j]
        hit = DR[i] > 0
        if hit.any():
            cols = np.arange(W)
            DR[i] = np.interp(cols, cols[hit], DR[i][hit])
        else:
            DR[i] = D[i]
    return DR


def _corrupt(spec: SceneSpec, D: np.ndarray, rng: np.random.Generator):
    H, W = D.shape
    mask = np.zeros((H, W), dtype=bool)
    est = D.copy()
    if spec.corruption == "salt":
        n = int(round(spec.salt_fraction * W * H))
        flat = rng.choice(W * H, size=n, replace=False)
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        est.ravel()[flat] += signs * spec.magnitude
        mask.ravel()[flat] = True
    elif spec.corruption == "region":
        bh, bw = max(2, H // 6), max(2, W // 6)
        i0 = int(rng.integers(0, H - bh))
        j0 = int(rng.integers(0, W - bw))
        est[i0: i0 + bh, j0: j0 + bw] += spec.magnitude
        mask[i0: i0 + bh, j0: j0 + bw] = True
    clamped = est < DISPARITY_FLOOR
    est[clamped] = DISPARITY_FLOOR
    mask |= clamped
    return est, mask


def _depth_prior(spec: SceneSpec, D: np.ndarray) -> np.ndarray:
    if spec.depth_transform == "affine":
        return spec.depth_a * D + spec.depth_b
    return D ** 1.5


def generate(spec: SceneSpec) -> Scene:
    """Build a full scene tuple, deterministic for a fixed spec."""
    rng = np.random.default_rng(spec.seed)
    D = _ground_truth(spec, rng)
    tex = _texture(spec)
    IL_vals, _, _, _ = _warp_arrays(tex, D)
    est, mask = _corrupt(spec, D, rng)
    return Scene(
        IL=ImageBuffer(np.clip(IL_vals, 0.0, 1.0)),
        IR=ImageBuffer(tex),
        D_gt=ScalarMap(D),
        D_est=ScalarMap(est),
        Dt=ScalarMap(_depth_prior(spec, D)),
        D_right=ScalarMap(_right_disparity(spec, D)),
        corruption_mask=mask,
    )
