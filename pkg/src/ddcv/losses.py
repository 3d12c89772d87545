"""Unsupervised stereo loss terms with analytic gradients.

All terms are evaluated on the left disparity map D and return the scalar
loss together with its gradient with respect to D. The hybrid objective is

    L = L_P + lambda1 * L_LRC + lambda2 * L_LDR + lambda3 * L_DDS

with a photometric term (SSIM + L1 blend against the warped right image), a
left-right disparity consistency term, a local depth ranking term guided by
a relative depth map and a confidence map, and a dual disparity smoothness
term coupling disparity and depth edges both ways.

Gradients are exact for the smooth parts and subgradients at the kinks
introduced by absolute values, ranking step functions and top-k selection
(those pieces are held constant, which is the true piecewise derivative).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_erosion, correlate

from .core import (
    DegenerateInputError,
    ImageBuffer,
    NeighborhoodSpec,
    ScalarMap,
)

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
SSIM_ALPHA = 0.85


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 0.1
    lambda2: float = 0.1
    lambda3: float = 0.1

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError("loss weights must be >= 0")


@dataclass(frozen=True)
class LdrParams:
    k: int = 8
    spec: NeighborhoodSpec = field(default_factory=lambda: NeighborhoodSpec(11, 2))
    confidence_source: ScalarMap = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.k > self.spec.max_taps:
            raise ValueError("k cannot exceed the window tap count")


@dataclass(frozen=True)
class LossReport:
    photometric: float
    lrc: float
    ldr: float
    dds: float
    total: float
    grad_D: ScalarMap = None


# ---------------------------------------------------------------------------
# horizontal warping
# ---------------------------------------------------------------------------

def _warp_arrays(src_vals, D_vals):
    """Sample src at (x - D(x), y) with linear interpolation along x.

    Returns (warped, visibility, slope, x0) where slope is the local
    interpolation slope, so d(warped)/dD = -slope, and x0 the left sample
    column (clipped). src_vals is (H, W) or (H, W, C).
    """
    H, W = D_vals.shape
    xs = np.arange(W, dtype=np.float64)[None, :] - D_vals
    vis = (xs >= 0.0) & (xs <= W - 1.0)
    x0 = np.clip(np.floor(xs), 0, W - 2).astype(np.int64)
    w = xs - x0
    if src_vals.ndim == 2:
        a = np.take_along_axis(src_vals, x0, axis=1)
        b = np.take_along_axis(src_vals, x0 + 1, axis=1)
        wexp = w
    else:
        a = np.take_along_axis(src_vals, x0[:, :, None], axis=1)
        b = np.take_along_axis(src_vals, x0[:, :, None] + 1, axis=1)
        wexp = w[:, :, None]
    warped = (1.0 - wexp) * a + wexp * b
    return warped, vis, b - a, x0


def _check_disparity(D: ScalarMap):
    if np.any(D.values[D.valid] < 0.0):
        raise ValueError("disparity must be >= 0")


def warp_horizontal(src, D: ScalarMap):
    """Warp an image or map into the view of D along the x axis.

    Returns (warped, visibility); visibility is False where the sample
    coordinate leaves the source width.
    """
    _check_disparity(D)
    if isinstance(src, ImageBuffer):
        if src.shape != D.shape:
            raise ValueError("source and disparity dimensions differ")
        warped, vis, _, _ = _warp_arrays(src.intensities, D.values)
        return ImageBuffer(np.where(vis[:, :, None], warped, 0.0)), vis
    if isinstance(src, ScalarMap):
        if src.shape != D.shape:
            raise ValueError("source and disparity dimensions differ")
        warped, vis, _, x0 = _warp_arrays(src.values, D.values)
        v0 = np.take_along_axis(src.valid, x0, axis=1)
        v1 = np.take_along_axis(src.valid, x0 + 1, axis=1)
        ok = vis & D.valid & v0 & v1
        return ScalarMap(np.where(ok, warped, 0.0), ok), vis
    raise TypeError(f"cannot warp {type(src).__name__}")


# ---------------------------------------------------------------------------
# photometric loss (SSIM + L1)
# ---------------------------------------------------------------------------

_BOX3 = np.full((3, 3), 1.0 / 9.0)


def _box3(a):
    # strictly local 3x3 mean (a running-sum filter would leak rounding
    # noise across the row and break exact-reconstruction fixed points);
    # the kernel is symmetric, so the filter is its own adjoint
    return correlate(a, _BOX3, mode="constant", cval=0.0)


def photometric_loss(IL: ImageBuffer, IR: ImageBuffer, D: ScalarMap):
    """SSIM/L1 blend between the left image and the warped right image.

    Counted pixels are valid in D and have a fully visible 3x3 SSIM window,
    so a perfect reconstruction scores an exact zero.
    """
    if IL.shape != IR.shape or IL.shape != D.shape or IL.channels != IR.channels:
        raise ValueError("image and disparity dimensions differ")
    _check_disparity(D)
    warped, vis, slope, _ = _warp_arrays(IR.intensities, D.values)
    counted = D.valid & binary_erosion(vis, np.ones((3, 3), bool))
    n = int(counted.sum())
    if n == 0:
        raise DegenerateInputError("no visible pixels to compare")

    C = IL.channels
    scale = 1.0 / (n * C)
    value = 0.0
    grad = np.zeros(D.shape)
    for c in range(C):
        x = IL.intensities[:, :, c]
        y = warped[:, :, c]
        mu_x, mu_y = _box3(x), _box3(y)
        uyy, uxy = _box3(y * y), _box3(x * y)
        sig_x = _box3(x * x) - mu_x * mu_x
        sig_y = uyy - mu_y * mu_y
        sig_xy = uxy - mu_x * mu_y
        A1 = 2.0 * mu_x * mu_y + SSIM_C1
        A2 = 2.0 * sig_xy + SSIM_C2
        B1 = mu_x * mu_x + mu_y * mu_y + SSIM_C1
        B2 = sig_x + sig_y + SSIM_C2
        S = (A1 * A2) / (B1 * B2)
        diff = x - y
        per_pixel = SSIM_ALPHA * (1.0 - S) / 2.0 + (1.0 - SSIM_ALPHA) * np.abs(diff)
        value += float(per_pixel[counted].sum()) * scale

        # dLoss/dS and dLoss/dy (direct L1 part), nonzero on counted only
        gS = np.where(counted, -SSIM_ALPHA / 2.0 * scale, 0.0)
        gy = np.where(counted, -(1.0 - SSIM_ALPHA) * np.sign(diff) * scale, 0.0)
        # chain S through the box-filtered moments; the box filter is
        # self-adjoint so the adjoint pass is another box filter
        dS_dmu = 2.0 * mu_x * A2 / (B1 * B2) - S * 2.0 * mu_y / B1
        dS_dsy = -S / B2
        dS_dsxy = 2.0 * A1 / (B1 * B2)
        g_mu = gS * (dS_dmu - 2.0 * mu_y * dS_dsy - mu_x * dS_dsxy)
        g_syy = gS * dS_dsy
        g_sxy = gS * dS_dsxy
        gy = gy + _box3(g_mu) + 2.0 * y * _box3(g_syy) + x * _box3(g_sxy)
        grad += gy * (-slope[:, :, c])
    return value, grad


# ---------------------------------------------------------------------------
# left-right consistency loss
# ---------------------------------------------------------------------------

def lrc_loss(D: ScalarMap, DR: ScalarMap):
    """Relative difference between D and the right disparity warped left."""
    if D.shape != DR.shape:
        raise ValueError("disparity dimensions differ")
    _check_disparity(D)
    warped, vis, slope, x0 = _warp_arrays(DR.values, D.values)
    v0 = np.take_along_axis(DR.valid, x0, axis=1)
    v1 = np.take_along_axis(DR.valid, x0 + 1, axis=1)
    counted = vis & D.valid & v0 & v1
    n = int(counted.sum())
    if n == 0:
        raise DegenerateInputError("no visible pixels to compare")
    u = D.values - warped
    s = D.values + warped
    if np.any(s[counted] <= 0.0):
        raise DegenerateInputError("nonpositive disparity sum in consistency term")
    f = np.abs(u) / s
    value = float(f[counted].sum()) / n
    sgn = np.sign(u)
    g = np.where(counted, ((sgn - f) + (sgn + f) * slope) / s / n, 0.0)
    return value, g


# ---------------------------------------------------------------------------
# local depth ranking loss
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceSet:
    """Per-pixel reference points: flat map indices plus a validity mask,
    both (H, W, k), in descending-confidence order."""

    index: np.ndarray
    ok: np.ndarray

    @property
    def k(self) -> int:
        return self.index.shape[2]


def _tap_fields(spec: NeighborhoodSpec, H, W):
    """Per-tap shifted index and in-bounds fields, each (H, W, T)."""
    offs = spec.offsets()
    T = offs.shape[0]
    ii = np.arange(H)[:, None, None] + offs[:, 0][None, None, :]
    jj = np.arange(W)[None, :, None] + offs[:, 1][None, None, :]
    inb = (ii >= 0) & (ii < H) & (jj >= 0) & (jj < W)
    idx = np.where(inb, ii * W + jj, 0)
    return idx, inb, T


def select_references(C: ScalarMap, params: LdrParams = None) -> ReferenceSet:
    """Pick the k highest-confidence taps of the dilated window around each
    pixel. Ties and equal confidences resolve to row-major tap order; border
    pixels with fewer than k usable taps keep whatever is available."""
    if params is None:
        params = LdrParams()
    H, W = C.shape
    idx, inb, T = _tap_fields(params.spec, H, W)
    conf = np.where(C.valid, C.values, -np.inf).ravel()
    cand = np.where(inb, conf[idx], -np.inf)
    order = np.argsort(-cand, axis=2, kind="stable")[:, :, : params.k]
    picked = np.take_along_axis(cand, order, axis=2)
    return ReferenceSet(
        index=np.take_along_axis(idx, order, axis=2),
        ok=np.isfinite(picked),
    )


def _omega(x):
    ax = np.abs(x)
    return ax / (1.0 + ax)


def _nu(x):
    return np.log1p(np.abs(x))


def _ldr_fields(D: ScalarMap, Dt: ScalarMap, refs: ReferenceSet):
    if D.shape != Dt.shape:
        raise ValueError("disparity and depth dimensions differ")
    Df, Dtf = D.values.ravel(), Dt.values.ravel()
    vf = (D.valid & Dt.valid).ravel()
    ok = refs.ok & vf[refs.index]
    dD = D.values[:, :, None] - Df[refs.index]
    dDt = Dt.values[:, :, None] - Dtf[refs.index]
    incons = ok & (dD * dDt < 0.0)
    w = np.where(incons, _omega(dDt), 0.0)
    den = w.sum(axis=2)
    num = (w * _nu(dD)).sum(axis=2)
    return dD, w, den, num


def ldr_phi_map(D: ScalarMap, Dt: ScalarMap, refs: ReferenceSet) -> ScalarMap:
    """Per-pixel ranking penalty phi before averaging."""
    _, _, den, num = _ldr_fields(D, Dt, refs)
    counted = D.valid & Dt.valid
    phi = np.where(counted & (den > 0.0), num / np.where(den > 0.0, den, 1.0), 0.0)
    return ScalarMap(phi, counted)


def ldr_loss(D: ScalarMap, Dt: ScalarMap, refs: ReferenceSet):
    """Depth-ranking penalty against per-pixel reference points.

    phi(p) averages nu(|disparity difference|) over the rank-inconsistent
    references, weighted by omega of the depth difference; pixels whose
    references all agree contribute zero.
    """
    H, W = D.shape
    dD, w, den, num = _ldr_fields(D, Dt, refs)
    counted = D.valid & Dt.valid
    n = int(counted.sum())
    if n == 0:
        return 0.0, np.zeros(D.shape)
    live = counted & (den > 0.0)
    phi = np.where(live, num / np.where(den > 0.0, den, 1.0), 0.0)
    value = float(phi[counted].sum()) / n

    # subgradient: selection, ranking votes and omega are locally constant
    coef = np.where(
        live[:, :, None],
        w * np.sign(dD) / (1.0 + np.abs(dD)) / np.where(den > 0.0, den, 1.0)[:, :, None],
        0.0,
    ) / n
    grad = coef.sum(axis=2)
    gflat = np.zeros(H * W)
    np.add.at(gflat, refs.index.ravel(), -coef.ravel())
    return value, grad + gflat.reshape(H, W)


# ---------------------------------------------------------------------------
# smoothness losses
# ---------------------------------------------------------------------------

def _forward_diffs(a):
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    gx[:, :-1] = a[:, 1:] - a[:, :-1]
    gy[:-1, :] = a[1:, :] - a[:-1, :]
    return gx, gy


def _diff_counts(counted):
    """Pixels contributing an x and a y forward difference: the last column
    and last row have none, so each direction is averaged over its own
    population."""
    nx = int(counted[:, :-1].sum())
    ny = int(counted[:-1, :].sum())
    return max(nx, 1), max(ny, 1)


def _scatter_diff_grad(grad, coef_x, coef_y, nx, ny):
    """Accumulate d(sum of per-pixel terms)/dD for terms of the form
    f(D[p+e] - D[p]) with df/d(diff) given per pixel."""
    grad[:, :-1] -= coef_x[:, :-1] / nx
    grad[:, 1:] += coef_x[:, :-1] / nx
    grad[:-1, :] -= coef_y[:-1, :] / ny
    grad[1:, :] += coef_y[:-1, :] / ny


def _edge_aware(D: ScalarMap, ex, ey, counted):
    """Per-direction mean of |dD_x| * ex and |dD_y| * ey, summed."""
    if not counted.any():
        return 0.0, np.zeros(D.shape)
    nx, ny = _diff_counts(counted)
    gx, gy = _forward_diffs(D.values)
    value = float((np.abs(gx) * ex)[counted].sum()) / nx
    value += float((np.abs(gy) * ey)[counted].sum()) / ny
    grad = np.zeros(D.shape)
    cm = counted.astype(np.float64)
    _scatter_diff_grad(grad, np.sign(gx) * ex * cm, np.sign(gy) * ey * cm, nx, ny)
    return value, grad


def _image_edge_weights(IL: ImageBuffer):
    gx = np.zeros(IL.shape)
    gy = np.zeros(IL.shape)
    a = IL.intensities
    gx[:, :-1] = np.abs(a[:, 1:] - a[:, :-1]).mean(axis=2)
    gy[:-1, :] = np.abs(a[1:, :] - a[:-1, :]).mean(axis=2)
    return np.exp(-gx), np.exp(-gy)


def smoothness_image(D: ScalarMap, IL: ImageBuffer):
    """Edge-aware disparity smoothness gated by image gradients."""
    if D.shape != IL.shape:
        raise ValueError("dimensions differ")
    ex, ey = _image_edge_weights(IL)
    return _edge_aware(D, ex, ey, D.valid)


def smoothness_depth(D: ScalarMap, Dt: ScalarMap):
    """Edge-aware disparity smoothness gated by relative depth gradients."""
    if D.shape != Dt.shape:
        raise ValueError("dimensions differ")
    tx, ty = _forward_diffs(Dt.values)
    return _edge_aware(D, np.exp(-np.abs(tx)), np.exp(-np.abs(ty)), D.valid & Dt.valid)


def dds_loss(D: ScalarMap, Dt: ScalarMap):
    """Dual disparity smoothness: penalizes rough disparity where depth is
    smooth and smooth disparity where depth jumps."""
    if D.shape != Dt.shape:
        raise ValueError("dimensions differ")
    counted = D.valid & Dt.valid
    if not counted.any():
        return 0.0, np.zeros(D.shape)
    nx, ny = _diff_counts(counted)
    gx, gy = _forward_diffs(D.values)
    tx, ty = _forward_diffs(Dt.values)
    atx, aty = np.abs(tx), np.abs(ty)
    exd, eyd = np.exp(-np.abs(gx)), np.exp(-np.abs(gy))
    ext, eyt = np.exp(-atx), np.exp(-aty)
    per_x = np.abs(gx) * ext + atx * exd
    per_y = np.abs(gy) * eyt + aty * eyd
    value = float(per_x[counted].sum()) / nx + float(per_y[counted].sum()) / ny
    cm = counted.astype(np.float64)
    coef_x = np.sign(gx) * (ext - atx * exd) * cm
    coef_y = np.sign(gy) * (eyt - aty * eyd) * cm
    grad = np.zeros(D.shape)
    _scatter_diff_grad(grad, coef_x, coef_y, nx, ny)
    return value, grad


# ---------------------------------------------------------------------------
# hybrid objective
# ---------------------------------------------------------------------------

def hybrid_loss(
    IL: ImageBuffer,
    IR: ImageBuffer,
    D: ScalarMap,
    DR: ScalarMap,
    Dt: ScalarMap,
    C: ScalarMap = None,
    weights: LossWeights = None,
    ldr_params: LdrParams = None,
    want_grad: bool = True,
) -> LossReport:
    """Weighted sum of all four terms with the combined gradient."""
    if weights is None:
        weights = LossWeights()
    if ldr_params is None:
        ldr_params = LdrParams()
    if C is None:
        C = ldr_params.confidence_source
    if C is None:
        raise ValueError("a confidence map is required for reference selection")
    refs = select_references(C, ldr_params)
    vp, gp = photometric_loss(IL, IR, D)
    vl, gl = lrc_loss(D, DR)
    vr, gr = ldr_loss(D, Dt, refs)
    vs, gs = dds_loss(D, Dt)
    total = vp + weights.lambda1 * vl + weights.lambda2 * vr + weights.lambda3 * vs
    grad_map = None
    if want_grad:
        g = gp + weights.lambda1 * gl + weights.lambda2 * gr + weights.lambda3 * gs
        grad_map = ScalarMap(g, D.valid.copy())
    return LossReport(
        photometric=vp, lrc=vl, ldr=vr, dds=vs, total=total, grad_D=grad_map
    )
