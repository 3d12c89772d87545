"""Finite-difference verification of the analytic loss gradients.

Builds a random but kink-safe instance (fractional disparities away from
integer sampling boundaries), then compares each term's analytic gradient
against central finite differences at sampled pixels. Pixels sitting on a
non-differentiable point of a term (absolute values at zero, ranking sign
changes) are excluded for that term only; the objectives are piecewise
smooth, so the derivative is simply undefined there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .core import ImageBuffer, ScalarMap
from .losses import (
    LdrParams,
    dds_loss,
    ldr_loss,
    lrc_loss,
    photometric_loss,
    select_references,
    smoothness_depth,
    smoothness_image,
    _forward_diffs,
    _warp_arrays,
)

TERMS = ("photometric", "lrc", "ldr", "smoothness_image", "smoothness_depth", "dds")


@dataclass(frozen=True)
class GradCheckResult:
    term: str
    checked: int
    max_rel_err: float
    passed: bool


def make_instance(seed: int = 0, size: int = 32):
    """Random maps and images sized for desk-scale gradient checks."""
    rng = np.random.default_rng(seed)
    S = (size, size)
    smooth = lambda a: uniform_filter(a, size=3, mode="nearest")
    IL = ImageBuffer(smooth(rng.uniform(0.05, 0.95, S)))
    IR = ImageBuffer(smooth(rng.uniform(0.05, 0.95, S)))
    # integer part + a fraction well inside the cell keeps the warp linear
    # within the finite-difference step
    D = ScalarMap(rng.integers(1, 5, S).astype(float) + rng.uniform(0.2, 0.8, S))
    DR = ScalarMap(smooth(rng.uniform(2.0, 6.0, S)))
    Dt = ScalarMap(smooth(rng.uniform(0.0, 10.0, S)))
    C = ScalarMap(rng.uniform(0.0, 1.0, S))
    return dict(IL=IL, IR=IR, D=D, DR=DR, Dt=Dt, C=C)


def _differentiable_masks(inst, ldr_params: LdrParams, margin: float = 1e-3):
    """Per-term boolean maps of pixels safe for finite differencing."""
    IL, IR, D, DR, Dt = (inst[k] for k in ("IL", "IR", "D", "DR", "Dt"))
    H, W = D.shape
    masks = {}

    warped, vis, _, _ = _warp_arrays(IR.intensities, D.values)
    diff_ok = np.abs(IL.intensities - warped).min(axis=2) > margin
    masks["photometric"] = vis & diff_ok

    wr, visr, _, _ = _warp_arrays(DR.values, D.values)
    masks["lrc"] = visr & (np.abs(D.values - wr) > margin)

    refs = select_references(inst["C"], ldr_params)
    Df, Dtf = D.values.ravel(), Dt.values.ravel()
    dD = D.values[:, :, None] - Df[refs.index]
    dDt = Dt.values[:, :, None] - Dtf[refs.index]
    pair_ok = np.where(refs.ok, np.abs(dD * dDt), np.inf).min(axis=2) > margin
    # a pixel is also touched when it serves as someone else's reference
    touched_bad = np.zeros(H * W, dtype=np.int64)
    bad_pairs = refs.ok & (np.abs(dD * dDt) <= margin)
    np.add.at(touched_bad, refs.index.ravel(), bad_pairs.ravel().astype(np.int64))
    masks["ldr"] = pair_ok & (touched_bad.reshape(H, W) == 0)

    gx, gy = _forward_diffs(D.values)
    away = np.ones((H, W), dtype=bool)
    away[:, :-1] &= np.abs(gx[:, :-1]) > margin
    away[:, 1:] &= np.abs(gx[:, :-1]) > margin
    away[:-1, :] &= np.abs(gy[:-1, :]) > margin
    away[1:, :] &= np.abs(gy[:-1, :]) > margin
    for name in ("smoothness_image", "smoothness_depth", "dds"):
        masks[name] = away
    return masks


def _term_functions(inst, ldr_params: LdrParams):
    IL, IR, DR, Dt, C = (inst[k] for k in ("IL", "IR", "DR", "Dt", "C"))
    refs = select_references(C, ldr_params)
    return {
        "photometric": lambda D: photometric_loss(IL, IR, D),
        "lrc": lambda D: lrc_loss(D, DR),
        "ldr": lambda D: ldr_loss(D, Dt, refs),
        "smoothness_image": lambda D: smoothness_image(D, IL),
        "smoothness_depth": lambda D: smoothness_depth(D, Dt),
        "dds": lambda D: dds_loss(D, Dt),
    }


def check_term(
    f,
    D: ScalarMap,
    pixels,
    h: float = 1e-4,
    tol: float = 1e-4,
    flip_sign: bool = False,
) -> tuple:
    """Compare the analytic gradient of f(D) against central differences at
    the given (row, col) pixels. Returns (checked, max relative error)."""
    _, grad = f(D)
    if flip_sign:
        grad = -grad
    worst = 0.0
    base = D.values
    for i, j in pixels:
        bump = np.zeros_like(base)
        bump[i, j] = h
        fp, _ = f(ScalarMap(base + bump, D.valid))
        fm, _ = f(ScalarMap(base - bump, D.valid))
        fd = (fp - fm) / (2.0 * h)
        a = grad[i, j]
        rel = abs(a - fd) / max(abs(a), abs(fd), 1e-7)
        worst = max(worst, rel)
    return len(pixels), worst


def run_gradcheck(
    seed: int = 0,
    size: int = 32,
    pixels: int = 120,
    h: float = 1e-4,
    tol: float = 1e-4,
    flip_sign_of: str = None,
) -> list:
    """Check every loss term on one random instance.

    flip_sign_of deliberately corrupts one analytic gradient so tests can
    confirm a broken gradient is actually caught.
    """
    inst = make_instance(seed, size)
    ldr_params = LdrParams()
    masks = _differentiable_masks(inst, ldr_params)
    funcs = _term_functions(inst, ldr_params)
    rng = np.random.default_rng(seed + 1)
    results = []
    for term in TERMS:
        ii, jj = np.nonzero(masks[term])
        if ii.size > pixels:
            sel = rng.choice(ii.size, size=pixels, replace=False)
            ii, jj = ii[sel], jj[sel]
        checked, worst = check_term(
            funcs[term],
            inst["D"],
            list(zip(ii.tolist(), jj.tolist())),
            h=h,
            tol=tol,
            flip_sign=(term == flip_sign_of),
        )
        results.append(GradCheckResult(term, checked, worst, worst < tol))
    return results
