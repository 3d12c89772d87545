"""Disparity confidence from disparity / relative-depth consistency voting.

Every disparity pixel collects one vote per neighbor. A vote passes when
the pair's disparity difference and relative-depth difference agree both in
sign (ranking consistency) and in magnitude class (variation consistency),
where the relative-depth difference is brought into disparity units through
a global scale factor. The confidence is the fraction of passing votes.

Two variants of the variation-consistency check are provided:

* ``prose`` (default): a vote fails when the depth difference indicates a
  strong discontinuity while the disparity stays flat, or when the depth is
  stable while the disparity jumps.
* ``literal``: the step-function composition with the opposite inequality
  orientations, kept selectable for auditability. The two modes genuinely
  differ; see ``DdcvParams.formula_mode``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import DegenerateInputError, NeighborhoodSpec, ScalarMap, step

FORMULA_MODES = ("prose", "literal")


@dataclass(frozen=True)
class DdcvParams:
    spec: NeighborhoodSpec = field(default_factory=NeighborhoodSpec)
    sigma: float = 2.0
    stable_disparity_threshold: float = 1.0
    formula_mode: str = "prose"

    def __post_init__(self):
        if not self.sigma > 1.0:
            raise ValueError("sigma must be > 1")
        if not self.stable_disparity_threshold > 0.0:
            raise ValueError("stable_disparity_threshold must be > 0")
        if self.formula_mode not in FORMULA_MODES:
            raise ValueError(f"formula_mode must be one of {FORMULA_MODES}")


# ---------------------------------------------------------------------------
# scalar reference operations
# ---------------------------------------------------------------------------

def vote_rc(dD: float, dDt: float) -> int:
    """Ranking-consistency vote: 1 iff the differences agree in sign
    (a zero difference agrees with anything)."""
    return step(dDt * dD)


def vote_vc(dD: float, dDt: float, gamma: float, params: DdcvParams) -> int:
    """Variation-consistency vote for one pixel pair."""
    if not gamma > 0.0:
        raise ValueError("gamma must be > 0")
    a, b = abs(dD), abs(dDt)
    sigma = params.sigma
    if params.formula_mode == "literal":
        t1 = step(step(b - gamma * sigma) * (1.0 - a))
        t2 = step(step(gamma - b) * (a - sigma))
        return t1 * t2
    u = b / gamma
    if u >= sigma and a < params.stable_disparity_threshold:
        return 0
    if u <= 1.0 and a > sigma:
        return 0
    return 1


def vote(p, q, D: ScalarMap, Dt: ScalarMap, gamma: float, params: DdcvParams) -> int:
    """Full vote of neighbor q on pixel p: ranking AND variation consistency."""
    (pi, pj), (qi, qj) = p, q
    dD = D.values[pi, pj] - D.values[qi, qj]
    dDt = Dt.values[pi, pj] - Dt.values[qi, qj]
    return vote_rc(dD, dDt) * vote_vc(dD, dDt, gamma, params)


# ---------------------------------------------------------------------------
# map-level operations
# ---------------------------------------------------------------------------

def _flat_offsets(spec: NeighborhoodSpec, W: int):
    """Half-offsets as flat shifts plus the wrapped column lists to correct."""
    out = []
    for ddi, ddj in spec.half_offsets():
        s = int(ddi) * W + int(ddj)
        if ddj > 0:
            jwrap = np.arange(W - ddj, W, dtype=np.int64)
        elif ddj < 0:
            jwrap = np.arange(0, -ddj, dtype=np.int64)
        else:
            jwrap = np.empty(0, dtype=np.int64)
        out.append((s, jwrap))
    return out


def _fast_path_ok(D: ScalarMap, Dt: ScalarMap, spec: NeighborhoodSpec) -> bool:
    return (
        D.width > spec.half * spec.dilation
        and spec.max_taps <= 255
        and bool(D.valid.all())
        and bool(Dt.valid.all())
    )


def global_scale(D: ScalarMap, Dt: ScalarMap, spec: NeighborhoodSpec = None) -> float:
    """Ratio of summed |depth difference| to summed |disparity difference|
    over all neighbor pairs valid in both maps."""
    if spec is None:
        spec = NeighborhoodSpec()
    if D.shape != Dt.shape:
        raise ValueError("disparity and depth maps must share dimensions")
    if _fast_path_ok(D, Dt, spec):
        Df = D.values.ravel()
        Dtf = Dt.values.ravel()
        sn = sd = 0.0
        for s, jwrap in _flat_offsets(spec, D.width):
            a, b = _kernels.gamma_pass(Df, Dtf, s)
            if jwrap.size:
                aw, bw = _kernels.gamma_wrap(Df, Dtf, D.width, s, jwrap)
                a -= aw
                b -= bw
            sn += a
            sd += b
    else:
        valid = np.ascontiguousarray(D.valid & Dt.valid)
        sn, sd = _kernels.gamma_masked(D.values, Dt.values, valid, spec.offsets())
    if sd == 0.0:
        raise DegenerateInputError(
            "degenerate disparity: no disparity variation between valid neighbor pairs"
        )
    return sn / sd


def confidence_map(D: ScalarMap, Dt: ScalarMap, params: DdcvParams = None) -> ScalarMap:
    """Per-pixel vote average in [0, 1]. Pixels that are invalid in either
    input, or have no valid neighbor, come back invalid with value 0."""
    if params is None:
        params = DdcvParams()
    if D.shape != Dt.shape:
        raise ValueError("disparity and depth maps must share dimensions")
    spec = params.spec
    if not (D.valid & Dt.valid).any():
        z = np.zeros(D.shape)
        return ScalarMap(z, z.astype(bool))
    gamma = global_scale(D, Dt, spec)
    sigma = params.sigma
    thr = params.stable_disparity_threshold
    literal = params.formula_mode == "literal"

    if _fast_path_ok(D, Dt, spec):
        H, W = D.shape
        n = H * W
        Df = D.values.ravel()
        Dtf = Dt.values.ravel()
        vacc = np.zeros(n, dtype=np.uint8)
        vbuf = np.empty(n, dtype=np.uint8)
        sg = gamma * sigma
        for s, jwrap in _flat_offsets(spec, W):
            if literal:
                _kernels.vote_pass_literal(Df, Dtf, vbuf, s, sg, gamma, sigma)
            else:
                _kernels.vote_pass_prose(Df, Dtf, vbuf, s, sg, gamma, sigma, thr)
            _kernels.vote_accumulate(vacc, vbuf, s, n)
            if jwrap.size:
                _kernels.vote_wrap(vacc, vbuf, W, s, jwrap)
        from .core import neighbor_counts

        m = neighbor_counts(H, W, spec)
        votes = vacc.reshape(H, W).astype(np.float64)
        ok = m > 0
        conf = np.where(ok, votes / np.maximum(m, 1), 0.0)
        return ScalarMap(conf, ok)

    valid = np.ascontiguousarray(D.valid & Dt.valid)
    votes, counts = _kernels.votes_masked(
        D.values, Dt.values, valid, spec.offsets(), gamma, sigma, thr, literal
    )
    ok = valid & (counts > 0)
    conf = np.where(ok, votes / np.maximum(counts, 1), 0.0)
    return ScalarMap(conf, ok)
