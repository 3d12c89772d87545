"""Disparity confidence voting, depth prior-guided stereo losses, and
disparity/confidence evaluation tools."""

from .confidence import DdcvParams, confidence_map, global_scale, vote, vote_rc, vote_vc
from .core import (
    DdcvError,
    DegenerateInputError,
    ImageBuffer,
    NeighborhoodSpec,
    ScalarMap,
    map_stats,
    neighborhood,
    step,
)
from .evaluation import (
    DisparityMetrics,
    SparsificationCurve,
    d1,
    disparity_metrics,
    epe,
    optimal_auc,
    pep,
    sparsification,
    time_per_megapixel,
)
from .gradcheck import GradCheckResult, run_gradcheck
from .losses import (
    LdrParams,
    LossReport,
    LossWeights,
    dds_loss,
    hybrid_loss,
    ldr_loss,
    ldr_phi_map,
    lrc_loss,
    photometric_loss,
    select_references,
    smoothness_depth,
    smoothness_image,
    warp_horizontal,
)
from .synth import Scene, SceneSpec, generate

__version__ = "0.1.0"

__all__ = [
    "DdcvError",
    "DegenerateInputError",
    "ScalarMap",
    "ImageBuffer",
    "NeighborhoodSpec",
    "map_stats",
    "neighborhood",
    "step",
    "DdcvParams",
    "confidence_map",
    "global_scale",
    "vote",
    "vote_rc",
    "vote_vc",
    "LossWeights",
    "LdrParams",
    "LossReport",
    "warp_horizontal",
    "photometric_loss",
    "lrc_loss",
    "select_references",
    "ldr_loss",
    "ldr_phi_map",
    "smoothness_image",
    "smoothness_depth",
    "dds_loss",
    "hybrid_loss",
    "DisparityMetrics",
    "SparsificationCurve",
    "epe",
    "pep",
    "d1",
    "disparity_metrics",
    "sparsification",
    "optimal_auc",
    "time_per_megapixel",
    "SceneSpec",
    "Scene",
    "generate",
    "GradCheckResult",
    "run_gradcheck",
    "__version__",
]
