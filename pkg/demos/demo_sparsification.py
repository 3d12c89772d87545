"""Sparsification analysis of a confidence map.

Removes pixels in ascending-confidence order and tracks the EPE of the
retained set. A useful confidence map drives the curve toward the oracle
obtained by sorting on the true error; a constant map leaves the EPE flat.
"""

import numpy as np

from ddcv import (
    ScalarMap,
    SceneSpec,
    confidence_map,
    generate,
    optimal_auc,
    sparsification,
)


def main():
    scene = generate(SceneSpec(layout="piecewise-planar", texture="noise",
                               corruption="salt", magnitude=20.0, seed=1))
    est, gt = scene.D_est, scene.D_gt

    voted = confidence_map(est, scene.Dt)
    flat = ScalarMap(np.ones(est.shape))
    perfect = ScalarMap(-np.abs(est.values - gt.values))

    best = optimal_auc(est, gt)
    print(f"oracle auc              {best:8.3f}")
    for name, C in (("voted", voted), ("constant", flat), ("perfect", perfect)):
        curve = sparsification(est, gt, C)
        print(f"{name:<8}auc             {curve.auc:8.3f}")

    curve = sparsification(est, gt, voted, steps=10)
    print("\nretained density vs EPE (voted confidence):")
    for dens, e in curve.samples:
        print(f"  {dens:4.1f}  {e:7.4f}")


if __name__ == "__main__":
    main()
