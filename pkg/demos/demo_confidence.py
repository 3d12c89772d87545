"""Confidence voting walkthrough.

Builds a synthetic scene, corrupts 5% of the disparities, and shows that the
vote-based confidence map separates corrupted from clean pixels. An affine
depth prior is also checked: voting is invariant to positive affine
transforms of the prior, so the clean map scores exactly 1.0 everywhere.
"""

import numpy as np

from ddcv import ScalarMap, SceneSpec, confidence_map, generate


def main():
    scene = generate(SceneSpec(layout="piecewise-planar", texture="noise",
                               corruption="salt", salt_fraction=0.05,
                               magnitude=20.0, seed=0))
    C = confidence_map(scene.D_est, scene.Dt)
    m = scene.corruption_mask
    print(f"mean confidence, clean pixels:     {C.values[~m].mean():.4f}")
    print(f"mean confidence, corrupted pixels: {C.values[m].mean():.4f}")

    D = scene.D_gt
    affine = ScalarMap(3.0 * D.values + 7.0)
    C1 = confidence_map(D, affine)
    print(f"affine prior, min confidence:      {C1.values.min():.4f}")
    assert (C1.values == 1.0).all()

    monotone = ScalarMap(np.sqrt(D.values))
    C2 = confidence_map(D, monotone)
    print(f"monotone (non-affine) prior, mean: {C2.values.mean():.4f}")


if __name__ == "__main__":
    main()
