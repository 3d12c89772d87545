"""Command-line front end.

Subcommands: confidence, loss, eval-disp, sparsify, synth, gradcheck.
Results go to stdout or files; diagnostics and timing lines go to stderr.
Exit codes: 0 success, 1 check failure, 2 usage or validation error,
3 degenerate input (e.g. a constant disparity map).
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import evaluation, imgio, synth
from .confidence import DdcvParams, confidence_map
from .core import DdcvError, DegenerateInputError, NeighborhoodSpec, ScalarMap, map_stats
from .gradcheck import run_gradcheck
from .losses import LdrParams, LossWeights, hybrid_loss, lrc_loss, photometric_loss

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DEGENERATE = 3


def _info(msg):
    print(msg, file=sys.stderr)


def _add_ddcv_flags(p):
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--window", type=int, default=11)
    p.add_argument("--dilation", type=int, default=1)
    p.add_argument("--stable-threshold", type=float, default=1.0)
    p.add_argument("--formula-mode", choices=("prose", "literal"), default="prose")


def _ddcv_params(args) -> DdcvParams:
    return DdcvParams(
        spec=NeighborhoodSpec(args.window, args.dilation),
        sigma=args.sigma,
        stable_disparity_threshold=args.stable_threshold,
        formula_mode=args.formula_mode,
    )


def _load_map(path):
    if not os.path.exists(path):
        raise _Usage(f"no such file: {path}")
    return imgio.read_map(path)


class _Usage(Exception):
    pass


def cmd_confidence(args) -> int:
    D = _load_map(args.disparity)
    Dt = _load_map(args.depth)
    if D.shape != Dt.shape:
        raise _Usage("disparity and depth dimensions differ")
    params = _ddcv_params(args)
    t0 = time.perf_counter()
    C = confidence_map(D, Dt, params)
    elapsed = time.perf_counter() - t0
    imgio.write_map(C, args.out, kind="pfm")
    if args.color_out:
        imgio.write_confidence_png(C, args.color_out)
    print(f"mean_confidence {map_stats(C)['mean']:.6f}")
    _info(f"time/MP: {elapsed * 1e3 * 1e6 / (D.height * D.width):.3f} ms")
    return EXIT_OK


def cmd_loss(args) -> int:
    weights = LossWeights(args.lambda1, args.lambda2, args.lambda3)
    IL = imgio.read_image(args.left)
    IR = imgio.read_image(args.right)
    D = _load_map(args.disparity)
    DR = _load_map(args.right_disparity) if args.right_disparity else None
    Dt = _load_map(args.depth) if args.depth else None
    if Dt is None and (weights.lambda2 > 0 or weights.lambda3 > 0):
        raise _Usage("--depth is required when lambda2 or lambda3 is nonzero")
    if DR is None and weights.lambda1 > 0:
        raise _Usage("--right-disparity is required when lambda1 is nonzero")
    rows = []
    if Dt is not None and DR is not None:
        if args.confidence:
            C = _load_map(args.confidence)
        else:
            C = confidence_map(D, Dt, _ddcv_params(args))
        ldr_params = LdrParams(args.k, NeighborhoodSpec(args.window, args.ldr_dilation))
        rep = hybrid_loss(IL, IR, D, DR, Dt, C, weights, ldr_params,
                          want_grad=bool(args.grad_out))
        rows = [("photometric", rep.photometric), ("lrc", rep.lrc),
                ("ldr", rep.ldr), ("dds", rep.dds), ("total", rep.total)]
        if args.grad_out:
            imgio.write_map(rep.grad_D, args.grad_out, kind="pfm")
    else:
        vp, _ = photometric_loss(IL, IR, D)
        total = vp
        rows = [("photometric", vp)]
        if DR is not None:
            vl, _ = lrc_loss(D, DR)
            total += weights.lambda1 * vl
            rows.append(("lrc", vl))
        rows.append(("total", total))
    text = evaluation.metrics_csv(rows)
    if args.out:
        imgio.write_text(text, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval_disp(args) -> int:
    est = _load_map(args.est)
    gt = _load_map(args.gt)
    deltas = [float(t) for t in args.deltas.split(",") if t]
    m = evaluation.disparity_metrics(est, gt, deltas)
    rows = [("epe", m.epe)]
    rows += [(f"pep-{d:g}", v) for d, v in m.pep.items()]
    rows.append(("d1", m.d1))
    text = evaluation.metrics_csv(rows)
    if args.out:
        imgio.write_text(text, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sparsify(args) -> int:
    if args.steps < 2:
        raise _Usage("--steps must be >= 2")
    est = _load_map(args.est)
    gt = _load_map(args.gt)
    C = _load_map(args.confidence)
    curve = evaluation.sparsification(est, gt, C, args.steps)
    best = evaluation.optimal_auc(est, gt, args.steps)
    text = evaluation.curve_csv(curve)
    text += f"auc,{curve.auc!r}\noptimal_auc,{best!r}\n"
    if args.out:
        imgio.write_text(text, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = synth.SceneSpec(
            width=args.width, height=args.height, layout=args.layout,
            texture=args.texture, depth_transform=args.depth_transform,
            corruption=args.corruption, salt_fraction=args.salt_fraction,
            magnitude=args.magnitude, seed=args.seed,
            d0=args.d0, gx=args.gx, gy=args.gy,
        )
    except ValueError as e:
        raise _Usage(str(e))
    scene = synth.generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    j = lambda name: os.path.join(args.out_dir, name)
    imgio.write_image(scene.IL, j("left.png"))
    imgio.write_image(scene.IR, j("right.png"))
    imgio.write_pfm(scene.D_gt, j("disp_gt.pfm"))
    imgio.write_pfm(scene.D_est, j("disp_est.pfm"))
    imgio.write_pfm(scene.Dt, j("depth.pfm"))
    imgio.write_pfm(scene.D_right, j("disp_right.pfm"))
    imgio.write_pfm(
        ScalarMap(scene.corruption_mask.astype(float)), j("corruption_mask.pfm")
    )
    manifest = evaluation.metrics_csv(
        [("width", spec.width), ("height", spec.height), ("seed", spec.seed),
         ("layout", spec.layout), ("texture", spec.texture),
         ("corruption", spec.corruption),
         ("corrupted_pixels", int(scene.corruption_mask.sum()))]
    )
    imgio.write_text(manifest, j("manifest.csv"))
    print(f"wrote scene to {args.out_dir}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = run_gradcheck(seed=args.seed, size=args.size)
    failed = False
    print("term,checked,max_rel_err,status")
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.term},{r.checked},{r.max_rel_err:.3e},{status}")
        failed |= not r.passed
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ddcv",
        description="Disparity confidence, depth prior-guided losses, and evaluation tools",
    )
    ap.add_argument("--threads", type=int, default=0,
                    help="cap kernel parallelism (0 = library default)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("confidence", help="compute a voting confidence map")
    p.add_argument("--disparity", required=True)
    p.add_argument("--depth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--color-out")
    _add_ddcv_flags(p)
    p.set_defaults(fn=cmd_confidence)

    p = sub.add_parser("loss", help="evaluate the hybrid loss on files")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--disparity", required=True)
    p.add_argument("--right-disparity")
    p.add_argument("--depth")
    p.add_argument("--confidence")
    p.add_argument("--lambda1", type=float, default=0.1)
    p.add_argument("--lambda2", type=float, default=0.1)
    p.add_argument("--lambda3", type=float, default=0.1)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--ldr-dilation", type=int, default=2)
    p.add_argument("--grad-out")
    p.add_argument("--out")
    _add_ddcv_flags(p)
    p.set_defaults(fn=cmd_loss)

    p = sub.add_parser("eval-disp", help="disparity accuracy metrics")
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--deltas", default="1,2,3")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval_disp)

    p = sub.add_parser("sparsify", help="sparsification curve and AUC")
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--confidence", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sparsify)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--layout", choices=synth.LAYOUTS, default="planar-ramp")
    p.add_argument("--texture", choices=synth.TEXTURES, default="noise")
    p.add_argument("--depth-transform", choices=synth.DEPTH_TRANSFORMS, default="affine")
    p.add_argument("--corruption", choices=synth.CORRUPTIONS, default="none")
    p.add_argument("--salt-fraction", type=float, default=0.05)
    p.add_argument("--magnitude", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d0", type=float, default=8.0)
    p.add_argument("--gx", type=float, default=0.05)
    p.add_argument("--gy", type=float, default=0.02)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("gradcheck", help="verify analytic gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=32)
    p.set_defaults(fn=cmd_gradcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads > 0:
        try:
            import numba

            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        except Exception:
            pass
    try:
        return args.fn(args)
    except _Usage as e:
        _info(f"error: {e}")
        return EXIT_USAGE
    except DegenerateInputError as e:
        _info(f"degenerate input: {e}")
        return EXIT_DEGENERATE
    except (DdcvError, ValueError) as e:
        _info(f"error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
