"""Command-line front end (``boxct``).

Exit codes: 0 ok, 1 runtime error (missing/corrupt file, ...), 2 usage error,
3 verification failure.

CSV schemas
-----------
recon-sweep : size,rate,noise_db,blur,views,iters,status,snr_db,ssim,seconds
              (first line ``# noise_seed=<seed>``; noise_db is "none" for clean data)
bp-bench    : size,blur,median_seconds,ratio
metrics     : reference,test,snr_db,ssim
trace       : iteration,residual,alpha,snr
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import io, metrics, oracle, phantom
from .boxspline import evaluate, make_kernel
from .geometry import Lattice, ProjectionGeometry, make_geometry
from .operators import (Image, Sinogram, backproject, correction_filter, forward,
                        gram_apply, gram_build)
from .solver import reconstruct

MAX_SWEEP_SIZE = 1024
EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _list_of(conv):
    def parse(text):
        if isinstance(text, list):
            return [conv(str(t)) for t in text]
        return [conv(t) for t in str(text).split(",") if t.strip()]
    return parse


def _noise_level(text: str):
    t = text.strip().lower()
    if t in ("none", "inf", "clean"):
        return None
    return float(t)


# ---------------------------------------------------------------- file helpers

def _geometry_path(path) -> Path:
    return Path(str(path) + ".geometry.json")


def _save_image(img: Image, out) -> None:
    io.write_gtm(out, img.coeffs, io.KIND_IMAGE, img.lambda_x)
    preview = Path(out).with_suffix(".pgm")
    io.write_json(str(preview) + ".json", io.write_pgm(preview, img.coeffs))


def _load_image(path) -> Image:
    a, _, spacing = io.read_gtm(path, io.KIND_IMAGE)
    return Image(a, spacing)


def _save_sinogram(sino: Sinogram, out) -> None:
    io.write_gtm(out, sino.samples, io.KIND_SINOGRAM, sino.geometry.lambda_y)
    sino.geometry.save(_geometry_path(out))


def _load_sinogram(path, args, lattice: Lattice) -> Sinogram:
    a, _, spacing = io.read_gtm(path, io.KIND_SINOGRAM)
    side = _geometry_path(path)
    if side.exists():
        geom = ProjectionGeometry.load(side, lattice)
    else:
        geom = make_geometry(lattice, args.views, args.rate, args.blur, detector_count=a.shape[1])
        if geom.n_views != a.shape[0]:
            raise UsageError(f"{path} has {a.shape[0]} views; pass --views or keep the geometry sidecar")
    return Sinogram(geom, a)


def _lattice(args) -> Lattice:
    return Lattice(args.n, args.pixel)


def _geometry(args, lattice: Lattice) -> ProjectionGeometry:
    return make_geometry(lattice, args.views, args.rate, args.blur)


# ---------------------------------------------------------------- commands

def cmd_phantom(args) -> int:
    lattice = _lattice(args)
    if args.kind == "spots":
        ellipses, img = phantom.spots(args.seed, args.count, lattice)
    elif args.kind == "ellipses":
        ellipses = (phantom.forbild_like(lattice) if args.input is None
                    else phantom.read_ellipses(_existing(args.input)))
        img = phantom.rasterize(ellipses, lattice)
    else:
        if args.input is None:
            raise UsageError("phantom ingest needs --input")
        ellipses = None
        img = phantom.ingest_image(_existing(args.input), lattice)
    _save_image(img, args.out)
    if ellipses is not None:
        phantom.write_ellipses(Path(args.out).with_suffix(".ellipses.csv"), ellipses)
    return EXIT_OK


def cmd_project(args) -> int:
    lattice = _lattice(args)
    geom = _geometry(args, lattice)
    if args.ellipses:
        sino = phantom.ground_truth_sinogram(phantom.read_ellipses(_existing(args.ellipses)),
                                             lattice, geom)
    else:
        img = _load_image(_existing(args.input))
        lattice = img.lattice
        sino = forward(img, _geometry(args, lattice))
    _save_sinogram(sino, args.out)
    return EXIT_OK


def cmd_backproject(args) -> int:
    lattice = _lattice(args)
    sino = _load_sinogram(_existing(args.input), args, lattice)
    _save_image(backproject(sino, lattice), args.out)
    return EXIT_OK


def cmd_gram(args) -> int:
    lattice = _lattice(args)
    g = gram_build(lattice, _geometry(args, lattice))
    io.write_gtm(args.out, g.taps, io.KIND_GRAM, g.lambda_x)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    lattice = _lattice(args)
    sino = _load_sinogram(_existing(args.input), args, lattice)
    ref = _load_image(_existing(args.reference)) if args.reference else None
    img, trace = reconstruct(sino, lattice, args.iters, args.tol, reference=ref)
    _save_image(img, args.out)
    if args.trace:
        trace.to_csv(args.trace)
    print(json.dumps({"status": trace.status, "iterations": trace.iterations,
                      "final_residual": trace.records[-1].residual if trace.records else 0.0}))
    return EXIT_OK


def cmd_metrics(args) -> int:
    ref = _load_image(_existing(args.reference))
    test = _load_image(_existing(args.test))
    rec = {"reference": str(args.reference), "test": str(args.test),
           "snr_db": metrics.snr_db(ref, test)}
    rec["ssim"] = metrics.ssim(ref, test) if ref.n >= 11 else None
    print(json.dumps(rec))
    if args.csv:
        new = not Path(args.csv).exists()
        with open(args.csv, "a", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rec))
            if new:
                w.writeheader()
            w.writerow(rec)
    return EXIT_OK


def add_noise(samples: np.ndarray, snr_db: float | None, rng: np.random.Generator) -> np.ndarray:
    """White Gaussian noise scaled to a target sinogram SNR (raw energies)."""
    if snr_db is None:
        return samples.copy()
    power = float(np.mean(samples * samples))
    sigma = math.sqrt(power / 10.0 ** (snr_db / 10.0))
    return samples + sigma * rng.standard_normal(samples.shape)


def cmd_noise(args) -> int:
    lattice = _lattice(args)
    sino = _load_sinogram(_existing(args.input), args, lattice)
    noisy = add_noise(sino.samples, args.snr, np.random.default_rng(args.seed))
    _save_sinogram(Sinogram(sino.geometry, noisy), args.out)
    return EXIT_OK


def cmd_recon_sweep(args) -> int:
    for n in args.sizes:
        if n > MAX_SWEEP_SIZE:
            raise UsageError(f"size {n} exceeds the {MAX_SWEEP_SIZE} memory guard")
    fields = ["size", "rate", "noise_db", "blur", "views", "iters", "status",
              "snr_db", "ssim", "seconds"]
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# noise_seed={args.seed}\n")
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for n in args.sizes:
            lattice = Lattice(n, args.pixel)
            ellipses, _ = phantom.spots(args.seed, args.count, lattice)
            ref = phantom.ground_truth_image(ellipses, lattice)
            for ri, rate in enumerate(args.rates):
                for blur_on in args.blur_modes:
                    zeta = args.blur if blur_on else 0.0
                    geom = make_geometry(lattice, args.views, rate, zeta)
                    clean = phantom.ground_truth_sinogram(ellipses, lattice, geom).samples
                    for ni, level in enumerate(args.noise):
                        rng = np.random.default_rng([args.seed, n, ri, ni, int(blur_on)])
                        sino = Sinogram(geom, add_noise(clean, level, rng))
                        t0 = time.perf_counter()
                        img, trace = reconstruct(sino, lattice, args.iters, args.tol)
                        secs = time.perf_counter() - t0
                        w.writerow({
                            "size": n, "rate": rate,
                            "noise_db": "none" if level is None else level,
                            "blur": zeta, "views": args.views, "iters": trace.iterations,
                            "status": trace.status,
                            "snr_db": f"{metrics.snr_db(ref, img):.6f}",
                            "ssim": f"{metrics.ssim(ref, img):.6f}" if n >= 11 else "",
                            "seconds": f"{secs:.4f}",
                        })
                        fh.flush()
    return EXIT_OK


def bp_bench(sizes, views: int = 180, blur: float = 1.0, reps: int = 5, seed: int = 0):
    """Median back-projection wall time per size, without and with detector blur."""
    rows = []
    for n in sizes:
        lattice = Lattice(n)
        times = {}
        for zeta in (0.0, blur):
            geom = make_geometry(lattice, views, 1.0, zeta)
            rng = np.random.default_rng([seed, n])
            sino = Sinogram(geom, rng.standard_normal((geom.n_views, geom.detector_count)))
            backproject(sino, lattice)  # warm-up (JIT, caches)
            samples = []
            for _ in range(reps):
                t0 = time.perf_counter()
                backproject(sino, lattice)
                samples.append(time.perf_counter() - t0)
            times[zeta] = statistics.median(samples)
        ratio = times[blur] / times[0.0]
        rows.append({"size": n, "blur": 0.0, "median_seconds": times[0.0], "ratio": ratio})
        rows.append({"size": n, "blur": blur, "median_seconds": times[blur], "ratio": ratio})
    return rows


def cmd_bp_bench(args) -> int:
    rows = bp_bench(args.sizes, args.views, args.blur if args.blur > 0 else 1.0, args.reps, args.seed)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["size", "blur", "median_seconds", "ratio"])
        w.writeheader()
        for r in rows:
            w.writerow({**r, "median_seconds": f"{r['median_seconds']:.6f}",
                        "ratio": f"{r['ratio']:.4f}"})
    return EXIT_OK


# ---------------------------------------------------------------- verify

def _check(name: str, value: float, tol: float) -> dict:
    return {"check": name, "error": float(value), "tol": tol, "pass": bool(value <= tol)}


def _suite_kernel(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    out = []
    worst = 0.0
    for _ in range(10):
        widths = list(rng.uniform(0.1, 2.0, size=rng.integers(1, 6)))
        k = make_kernel(widths)
        pp = oracle.convolve_boxes(widths)
        x = np.linspace(-k.support / 2, k.support / 2, 401)[1:-1]
        worst = max(worst, float(np.max(np.abs(evaluate(k, x) - pp(x)))))
    out.append(_check("eval vs convolution", worst, 1e-6))
    k = make_kernel([1.0, 0.7, 0.3])
    u = np.linspace(-3.0, 3.0, 61)
    pou = np.abs(evaluate(k, u[:, None] - np.arange(-6, 7)[None, :]).sum(axis=1) - 1.0).max()
    out.append(_check("partition of unity", pou, 1e-12))
    q = correction_filter(2)
    d = np.convolve(q, [1 / 8, 6 / 8, 1 / 8], mode="same")
    delta = (np.arange(q.size) == q.size // 2).astype(float)
    out.append(_check("correction filter inverse", np.abs(d - delta)[5:-5].max(), 1e-12))
    return out


def _suite_gram() -> list[dict]:
    lattice = Lattice(8)
    out = []
    for blur in (0.0, 0.5):
        geom = make_geometry(lattice, angles=[math.radians(a) for a in (0, 30, 45, 90)], blur=blur)
        taps = gram_build(lattice, geom).taps
        ref = oracle.quadrature_gram(lattice, geom)
        out.append(_check(f"gram taps vs quadrature (blur {blur})",
                          np.abs(taps - ref).max() / np.abs(ref).max(), 1e-6))
    lattice = Lattice(6)
    geom = make_geometry(lattice, n_views=7, blur=0.5)
    img = Image(np.random.default_rng(1).standard_normal((6, 6)))
    fwd = forward(img, geom).samples
    ref = oracle.quadrature_sinogram(img, geom)
    out.append(_check("forward vs quadrature", np.abs(fwd - ref).max() / np.abs(ref).max(), 1e-6))
    return out


def _suite_adjoint(quick: bool) -> list[dict]:
    out = []
    lattice = Lattice(9)
    geom = make_geometry(lattice, angles=[0.0, math.pi / 2])
    rng = np.random.default_rng(2)
    img = Image(rng.standard_normal((9, 9)))
    lhs = backproject(forward(img, geom), lattice).coeffs
    rhs = gram_apply(gram_build(lattice, geom), img).coeffs
    out.append(_check("backproject(forward) = gram at aligned angles",
                      np.abs(lhs - rhs).max() / np.abs(rhs).max(), 1e-9))
    lattice = Lattice(8)
    geom = make_geometry(lattice, n_views=12)
    gram = gram_build(lattice, geom)
    img = Image(rng.standard_normal((8, 8)))
    dense = (oracle.dense_gram(gram.taps) @ img.coeffs.reshape(-1)).reshape(8, 8)
    out.append(_check("gram_apply vs dense matrix",
                      np.abs(gram_apply(gram, img).coeffs - dense).max() / np.abs(dense).max(), 1e-8))
    if not quick:
        sino = forward(img, geom)
        x, _ = reconstruct(sino, lattice, max_iters=20000, rel_tol=1e-12, gram=gram)
        ref = oracle.dense_solve(gram.taps, backproject(sino, lattice).coeffs)
        out.append(_check("reconstruct vs dense solve",
                          np.abs(x.coeffs - ref).max() / np.abs(ref).max(), 1e-6))
    return out


def _suite_input(path) -> list[dict]:
    try:
        a, kind, spacing = io.read_gtm(path)
    except (io.FormatError, OSError) as exc:
        return [{"check": "readable input", "pass": False, "diagnostic": str(exc)}]
    res = [{"check": "readable input", "pass": True,
            "kind": io.KIND_NAMES[kind], "shape": list(a.shape), "spacing": spacing}]
    if kind == io.KIND_GRAM:
        asym = np.abs(a - a[::-1, ::-1]).max() / max(np.abs(a).max(), 1e-300)
        res.append(_check("gram taps point-symmetric", asym, 1e-12))
    return res


def cmd_verify(args) -> int:
    report = {"kernel": _suite_kernel(args.seed), "gram": _suite_gram(),
              "adjoint_solver": _suite_adjoint(args.quick)}
    if args.input:
        report["input"] = _suite_input(args.input)
    summary = {name: all(c["pass"] for c in checks) for name, checks in report.items()}
    ok = all(summary.values())
    print(json.dumps({"pass": ok, "suites": summary, "checks": report}, indent=2))
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------- parser

def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    return p


def _common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--n", type=_positive_int, default=64, help="lattice size N")
    p.add_argument("--pixel", type=_positive_float, default=1.0, help="pixel step lambda_x")
    p.add_argument("--views", type=_positive_int, default=180)
    p.add_argument("--rate", type=_positive_float, default=1.0,
                   help="downsampling rate n, lambda_y = n * lambda_x")
    p.add_argument("--blur", type=_nonneg_float, default=0.0, help="detector blur in units of lambda_y")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=_positive_int, default=100)
    p.add_argument("--tol", type=_positive_float, default=1e-6)
    p.add_argument("--out", required=out_required)


def build_parser(config: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxct", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="JSON file presetting any flag; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = []

    p = sub.add_parser("phantom", help="generate a test image")
    p.add_argument("kind", choices=["spots", "ellipses", "ingest"])
    p.add_argument("--count", type=_positive_int, default=12)
    p.add_argument("--input", help="ellipse CSV or PGM/PNG raster")
    _common(p)
    p.set_defaults(func=cmd_phantom)
    leaves.append(p)

    p = sub.add_parser("project", help="forward-project an image (or ellipse CSV at 10x)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--input")
    g.add_argument("--ellipses")
    _common(p)
    p.set_defaults(func=cmd_project)
    leaves.append(p)

    p = sub.add_parser("backproject", help="back-project a sinogram")
    p.add_argument("--input", required=True)
    _common(p)
    p.set_defaults(func=cmd_backproject)
    leaves.append(p)

    p = sub.add_parser("gram", help="build Gram filter taps")
    _common(p)
    p.set_defaults(func=cmd_gram)
    leaves.append(p)

    p = sub.add_parser("reconstruct", help="steepest-descent reconstruction")
    p.add_argument("--input", required=True)
    p.add_argument("--reference")
    p.add_argument("--trace", help="write the iteration trace as CSV")
    _common(p)
    p.set_defaults(func=cmd_reconstruct)
    leaves.append(p)

    p = sub.add_parser("metrics", help="SNR/SSIM as JSON")
    p.add_argument("--reference", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--csv", help="append the record to this CSV")
    p.set_defaults(func=cmd_metrics)
    leaves.append(p)

    p = sub.add_parser("noise", help="add white Gaussian noise at a target SNR")
    p.add_argument("--input", required=True)
    p.add_argument("--snr", type=float, required=True, help="target sinogram SNR in dB")
    _common(p)
    p.set_defaults(func=cmd_noise)
    leaves.append(p)

    p = sub.add_parser("experiment", help="timing and quality sweeps")
    esub = p.add_subparsers(dest="experiment", required=True)
    e = esub.add_parser("recon-sweep", help="SNR/SSIM over sizes, rates, noise, blur")
    e.add_argument("--sizes", type=_list_of(_positive_int), default=[64])
    e.add_argument("--rates", type=_list_of(_positive_float), default=[0.5, 1.0, 2.0])
    e.add_argument("--noise", type=_list_of(_noise_level), default=[None, 40.0, 30.0, 20.0])
    e.add_argument("--blur-modes", type=_list_of(lambda t: t.strip().lower() in ("on", "1", "true")),
                   default=[False, True], help="comma list of off/on")
    e.add_argument("--count", type=_positive_int, default=12)
    _common(e)
    e.set_defaults(func=cmd_recon_sweep, blur=1.0)
    leaves.append(e)
    e = esub.add_parser("bp-bench", help="back-projection wall time with and without blur")
    e.add_argument("--sizes", type=_list_of(_positive_int), default=[64, 128, 256])
    e.add_argument("--reps", type=_positive_int, default=5)
    _common(e)
    e.set_defaults(func=cmd_bp_bench, blur=1.0)
    leaves.append(e)

    p = sub.add_parser("verify", help="oracle agreement report")
    p.add_argument("--quick", action="store_true", help="skip the dense solve")
    p.add_argument("--input", help="also validate this GTM1 file")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    leaves.append(p)

    if config:
        for leaf in leaves:
            leaf.set_defaults(**config)
    return parser


def _load_config(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    doc = json.loads(Path(known.config).read_text())
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    # lists become comma strings so argparse runs them through the flag's type
    return {k.replace("-", "_"): ",".join(map(str, v)) if isinstance(v, list) else v
            for k, v in doc.items()}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = _load_config(argv)
    except (OSError, json.JSONDecodeError, UsageError) as exc:
        print(f"boxct: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser(config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"boxct: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, MemoryError, ArithmeticError) as exc:
        print(f"boxct: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
