"""Compare the numba and numpy kernel backends on the hot operators.

    python3 benchmarks/bench_backends.py --sizes 64,128 --reps 3
"""

import argparse
import statistics
import time

import numpy as np

from boxct import Image, Lattice, Sinogram, backproject, forward, gram_build, make_geometry, set_backend


def _median_time(fn, reps):
    fn()  # warm-up: JIT compilation and caches
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="64,128")
    ap.add_argument("--views", type=int, default=180)
    ap.add_argument("--blur", type=float, default=1.0)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    print(f"{'size':>5} {'operator':>12} {'numba_s':>10} {'numpy_s':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        lattice = Lattice(n)
        geom = make_geometry(lattice, args.views, blur=args.blur)
        rng = np.random.default_rng(n)
        img = Image(rng.random((n, n)))
        sino = Sinogram(geom, rng.random((geom.n_views, geom.detector_count)))
        ops = {
            "forward": lambda: forward(img, geom),
            "backproject": lambda: backproject(sino, lattice),
            "gram_build": lambda: gram_build(lattice, geom),
        }
        for name, fn in ops.items():
            timings = {}
            for backend in ("numba", "numpy"):
                prev = set_backend(backend)
                try:
                    timings[backend] = _median_time(fn, args.reps)
                finally:
                    set_backend(prev)
            print(f"{n:>5} {name:>12} {timings['numba']:>10.4f} {timings['numpy']:>10.4f} "
                  f"{timings['numpy'] / timings['numba']:>8.1f}")


if __name__ == "__main__":
    main()
