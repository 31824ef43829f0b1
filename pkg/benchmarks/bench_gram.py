"""Time Gram and cross-Gram construction on the numba and numpy backends.

    python benchmarks/bench_gram.py [--n 1500] [--m 500] [--repeat 3]

The numba timings exclude JIT compilation (one warm-up call per kernel).
Both backends are checked against each other before timing.
"""

import argparse
import time

import numpy as np

from xfmap import KernelSpec, _accel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1500, help="training rows (MNIST-sized by default)")
    ap.add_argument("--m", type=int, default=500, help="probe rows for the cross-Gram")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not available (or XFMAP_NUMBA=0); nothing to compare")

    rng = np.random.default_rng(args.seed)
    cases = [
        (KernelSpec.mnist_k2(), 784, True),
        (KernelSpec.mnist_k1(), 784, True),
        (KernelSpec.gaussian(1.0), 784, False),
        (KernelSpec.laplacian(0.01), 784, False),
        (KernelSpec.polynomial(3, 1.0, 1.0), 784, False),
    ]
    print(f"N={args.n} M={args.m} best of {args.repeat}")
    print(f"{'kernel':44s} {'op':6s} {'numpy s':>9s} {'numba s':>9s} {'speedup':>8s}")
    for kernel, dim, images in cases:
        X = rng.random((args.n, dim)) if images else rng.standard_normal((args.n, dim)) / np.sqrt(dim)
        Z = rng.random((args.m, dim)) if images else rng.standard_normal((args.m, dim)) / np.sqrt(dim)
        p = kernel._param_array()
        code = kernel.code
        _accel.gram_numba(code, p, X[:3])
        _accel.cross_numba(code, p, X[:3], Z[:2])
        np.testing.assert_allclose(
            _accel.cross_numba(code, p, X[:50], Z[:20]), _accel.cross_numpy(code, p, X[:50], Z[:20]),
            rtol=1e-12, atol=1e-300,
        )
        for op, f_np, f_nb in (
            ("gram", lambda: _accel.gram_numpy(code, p, X), lambda: _accel.gram_numba(code, p, X)),
            ("cross", lambda: _accel.cross_numpy(code, p, X, Z), lambda: _accel.cross_numba(code, p, X, Z)),
        ):
            t_np = best_of(f_np, args.repeat)
            t_nb = best_of(f_nb, args.repeat)
            print(f"{str(kernel):44s} {op:6s} {t_np:9.3f} {t_nb:9.3f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
