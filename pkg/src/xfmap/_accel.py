"""Pairwise kernel loops, with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``XFMAP_NUMBA`` is not set to
``0``/``false``/``off``. Both paths compute each kernel entry from a single
per-pair reduction, so within a backend a Gram column is bit-identical to the
corresponding kernel vector. Across backends results agree to round-off only
(sequential vs pairwise summation).
"""

import os

import numpy as np

LINEAR = 0
POLYNOMIAL = 1
GAUSSIAN = 2
LAPLACIAN = 3
MNIST_K1 = 4
MNIST_K2 = 5


def _numba_requested():
    flag = os.environ.get("XFMAP_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by XFMAP_NUMBA")
    from numba import config as _numba_config
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the default probe tries TBB first and warns on old installs
        try:
            import numba.np.ufunc.omppool  # noqa: F401

            _numba_config.THREADING_LAYER = "omp"
        except ImportError:
            pass
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy fallback
# ---------------------------------------------------------------------------


def _finish_numpy(code, params, acc):
    # acc: raw per-pair reduction (dot product, squared or L1 distance)
    if code == LINEAR:
        return acc
    if code == POLYNOMIAL:
        return (params[0] * acc + params[1]) ** params[2]
    if code == GAUSSIAN:
        return np.exp(-acc / (2.0 * params[0] * params[0]))
    if code == LAPLACIAN:
        return np.exp(-params[0] * acc)
    if code == MNIST_K1:
        return (acc / 784.0) ** 9
    if code == MNIST_K2:
        return ((acc / 784.0 + 1.0) / 2.0) ** 9
    raise ValueError(f"unknown kernel code {code}")


def _prepare_numpy(code, X):
    if code == MNIST_K2:
        return 2.0 * X - 1.0
    return X


def _reduce_rows_numpy(code, x, B):
    # one row x against every row of B; the reduction runs along the
    # contiguous last axis so each entry matches a 1-d reduction of the pair
    if code == GAUSSIAN:
        d = B - x
        return (d * d).sum(axis=-1)
    if code == LAPLACIAN:
        return np.abs(B - x).sum(axis=-1)
    return (B * x).sum(axis=-1)


def cross_numpy(code, params, A, B):
    A = _prepare_numpy(code, A)
    B = _prepare_numpy(code, B)
    acc = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        acc[i] = _reduce_rows_numpy(code, A[i], B)
    return _finish_numpy(code, params, acc)


def gram_numpy(code, params, A):
    P = _prepare_numpy(code, A)
    n = P.shape[0]
    acc = np.empty((n, n))
    for i in range(n):
        row = _reduce_rows_numpy(code, P[i], P[i:])
        acc[i, i:] = row
        acc[i:, i] = row
    return _finish_numpy(code, params, acc)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _pair(code, params, x, z):
        acc = 0.0
        if code == GAUSSIAN:
            for k in range(x.shape[0]):
                d = x[k] - z[k]
                acc += d * d
            return np.exp(-acc / (2.0 * params[0] * params[0]))
        if code == LAPLACIAN:
            for k in range(x.shape[0]):
                acc += abs(x[k] - z[k])
            return np.exp(-params[0] * acc)
        if code == MNIST_K2:
            for k in range(x.shape[0]):
                acc += (2.0 * x[k] - 1.0) * (2.0 * z[k] - 1.0)
            return ((acc / 784.0 + 1.0) / 2.0) ** 9
        for k in range(x.shape[0]):
            acc += x[k] * z[k]
        if code == LINEAR:
            return acc
        if code == POLYNOMIAL:
            return (params[0] * acc + params[1]) ** params[2]
        # MNIST_K1
        return (acc / 784.0) ** 9

    @njit(cache=True, parallel=True)
    def cross_numba(code, params, A, B):
        na = A.shape[0]
        nb = B.shape[0]
        out = np.empty((na, nb))
        for i in prange(na):
            for j in range(nb):
                out[i, j] = _pair(code, params, A[i], B[j])
        return out

    @njit(cache=True, parallel=True)
    def gram_numba(code, params, A):
        n = A.shape[0]
        out = np.empty((n, n))
        for i in prange(n):
            for j in range(i, n):
                v = _pair(code, params, A[i], A[j])
                out[i, j] = v
                out[j, i] = v
        return out

    def cross(code, params, A, B):
        return cross_numba(code, params, A, B)

    def gram(code, params, A):
        return gram_numba(code, params, A)

else:
    cross_numba = gram_numba = None

    def cross(code, params, A, B):
        return cross_numpy(code, params, A, B)

    def gram(code, params, A):
        return gram_numpy(code, params, A)
