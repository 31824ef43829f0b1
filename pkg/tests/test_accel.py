"""Both kernel backends: agreement with each other and internal consistency."""

import os
import subprocess
import sys

import numpy as np
import pytest

from xfmap import _accel

from conftest import SUITE_KERNELS

KERNELS = SUITE_KERNELS + [SUITE_KERNELS[0].mnist_k1()]

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba backend not active")


def _data(kernel, rng, n):
    if kernel.kind.startswith("mnist"):
        return rng.random((n, 784))
    return rng.standard_normal((n, 4))


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_numpy_gram_column_equals_cross(kernel, rng):
    X = _data(kernel, rng, 9)
    p = kernel._param_array()
    G = _accel.gram_numpy(kernel.code, p, X)
    np.testing.assert_array_equal(G, G.T)
    for m in range(len(X)):
        np.testing.assert_array_equal(G[:, m], _accel.cross_numpy(kernel.code, p, X, X[m : m + 1])[:, 0])


@needs_numba
@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_backends_agree(kernel, rng):
    A = _data(kernel, rng, 13)
    B = _data(kernel, rng, 7)
    p = kernel._param_array()
    np.testing.assert_allclose(
        _accel.cross_numba(kernel.code, p, A, B), _accel.cross_numpy(kernel.code, p, A, B),
        rtol=1e-12, atol=1e-300,
    )
    np.testing.assert_allclose(
        _accel.gram_numba(kernel.code, p, A), _accel.gram_numpy(kernel.code, p, A),
        rtol=1e-12, atol=1e-300,
    )


@needs_numba
def test_numba_gram_deterministic(rng):
    kernel = KERNELS[3]
    X = rng.standard_normal((200, 6))
    p = kernel._param_array()
    a = _accel.gram_numba(kernel.code, p, X)
    b = _accel.gram_numba(kernel.code, p, X)
    assert a.tobytes() == b.tobytes()


def test_env_flag_selects_numpy():
    env = dict(os.environ, XFMAP_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", "from xfmap import _accel; print(_accel.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
