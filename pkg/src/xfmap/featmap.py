"""Exact finite-dimensional explicit feature map.

For training points ``x_1..x_N`` with Gram matrix ``K`` the map

    phi(z) = K^{-1/2} [k(x_1, z), ..., k(x_N, z)]^T

satisfies ``<phi(x_n), phi(z)> = k(x_n, z)`` for every training point
``x_n`` and arbitrary ``z``. Between two off-sample points the inner product
is *not* the kernel value; only pairs involving a training point are exact.
``K^{-1/2}`` is a spectral pseudo-inverse, so duplicated training points are
fine: ``k_z`` has no component in the null space of ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .archive import read_archive, write_archive
from .errors import DimensionError
from .kernels import GramMatrix, KernelSpec, _as_matrix, cross_gram, fingerprint, gram, kernel_vector

MAGIC = "XFMAP1"


@dataclass(frozen=True, eq=False)
class ExplicitFeatureMap:
    kernel: KernelSpec
    train: np.ndarray
    gram: GramMatrix
    decomp: spectral.SpectralDecomposition
    k_inv_sqrt: np.ndarray
    k_sqrt: np.ndarray
    k_pinv: np.ndarray
    mean: np.ndarray

    @property
    def n(self) -> int:
        return self.train.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.n

    @property
    def effective_rank(self) -> int:
        return self.decomp.effective_rank

    def _check_dim(self, Z):
        if Z.shape[-1] != self.train.shape[1]:
            raise DimensionError(
                f"inputs have dimension {Z.shape[-1]}, map was fitted on {self.train.shape[1]}"
            )

    def map_point(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        self._check_dim(z)
        return self.k_inv_sqrt @ kernel_vector(self.kernel, self.train, z)

    def train_mean(self) -> np.ndarray:
        """``M = K^{1/2} e``, the mean of the mapped training points."""
        return self.mean.copy()

    def map_centered(self, z) -> np.ndarray:
        """``psi(z) = K^{-1/2} (k_z - K e)``."""
        z = np.asarray(z, dtype=np.float64)
        self._check_dim(z)
        kz = kernel_vector(self.kernel, self.train, z)
        Ke = self.gram.values @ spectral.mean_vector(self.n)
        return self.k_inv_sqrt @ (kz - Ke)

    def kernel_matrix(self, Z) -> np.ndarray:
        """``N x m`` matrix whose columns are the kernel vectors of the rows of ``Z``."""
        Z = _as_matrix(Z, "Z")
        self._check_dim(Z)
        return cross_gram(self.kernel, self.train, Z)

    def map_dataset(self, Z, centered: bool = False) -> np.ndarray:
        """Map every row of ``Z``; returns an ``m x N`` matrix (rows = mapped points)."""
        KZ = self.kernel_matrix(Z)
        if centered:
            KZ = KZ - (self.gram.values @ spectral.mean_vector(self.n))[:, None]
        return (self.k_inv_sqrt @ KZ).T


def fit(kernel: KernelSpec, train, rel_cutoff: float = spectral.REL_CUTOFF) -> ExplicitFeatureMap:
    """Build the explicit map for ``train`` under ``kernel``.

    Rank-deficient Gram matrices go through the pseudo-inverse; negative
    round-off eigenvalues down to ``-1e-8 * max(1, lambda_max)`` are clipped.
    """
    train = _as_matrix(train, "train").copy()
    if train.shape[0] == 0:
        raise DimensionError("cannot fit a feature map on an empty training set")
    train.flags.writeable = False
    G = gram(kernel, train)
    decomp = spectral.sym_eigen(G.values, rel_cutoff=rel_cutoff)
    return _assemble(kernel, train, G, decomp)


def _assemble(kernel, train, G, decomp):
    k_inv_sqrt = spectral.spectral_apply(decomp, "inv_sqrt", clip_negative=True)
    k_sqrt = spectral.spectral_apply(decomp, "sqrt", clip_negative=True)
    k_pinv = spectral.spectral_apply(decomp, "inv", clip_negative=True)
    mean = k_sqrt @ spectral.mean_vector(train.shape[0])
    for a in (k_inv_sqrt, k_sqrt, k_pinv, mean):
        a.flags.writeable = False
    return ExplicitFeatureMap(kernel, train, G, decomp, k_inv_sqrt, k_sqrt, k_pinv, mean)


def save(m: ExplicitFeatureMap, path):
    write_archive(
        path,
        MAGIC,
        {
            "kernel": np.array(str(m.kernel)),
            "train": m.train,
            "gram": m.gram.values,
            "eigenvalues": m.decomp.eigenvalues,
            "eigenvectors": m.decomp.eigenvectors,
            "cutoff": np.array(m.decomp.cutoff),
        },
        meta={"kernel": str(m.kernel), "dataset": m.gram.dataset_fingerprint,
              "n": m.n, "effective_rank": m.effective_rank},
    )


def load(path) -> ExplicitFeatureMap:
    data, _ = read_archive(path, MAGIC)
    kernel = KernelSpec.parse(str(data["kernel"]))
    train = np.ascontiguousarray(data["train"])
    train.flags.writeable = False
    values = data["gram"]
    values.flags.writeable = False
    G = GramMatrix(values, kernel, fingerprint(train))
    w, V = data["eigenvalues"], data["eigenvectors"]
    w.flags.writeable = False
    V.flags.writeable = False
    decomp = spectral.SpectralDecomposition(w, V, float(data["cutoff"]))
    return _assemble(kernel, train, G, decomp)
