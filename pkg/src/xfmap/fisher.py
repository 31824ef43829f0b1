"""Multi-class Fisher discriminant analysis on explicit feature vectors.

Plain (non-kernelized) LDA: feed it the rows produced by
:meth:`xfmap.featmap.ExplicitFeatureMap.map_dataset` and it behaves as kernel
Fisher analysis without any dual representation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import spectral
from .archive import read_archive, write_archive
from .errors import DimensionError, FisherError, NumericalError

log = logging.getLogger(__name__)

MAGIC = "FDA1"
REL_DEFAULT_GAMMA = 1e-6
RESIDUAL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class FisherModel:
    directions: np.ndarray  # D x q, columns are discriminant vectors
    eigenvalues: np.ndarray  # q generalized eigenvalues, descending
    class_means: np.ndarray  # n_classes x q, in discriminant space
    class_labels: np.ndarray
    reg_gamma: float

    @property
    def q(self) -> int:
        return self.directions.shape[1]

    @property
    def dim(self) -> int:
        return self.directions.shape[0]


def _canonical_order(F, y):
    # sort rows by (label, features) so scatter sums do not depend on input order
    keys = [F[:, k] for k in range(F.shape[1] - 1, -1, -1)] + [y]
    return np.lexsort(keys)


def scatter_matrices(features, labels):
    """Within-class and between-class scatter (class-size weighted, unnormalized).

    ``S_W = sum_c sum_{i in c} (f_i - m_c)(f_i - m_c)^T``,
    ``S_B = sum_c n_c (m_c - m)(m_c - m)^T``.
    """
    F = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    order = _canonical_order(F, y)
    F, y = F[order], y[order]
    classes = np.unique(y)
    D = F.shape[1]
    S_W = np.zeros((D, D))
    S_B = np.zeros((D, D))
    m = F.mean(axis=0)
    for c in classes:
        Fc = F[y == c]
        mc = Fc.mean(axis=0)
        Xc = Fc - mc
        S_W += Xc.T @ Xc
        dm = mc - m
        S_B += len(Fc) * np.outer(dm, dm)
    return 0.5 * (S_W + S_W.T), 0.5 * (S_B + S_B.T)


def fit(features, labels, q: int | None = None, reg_gamma: float | None = None) -> FisherModel:
    """Fit ``q`` discriminant directions (default: ``#classes - 1``).

    Solves ``S_B w = mu (S_W + gamma I) w`` by whitening with
    ``(S_W + gamma I)^{-1/2}``. ``reg_gamma=None`` picks
    ``1e-6 * trace(S_W) / D``; ``reg_gamma=0`` requires a nonsingular ``S_W``.
    """
    F = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if F.ndim != 2:
        raise DimensionError(f"features must be a 2-d matrix, got shape {F.shape}")
    if y.shape != (F.shape[0],):
        raise DimensionError(f"{y.shape[0] if y.ndim else 0} labels for {F.shape[0]} samples")
    if not np.all(np.isfinite(F)):
        raise FisherError("features contain non-finite entries")
    classes = np.unique(y)
    if len(classes) < 2:
        raise FisherError(f"Fisher analysis needs at least 2 classes, got {len(classes)}")
    if q is None:
        q = len(classes) - 1
    if not 1 <= q <= len(classes) - 1:
        raise FisherError(f"q must be between 1 and #classes-1 = {len(classes) - 1}, got {q}")

    order = _canonical_order(F, y)
    F, y = F[order], y[order]
    S_W, S_B = scatter_matrices(F, y)
    D = F.shape[1]
    if reg_gamma is None:
        reg_gamma = REL_DEFAULT_GAMMA * np.trace(S_W) / D
        log.info("fisher: reg_gamma defaulted to %.6g", reg_gamma)
    if reg_gamma < 0:
        raise FisherError(f"reg_gamma must be >= 0, got {reg_gamma}")

    Sreg = S_W + reg_gamma * np.eye(D)
    dw = spectral.sym_eigen(Sreg, rel_cutoff=0.0)
    # rank tolerance in the style of numpy.linalg.matrix_rank; purely relative so
    # rescaling the features (and gamma) cannot flip the singularity verdict
    dw = spectral.SpectralDecomposition(
        dw.eigenvalues, dw.eigenvectors, D * np.finfo(float).eps * max(dw.lambda_max, 0.0)
    )
    if dw.effective_rank < D or dw.eigenvalues[-1] <= 0:
        raise FisherError(
            f"singular within-class scatter; set reg_gamma (rank {dw.effective_rank} of {D})"
        )
    R = spectral.spectral_apply(dw, "inv_sqrt")
    M = R @ S_B @ R
    dm = spectral.sym_eigen(M)
    mu = dm.eigenvalues[:q].copy()
    W = R @ dm.eigenvectors[:, :q]

    # normwise backward error; w^T Sreg w = 1 makes ||w|| ~ gamma^{-1/2}, so an
    # absolute residual would fail on perfectly accurate but small-gamma fits
    resid = np.linalg.norm(S_B @ W - (Sreg @ W) * mu, axis=0)
    scale = (np.linalg.norm(S_B, 2) + np.abs(mu) * np.linalg.norm(Sreg, 2)) * np.linalg.norm(W, axis=0)
    backward = resid / np.maximum(scale, np.finfo(float).tiny)
    if np.any(backward > RESIDUAL_TOL):
        raise NumericalError(f"Fisher eigen backward error {backward.max():.3g} exceeds {RESIDUAL_TOL}")

    T = F @ W
    means = np.stack([T[y == c].mean(axis=0) for c in classes])
    return FisherModel(W, mu, means, classes, float(reg_gamma))


def transform(model: FisherModel, features) -> np.ndarray:
    """Project feature rows (or one feature vector) onto the discriminant directions."""
    F = np.asarray(features, dtype=np.float64)
    if F.shape[-1] != model.dim:
        raise DimensionError(f"feature dimension {F.shape[-1]} != model dimension {model.dim}")
    return F @ model.directions


def nearest_class_mean(model: FisherModel, features):
    """Label of the closest class mean in discriminant space (ties: first label)."""
    T = transform(model, features)
    single = T.ndim == 1
    T = np.atleast_2d(T)
    d = ((T[:, None, :] - model.class_means[None, :, :]) ** 2).sum(axis=-1)
    pred = model.class_labels[np.argmin(d, axis=1)]
    return pred[0] if single else pred


def accuracy(model: FisherModel, features, labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return float("nan")
    return float(np.mean(nearest_class_mean(model, features) == labels))


def save(model: FisherModel, path, meta: dict | None = None):
    write_archive(
        path,
        MAGIC,
        {
            "directions": model.directions,
            "eigenvalues": model.eigenvalues,
            "class_means": model.class_means,
            "class_labels": model.class_labels,
            "reg_gamma": np.array(model.reg_gamma),
        },
        meta=meta,
    )


def load(path) -> FisherModel:
    data, _ = read_archive(path, MAGIC)
    return FisherModel(
        data["directions"], data["eigenvalues"], data["class_means"],
        data["class_labels"], float(data["reg_gamma"]),
    )
