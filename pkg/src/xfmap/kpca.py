"""Kernel PCA on the explicit feature map, four ways.

Notation: ``e`` is the N-vector with entries ``1/N``, ``C = I - N e e^T``,
``k_z`` the kernel vector of a probe ``z``. A fitted component carries

* ``lambda``: eigenvalue of the feature-space covariance (``N*lambda`` is the
  eigenvalue of the centered-Gram problems),
* ``u``: primal vector with ``K C u = N lambda u`` and ``u^T K^+ u = 1``,
* ``alpha``: dual vector with ``K C alpha = N lambda alpha`` and
  ``alpha^T C K C alpha = 1``; ``u = N lambda alpha``.

The right-centered ``K C`` is not symmetric, so every route solves a
symmetric surrogate and maps back:

* primal: ``K^{1/2} C K^{1/2} v = N lambda v``, ``u = K^{1/2} v``;
* dual: ``C K C beta = N lambda beta``, ``alpha = K C beta / (N lambda)``;
* classical: the double-centered Gram ``K - 1K - K1 + 1K1`` (``1`` the matrix
  with entries ``1/N``) solved as in the kernel-trick derivation.

Whatever the route, the stored ``alphas``/``us`` obey the same
normalization, so any projection formula works on any model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .archive import read_archive, write_archive
from .errors import ComponentError, NumericalError
from .featmap import ExplicitFeatureMap

MAGIC = "KPCA1"
ROUTES = ("primal", "dual", "classical")
REL_COMPONENT_CUTOFF = 1e-10
RESIDUAL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class KpcaModel:
    featmap: ExplicitFeatureMap
    lambdas: np.ndarray
    alphas: np.ndarray  # N x p
    us: np.ndarray  # N x p
    e_dot_alpha: np.ndarray
    route: str

    @property
    def p(self) -> int:
        return self.lambdas.shape[0]

    @property
    def n(self) -> int:
        return self.featmap.n

    def residuals(self) -> dict:
        """Per-component residuals of the defining equations (for diagnostics)."""
        K = self.featmap.gram.values
        N = self.n
        Nl = N * self.lambdas
        KCa = K @ _center_cols(self.alphas)
        KCu = K @ _center_cols(self.us)
        CKCa = _center_cols(KCa)
        return {
            "primal": np.linalg.norm(KCu - Nl * self.us, axis=0) / Nl,
            "dual": np.linalg.norm(KCa - Nl * self.alphas, axis=0) / Nl,
            "u_norm": np.einsum("ij,ij->j", self.us, self.featmap.k_pinv @ self.us) - 1.0,
            "alpha_norm": np.einsum("ij,ij->j", self.alphas, CKCa) - 1.0,
        }


def _center_cols(A):
    # C @ A for the centering operator C = I - N e e^T
    return A - A.mean(axis=0)


def double_centered_gram(K) -> np.ndarray:
    """``K - 1_N K - K 1_N + 1_N K 1_N`` with ``1_N`` the all-``1/N`` matrix."""
    K = np.asarray(K, dtype=np.float64)
    N = K.shape[0]
    one = np.full((N, N), 1.0 / N)
    return K - one @ K - K @ one + one @ K @ one


def feature_covariance(m: ExplicitFeatureMap) -> np.ndarray:
    """``(1/N) K^{1/2} C K^{1/2}``, the covariance of the centered mapped training set."""
    Ks = m.k_sqrt
    A = Ks @ _center_cols(Ks) / m.n
    return 0.5 * (A + A.T)


def _component_cutoff(m: ExplicitFeatureMap) -> float:
    return REL_COMPONENT_CUTOFF * m.decomp.lambda_max


def _select(m: ExplicitFeatureMap, S: np.ndarray, p: int):
    if p < 1:
        raise ComponentError(f"need at least one component, got p={p}")
    d = spectral.sym_eigen(S)
    available = int(np.count_nonzero(d.eigenvalues > _component_cutoff(m)))
    if p > available:
        raise ComponentError(
            f"requested {p} components but only {available} have N*lambda above "
            f"{_component_cutoff(m):.3g}"
        )
    return d.eigenvalues[:p].copy(), d.eigenvectors[:, :p].copy()


def _make_model(m, Nl, alphas, route):
    N = m.n
    # normalize alpha^T C K C alpha = 1; for exact eigenvectors this is a no-op
    Ca = _center_cols(alphas)
    norms = np.einsum("ij,ij->j", Ca, m.gram.values @ Ca)
    alphas = alphas / np.sqrt(norms)
    model = _assemble(m, Nl / N, alphas, route)
    res = model.residuals()
    bad = res["dual"] > RESIDUAL_TOL
    if np.any(bad):
        raise NumericalError(
            f"{route} KPCA: eigen-residual {res['dual'].max():.3g} exceeds {RESIDUAL_TOL} "
            f"for component(s) {np.flatnonzero(bad).tolist()}"
        )
    return model


def _assemble(m, lambdas, alphas, route):
    # u is always derived from the stored lambdas so a reloaded model is bit-identical
    us = (m.n * lambdas) * alphas
    return KpcaModel(m, lambdas, alphas, us, spectral.mean_vector(m.n) @ alphas, route)


def fit_primal(m: ExplicitFeatureMap, p: int) -> KpcaModel:
    """Solve ``K^{1/2} C K^{1/2} v = N lambda v``; ``u = K^{1/2} v``."""
    Nl, V = _select(m, m.n * feature_covariance(m), p)
    us = m.k_sqrt @ V
    return _make_model(m, Nl, us / Nl, "primal")


def fit_dual(m: ExplicitFeatureMap, p: int) -> KpcaModel:
    """Solve ``C K C beta = N lambda beta`` and recover ``K C alpha = N lambda alpha``."""
    K = m.gram.values
    CKC = _center_cols(_center_cols(K).T)
    Nl, B = _select(m, CKC, p)
    KCB = K @ _center_cols(B)
    # alpha = beta + (I - C) K C beta / (N lambda)
    alphas = B + KCB.mean(axis=0) / Nl
    return _make_model(m, Nl, alphas, "dual")


def fit_classical(m: ExplicitFeatureMap, p: int) -> KpcaModel:
    """Kernel-trick KPCA on the double-centered Gram matrix.

    Eigenvectors are normalized with ``N lambda ||alpha||^2 = 1`` and then
    shifted by a multiple of the all-ones vector so they also solve the
    right-centered problem; the shift does not change any projection.
    """
    K = m.gram.values
    Kbar = double_centered_gram(K)
    Nl, A = _select(m, Kbar, p)
    A = A / np.sqrt(Nl)
    alphas = A + (K @ _center_cols(A)).mean(axis=0) / Nl
    return _make_model(m, Nl, alphas, "classical")


def fit(m: ExplicitFeatureMap, p: int, route: str = "primal") -> KpcaModel:
    try:
        solver = {"primal": fit_primal, "dual": fit_dual, "classical": fit_classical}[route]
    except KeyError:
        raise ValueError(f"unknown KPCA route {route!r}; expected one of {ROUTES}") from None
    return solver(m, p)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def _kernel_rows(model: KpcaModel, z):
    """Kernel vectors as rows (``m x N``) plus a flag for a single 1-d probe."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    KZ = model.featmap.kernel_matrix(z[None] if single else z)
    return KZ.T, single


def _finish(values, single, j, p):
    if j is not None:
        if not -p <= j < p:
            raise IndexError(f"component {j} out of range for {p} components")
        values = values[:, j]
    return values[0] if single else values


def project_primal(model: KpcaModel, z, j: int | None = None):
    """``k_z K^+ u - e^T u``."""
    kz, single = _kernel_rows(model, z)
    U = model.us
    e = spectral.mean_vector(model.n)
    vals = kz @ (model.featmap.k_pinv @ U) - e @ U
    return _finish(vals, single, j, model.p)


def project_dual(model: KpcaModel, z, j: int | None = None):
    """``k_z C alpha - e^T K C alpha``."""
    kz, single = _kernel_rows(model, z)
    Ca = _center_cols(model.alphas)
    e = spectral.mean_vector(model.n)
    vals = kz @ Ca - e @ (model.featmap.gram.values @ Ca)
    return _finish(vals, single, j, model.p)


def project_combined(model: KpcaModel, z, j: int | None = None):
    """``k_z (alpha - (N e^T alpha) e) - N lambda e^T alpha``; needs no centered Gram."""
    kz, single = _kernel_rows(model, z)
    N = model.n
    e = spectral.mean_vector(N)
    ea = model.e_dot_alpha
    vals = kz @ (model.alphas - np.outer(e, N * ea)) - N * model.lambdas * ea
    return _finish(vals, single, j, model.p)


def project_classical(model: KpcaModel, z, j: int | None = None):
    """``sum_n (alpha_n - mean(alpha)) k(z, x_n) - e^T K alpha + (e^T K e) sum(alpha)``."""
    kz, single = _kernel_rows(model, z)
    K = model.featmap.gram.values
    A = model.alphas
    e = spectral.mean_vector(model.n)
    eK = e @ K
    vals = kz @ (A - A.mean(axis=0)) - eK @ A + (eK @ e) * A.sum(axis=0)
    return _finish(vals, single, j, model.p)


PROJECTIONS = {
    "primal": project_primal,
    "dual": project_dual,
    "combined": project_combined,
    "classical": project_classical,
}


def project(model: KpcaModel, z, j: int | None = None, formula: str = "combined"):
    try:
        fn = PROJECTIONS[formula]
    except KeyError:
        raise ValueError(f"unknown projection formula {formula!r}") from None
    return fn(model, z, j)


def save(model: KpcaModel, path, featmap_path: str):
    write_archive(
        path,
        MAGIC,
        {
            "featmap": np.array(str(featmap_path)),
            "p": np.array(model.p),
            "lambdas": model.lambdas,
            "alphas": model.alphas,
            "route": np.array(model.route),
        },
        meta={"kernel": str(model.featmap.kernel), "dataset": model.featmap.gram.dataset_fingerprint,
              "route": model.route, "p": model.p},
    )


def load(path, featmap: ExplicitFeatureMap | None = None) -> KpcaModel:
    """Load a ``KPCA1`` archive; the referenced feature map is loaded unless given."""
    from pathlib import Path

    from . import featmap as featmap_mod

    data, _ = read_archive(path, MAGIC)
    if featmap is None:
        ref = Path(str(data["featmap"]))
        if not ref.is_absolute():
            ref = Path(path).parent / ref
        featmap = featmap_mod.load(ref)
    return _assemble(featmap, data["lambdas"], data["alphas"], str(data["route"]))
