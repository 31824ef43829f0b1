"""Symmetric eigendecomposition and spectral matrix functions.

Inverses are spectral pseudo-inverses: eigenvalues at or below the cutoff
are treated as exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, NotPSDError

REL_CUTOFF = 1e-10
REL_NEGATIVE_TOL = 1e-8


def default_cutoff(lambda_max: float, rel: float = REL_CUTOFF) -> float:
    return rel * max(1.0, lambda_max)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues descending.

    Each eigenvector column has its largest-magnitude entry positive (lowest
    index wins ties), which makes the decomposition deterministic for simple
    spectra.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    cutoff: float

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0]) if self.n else 0.0

    @property
    def effective_rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > self.cutoff))

    @property
    def negative_tolerance(self) -> float:
        return REL_NEGATIVE_TOL * max(1.0, self.lambda_max)

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def _fix_signs(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eigen(S, cutoff: float | None = None, rel_cutoff: float = REL_CUTOFF) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix.

    The input is symmetrized as ``(S + S.T) / 2`` first. ``cutoff`` is the
    absolute pseudo-inversion threshold; by default it is
    ``rel_cutoff * max(1, lambda_max)``.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix has non-finite entries")
    if S.shape[0] == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((0, 0)), 0.0 if cutoff is None else cutoff)
    S = 0.5 * (S + S.T)
    try:
        w, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"symmetric eigensolver did not converge: {exc}") from exc
    w = w[::-1].copy()
    V = _fix_signs(np.ascontiguousarray(V[:, ::-1]))
    if cutoff is None:
        cutoff = default_cutoff(float(w[0]), rel_cutoff)
    w.flags.writeable = False
    V.flags.writeable = False
    return SpectralDecomposition(w, V, float(cutoff))


def _check_psd(d: SpectralDecomposition, clip_negative: bool):
    # clipping tolerates round-off negatives down to -1e-8 * max(1, lambda_max);
    # without it only negatives that are already below the cutoff are ignored
    if not d.n:
        return
    lam_min = float(d.eigenvalues[-1])
    tol = d.negative_tolerance if clip_negative else d.cutoff
    if lam_min < -tol:
        raise NotPSDError(
            f"matrix not PSD: eigenvalue {lam_min:.6g} is below -{tol:.3g}"
            + ("" if clip_negative else " (pass clip_negative=True to clip round-off negatives)")
        )


def spectral_apply(d: SpectralDecomposition, f: str, clip_negative: bool = False) -> np.ndarray:
    """Return ``V f(L) V^T`` with ``f`` in ``{"sqrt", "inv_sqrt", "inv"}``.

    ``f`` is applied only to eigenvalues above the cutoff; the rest map to 0.
    """
    _check_psd(d, clip_negative)
    lam = d.eigenvalues
    keep = lam > d.cutoff
    fl = np.zeros_like(lam)
    if f == "sqrt":
        fl[keep] = np.sqrt(lam[keep])
    elif f == "inv_sqrt":
        fl[keep] = 1.0 / np.sqrt(lam[keep])
    elif f == "inv":
        fl[keep] = 1.0 / lam[keep]
    else:
        raise ValueError(f"unknown spectral function {f!r}")
    V = d.eigenvectors[:, keep]
    out = (V * fl[keep]) @ V.T
    return 0.5 * (out + out.T)


def range_projector(d: SpectralDecomposition) -> np.ndarray:
    """Orthogonal projector onto the span of eigenvectors above the cutoff."""
    V = d.eigenvectors[:, d.eigenvalues > d.cutoff]
    return V @ V.T


@dataclass(frozen=True, eq=False)
class CenteringOperator:
    """``C = I - N e e^T`` where ``e`` has every entry equal to ``1/N``."""

    n: int
    matrix: np.ndarray


def mean_vector(n: int) -> np.ndarray:
    """The vector ``e`` with all entries ``1/n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.full(n, 1.0 / n)


def unit_vector(n: int, i: int) -> np.ndarray:
    out = np.zeros(n)
    out[i] = 1.0
    return out


def centering(n: int) -> CenteringOperator:
    if n < 1:
        raise ValueError("centering needs n >= 1")
    e = mean_vector(n)
    C = np.eye(n) - n * np.outer(e, e)
    C.flags.writeable = False
    return CenteringOperator(n, C)
