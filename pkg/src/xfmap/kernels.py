"""Kernel functions, kernel vectors and Gram matrices."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import DimensionError, KernelError

KINDS = ("linear", "polynomial", "gaussian", "laplacian", "mnist_k1", "mnist_k2")

_CODES = {
    "linear": _accel.LINEAR,
    "polynomial": _accel.POLYNOMIAL,
    "gaussian": _accel.GAUSSIAN,
    "laplacian": _accel.LAPLACIAN,
    "mnist_k1": _accel.MNIST_K1,
    "mnist_k2": _accel.MNIST_K2,
}

# parameter names accepted per kind, with defaults (None = required)
_PARAMS = {
    "linear": {},
    "polynomial": {"scale": 1.0, "offset": 0.0, "degree": None},
    "gaussian": {"sigma": None},
    "laplacian": {"gamma": None},
    "mnist_k1": {},
    "mnist_k2": {},
}

MNIST_DIM = 784


def _fmt(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


@dataclass(frozen=True)
class KernelSpec:
    """Closed description of a kernel function.

    ``params`` is a sorted tuple of ``(name, value)`` pairs; use the
    constructors (:meth:`gaussian`, :meth:`polynomial`, ...) or
    :meth:`parse` rather than building it by hand.

    Polynomial: ``(scale * <x, z> + offset) ** degree``.
    Laplacian: ``exp(-gamma * ||x - z||_1)``.
    mnist_k1: ``(<x, z> / 784) ** 9`` on pixels in [0, 1].
    mnist_k2: ``((<2x-1, 2z-1> / 784 + 1) / 2) ** 9`` on pixels in [0, 1].
    """

    kind: str
    params: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in _PARAMS:
            raise KernelError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        allowed = _PARAMS[self.kind]
        given = dict(self.params)
        unknown = set(given) - set(allowed)
        if unknown:
            raise KernelError(f"{self.kind} kernel takes no parameter(s) {sorted(unknown)}")
        full = {}
        for name, default in allowed.items():
            if name in given:
                full[name] = float(given[name])
            elif default is None:
                raise KernelError(f"{self.kind} kernel requires parameter {name!r}")
            else:
                full[name] = float(default)
        for name, value in full.items():
            if not np.isfinite(value):
                raise KernelError(f"{name} must be finite, got {value}")
        if self.kind == "gaussian" and full["sigma"] <= 0:
            raise KernelError(f"sigma must be > 0, got {full['sigma']}")
        if self.kind == "laplacian" and full["gamma"] <= 0:
            raise KernelError(f"gamma must be > 0, got {full['gamma']}")
        if self.kind == "polynomial":
            if full["scale"] <= 0:
                raise KernelError(f"scale must be > 0, got {full['scale']}")
            if full["offset"] < 0:
                raise KernelError(f"offset must be >= 0, got {full['offset']}")
            d = full["degree"]
            if d < 1 or not d.is_integer():
                raise KernelError(f"degree must be a positive integer, got {d}")
        object.__setattr__(self, "params", tuple(sorted(full.items())))

    # -- constructors ------------------------------------------------------

    @classmethod
    def linear(cls) -> KernelSpec:
        return cls("linear")

    @classmethod
    def polynomial(cls, degree: int, scale: float = 1.0, offset: float = 0.0) -> KernelSpec:
        return cls("polynomial", (("degree", degree), ("scale", scale), ("offset", offset)))

    @classmethod
    def gaussian(cls, sigma: float) -> KernelSpec:
        return cls("gaussian", (("sigma", sigma),))

    @classmethod
    def laplacian(cls, gamma: float) -> KernelSpec:
        return cls("laplacian", (("gamma", gamma),))

    @classmethod
    def mnist_k1(cls) -> KernelSpec:
        return cls("mnist_k1")

    @classmethod
    def mnist_k2(cls) -> KernelSpec:
        return cls("mnist_k2")

    @classmethod
    def parse(cls, text: str) -> KernelSpec:
        """Parse the key-value form, e.g. ``"kind=gaussian sigma=1.0"``.

        A bare kind name (``"mnist_k2"``) is accepted too.
        """
        tokens = text.replace(",", " ").split()
        if not tokens:
            raise KernelError("empty kernel spec")
        kind = None
        params = []
        for tok in tokens:
            if "=" not in tok:
                if kind is None and tok in _PARAMS:
                    kind = tok
                    continue
                raise KernelError(f"malformed kernel spec token {tok!r}")
            key, _, value = tok.partition("=")
            if key == "kind":
                kind = value
                continue
            try:
                params.append((key, float(value)))
            except ValueError:
                raise KernelError(f"non-numeric value for {key}: {value!r}") from None
        if kind is None:
            raise KernelError(f"kernel spec {text!r} has no kind")
        return cls(kind, tuple(params))

    def __str__(self) -> str:
        parts = [f"kind={self.kind}"]
        parts += [f"{k}={_fmt(v)}" for k, v in self.params]
        return " ".join(parts)

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    def _param_array(self) -> np.ndarray:
        p = dict(self.params)
        if self.kind == "polynomial":
            return np.array([p["scale"], p["offset"], p["degree"]])
        if self.kind == "gaussian":
            return np.array([p["sigma"], 0.0, 0.0])
        if self.kind == "laplacian":
            return np.array([p["gamma"], 0.0, 0.0])
        return np.zeros(3)


def fingerprint(X) -> str:
    """Content hash of a data matrix (shape and float64 bytes)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    h = hashlib.sha256()
    h.update(repr(X.shape).encode())
    h.update(X.tobytes())
    return "sha256:" + h.hexdigest()


def _as_matrix(X, name="data") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise KernelError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(X)


def _check_domain(kernel: KernelSpec, *arrays):
    if kernel.kind in ("mnist_k1", "mnist_k2"):
        for X in arrays:
            if X.shape[-1] != MNIST_DIM:
                raise DimensionError(
                    f"{kernel.kind} needs {MNIST_DIM}-dimensional inputs, got {X.shape[-1]}"
                )
            if X.size and (X.min() < 0.0 or X.max() > 1.0):
                raise KernelError(
                    f"{kernel.kind} needs pixel values in [0, 1], got range "
                    f"[{X.min()}, {X.max()}]; scale raw pixels by 1/255 first"
                )


def _check_same_dim(A, B):
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")


def cross_gram(kernel: KernelSpec, A, B) -> np.ndarray:
    """Matrix with entry ``(i, j) = k(A_i, B_j)``."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    _check_same_dim(A, B)
    _check_domain(kernel, A, B)
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    return _accel.cross(kernel.code, kernel._param_array(), A, B)


def eval_kernel(kernel: KernelSpec, x, z) -> float:
    """Evaluate ``k(x, z)`` for two vectors."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.ndim != 1 or z.ndim != 1:
        raise DimensionError("eval_kernel takes two 1-d vectors")
    return float(cross_gram(kernel, x, z)[0, 0])


def kernel_vector(kernel: KernelSpec, train, z) -> np.ndarray:
    """``[k(x_1, z), ..., k(x_N, z)]`` in training order."""
    train = _as_matrix(train, "train")
    if train.shape[0] == 0:
        raise DimensionError("training set is empty")
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise DimensionError(f"z must be a vector, got shape {z.shape}")
    return cross_gram(kernel, train, z)[:, 0]


@dataclass(frozen=True, eq=False)
class GramMatrix:
    values: np.ndarray
    kernel: KernelSpec
    dataset_fingerprint: str

    @property
    def n(self) -> int:
        return self.values.shape[0]


def gram(kernel: KernelSpec, train) -> GramMatrix:
    """Symmetric Gram matrix of ``train`` (upper triangle computed, then mirrored)."""
    train = _as_matrix(train, "train")
    if train.shape[0] == 0:
        raise DimensionError("training set is empty")
    _check_domain(kernel, train)
    values = _accel.gram(kernel.code, kernel._param_array(), train)
    values.flags.writeable = False
    return GramMatrix(values, kernel, fingerprint(train))


def feature_distance(kernel: KernelSpec, x, z) -> float:
    """Squared feature-space distance ``k(x,x) + k(z,z) - 2 k(x,z)``, clamped at 0."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {z.shape}")
    d = eval_kernel(kernel, x, x) + eval_kernel(kernel, z, z) - 2.0 * eval_kernel(kernel, x, z)
    return max(0.0, d)


def feature_distances(kernel: KernelSpec, A, B=None) -> np.ndarray:
    """Pairwise squared feature-space distances between rows of ``A`` and ``B``."""
    A = _as_matrix(A, "A")
    B = A if B is None else _as_matrix(B, "B")
    _check_same_dim(A, B)
    _check_domain(kernel, A, B)
    params = kernel._param_array()
    da = np.array([_accel.cross(kernel.code, params, a[None], a[None])[0, 0] for a in A])
    db = np.array([_accel.cross(kernel.code, params, b[None], b[None])[0, 0] for b in B])
    D = da[:, None] + db[None, :] - 2.0 * cross_gram(kernel, A, B)
    return np.maximum(D, 0.0)
