"""Exact finite-dimensional explicit feature maps for kernel functions."""

__version__ = "0.1.0"

from .kernels import KernelSpec, cross_gram, eval_kernel, feature_distance, gram, kernel_vector  # noqa: E402
from .featmap import ExplicitFeatureMap, fit as fit_map  # noqa: E402

__all__ = [
    "KernelSpec",
    "ExplicitFeatureMap",
    "cross_gram",
    "eval_kernel",
    "feature_distance",
    "fit_map",
    "gram",
    "kernel_vector",
]
