"""Haar-wavelet sketching: keep the highest-energy orthonormal Haar coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._errors import ParameterError
from .kernels import MultiviewDataset, ViewData

__all__ = ["SketchSpec", "haar_matrix", "sketch_view", "sketch_dataset", "DEFAULT_SKETCH_DIM"]

DEFAULT_SKETCH_DIM = 12


@dataclass(frozen=True)
class SketchSpec:
    target_dim: int = DEFAULT_SKETCH_DIM
    transform: str = "haar"

    def __post_init__(self):
        if self.transform != "haar":
            raise ParameterError(f"unsupported transform {self.transform!r}")
        if int(self.target_dim) < 1:
            raise ParameterError(f"target_dim must be >= 1, got {self.target_dim}")


def _next_pow2(p: int) -> int:
    return 1 << max(0, int(p - 1).bit_length())


def haar_matrix(p: int) -> np.ndarray:
    """Orthonormal Haar matrix of size ``2**ceil(log2 p)``, coarse rows first.

    Built by the recursion ``H_2m = [H_m kron (1, 1); I_m kron (1, -1)] / sqrt(2)``.
    """
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    size = _next_pow2(p)
    H = np.ones((1, 1))
    while H.shape[0] < size:
        m = H.shape[0]
        H = np.vstack([np.kron(H, [1.0, 1.0]), np.kron(np.eye(m), [1.0, -1.0])]) / np.sqrt(2.0)
    return H


def sketch_view(view, spec: SketchSpec | int, return_index: bool = False):
    """Project a view onto its ``target_dim`` highest-energy Haar coefficients.

    Rows are zero-padded to the next power of two, transformed, and the
    coefficient positions are ranked by ``sum_i coef_i**2`` over samples
    (ties to the lower position). The kept coefficients are returned in
    ascending position order.
    """
    if not isinstance(spec, SketchSpec):
        spec = SketchSpec(int(spec))
    v = view if isinstance(view, ViewData) else ViewData(view)
    X = v.points
    n, p = X.shape
    H = haar_matrix(p)
    size = H.shape[0]
    if spec.target_dim > size:
        raise ParameterError(f"target_dim {spec.target_dim} exceeds padded dimension {size}")
    padded = np.zeros((n, size))
    padded[:, :p] = X
    coef = padded @ H.T
    energy = np.einsum("ij,ij->j", coef, coef)
    keep = np.sort(np.argsort(-energy, kind="stable")[:spec.target_dim])
    out = ViewData(coef[:, keep], view_id=v.view_id)
    return (out, keep) if return_index else out


def sketch_dataset(data: MultiviewDataset, dims) -> MultiviewDataset:
    """Sketch every view; ``dims`` is one target dimension or one per view."""
    dims = np.broadcast_to(np.asarray(dims, dtype=int), (data.num_views,))
    return MultiviewDataset(tuple(sketch_view(v, int(s)) for v, s in zip(data.views, dims)))
