"""Per-view kernels, the cross-view block affinity and its transition matrix.

The affinity couples views only through products of view kernels: block
``(a, b)`` of the ``nK x nK`` matrix is ``K_a @ K_b`` for ``a != b`` and the
diagonal blocks are zero, so the induced random walk always changes view.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._errors import DegeneracyError, DomainError, ParameterError, ShapeError

__all__ = [
    "ViewData",
    "MultiviewDataset",
    "KernelSpec",
    "BlockAffinity",
    "eval_kernel",
    "pairwise_sq_dists",
    "view_kernel_matrix",
    "view_kernels",
    "block_affinity",
    "transition_matrix",
    "load_views",
    "save_views",
]


@dataclass(frozen=True)
class ViewData:
    """One sensor's point cloud, rows are samples."""

    points: np.ndarray
    view_id: int = 1

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ShapeError(f"view points must be 2-D, got shape {pts.shape}")
        n, p = pts.shape
        if n < 2 or p < 1:
            raise ShapeError(f"a view needs n >= 2 samples and p >= 1 coordinates, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("view points contain non-finite entries")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class MultiviewDataset:
    """``K >= 2`` index-aligned views of the same ``n`` latent samples."""

    views: tuple

    def __post_init__(self):
        views = tuple(
            v if isinstance(v, ViewData) else ViewData(v, view_id=i + 1)
            for i, v in enumerate(self.views)
        )
        if len(views) < 2:
            raise ShapeError(f"need at least two views, got {len(views)}")
        sizes = {v.n for v in views}
        if len(sizes) != 1:
            raise ShapeError(f"views disagree on sample count: {sorted(sizes)}")
        object.__setattr__(self, "views", views)

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "MultiviewDataset":
        return cls(tuple(ViewData(a, view_id=i + 1) for i, a in enumerate(arrays)))

    @property
    def n(self) -> int:
        return self.views[0].n

    @property
    def num_views(self) -> int:
        return len(self.views)

    def __len__(self):
        return len(self.views)

    def __iter__(self):
        return iter(self.views)

    def __getitem__(self, idx):
        return self.views[idx]


@dataclass(frozen=True)
class KernelSpec:
    """Radial kernel profile ``K(t)`` applied to ``t = ||x - y||^2 / eps``.

    Parameters
    ----------
    kind : {"gaussian", "polynomial_decay"}
        ``exp(-t)`` or ``(1 + t) ** -beta``.
    beta : float
        Decay exponent for ``polynomial_decay``.
    bandwidths : tuple of float, optional
        One ``eps_l > 0`` per view. May be left empty when bandwidths are
        chosen later by :func:`grabmdm.bandwidth.select_bandwidths`.
    """

    kind: str = "gaussian"
    beta: float = 2.0
    bandwidths: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("gaussian", "polynomial_decay"):
            raise ParameterError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial_decay" and not self.beta > 0:
            raise ParameterError(f"polynomial_decay needs beta > 0, got {self.beta}")
        eps = tuple(float(e) for e in self.bandwidths)
        if any(not (e > 0 and np.isfinite(e)) for e in eps):
            raise ParameterError(f"bandwidths must be positive and finite, got {eps}")
        object.__setattr__(self, "bandwidths", eps)

    def with_bandwidths(self, bandwidths) -> "KernelSpec":
        return KernelSpec(self.kind, self.beta, tuple(bandwidths))

    def __call__(self, t):
        return eval_kernel(self, t)


@dataclass(frozen=True)
class BlockAffinity:
    """The ``nK x nK`` cross-view affinity together with its row sums."""

    matrix: np.ndarray
    degree: np.ndarray
    block_size: int
    num_views: int

    def block(self, a: int, b: int) -> np.ndarray:
        """Return block ``(a, b)`` using 0-based view indices."""
        n = self.block_size
        return self.matrix[a * n:(a + 1) * n, b * n:(b + 1) * n]


def eval_kernel(spec: KernelSpec | str, t):
    """Evaluate the kernel profile at ``t >= 0`` (scalar or array)."""
    if isinstance(spec, str):
        spec = KernelSpec(spec)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise DomainError("kernel argument must be nonnegative")
    if spec.kind == "gaussian":
        out = np.exp(-t_arr)
    else:
        out = (1.0 + t_arr) ** (-spec.beta)
    return float(out) if out.ndim == 0 else out


def _points(view) -> np.ndarray:
    if isinstance(view, ViewData):
        return view.points
    return ViewData(view).points


def pairwise_sq_dists(view) -> np.ndarray:
    """Squared Euclidean distance matrix with an exact zero diagonal."""
    x = _points(view)
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    # cancellation can leave tiny negatives and asymmetry
    d2 = 0.5 * (d2 + d2.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def view_kernel_matrix(view, spec: KernelSpec | str, epsilon: float | None = None,
                       sq_dists: np.ndarray | None = None) -> np.ndarray:
    """Kernel matrix ``K(||y_i - y_j||^2 / eps)`` of a single view.

    ``epsilon`` overrides ``spec.bandwidths``; when omitted, the kernel spec must
    carry exactly one bandwidth or ``view.view_id`` selects it. Precomputed
    squared distances can be passed to skip recomputation.
    """
    if isinstance(spec, str):
        spec = KernelSpec(spec)
    if epsilon is None:
        if not spec.bandwidths:
            raise ParameterError("no bandwidth given")
        if len(spec.bandwidths) == 1:
            epsilon = spec.bandwidths[0]
        else:
            vid = view.view_id if isinstance(view, ViewData) else 1
            epsilon = spec.bandwidths[vid - 1]
    if not (epsilon > 0 and np.isfinite(epsilon)):
        raise ParameterError(f"bandwidth must be positive, got {epsilon}")
    d2 = pairwise_sq_dists(view) if sq_dists is None else sq_dists
    return eval_kernel(spec, d2 / epsilon)


def view_kernels(data: MultiviewDataset, spec: KernelSpec | Sequence[KernelSpec],
                 epsilons: Sequence[float] | None = None,
                 sq_dists: Sequence[np.ndarray] | None = None) -> list:
    """Kernel matrix of every view; ``spec`` may be one kernel or one per view."""
    specs = list(spec) if isinstance(spec, (list, tuple)) else [spec] * data.num_views
    if len(specs) != data.num_views:
        raise ShapeError("need one kernel spec per view")
    if epsilons is None:
        epsilons = [s.bandwidths[0] if len(s.bandwidths) == 1 else s.bandwidths[i]
                    for i, s in enumerate(specs)]
    if len(epsilons) != data.num_views:
        raise ShapeError("need one bandwidth per view")
    out = []
    for i, (view, s, eps) in enumerate(zip(data.views, specs, epsilons)):
        d2 = None if sq_dists is None else sq_dists[i]
        out.append(view_kernel_matrix(view, s, eps, sq_dists=d2))
    return out


def block_affinity(kernels: Sequence[np.ndarray], include_diagonal: bool = False) -> BlockAffinity:
    """Assemble the block affinity from per-view kernel matrices.

    Off-diagonal block ``(a, b)`` is ``kernels[a] @ kernels[b]``. Only the
    upper blocks are multiplied; lower blocks are their transposes, which is
    exact for symmetric view kernels and keeps the affinity exactly
    symmetric. ``include_diagonal`` puts ``K_a @ K_a`` on the diagonal
    blocks instead of zeros (the lazy, within-view walk); it is a
    diagnostic only.
    """
    mats = [np.asarray(k, dtype=float) for k in kernels]
    n_views = len(mats)
    if n_views < 2:
        raise ShapeError(f"need at least two kernels, got {n_views}")
    n = mats[0].shape[0]
    for k in mats:
        if k.shape != (n, n):
            raise ShapeError(f"every kernel must be {n}x{n}, got {k.shape}")
    big = np.zeros((n * n_views, n * n_views))
    for a in range(n_views):
        for b in range(a + 1, n_views):
            prod = mats[a] @ mats[b]
            big[a * n:(a + 1) * n, b * n:(b + 1) * n] = prod
            big[b * n:(b + 1) * n, a * n:(a + 1) * n] = prod.T
        if include_diagonal:
            big[a * n:(a + 1) * n, a * n:(a + 1) * n] = mats[a] @ mats[a]
    degree = big.sum(axis=1)
    if not np.all(degree > 0):
        bad = np.flatnonzero(~(degree > 0))
        raise DegeneracyError(f"zero degree in rows {bad[:10].tolist()}")
    return BlockAffinity(big, degree, n, n_views)


def transition_matrix(aff: BlockAffinity) -> np.ndarray:
    """Row-stochastic ``D^{-1} K``."""
    if not np.all(aff.degree > 0):
        raise DegeneracyError("degree vector has non-positive entries")
    return aff.matrix / aff.degree[:, None]


# ---------------------------------------------------------------- file I/O

def _read_csv_matrix(path: Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError:
        # tolerate a single header row
        return np.array([[float(c) for c in r] for r in rows[1:]])


def load_views(paths) -> MultiviewDataset:
    """Load views from CSV files (one per view) or one ``.json`` / ``.npz`` container.

    A JSON container maps view names to nested lists; views are taken in
    sorted-name order unless the object has a ``"views"`` list.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    paths = [Path(p) for p in paths]
    if len(paths) == 1 and paths[0].suffix in (".json", ".npz"):
        path = paths[0]
        if path.suffix == ".npz":
            with np.load(path) as z:
                arrays = [z[k] for k in sorted(z.files)]
        else:
            obj = json.loads(path.read_text(encoding="utf-8"))
            if isinstance(obj, dict) and "views" in obj and isinstance(obj["views"], list):
                arrays = [np.asarray(v, dtype=float) for v in obj["views"]]
            else:
                arrays = [np.asarray(obj[k], dtype=float) for k in sorted(obj)]
        return MultiviewDataset.from_arrays(arrays)
    return MultiviewDataset.from_arrays([_read_csv_matrix(p) for p in paths])


def save_views(data: MultiviewDataset, directory, prefix: str = "view") -> list:
    """Write each view to ``<directory>/<prefix><l>.csv``; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for i, v in enumerate(data.views, start=1):
        path = directory / f"{prefix}{i}.csv"
        np.savetxt(path, v.points, delimiter=",", fmt="%.17g")
        out.append(path)
    return out
