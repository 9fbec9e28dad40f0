"""Two-stage bandwidth selection and the eigen-ratio tuning rules.

Stage one picks a per-view scale ``h_l``: the ``omega_l`` quantile of the
off-diagonal squared pairwise distances of view ``l``. Stage two scans a
grid of global factors ``c``, builds the transition matrix for each
``eps_l = c h_l`` and keeps the ``c`` whose spectrum has the most grid
neighbours within spectral distance ``delta`` (the stability plateau).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from ._errors import DegeneracyError, GrabMDMError, ParameterError, ShapeError
from .embedding import TransitionSpectrum
from .kernels import (
    KernelSpec,
    MultiviewDataset,
    ViewData,
    block_affinity,
    eval_kernel,
    pairwise_sq_dists,
)

__all__ = [
    "BandwidthReport",
    "TuningReport",
    "ecdf_quantile",
    "ecdf_quantile_scale",
    "spectral_distance",
    "spectral_distance_matrix",
    "transition_eigenvalues",
    "select_global_scale",
    "select_bandwidths",
    "default_c_grid",
    "admissible_c",
    "parse_c_grid",
    "auto_embedding_dim",
    "auto_percentile",
    "eigen_ratio_threshold",
]

DEFAULT_GRID = (1e-3, 0.5, 20)
DELTA_FRACTION = 0.05
MIN_KERNEL_MASS = 1.0


def default_c_grid(lo: float = DEFAULT_GRID[0], hi: float = DEFAULT_GRID[1],
                   num: int = DEFAULT_GRID[2]) -> np.ndarray:
    """Log-spaced global-scale candidates on ``[lo, hi]``."""
    if not (0 < lo <= hi) or num < 1:
        raise ParameterError(f"invalid grid ({lo}, {hi}, {num})")
    if num == 1:
        return np.array([float(lo)])
    return np.geomspace(lo, hi, int(num))


def admissible_c(c_grid, n: int, kernel: KernelSpec | str = "gaussian",
                 min_mass: float = MIN_KERNEL_MASS) -> np.ndarray:
    """Mask of grid values whose kernel still couples neighbours.

    With ``eps = c h`` a pair at the reference squared distance ``h`` gets
    weight ``K(1 / c)``. When ``n K(1 / c) < min_mass`` the kernel matrix is
    numerically the identity, every transition eigenvalue sits at 1 and the
    spectra of all such ``c`` coincide, forming a spurious plateau.
    """
    c = np.asarray(c_grid, dtype=float)
    return n * eval_kernel(_kernel_spec(kernel), 1.0 / c) >= min_mass


def parse_c_grid(text: str) -> np.ndarray:
    """Parse ``"lo:hi:N"`` (log-spaced) or a comma-separated list."""
    if ":" in text:
        lo, hi, num = text.split(":")
        return default_c_grid(float(lo), float(hi), int(num))
    return np.array(sorted(float(x) for x in text.split(",") if x.strip()))


@dataclass
class BandwidthReport:
    """Everything the two-stage selection computed, JSON-serializable."""

    h: np.ndarray
    omega: np.ndarray
    c_grid: np.ndarray
    spectral_dist: np.ndarray
    S_sizes: np.ndarray
    delta: float
    c_star: float
    epsilon: np.ndarray
    alpha: int = 0
    top_n: int = 0
    kernel: str = "gaussian"
    c_excluded: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        out = {}
        for key, val in asdict(self).items():
            out[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return out

    def to_json(self, path=None, **kwargs) -> str:
        text = json.dumps(self.to_dict(), **kwargs)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_dict(cls, obj: dict) -> "BandwidthReport":
        arrays = {"h", "omega", "c_grid", "spectral_dist", "S_sizes", "epsilon", "c_excluded"}
        kw = {k: (np.asarray(v) if k in arrays else v) for k, v in obj.items()}
        return cls(**kw)


@dataclass
class TuningReport:
    """Diagnostics of the eigen-ratio elbow rules."""

    m_selected: int
    eigen_ratios: np.ndarray
    e_threshold: float
    omega_selected: np.ndarray = field(default_factory=lambda: np.zeros(0))
    k_counts: dict = field(default_factory=dict)
    fallback: bool = False


def _offdiag_upper(d2: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(d2.shape[0], k=1)
    return d2[iu]


def ecdf_quantile(values, omega: float) -> float:
    """Smallest observed value ``x`` with ``ECDF(x) >= omega``."""
    if not 0 < omega < 1:
        raise ParameterError(f"omega must lie in (0, 1), got {omega}")
    return float(np.quantile(np.asarray(values, dtype=float), omega, method="inverted_cdf"))


def ecdf_quantile_scale(view, omega: float, sq_dists: np.ndarray | None = None) -> float:
    """The ``omega`` quantile of the off-diagonal squared pairwise distances.

    Uses the inverse-ECDF rule: the smallest observed value ``x`` with
    ``ECDF(x) >= omega``. Each unordered pair is counted once, which gives
    the same quantile as counting ordered pairs.
    """
    if not 0 < omega < 1:
        raise ParameterError(f"omega must lie in (0, 1), got {omega}")
    d2 = pairwise_sq_dists(view) if sq_dists is None else sq_dists
    vals = _offdiag_upper(d2)
    if vals.size == 0 or not np.any(vals > 0):
        raise DegeneracyError("all pairwise distances vanish; bandwidth would be zero")
    h = ecdf_quantile(vals, omega)
    if h <= 0:
        raise DegeneracyError(f"the {omega} quantile of squared distances is zero")
    return h


def spectral_distance(eigs_i, eigs_j, top_n: int) -> float:
    """Sum of squared differences of the ``top_n`` leading eigenvalues."""
    a = np.asarray(eigs_i, dtype=float)
    b = np.asarray(eigs_j, dtype=float)
    if top_n < 1 or a.shape[0] < top_n or b.shape[0] < top_n:
        raise ShapeError(f"need at least top_n={top_n} eigenvalues, got {a.shape[0]} and {b.shape[0]}")
    diff = a[:top_n] - b[:top_n]
    return float(diff @ diff)


def spectral_distance_matrix(spectra: np.ndarray, top_n: int) -> np.ndarray:
    """Pairwise spectral distances between rows of ``spectra`` (descending rows)."""
    top = np.asarray(spectra, dtype=float)[:, :top_n]
    diff = top[:, None, :] - top[None, :, :]
    d = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d, 0.0)
    return d


def transition_eigenvalues(kernels: Sequence[np.ndarray]) -> np.ndarray:
    """Descending eigenvalues of the transition matrix built from view kernels."""
    aff = block_affinity(kernels)
    s = np.sqrt(aff.degree)
    S = aff.matrix / s[:, None] / s[None, :]
    S = 0.5 * (S + S.T)
    return scipy.linalg.eigh(S, eigvals_only=True, check_finite=False)[::-1]


def _kernel_spec(kernel) -> KernelSpec:
    if isinstance(kernel, KernelSpec):
        return kernel
    return KernelSpec(kernel)


def select_global_scale(data: MultiviewDataset, h: Sequence[float], c_grid: Sequence[float],
                        delta: float | None = None, kernel: KernelSpec | str = "gaussian",
                        top_n: int | None = None, omega=None,
                        sq_dists: Sequence[np.ndarray] | None = None):
    """Grid search for the global factor ``c`` on the spectral stability plateau.

    For each ``c_i`` the transition matrix with ``eps_l = c_i h_l`` is built
    and its eigenvalues are compared across the grid. ``S(i)`` collects the
    other grid points within spectral distance ``delta`` and the largest
    index among the maximizers of ``|S(i)|`` is selected.

    Parameters
    ----------
    delta : float, optional
        Stability threshold. Defaults to ``0.05`` times the median
        off-diagonal spectral distance.
    top_n : int, optional
        Number of leading eigenvalues compared; defaults to ``n``.

    Returns
    -------
    c_star : float
    report : BandwidthReport
    """
    c_grid = np.asarray(c_grid, dtype=float)
    if c_grid.ndim != 1 or c_grid.size < 1 or np.any(c_grid <= 0) or np.any(np.diff(c_grid) <= 0):
        raise ParameterError("c_grid must be strictly ascending and positive")
    if delta is not None and not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    spec = _kernel_spec(kernel)
    h = np.asarray(h, dtype=float)
    if h.shape != (data.num_views,) or np.any(h <= 0):
        raise ParameterError("need one positive view scale per view")
    n = data.n
    top_n = n if top_n is None else int(top_n)
    if sq_dists is None:
        sq_dists = [pairwise_sq_dists(v) for v in data.views]

    spectra = []
    for c in c_grid:
        try:
            kernels = [eval_kernel(spec, d2 / (c * hl)) for d2, hl in zip(sq_dists, h)]
            spectra.append(transition_eigenvalues(kernels))
        except GrabMDMError as exc:
            raise type(exc)(f"{exc} (at c={c:g})") from exc
    spectra = np.array(spectra)
    dist = spectral_distance_matrix(spectra, top_n)
    N = c_grid.size
    if delta is None:
        off = dist[~np.eye(N, dtype=bool)]
        med = float(np.median(off)) if off.size else 0.0
        delta = DELTA_FRACTION * med if med > 0 else 1.0
    close = (dist < delta) & ~np.eye(N, dtype=bool)
    sizes = close.sum(axis=1)
    alpha = int(np.flatnonzero(sizes == sizes.max())[-1])
    c_star = float(c_grid[alpha])
    omega_arr = np.full(data.num_views, np.nan) if omega is None else np.asarray(omega, dtype=float)
    report = BandwidthReport(
        h=h, omega=omega_arr, c_grid=c_grid, spectral_dist=dist, S_sizes=sizes,
        delta=float(delta), c_star=c_star, epsilon=c_star * h, alpha=alpha,
        top_n=top_n, kernel=spec.kind,
    )
    return c_star, report


def select_bandwidths(data: MultiviewDataset, omega=0.5, c_grid=None, delta: float | None = None,
                      kernel: KernelSpec | str = "gaussian", top_n: int | None = None,
                      omega_candidates: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 0.9),
                      min_kernel_mass: float | None = MIN_KERNEL_MASS) -> BandwidthReport:
    """Full two-stage selection; returns the report with ``epsilon = c_star * h``.

    Parameters
    ----------
    omega
        A scalar, one value per view, or ``"auto"`` to run
        :func:`auto_percentile` over ``omega_candidates`` for each view.
    c_grid
        Candidate global factors; defaults to 20 log-spaced values on
        ``[1e-3, 0.5]``.
    min_kernel_mass
        Grid values failing :func:`admissible_c` are dropped before the
        plateau search and listed in ``report.c_excluded``. ``None`` keeps
        the whole grid. If nothing survives, the largest value is kept.
    """
    K = data.num_views
    spec = _kernel_spec(kernel)
    sq = [pairwise_sq_dists(v) for v in data.views]
    if isinstance(omega, str):
        if omega != "auto":
            raise ParameterError(f"omega must be numeric or 'auto', got {omega!r}")
        omegas = np.array([auto_percentile(v, omega_candidates, spec, sq_dists=d2)[0]
                           for v, d2 in zip(data.views, sq)])
    else:
        omegas = np.broadcast_to(np.asarray(omega, dtype=float), (K,)).copy()
    h = np.array([ecdf_quantile_scale(v, w, sq_dists=d2) for v, w, d2 in zip(data.views, omegas, sq)])
    grid = default_c_grid() if c_grid is None else np.asarray(c_grid, dtype=float)
    excluded = np.zeros(0)
    if min_kernel_mass is not None:
        keep = admissible_c(grid, data.n, spec, min_kernel_mass)
        if not keep.any():
            warnings.warn("no admissible grid value; keeping the largest", RuntimeWarning, stacklevel=2)
            keep[-1] = True
        grid, excluded = grid[keep], grid[~keep]
    _, report = select_global_scale(data, h, grid, delta, spec, top_n, omega=omegas, sq_dists=sq)
    report.c_excluded = excluded
    return report


def eigen_ratio_threshold(ratios: np.ndarray) -> float:
    """Half-gap threshold ``e = (max ratio - 1) / 2``."""
    return 0.5 * (float(np.max(ratios)) - 1.0)


def _positive_ratios(vals: np.ndarray, first: int, last: int) -> np.ndarray:
    """``vals[i] / vals[i+1]`` for 1-based ``i`` in ``[first, last]`` while both are positive."""
    out = []
    for i in range(first, last + 1):
        if i >= vals.size:
            break
        a, b = vals[i - 1], vals[i]
        if not (a > 0 and b > 0):
            break
        out.append(a / b)
    return np.array(out)


def auto_embedding_dim(spec: TransitionSpectrum | np.ndarray):
    """Pick the embedding dimension at the first dominant eigen-ratio gap.

    Ratios ``r_i = eta_i / eta_{i+1}`` are formed for
    ``2 <= i <= floor(sqrt(nK))`` over positive eigenvalues. With
    ``e = (max r - 1) / 2`` the first ``i`` having ``r_i >= 1 + e`` fixes
    ``m = i - 1``. With fewer than three usable eigenvalues (two ratios)
    ``m = 1`` is returned and ``report.fallback`` is set.

    Returns
    -------
    m : int
    report : TuningReport
    """
    vals = spec.eigenvalues if isinstance(spec, TransitionSpectrum) else np.asarray(spec, dtype=float)
    N = vals.size
    upper = int(np.floor(np.sqrt(N)))
    ratios = _positive_ratios(vals, 2, upper)
    if ratios.size < 2:
        warnings.warn("too few positive eigenvalues for the eigen-ratio rule; using m = 1",
                      RuntimeWarning, stacklevel=2)
        return 1, TuningReport(1, ratios, float("nan"), fallback=True)
    e = eigen_ratio_threshold(ratios)
    hits = np.flatnonzero(ratios >= 1.0 + e)
    # ratios[0] corresponds to i = 2
    i_star = int(hits[0]) + 2 if hits.size else int(np.argmax(ratios)) + 2
    m = min(max(i_star - 1, 1), N - 1)
    return m, TuningReport(m, ratios, e)


def _signal_count(eigs: np.ndarray, s: float | None):
    n = eigs.size
    upper = int(np.floor(np.sqrt(n)))
    ratios = _positive_ratios(eigs, 1, upper)
    if ratios.size == 0:
        return 0, ratios
    s = eigen_ratio_threshold(ratios) if s is None else s
    hits = np.flatnonzero(ratios >= 1.0 + s)
    return (int(hits[-1]) + 1 if hits.size else 0), ratios


def auto_percentile(view, candidates: Sequence[float], kernel: KernelSpec | str = "gaussian",
                    s_threshold: float | None = None, sq_dists: np.ndarray | None = None):
    """Choose the percentile whose single-view kernel shows the most separated spikes.

    For each candidate ``omega`` the view kernel with bandwidth ``h(omega)``
    is eigendecomposed and ``k(omega)``, the largest ``k <= sqrt(n)`` with
    ``lambda_k / lambda_{k+1} >= 1 + s``, is recorded. The largest
    candidate among the maximizers of ``k`` wins.

    Returns
    -------
    omega : float
    counts : dict
        ``{omega: k(omega)}``.
    """
    cands = [float(w) for w in candidates]
    if not cands:
        raise ParameterError("need at least one candidate percentile")
    if any(not 0 < w < 1 for w in cands):
        raise ParameterError("candidate percentiles must lie in (0, 1)")
    spec = _kernel_spec(kernel)
    d2 = pairwise_sq_dists(view) if sq_dists is None else sq_dists
    counts = {}
    for w in cands:
        h = ecdf_quantile_scale(view, w, sq_dists=d2)
        Kmat = eval_kernel(spec, d2 / h)
        eigs = scipy.linalg.eigh(Kmat, eigvals_only=True, check_finite=False)[::-1]
        counts[w], _ = _signal_count(eigs, s_threshold)
    best = max(counts.values())
    chosen = max(w for w in cands if counts[w] == best)
    return chosen, counts
