"""Spectral decomposition of the transition matrix and the diffusion embeddings."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from ._errors import DegeneracyError, NumericError, ParameterError, ShapeError
from .kernels import BlockAffinity

__all__ = [
    "TransitionSpectrum",
    "EmbeddingSet",
    "decompose",
    "build_Q",
    "embed_view",
    "embed_joint",
    "embed_averaged",
    "embedding_matrix",
    "diffusion_distance",
    "save_embedding_csv",
]


@dataclass(frozen=True)
class TransitionSpectrum:
    """Eigenvalues (descending) and unit-norm right eigenvectors of ``A``.

    ``degree`` is kept so that eigenvectors can be re-weighted to the
    ``D``-orthonormal basis in which diffusion distances are isometric to
    distances between rows of ``A``.
    """

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    n: int
    K: int
    degree: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    def residuals(self, A: np.ndarray) -> np.ndarray:
        """``||A u_i - eta_i u_i||`` for every pair."""
        U = self.right_eigenvectors
        return np.linalg.norm(A @ U - U * self.eigenvalues, axis=0)


@dataclass(frozen=True)
class EmbeddingSet:
    """``Q = diag(eta_2^t..eta_{m+1}^t) [u_2..u_{m+1}]^T`` plus bookkeeping."""

    Q: np.ndarray
    m: int
    t: float
    n: int
    K: int


def _fix_signs(U: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def decompose(A: np.ndarray | BlockAffinity, D: np.ndarray | None = None, *,
              n: int | None = None, K: int | None = None) -> TransitionSpectrum:
    """Eigendecompose ``A = D^{-1} W`` through its symmetric conjugate.

    Parameters
    ----------
    A : ndarray or BlockAffinity
        Either the transition matrix (then ``D`` is required) or the
        affinity itself, which is preferred since the symmetric conjugate
        ``D^{-1/2} W D^{-1/2}`` is then formed without a round trip.
    D : ndarray, optional
        Degree vector.
    n, K : int, optional
        Block size and number of views; taken from the affinity if given.

    Returns
    -------
    TransitionSpectrum
        Eigenvalues in descending order; eigenvectors ``u = D^{-1/2} v``
        rescaled to unit Euclidean norm with their largest-magnitude entry
        positive.
    """
    if isinstance(A, BlockAffinity):
        W = A.matrix
        D = A.degree
        n, K = A.block_size, A.num_views
        sqrt_d = np.sqrt(D)
        S = W / sqrt_d[:, None] / sqrt_d[None, :]
    else:
        if D is None:
            raise ParameterError("degree vector required when passing a transition matrix")
        A = np.asarray(A, dtype=float)
        D = np.asarray(D, dtype=float)
        sqrt_d = np.sqrt(D)
        # D^{1/2} A D^{-1/2} = D^{-1/2} W D^{-1/2}
        S = A * sqrt_d[:, None] / sqrt_d[None, :]
    if not np.all(D > 0):
        raise DegeneracyError("degree vector has non-positive entries")
    N = S.shape[0]
    if n is None or K is None:
        n, K = N, 1
    if n * K != N:
        raise ShapeError(f"n*K = {n * K} does not match matrix size {N}")
    S = 0.5 * (S + S.T)
    try:
        evals, V = scipy.linalg.eigh(S, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError("symmetric eigensolver failed",
                           {"size": N, "error": str(exc)}) from exc
    order = np.argsort(evals, kind="stable")[::-1]
    evals = evals[order]
    U = V[:, order] / sqrt_d[:, None]
    U /= np.linalg.norm(U, axis=0)
    U = _fix_signs(U)
    return TransitionSpectrum(evals, U, int(n), int(K), np.asarray(D, dtype=float))


def build_Q(spec: TransitionSpectrum, m: int, t: float = 1.0, *,
            weighted: bool = False) -> EmbeddingSet:
    """Stack the scaled nontrivial eigenvectors ``eta_k^t u_k``, ``k = 2..m+1``.

    With ``weighted=True`` each ``u_k`` is first rescaled so that
    ``u_k^T D u_k = 1``; in that basis the embedding distance over all
    ``m = nK - 1`` coordinates equals the ``D^{-1}``-weighted distance
    between rows of ``A^t``.
    """
    N = spec.size
    if not (isinstance(m, (int, np.integer)) and 1 <= m < N):
        raise ParameterError(f"m must be an integer in [1, {N - 1}], got {m}")
    if not t >= 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    eta = spec.eigenvalues[1:m + 1]
    integer_t = float(t).is_integer()
    if not integer_t and np.any(eta <= 0):
        raise ParameterError("non-integer t is undefined for non-positive eigenvalues")
    scale = eta ** int(t) if integer_t else eta ** t
    U = spec.right_eigenvectors[:, 1:m + 1]
    if weighted:
        U = U / np.sqrt(np.einsum("ik,i,ik->k", U, spec.degree, U))
    Q = scale[:, None] * U.T
    return EmbeddingSet(Q, int(m), float(t), spec.n, spec.K)


def _check_sample(E: EmbeddingSet, j: int):
    if not 1 <= j <= E.n:
        raise IndexError(f"sample index {j} outside [1, {E.n}]")


def embed_view(E: EmbeddingSet, view: int, j: int) -> np.ndarray:
    """Embedding of sample ``j`` as seen in view ``view`` (both 1-based)."""
    if not 1 <= view <= E.K:
        raise IndexError(f"view index {view} outside [1, {E.K}]")
    _check_sample(E, j)
    return E.Q[:, j - 1 + (view - 1) * E.n].copy()


def embed_joint(E: EmbeddingSet, j: int) -> np.ndarray:
    """Per-view embeddings of sample ``j`` concatenated in view order."""
    _check_sample(E, j)
    return np.concatenate([E.Q[:, j - 1 + v * E.n] for v in range(E.K)])


def embed_averaged(E: EmbeddingSet, j: int) -> np.ndarray:
    """Mean over views of the per-view embeddings of sample ``j``."""
    if E.K < 2:
        raise ParameterError("averaged embedding needs at least two views")
    _check_sample(E, j)
    return np.mean([E.Q[:, j - 1 + v * E.n] for v in range(E.K)], axis=0)


def embedding_matrix(E: EmbeddingSet, mode: str = "averaged", view: int | None = None) -> np.ndarray:
    """All samples at once: ``n x m`` (view/averaged) or ``n x mK`` (joint)."""
    blocks = E.Q.reshape(E.m, E.K, E.n)
    if mode == "averaged":
        return blocks.mean(axis=1).T
    if mode == "joint":
        return blocks.transpose(2, 1, 0).reshape(E.n, E.K * E.m)
    if mode == "view":
        if view is None or not 1 <= view <= E.K:
            raise IndexError(f"view index {view} outside [1, {E.K}]")
        return blocks[:, view - 1, :].T
    raise ParameterError(f"unknown embedding mode {mode!r}")


def diffusion_distance(E: EmbeddingSet, i: int, j: int, mode: str = "averaged",
                       view: int | None = None) -> float:
    """Euclidean distance between the chosen embeddings of samples ``i`` and ``j``."""
    if mode == "view":
        a, b = embed_view(E, view, i), embed_view(E, view, j)
    elif mode == "joint":
        a, b = embed_joint(E, i), embed_joint(E, j)
    elif mode == "averaged":
        a, b = embed_averaged(E, i), embed_averaged(E, j)
    else:
        raise ParameterError(f"unknown embedding mode {mode!r}")
    return float(np.linalg.norm(a - b))


def save_embedding_csv(E: EmbeddingSet, path, mode: str = "averaged") -> Path:
    """Write one row per sample; per-view mode writes ``nK`` rows with a ``view`` column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if mode == "view":
            w.writerow(["sample", "view"] + [f"phi{k + 1}" for k in range(E.m)])
            for v in range(1, E.K + 1):
                X = embedding_matrix(E, "view", v)
                for j, row in enumerate(X, start=1):
                    w.writerow([j, v] + [repr(float(x)) for x in row])
        else:
            X = embedding_matrix(E, mode)
            w.writerow(["sample"] + [f"phi{k + 1}" for k in range(X.shape[1])])
            for j, row in enumerate(X, start=1):
                w.writerow([j] + [repr(float(x)) for x in row])
    return path
