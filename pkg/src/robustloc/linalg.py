"""Small dense linear-algebra kernel.

SVD and QR are delegated to LAPACK through numpy; what this module adds is
the conventions the rest of the package relies on: deterministic singular
vector signs, orthonormal null-space rows, rank checks with explicit
errors, mutual coherence, the Welch bound and a seeded K-means.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegenerateColumnError,
    DomainError,
    EmptyNullSpaceError,
    RankDeficientError,
    ShapeError,
    SolverFailure,
)

RANK_RTOL = 1e-10
LSTSQ_RCOND = 1e-12


def as_matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} contains NaN or Inf")
    return A


def as_vector(v, name="v") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ShapeError(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} contains NaN or Inf")
    return v


def _fix_signs(U, V):
    # largest-magnitude entry of each right singular vector is made positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def svd(A):
    """Thin singular value decomposition ``A = U @ diag(s) @ V.T``.

    Returns
    -------
    U : (p, k) ndarray
    s : (k,) ndarray
        Singular values in descending order.
    V : (d, k) ndarray
        Right singular vectors as columns, sign-normalised so that the
        largest-magnitude entry of every column is positive.
    """
    A = as_matrix(A)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"SVD did not converge for a {A.shape[0]}x{A.shape[1]} matrix") from exc
    U, V = _fix_signs(U, Vt.T)
    return U, s, V


def numerical_rank(A, rtol=RANK_RTOL) -> int:
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def nullspace_rows(A) -> np.ndarray:
    """Orthonormal rows ``R`` with ``R @ A == 0``.

    ``A`` is ``p x d``; the result has ``p - rank(A)`` rows spanning the
    orthogonal complement of the column space of ``A``.
    """
    A = as_matrix(A)
    p = A.shape[0]
    try:
        U, s, _ = np.linalg.svd(A, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"SVD did not converge for a {A.shape[0]}x{A.shape[1]} matrix") from exc
    rank = 0 if s[0] == 0.0 else int(np.sum(s > RANK_RTOL * s[0]))
    if rank >= p:
        raise EmptyNullSpaceError(f"{p}x{A.shape[1]} matrix has full row rank; null space is empty")
    R = U[:, rank:].T.copy()
    idx = np.argmax(np.abs(R), axis=1)
    signs = np.sign(R[np.arange(R.shape[0]), idx])
    signs[signs == 0] = 1.0
    return R * signs[:, None]


def least_squares(A, b) -> np.ndarray:
    """Solve ``min ||A x - b||`` for a tall, full-column-rank ``A`` via QR."""
    A = as_matrix(A)
    b = as_vector(b, "b")
    p, d = A.shape
    if b.shape[0] != p:
        raise ShapeError(f"b has length {b.shape[0]}, expected {p}")
    if p < d:
        raise ShapeError(f"least_squares needs p >= d, got a {p}x{d} system")
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0 or s[-1] < LSTSQ_RCOND * s[0]:
        raise RankDeficientError(f"{p}x{d} matrix is rank deficient (sigma_min/sigma_max below {LSTSQ_RCOND})")
    Q, R = np.linalg.qr(A, mode="reduced")
    return solve_triangular(R, Q.T @ b, lower=False)


def coherence(B) -> float:
    """Largest absolute inner product between distinct normalised columns."""
    B = as_matrix(B, "B")
    if B.shape[1] < 2:
        raise ShapeError("coherence needs at least two columns")
    norms = np.linalg.norm(B, axis=0)
    scale = norms.max()
    bad = np.flatnonzero(norms <= 1e-12 * scale) if scale > 0 else np.arange(B.shape[1])
    if bad.size:
        raise DegenerateColumnError(f"columns {bad.tolist()} have zero norm")
    Bn = B / norms
    G = np.abs(Bn.T @ Bn)
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


def welch_bound(s: int, t: int) -> float:
    """Lower bound on the coherence of any ``s x t`` frame with ``t > s``."""
    if not (s >= 1 and t > s):
        raise DomainError(f"Welch bound needs t > s >= 1, got s={s}, t={t}")
    return float(np.sqrt((t - s) / (s * (t - 1))))


def _kmeans_pp(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            i = rng.integers(n)
        else:
            i = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            i = min(i, n - 1)
        centers[j] = points[i]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def kmeans(points, k: int, seed: int, *, tol=1e-6, max_iter=300) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding.

    An empty cluster is re-seeded at the point farthest from its assigned
    center (lowest index on ties), which keeps the result deterministic.
    """
    points = as_matrix(points, "points")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(points, k, rng)
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        dist = d2[np.arange(n), labels]
        new = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new[j] = points[members].mean(axis=0)
            else:
                far = int(np.argmax(dist))
                new[j] = points[far]
                labels[far] = j
                dist[far] = 0.0
        shift = np.max(np.linalg.norm(new - centers, axis=1))
        centers = new
        if shift < tol:
            break
    return centers
