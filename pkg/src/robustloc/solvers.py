"""Optimization kernels: basis pursuit, decoupled group minimum-norm
solutions and column-sparse robust PCA.

All iterative solvers work on a copy of the data scaled to unit norm. The
three programs are positively homogeneous, so the solution of the scaled
problem is the scaled solution, while fixed penalties and tolerances become
independent of the measurement units (squared distances here are ~1e6).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError, SolverFailure
from .linalg import as_matrix, as_vector


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 5000
    rho: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")


BASIS_PURSUIT_DEFAULTS = SolverOptions(tol=1e-8, max_iter=5000, rho=1.0)
SRPCA_DEFAULTS = SolverOptions(tol=1e-6, max_iter=1000, rho=1.0)


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    polished: bool = False
    history: tuple = field(default=(), repr=False, compare=False)


def _orthonormal_rows(R, y):
    """Rewrite ``R s = y`` with orthonormal rows if ``R`` does not have them."""
    if np.allclose(R @ R.T, np.eye(R.shape[0]), rtol=0, atol=1e-10):
        return R, y
    Q, T = np.linalg.qr(R.T, mode="reduced")
    d = np.abs(np.diag(T))
    if d.min() <= 1e-12 * d.max():
        raise SolverFailure("constraint matrix does not have full row rank")
    return Q.T, np.linalg.solve(T.T, y)


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _polish(R, y, z, tol):
    """Re-solve ``R s = y`` on the support of ``z``.

    Returns the polished vector, or ``None`` when it would not be an
    equally good feasible point.
    """
    support = np.flatnonzero(z)
    if support.size == 0 or support.size > R.shape[0]:
        return None
    Rt = R[:, support]
    sv = np.linalg.svd(Rt, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        return None
    coef, *_ = np.linalg.lstsq(Rt, y, rcond=None)
    s = np.zeros_like(z)
    s[support] = coef
    if np.linalg.norm(R @ s - y) > 1e-10 * max(1.0, np.linalg.norm(y)):
        return None
    if np.abs(s).sum() > np.abs(z).sum() * (1 + 10 * tol) + 1e-14:
        return None
    return s


def basis_pursuit(R, y, opts: SolverOptions = BASIS_PURSUIT_DEFAULTS, *, weights=None, polish=True):
    """Minimise ``||s||_1`` (or ``sum_j w_j |s_j|``) subject to ``R s = y`` with ADMM.

    The splitting is ``x = z`` with ``x`` constrained to the affine set
    ``{R x = y}`` (an orthogonal projection when ``R`` has orthonormal rows)
    and ``z`` carrying the l1 term. When the iterate's support admits an
    exact basic solution with no larger l1 norm, that solution is returned
    instead (``report.polished``).

    Parameters
    ----------
    R : (p, n) array_like
        Constraint matrix. Orthonormal rows are expected; other full row
        rank matrices are orthonormalised first.
    y : (p,) array_like
    opts : SolverOptions
    weights : (n,) array_like, optional
        Positive weights. The weighted problem is solved as the plain one in
        ``u = w * s`` with constraint matrix ``R / w``.

    Returns
    -------
    s : (n,) ndarray
    report : SolveReport
        Residuals are those of the unit-scaled problem.
    """
    R = as_matrix(R, "R")
    y = as_vector(y, "y")
    if y.shape[0] != R.shape[0]:
        raise ShapeError(f"R is {R.shape[0]}x{R.shape[1]} but y has length {y.shape[0]}")
    n = R.shape[1]
    if weights is not None:
        w = as_vector(weights, "weights")
        if w.shape[0] != n or not np.all(w > 0):
            raise DomainError(f"weights must be {n} positive numbers")
        s, report = basis_pursuit(R / w, y, opts, polish=polish)
        return s / w, report
    scale = np.linalg.norm(y)
    if scale == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, 0.0, True)
    R, y = _orthonormal_rows(R, y / scale)

    P = R.T @ y
    z = np.zeros(n)
    u = np.zeros(n)
    rho, tol = opts.rho, opts.tol
    it, pr, dr, converged = 0, np.inf, np.inf, False
    for it in range(1, int(opts.max_iter) + 1):
        v = z - u
        x = v - R.T @ (R @ v) + P
        z_old = z
        z = soft_threshold(x + u, 1.0 / rho)
        u = u + x - z
        pr = float(np.linalg.norm(x - z))
        dr = float(rho * np.linalg.norm(z - z_old))
        if pr <= tol and dr <= tol:
            converged = True
            break

    polished = False
    if polish:
        s = _polish(R, y, z, tol)
        if s is not None:
            z, polished = s, True
            pr = float(np.linalg.norm(R @ z - y))
            converged = converged or pr <= tol
    return z * scale, SolveReport(it, pr, dr, converged, polished)


def group_min_norm(R, M) -> np.ndarray:
    """Column-wise minimum-norm solutions of ``R S = R M``.

    The l1,2-minimal solution of that system decouples over columns; with
    orthonormal rows each column is ``R.T @ (R @ m_i)`` and its norm equals
    ``||R @ m_i||``.
    """
    R = as_matrix(R, "R")
    M = as_matrix(M, "M")
    if M.shape[0] != R.shape[1]:
        raise ShapeError(f"R has {R.shape[1]} columns but M has {M.shape[0]} rows")
    RM = R @ M
    if np.allclose(R @ R.T, np.eye(R.shape[0]), rtol=0, atol=1e-10):
        return R.T @ RM
    return np.linalg.pinv(R) @ RM


def group_shrink(Z, t):
    """Column-wise group soft-thresholding: shrink each column's norm by ``t``."""
    norms = np.linalg.norm(Z, axis=0)
    factor = np.maximum(1.0 - t / np.where(norms > 0, norms, 1.0), 0.0)
    return Z * factor


def svt(Z, t):
    """Singular value soft-thresholding."""
    try:
        U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"SVD did not converge for a {Z.shape[0]}x{Z.shape[1]} matrix") from exc
    s = np.maximum(s - t, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep], s


def srpca(F_tilde, lam: float, opts: SolverOptions = SRPCA_DEFAULTS, *, unit=None, keep_history=False):
    """Split ``F_tilde = F + S`` into low-rank and column-sparse parts.

    Solves ``min ||F||_* + w ||S||_{1,2}  s.t.  F + S = F_tilde`` with
    ``w = lam * unit``. Since ``||S||_* <= ||S||_{1,2}``, any weight ``>= 1``
    forces ``S = 0``, so ``lam`` is read in units of ``unit``, which defaults
    to the usual robust-PCA scale ``1 / sqrt(max(p, n))``.

    ADMM iteration (scaled data, penalty ``rho``)::

        F <- svt(F_tilde - S + Y / rho, 1 / rho)
        S <- group_shrink(F_tilde - F + Y / rho, w / rho)
        Y <- Y + rho * (F_tilde - F - S)

    Stops when both ``||F_tilde - F - S||`` and ``rho * ||S - S_prev||`` fall
    below ``tol`` (relative to ``||F_tilde||_F``).
    """
    D = as_matrix(F_tilde, "F_tilde")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    scale = np.linalg.norm(D)
    if scale == 0.0:
        return np.zeros_like(D), np.zeros_like(D), SolveReport(0, 0.0, 0.0, True)
    D = D / scale
    if unit is None:
        unit = 1.0 / np.sqrt(max(D.shape))
    if not unit > 0:
        raise DomainError(f"unit must be positive, got {unit}")
    w = lam * unit
    rho, tol = opts.rho, opts.tol

    F = np.zeros_like(D)
    S = np.zeros_like(D)
    Y = np.zeros_like(D)
    history = []
    it, pr, dr, converged = 0, np.inf, np.inf, False
    for it in range(1, int(opts.max_iter) + 1):
        F, sing = svt(D - S + Y / rho, 1.0 / rho)
        S_old = S
        S = group_shrink(D - F + Y / rho, w / rho)
        resid = D - F - S
        Y = Y + rho * resid
        pr = float(np.linalg.norm(resid))
        dr = float(rho * np.linalg.norm(S - S_old))
        if keep_history:
            obj = sing.sum() + w * np.linalg.norm(S, axis=0).sum()
            history.append((float(obj), pr))
        if pr <= tol and dr <= tol:
            converged = True
            break
    return F * scale, S * scale, SolveReport(it, pr, dr, converged, history=tuple(history))
