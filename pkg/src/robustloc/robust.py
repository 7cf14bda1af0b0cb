"""Robust position estimation and identification of corrupted target nodes.

Measurements for one target are the trilateration right-hand side
``m~ = X q + s + c 1``: ``s`` collects the (sparse) corruption of distances to
non-central anchors and ``c`` the corruption of the distance to the central
anchor, which shifts every entry equally. Multiplying by an orthonormal
annihilator ``R`` of ``[X 1]`` removes ``q`` and ``c`` and leaves the
sparse-recovery problem ``R s = R m~``.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientAnchorsError, LocalizationError, ShapeError
from .geometry import AnchorSet, TrilaterationSystem, build_system
from .linalg import as_matrix, as_vector, coherence, least_squares, nullspace_rows
from .solvers import (
    BASIS_PURSUIT_DEFAULTS,
    SRPCA_DEFAULTS,
    SolverOptions,
    SolveReport,
    basis_pursuit,
    group_min_norm,
    srpca,
)

log = logging.getLogger(__name__)

SRPCA_LAMBDAS = (1.0, 2.0, 5.0, 10.0, 20.0)


def outlier_pursuit_unit(alpha: int) -> float:
    """Weight unit ``3 / (7 sqrt(gamma n))`` from outlier-pursuit theory.

    ``gamma n`` is the number of corrupted columns, here ``alpha``.
    """
    if alpha < 1:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return 3.0 / (7.0 * math.sqrt(alpha))


@dataclass(frozen=True)
class RobustEstimate:
    position: np.ndarray
    central_corruption: float
    outlier: np.ndarray
    solver_report: SolveReport

    @property
    def converged(self) -> bool:
        return self.solver_report.converged


@dataclass(frozen=True)
class IdentificationResult:
    indices: tuple
    column_norms: np.ndarray
    votes: dict = field(default_factory=dict)
    converged_fraction: float = 1.0


@dataclass(frozen=True)
class OutlierBudget:
    k_max: int
    coherence: float


def annihilator(anchors: AnchorSet, system: TrilaterationSystem | None = None) -> np.ndarray:
    """Orthonormal rows spanning the left null space of ``[X 1]``.

    Shape is ``(m - r - 2, m - 1)``.
    """
    r = anchors.dim
    if anchors.m <= r + 2:
        raise InsufficientAnchorsError(
            f"robust recovery in R^{r} needs more than {r + 2} anchors, got {anchors.m}"
        )
    if system is None:
        system = build_system(anchors)
    return nullspace_rows(system.augmented)


def top_alpha(scores, alpha: int) -> tuple:
    """Indices of the ``alpha`` largest scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    if not 1 <= alpha <= scores.size:
        raise DomainError(f"alpha must be in [1, {scores.size}], got {alpha}")
    order = np.lexsort((np.arange(scores.size), -scores))
    return tuple(int(i) for i in order[:alpha])


def estimate_position(
    anchors: AnchorSet,
    m_tilde,
    opts: SolverOptions = BASIS_PURSUIT_DEFAULTS,
    *,
    system: TrilaterationSystem | None = None,
    R: np.ndarray | None = None,
    normalize: bool = True,
) -> RobustEstimate:
    """Estimate one target's position from a possibly corrupted right-hand side.

    ``m_tilde`` is the output of :func:`geometry.assemble_rhs`. The sparse
    outlier is recovered by basis pursuit on ``R s = R m_tilde``; position and
    central corruption then come from least squares on
    ``[X 1] (q, c) = m_tilde - s``. A non-converged l1 solve still yields an
    estimate, flagged through ``solver_report.converged``.

    With ``normalize`` (the default) each entry of ``s`` is weighted by the
    norm of its column of ``R``. This is plain l1 minimisation over the
    column-normalised matrix, the setting in which the coherence recovery
    guarantee holds; plain l1 on ``R`` itself can miss a 1-sparse outlier
    sitting on a short column. Columns of equal norm make both the same.
    """
    if system is None:
        system = build_system(anchors)
    if R is None:
        R = annihilator(anchors, system)
    m_tilde = as_vector(m_tilde, "m_tilde")
    if m_tilde.shape[0] != system.X.shape[0]:
        raise ShapeError(f"m_tilde has length {m_tilde.shape[0]}, expected {system.X.shape[0]}")
    weights = None
    if normalize:
        norms = np.linalg.norm(R, axis=0)
        weights = np.where(norms > 1e-12 * norms.max(), norms, 1.0)
    s, report = basis_pursuit(R, R @ m_tilde, opts, weights=weights)
    sol = least_squares(system.augmented, m_tilde - s)
    return RobustEstimate(
        position=sol[:-1] + system.origin,
        central_corruption=float(sol[-1]),
        outlier=s,
        solver_report=report,
    )


def outlier_budget(anchors: AnchorSet, R: np.ndarray | None = None) -> OutlierBudget:
    """Largest ``k`` with ``k < (1 + 1/mu(R)) / 2``, the exact-recovery guarantee."""
    if R is None:
        R = annihilator(anchors)
    return budget_from_coherence(coherence(R), R.shape[1])


def budget_from_coherence(mu: float, n_cols: int) -> OutlierBudget:
    if mu <= 0.0:
        return OutlierBudget(k_max=n_cols, coherence=float(mu))
    bound = 0.5 * (1.0 + 1.0 / mu)
    k = math.ceil(bound - 1e-12) - 1
    return OutlierBudget(k_max=int(min(max(k, 0), n_cols)), coherence=float(mu))


def identify_corrupted(
    anchors: AnchorSet,
    M_tilde,
    alpha: int,
    *,
    system: TrilaterationSystem | None = None,
    R: np.ndarray | None = None,
) -> IdentificationResult:
    """Pick the ``alpha`` targets whose outlier columns have the largest norms.

    ``M_tilde`` holds one assembled right-hand side per column. The
    l1,2-minimal outlier matrix is computed column by column in closed form.
    """
    M_tilde = as_matrix(M_tilde, "M_tilde")
    if system is None:
        system = build_system(anchors)
    if R is None:
        R = annihilator(anchors, system)
    if M_tilde.shape[0] != R.shape[1]:
        raise ShapeError(f"M_tilde must have {R.shape[1]} rows, got {M_tilde.shape[0]}")
    S = group_min_norm(R, M_tilde)
    norms = np.linalg.norm(S, axis=0)
    return IdentificationResult(indices=top_alpha(norms, alpha), column_norms=norms)


def naive_identify(F_tilde, alpha: int) -> IdentificationResult:
    """Baseline: the ``alpha`` columns of largest norm in the squared-distance matrix."""
    norms = np.linalg.norm(as_matrix(F_tilde, "F_tilde"), axis=0)
    return IdentificationResult(indices=top_alpha(norms, alpha), column_norms=norms)


def srpca_identify(
    F_tilde,
    alpha: int,
    lambdas=SRPCA_LAMBDAS,
    opts: SolverOptions = SRPCA_DEFAULTS,
) -> IdentificationResult:
    """Baseline: vote over column-sparse robust PCA runs on a grid of weights.

    Grid values are read in units of :func:`outlier_pursuit_unit`. Each run
    nominates its top-``alpha`` columns of ``S`` with nonzero norm.
    The answer is the ``alpha`` most nominated columns; ties are broken by
    the larger mean relative column norm (each run's norms divided by its
    largest one, so that runs with different weights are comparable), then
    by the lower index. ``column_norms`` holds those mean relative norms.
    """
    F_tilde = as_matrix(F_tilde, "F_tilde")
    n = F_tilde.shape[1]
    if not 1 <= alpha <= n:
        raise DomainError(f"alpha must be in [1, {n}], got {alpha}")
    lambdas = list(lambdas)
    if not lambdas:
        raise DomainError("lambdas must be non-empty")

    unit = outlier_pursuit_unit(alpha)
    votes: Counter = Counter()
    rel = np.zeros(n)
    runs = 0
    converged = 0
    last_error = None
    for lam in lambdas:
        try:
            _, S, report = srpca(F_tilde, lam, opts, unit=unit)
        except LocalizationError as exc:
            log.warning("srpca failed for lambda=%g: %s", lam, exc)
            last_error = exc
            continue
        if not report.converged:
            log.debug("srpca did not converge for lambda=%g (%d iterations)", lam, report.iterations)
        runs += 1
        converged += report.converged
        norms = np.linalg.norm(S, axis=0)
        peak = norms.max()
        if peak > 0:
            rel += norms / peak
        votes.update(i for i in top_alpha(norms, alpha) if norms[i] > 0)
    if runs == 0:
        raise last_error
    rel /= runs
    order = sorted(range(n), key=lambda i: (-votes.get(i, 0), -rel[i], i))
    return IdentificationResult(
        indices=tuple(order[:alpha]),
        column_norms=rel,
        votes=dict(sorted(votes.items())),
        converged_fraction=converged / runs,
    )
