"""Trilateration systems built from anchor positions and squared distances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AugmentedRankError,
    DegenerateConfigurationError,
    DomainError,
    ShapeError,
)
from .linalg import RANK_RTOL, as_matrix, as_vector, least_squares, numerical_rank


@dataclass(frozen=True)
class AnchorSet:
    """Anchor positions (one row per anchor) and the index of the central anchor."""

    positions: np.ndarray
    central_index: int = -1

    def __post_init__(self):
        pos = as_matrix(self.positions, "positions")
        if pos.shape[1] not in (2, 3):
            raise ShapeError(f"anchors must live in R^2 or R^3, got dimension {pos.shape[1]}")
        c = int(self.central_index)
        if not -pos.shape[0] <= c < pos.shape[0]:
            raise DomainError(f"central_index {c} out of range for {pos.shape[0]} anchors")
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "central_index", c % pos.shape[0])

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def central(self) -> np.ndarray:
        return self.positions[self.central_index]

    @property
    def others(self) -> np.ndarray:
        """Indices of the non-central anchors, in the order used by system rows."""
        return np.array([i for i in range(self.m) if i != self.central_index], dtype=int)


@dataclass(frozen=True)
class TrilaterationSystem:
    """``X q = m`` with the central anchor translated to the origin.

    Row ``i`` of ``X`` is ``x_i - x_c`` for the ``i``-th non-central anchor and
    ``rhs_offsets[i] = ||x_i - x_c||^2``. Solutions of the system are
    positions relative to ``origin``.
    """

    X: np.ndarray
    rhs_offsets: np.ndarray
    central_index: int
    origin: np.ndarray
    row_anchors: np.ndarray

    @property
    def augmented(self) -> np.ndarray:
        return np.column_stack([self.X, np.ones(self.X.shape[0])])


def build_system(anchors: AnchorSet) -> TrilaterationSystem:
    """Eliminate the central anchor and return the ``(m-1) x r`` system.

    Raises :class:`DegenerateConfigurationError` when the anchors are
    affinely dependent, and :class:`AugmentedRankError` when ``[X 1]`` is
    rank deficient although it has at least ``r + 1`` rows.
    """
    if anchors.m < anchors.dim + 1:
        raise DegenerateConfigurationError(
            f"{anchors.m} anchors cannot determine a position in R^{anchors.dim}"
        )
    rows = anchors.others
    X = anchors.positions[rows] - anchors.central
    if numerical_rank(X) < anchors.dim:
        raise DegenerateConfigurationError("anchors are affinely dependent")
    system = TrilaterationSystem(
        X=X,
        rhs_offsets=np.sum(X**2, axis=1),
        central_index=anchors.central_index,
        origin=anchors.central.copy(),
        row_anchors=rows,
    )
    if X.shape[0] > anchors.dim and numerical_rank(system.augmented, RANK_RTOL) < anchors.dim + 1:
        raise AugmentedRankError("the all-ones vector lies in the column space of X")
    return system


def assemble_rhs(system: TrilaterationSystem, squared_dists) -> np.ndarray:
    """Right-hand side ``m_i = (d_c^2 - d_i^2 + ||x_i - x_c||^2) / 2``.

    ``squared_dists`` is indexed like the anchors. A 2-D input of shape
    ``(m, n)`` is treated column-wise and returns an ``(m-1, n)`` matrix.
    """
    d2 = np.asarray(squared_dists, dtype=float)
    m = system.X.shape[0] + 1
    if d2.shape[0] != m or d2.ndim not in (1, 2):
        raise ShapeError(f"expected {m} squared distances per target, got shape {d2.shape}")
    if not np.all(np.isfinite(d2)):
        raise DomainError("squared distances contain NaN or Inf")
    if np.any(d2 < 0):
        raise DomainError("squared distances must be nonnegative")
    dc = d2[system.central_index]
    di = d2[system.row_anchors]
    offsets = system.rhs_offsets if d2.ndim == 1 else system.rhs_offsets[:, None]
    return 0.5 * (dc - di + offsets)


def exact_trilateration(system: TrilaterationSystem, squared_dists) -> np.ndarray:
    """Position from exact squared distances, in the anchors' coordinates."""
    rhs = assemble_rhs(system, as_vector(squared_dists, "squared_dists"))
    return least_squares(system.X, rhs) + system.origin


def squared_distance_matrix(anchors: AnchorSet, targets) -> np.ndarray:
    """``F[j, i] = ||t_i - a_j||^2`` for targets given one per row."""
    T = np.asarray(targets, dtype=float)
    if T.ndim == 1:
        T = T[None, :]
    if T.ndim != 2 or T.shape[1] != anchors.dim:
        raise ShapeError(f"targets must have shape (n, {anchors.dim}), got {T.shape}")
    diff = anchors.positions[:, None, :] - T[None, :, :]
    return np.sum(diff**2, axis=2)
