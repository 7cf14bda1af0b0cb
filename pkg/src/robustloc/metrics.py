"""Identification and estimation metrics.

Position arrays hold one node per row. Distance matrices are ``m x n``
(anchors by targets) and contain plain, not squared, distances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .geometry import AnchorSet


@dataclass(frozen=True)
class MetricReport:
    ia: float | None = None
    mre: float | None = None
    msp: float | None = None
    msd: float | None = None
    madr: float | None = None


def _pair(truth, est):
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    est = np.atleast_2d(np.asarray(est, dtype=float))
    if truth.shape != est.shape:
        raise ShapeError(f"truth {truth.shape} and estimate {est.shape} differ in shape")
    if truth.shape[0] == 0:
        raise DomainError("no nodes to evaluate")
    return truth, est


def identification_accuracy(predicted, truth) -> float:
    predicted, truth = set(predicted), set(truth)
    if len(predicted) != len(truth) or not truth:
        raise DomainError(f"need equally sized non-empty sets, got {len(predicted)} and {len(truth)}")
    return len(predicted & truth) / len(truth)


def mean_relative_error(truth, est) -> float:
    truth, est = _pair(truth, est)
    norms = np.linalg.norm(truth, axis=1)
    if np.any(norms == 0):
        raise DomainError("relative error is undefined for a node at the origin")
    return float(np.mean(np.linalg.norm(truth - est, axis=1) / norms))


def mean_square_position_error(truth, est) -> float:
    truth, est = _pair(truth, est)
    return float(np.mean(np.sum((truth - est) ** 2, axis=1)))


def mean_square_distance_error(clean_D, corrupted_D, corrupted_nodes) -> float:
    """Mean of ``(d_ij - d~_ij)^2`` over the corrupted nodes and all anchors."""
    clean_D = np.asarray(clean_D, dtype=float)
    corrupted_D = np.asarray(corrupted_D, dtype=float)
    if clean_D.shape != corrupted_D.shape:
        raise ShapeError("distance matrices differ in shape")
    nodes = list(corrupted_nodes)
    if not nodes:
        raise DomainError("corrupted node set is empty")
    diff = clean_D[:, nodes] - corrupted_D[:, nodes]
    return float(np.mean(diff**2))


def mean_anchor_distance_ratio(truth, est, anchors: AnchorSet) -> float:
    """Mean over nodes of ``sum_j ||q_est - a_j|| / sum_j ||q_true - a_j||``."""
    truth, est = _pair(truth, est)
    if truth.shape[1] != anchors.dim:
        raise ShapeError("positions and anchors differ in dimension")
    A = anchors.positions
    num = np.linalg.norm(est[:, None, :] - A[None], axis=2).sum(axis=1)
    den = np.linalg.norm(truth[:, None, :] - A[None], axis=2).sum(axis=1)
    return float(np.mean(num / den))


def estimation_metrics(truth, est, anchors: AnchorSet, clean_D, corrupted_D, nodes, ia=None) -> MetricReport:
    return MetricReport(
        ia=ia,
        mre=mean_relative_error(truth, est),
        msp=mean_square_position_error(truth, est),
        msd=mean_square_distance_error(clean_D, corrupted_D, nodes),
        madr=mean_anchor_distance_ratio(truth, est, anchors),
    )
