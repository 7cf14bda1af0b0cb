"""Anchor layouts whose annihilator has low coherence.

Among full-row-rank ``s x t`` matrices ``G``, ``||G^T G - I||_F`` is minimised
exactly when every singular value equals one, i.e. ``G = U V^T`` with ``U``
orthogonal and ``V`` having orthonormal columns. The annihilator also has to
kill the all-ones vector, so ``V`` is drawn from an orthonormal basis of the
complement of ``1``. The anchor coordinates are then read off the part of
that basis which ``V`` leaves out.

The basis of the complement of ``1`` used here is the real Fourier basis,
ordered from the highest frequency down. The lowest frequencies are left for
the anchor coordinates, which places the non-central anchors on a closed
curve around the central one (a regular polygon in the plane). Every column
of the resulting annihilator has the same norm, and the coherence stays well
below that of clustered layouts.
"""
from __future__ import annotations

import numpy as np

from .errors import InsufficientAnchorsError
from .geometry import AnchorSet


def fourier_complement_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of ``{v in R^n : sum(v) = 0}``.

    Columns are cosine/sine pairs, highest frequency first, so the last
    columns are the smoothest.
    """
    idx = np.arange(n)
    cols = []
    for f in range(n // 2, 0, -1):
        angle = 2 * np.pi * f * idx / n
        pair = [np.cos(angle)]
        if not (n % 2 == 0 and f == n // 2):
            pair.append(np.sin(angle))
        cols.extend(v / np.linalg.norm(v) for v in pair)
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def design_low_coherence(m: int, r: int, seed: int, *, extent: float = 400.0):
    """Low-coherence annihilator ``R_bar`` and the matching anchor matrix.

    Returns
    -------
    R_bar : (m - r - 2, m - 1) ndarray
        ``R_bar @ 1 = 0`` and ``R_bar @ R_bar.T = I``.
    X_star : (m - 1, r) ndarray
        Non-central anchor coordinates relative to the central anchor, each
        column scaled so its largest magnitude equals ``extent``.
        ``R_bar @ X_star = 0``.
    """
    if m <= r + 2:
        raise InsufficientAnchorsError(f"design needs m > r + 2, got m={m}, r={r}")
    n = m - 1
    p = m - r - 2
    V_full = fourier_complement_basis(n)
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((p, p)))
    V = V_full[:, :p]
    R_bar = U @ V.T
    X_star = V_full[:, p:p + r]
    X_star = X_star * (extent / np.max(np.abs(X_star), axis=0))
    return R_bar, X_star


def designed_anchor_set(m: int, r: int, seed: int, *, extent: float = 400.0, center=None) -> AnchorSet:
    """Anchor set built from :func:`design_low_coherence`; the last anchor is central."""
    _, X_star = design_low_coherence(m, r, seed, extent=extent)
    origin = np.zeros(r) if center is None else np.asarray(center, dtype=float)
    positions = np.vstack([X_star + origin, origin])
    return AnchorSet(positions, central_index=m - 1)


def frobenius_objective(R_bar) -> float:
    """``||R^T R - I||_F^2``."""
    R_bar = np.asarray(R_bar, dtype=float)
    G = R_bar.T @ R_bar - np.eye(R_bar.shape[1])
    return float(np.sum(G**2))
