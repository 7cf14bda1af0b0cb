import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustloc.design import (
    design_low_coherence,
    designed_anchor_set,
    fourier_complement_basis,
    frobenius_objective,
)
from robustloc.errors import InsufficientAnchorsError
from robustloc.linalg import coherence, welch_bound
from robustloc.robust import annihilator

configs = st.tuples(st.integers(2, 3), st.integers(0, 30), st.integers(0, 2**31 - 1)).map(
    lambda t: (t[0] + 3 + t[1], t[0], t[2])
)


@given(st.integers(2, 40))
def test_fourier_basis(n):
    V = fourier_complement_basis(n)
    assert V.shape == (n, n - 1)
    np.testing.assert_allclose(V.T @ V, np.eye(n - 1), atol=1e-12)
    np.testing.assert_allclose(np.ones(n) @ V, 0, atol=1e-12)


@given(configs)
def test_designed_constraints(cfg):
    m, r, seed = cfg
    R, X = design_low_coherence(m, r, seed)
    p, n = m - r - 2, m - 1
    assert R.shape == (p, n) and X.shape == (n, r)
    np.testing.assert_allclose(R @ np.ones(n), 0, atol=1e-10)
    np.testing.assert_allclose(R @ R.T, np.eye(p), atol=1e-10)
    np.testing.assert_allclose(R @ X, 0, atol=1e-10 * np.abs(X).max())
    assert abs(frobenius_objective(R) - (r + 1)) <= 1e-9
    assert coherence(R) >= welch_bound(p, n) - 1e-12


def test_objective_equals_column_count_difference():
    R, _ = design_low_coherence(15, 2, seed=3)
    assert frobenius_objective(R) == pytest.approx((15 - 1) - (15 - 2 - 2), abs=1e-9)


def test_deterministic_per_seed():
    a = design_low_coherence(12, 2, seed=5)
    b = design_low_coherence(12, 2, seed=5)
    c = design_low_coherence(12, 2, seed=6)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(a[0], c[0])


def test_insufficient_anchors():
    with pytest.raises(InsufficientAnchorsError):
        design_low_coherence(4, 2, seed=0)


def test_extent_and_center():
    anchors = designed_anchor_set(9, 2, seed=0, extent=250.0, center=[10.0, -5.0])
    rel = anchors.positions - anchors.central
    np.testing.assert_allclose(np.abs(rel).max(axis=0), [250.0, 250.0])
    np.testing.assert_allclose(anchors.central, [10.0, -5.0])
    assert anchors.central_index == 8


@pytest.mark.parametrize("m, r", [(9, 2), (15, 2), (11, 3)])
def test_recomputed_annihilator_spans_same_space(m, r):
    R, _ = design_low_coherence(m, r, seed=1)
    R2 = annihilator(designed_anchor_set(m, r, seed=1))
    np.testing.assert_allclose(R2.T @ R2, R.T @ R, atol=1e-10)
    assert coherence(R2) == pytest.approx(coherence(R), abs=1e-10)


def test_equal_column_norms():
    R, _ = design_low_coherence(13, 2, seed=2)
    norms = np.linalg.norm(R, axis=0)
    np.testing.assert_allclose(norms, norms[0], rtol=1e-12)


def test_designed_coherence_seed_independent():
    # U is orthogonal, so the Gram matrix and the coherence do not depend on it
    mus = {round(coherence(design_low_coherence(15, 2, seed=s)[0]), 12) for s in range(5)}
    assert len(mus) == 1
