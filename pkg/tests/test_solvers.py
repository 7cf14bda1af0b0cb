import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_anchors
from oracles import l0_oracle, orthonormal_rows, plant
from robustloc.design import design_low_coherence
from robustloc.errors import DomainError, ShapeError
from robustloc.linalg import coherence
from robustloc.robust import annihilator, budget_from_coherence
from robustloc.solvers import (
    SRPCA_DEFAULTS,
    SolverOptions,
    basis_pursuit,
    group_min_norm,
    group_shrink,
    soft_threshold,
    srpca,
    svt,
)


def test_options_validation():
    for bad in ({"tol": 0}, {"max_iter": 0}, {"rho": -1.0}):
        with pytest.raises(DomainError):
            SolverOptions(**bad)


# basis pursuit

def test_bp_zero_rhs():
    R = orthonormal_rows(np.random.default_rng(0), 3, 6)
    s, rep = basis_pursuit(R, np.zeros(3))
    assert np.array_equal(s, np.zeros(6)) and rep.converged


def test_bp_shape_mismatch():
    with pytest.raises(ShapeError):
        basis_pursuit(np.eye(3), np.ones(2))


def test_bp_one_sparse_recovery():
    rng = np.random.default_rng(1)
    R, _ = design_low_coherence(12, 2, seed=1)
    s0 = np.zeros(11)
    s0[4] = 37.5
    assert 1 < 0.5 * (1 + 1 / coherence(R))
    s, rep = basis_pursuit(R, R @ s0)
    assert np.linalg.norm(s - s0) <= 1e-6 * np.linalg.norm(s0)
    assert rep.converged


def test_bp_matches_l0_on_desk_instance():
    # m - 1 = 6 columns, nullity 3; mu = 2/3 admits k = 1 only
    R, _ = design_low_coherence(7, 2, seed=0)
    assert R.shape == (3, 6)
    assert budget_from_coherence(coherence(R), 6).k_max == 1
    rng = np.random.default_rng(7)
    for j in range(6):
        s0 = np.zeros(6)
        s0[j] = rng.uniform(1, 1e4) * rng.choice([-1, 1])
        s, _ = basis_pursuit(R, R @ s0)
        np.testing.assert_allclose(s, l0_oracle(R, R @ s0, 1), atol=1e-6 * abs(s0[j]))
        np.testing.assert_allclose(s, s0, atol=1e-6 * abs(s0[j]))


def test_l0_oracle_desk_k2():
    # a 3 x 6 frame cannot reach coherence 1/3 (Welch bound ~0.447), so k = 2
    # is outside the l1 guarantee; the l0 oracle itself still recovers it
    R, _ = design_low_coherence(7, 2, seed=0)
    rng = np.random.default_rng(8)
    for _ in range(20):
        s0 = plant(rng, 6, 2)
        np.testing.assert_allclose(l0_oracle(R, R @ s0, 2), s0, atol=1e-9)


def test_l0_oracle_tie_break_is_lexicographic():
    R = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    s = l0_oracle(R, np.array([2.0, 0.0]), 1)
    np.testing.assert_array_equal(s, [2.0, 0.0, 0.0])


def test_bp_feasible_and_optimal_against_lp():
    from scipy.optimize import linprog

    rng = np.random.default_rng(11)
    R = orthonormal_rows(rng, 4, 10)
    y = rng.standard_normal(4)
    s, rep = basis_pursuit(R, y)
    assert np.linalg.norm(R @ s - y) <= 1e-8 * (1 + np.linalg.norm(y))
    # LP: s = u - v, u, v >= 0
    res = linprog(np.ones(20), A_eq=np.hstack([R, -R]), b_eq=y, bounds=(0, None), method="highs")
    assert np.abs(s).sum() == pytest.approx(res.fun, rel=1e-7)


def test_bp_non_orthonormal_rows_same_solution():
    rng = np.random.default_rng(3)
    R = orthonormal_rows(rng, 3, 7)
    T = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    s0 = plant(rng, 7, 1)
    a, _ = basis_pursuit(R, R @ s0)
    b, _ = basis_pursuit(T @ R, T @ R @ s0)
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_bp_reports_non_convergence():
    rng = np.random.default_rng(4)
    R = orthonormal_rows(rng, 3, 8)
    y = rng.standard_normal(3)
    _, rep = basis_pursuit(R, y, SolverOptions(max_iter=1), polish=False)
    assert rep.iterations == 1 and not rep.converged


def test_bp_scale_invariant():
    rng = np.random.default_rng(5)
    R = orthonormal_rows(rng, 4, 9)
    s0 = plant(rng, 9, 1)
    a, _ = basis_pursuit(R, R @ s0)
    b, _ = basis_pursuit(R, R @ (1e6 * s0))
    np.testing.assert_allclose(b, 1e6 * a, rtol=1e-9, atol=1e-3)


def _instances(rng, count):
    """Annihilators from random and designed layouts with a positive outlier budget."""
    out = []
    while len(out) < count:
        m = int(rng.integers(6, 16))
        if rng.random() < 0.5:
            R, _ = design_low_coherence(m, 2, seed=int(rng.integers(2**31)))
        else:
            R = annihilator(random_anchors(rng, m))
        k_max = budget_from_coherence(coherence(R), R.shape[1]).k_max
        if k_max >= 1:
            out.append((R, int(rng.integers(1, k_max + 1))))
    return out


def test_recovery_guarantee_sweep():
    # the coherence guarantee is for unit-norm columns, hence the weights
    rng = np.random.default_rng(2024)
    instances = _instances(rng, 200)
    l0_checked = 0
    for R, k in instances:
        n = R.shape[1]
        s0 = plant(rng, n, k, magnitude=10.0 ** rng.integers(0, 7))
        s, _ = basis_pursuit(R, R @ s0, weights=np.linalg.norm(R, axis=0))
        assert np.linalg.norm(s - s0) <= 1e-6 * max(1.0, np.linalg.norm(s0))
        if n <= 8:
            np.testing.assert_allclose(s, l0_oracle(R, R @ s0, k), atol=1e-6 * max(1.0, np.linalg.norm(s0)))
            l0_checked += 1
    assert l0_checked > 0


def test_plain_l1_can_miss_outlier_on_short_column():
    # k = 1 is below the coherence bound, but column 1 is much shorter than
    # the others; plain l1 prefers a spread-out solution, the weighted one
    # (unit-norm columns) recovers the outlier
    R = np.array([
        [0.6, 0.1, 0.0, 0.0, 0.0, -0.7],
        [0.0, 0.1, 0.6, -0.7, 0.0, 0.0],
        [-0.4, 0.1, 0.0, 0.3, 0.8, 0.0],
    ])
    s0 = np.array([0.0, 100.0, 0.0, 0.0, 0.0, 0.0])
    mu = coherence(R)
    assert 1 < 0.5 * (1 + 1 / mu)
    plain, _ = basis_pursuit(R, R @ s0)
    weighted, _ = basis_pursuit(R, R @ s0, weights=np.linalg.norm(R, axis=0))
    assert np.abs(plain).sum() < np.abs(s0).sum() - 1.0
    np.testing.assert_allclose(weighted, s0, atol=1e-6)


def test_weighted_bp_validation():
    with pytest.raises(DomainError):
        basis_pursuit(np.eye(2), np.ones(2), weights=[1.0, 0.0])


# group minimum norm

def test_group_min_norm_zero_columns_iff_annihilated():
    rng = np.random.default_rng(0)
    anchors = random_anchors(rng, 8)
    R = annihilator(anchors)
    from robustloc.geometry import build_system

    Xa = build_system(anchors).augmented
    M = Xa @ rng.standard_normal((3, 6))
    M[:, 2] += 50.0 * np.eye(7)[3]
    S = group_min_norm(R, M)
    norms = np.linalg.norm(S, axis=0)
    nonzero = norms > 1e-10 * np.linalg.norm(M, axis=0)
    assert list(np.flatnonzero(nonzero)) == [2]
    np.testing.assert_allclose(norms, np.linalg.norm(R @ M, axis=0), rtol=1e-12, atol=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_group_min_norm_is_min_norm_solution(seed):
    rng = np.random.default_rng(seed)
    R = orthonormal_rows(rng, 3, 7)
    M = rng.standard_normal((7, 4))
    S = group_min_norm(R, M)
    np.testing.assert_allclose(S, np.linalg.pinv(R) @ (R @ M), atol=1e-10)
    np.testing.assert_allclose(R @ S, R @ M, atol=1e-10)


def test_group_min_norm_general_rows():
    rng = np.random.default_rng(1)
    R = rng.standard_normal((3, 6))
    M = rng.standard_normal((6, 2))
    np.testing.assert_allclose(group_min_norm(R, M), np.linalg.pinv(R) @ R @ M, atol=1e-10)


def test_group_min_norm_shape():
    with pytest.raises(ShapeError):
        group_min_norm(np.eye(3), np.ones((4, 2)))


# proximal maps

def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([-3.0, 0.5, 2.0]), 1.0), [-2.0, 0.0, 1.0])


def test_group_shrink():
    Z = np.array([[3.0, 0.0, 0.1], [4.0, 0.0, 0.0]])
    out = group_shrink(Z, 1.0)
    np.testing.assert_allclose(out[:, 0], [2.4, 3.2])
    np.testing.assert_array_equal(out[:, 1:], 0)


def test_svt_thresholds_singular_values():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 6))
    out, s = svt(A, 0.5)
    np.testing.assert_allclose(np.linalg.svd(out, compute_uv=False)[: (s > 0).sum()], s[s > 0], atol=1e-12)
    np.testing.assert_allclose(s, np.maximum(np.linalg.svd(A, compute_uv=False) - 0.5, 0))


# srpca

def _low_rank_plus_columns(seed, p=8, n=40, rank=2, bad=(3, 17)):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((p, rank)) @ rng.standard_normal((rank, n))
    C = np.zeros_like(L)
    C[:, list(bad)] = 5.0 * rng.standard_normal((p, len(bad)))
    return L + C


def test_srpca_rank_one_large_lambda():
    rng = np.random.default_rng(0)
    F = np.outer(rng.uniform(1, 2, 6), rng.uniform(1, 2, 30))
    Fo, S, rep = srpca(F, 50.0)
    assert rep.converged
    assert np.linalg.norm(S) == 0.0
    np.testing.assert_allclose(Fo, F, rtol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_srpca_planted_columns(seed):
    F = _low_rank_plus_columns(seed)
    _, S, _ = srpca(F, 2.0)
    top = np.argsort(-np.linalg.norm(S, axis=0))[:2]
    assert sorted(top) == [3, 17]


def test_srpca_small_lambda_degenerate_split():
    F = _low_rank_plus_columns(1)
    Fo, S, _ = srpca(F, 1e-4)
    assert np.linalg.norm(Fo) <= 1e-3 * np.linalg.norm(F)
    assert np.linalg.norm(S - F) <= 1e-3 * np.linalg.norm(F)


@pytest.mark.parametrize("seed", range(5))
def test_srpca_residual_monotone_after_burn_in(seed):
    F = _low_rank_plus_columns(seed)
    for lam in (1.0, 2.0, 5.0):
        _, _, rep = srpca(F, lam, keep_history=True)
        res = np.array([h[1] for h in rep.history])
        assert np.all(np.diff(res[10:]) <= 1e-12)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0])
def test_srpca_converged_solution_feasible_and_no_worse_than_trivial_splits(lam):
    F = _low_rank_plus_columns(2)
    Fo, S, rep = srpca(F, lam)
    assert rep.converged
    assert np.linalg.norm(Fo + S - F) <= SRPCA_DEFAULTS.tol * np.linalg.norm(F) * 1.0001
    w = lam / np.sqrt(max(F.shape))

    def obj(A, B):
        return np.linalg.svd(A, compute_uv=False).sum() + w * np.linalg.norm(B, axis=0).sum()

    slack = 1e-4 * np.linalg.norm(F)
    assert obj(Fo, S) <= min(obj(F, 0 * F), obj(0 * F, F)) + slack


def test_srpca_unit_argument():
    F = _low_rank_plus_columns(0)
    a = srpca(F, 2.0)
    b = srpca(F, 2.0 / np.sqrt(40), unit=1.0)
    np.testing.assert_allclose(a[1], b[1], atol=1e-10)
    with pytest.raises(DomainError):
        srpca(F, 1.0, unit=0.0)
    with pytest.raises(DomainError):
        srpca(F, 0.0)


def test_srpca_weight_at_least_one_zeroes_s():
    # ||S||_* <= ||S||_{1,2}, so a unit weight already makes S = 0 optimal
    F = _low_rank_plus_columns(3)
    _, S, _ = srpca(F, 1.0, unit=1.0)
    assert np.linalg.norm(S) <= 1e-12 * np.linalg.norm(F)


def test_srpca_zero_matrix():
    Fo, S, rep = srpca(np.zeros((3, 4)), 1.0)
    assert not Fo.any() and not S.any() and rep.converged


def test_srpca_deterministic():
    F = _low_rank_plus_columns(4)
    a = srpca(F, 2.0)
    b = srpca(F.copy(), 2.0)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
