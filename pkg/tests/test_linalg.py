import numpy as np
import pytest

from corrlab.errors import DimensionMismatch, IndefiniteMatrix, UnknownName
from corrlab.linalg import (PROFILES, Tolerances, as_sym, eig_sym, gram_factor, hadamard,
                            is_psd, min_eig, nullspace_basis, numerical_rank, singular_rank,
                            truncate_psd)


def test_tolerance_defaults():
    tol = Tolerances()
    assert tol.rank_rel == 1e-7
    assert tol.null_rel == 1e-8
    assert tol.tight_abs == 1e-7
    assert tol.sdp_gap == 1e-9
    assert tol.psd_abs == 1e-8
    assert tol.feas_abs == 1e-9


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerances(rank_rel=0.0)
    with pytest.raises(ValueError):
        Tolerances(psd_abs=-1e-8)
    with pytest.raises(ValueError):
        Tolerances(rank_rel=1.5)


def test_tolerance_replace_ignores_none():
    tol = Tolerances().replace(rank_rel=1e-6, tight_abs=None)
    assert tol.rank_rel == 1e-6
    assert tol.tight_abs == 1e-7


def test_tolerance_profiles(monkeypatch):
    strict = Tolerances.from_profile('strict')
    assert strict.as_dict() == dict(Tolerances().as_dict(), **PROFILES['strict'])
    assert strict.sdp_gap < strict.psd_abs
    with pytest.raises(UnknownName):
        Tolerances.from_profile('loose')
    monkeypatch.setenv('CORRLAB_TOL_PROFILE', 'strict')
    assert Tolerances.from_env() == strict
    monkeypatch.delenv('CORRLAB_TOL_PROFILE')
    assert Tolerances.from_env() == Tolerances()


def test_as_sym_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        as_sym(np.zeros((2, 3)))
    with pytest.raises(DimensionMismatch):
        as_sym(np.zeros((0, 0)))


def test_eig_sym_order_and_reconstruction():
    w, V = eig_sym(np.ones((2, 2)))
    assert np.allclose(w, [2.0, 0.0])
    assert np.isclose(abs(V[0, 0]), 1 / np.sqrt(2))
    assert np.isclose(V[0, 0], V[1, 0])

    rng = np.random.default_rng(3)
    B = rng.normal(size=(5, 5))
    M = B + B.T
    w, V = eig_sym(M)
    assert np.all(np.diff(w) <= 0)
    assert np.allclose((V * w) @ V.T, M, atol=1e-12)
    assert np.allclose(V.T @ V, np.eye(5), atol=1e-12)


def test_ranks_of_reference_completions(chsh_hat, my_hat):
    tol = Tolerances()
    assert numerical_rank(np.zeros((3, 3)), tol) == 0
    assert numerical_rank(np.eye(4), tol) == 4
    assert numerical_rank(chsh_hat, tol) == 2
    assert numerical_rank(hadamard(chsh_hat, chsh_hat), tol) == 3
    assert numerical_rank(my_hat, tol) == 2
    assert singular_rank(np.ones((2, 3)), tol) == 1


def test_rank_plus_nullity_is_dimension():
    rng = np.random.default_rng(11)
    for k in range(1, 6):
        G = rng.normal(size=(6, k))
        M = G @ G.T
        assert numerical_rank(M) == k
        assert numerical_rank(M) + nullspace_basis(M).shape[1] == 6


def test_nullspace_of_identity_is_empty():
    assert nullspace_basis(np.eye(4)).shape == (4, 0)


def test_nullspace_spans_dual_vectors(chsh_hat, my_hat, my_null):
    v1 = np.array([1 / np.sqrt(2), 1 / np.sqrt(2), -1, 0])
    v2 = np.array([1 / np.sqrt(2), -1 / np.sqrt(2), 0, -1])
    N = nullspace_basis(chsh_hat)
    assert N.shape == (4, 2)
    assert np.allclose(N.T @ N, np.eye(2), atol=1e-12)
    for v in (v1, v2):
        assert np.allclose(N @ (N.T @ v), v, atol=1e-10)

    N = nullspace_basis(my_hat)
    assert N.shape == (6, 4)
    for v in my_null:
        assert np.allclose(N @ (N.T @ v), v, atol=1e-10)


def test_gram_factor(chsh_hat):
    G = gram_factor(np.eye(2))
    assert G.shape == (2, 2)
    assert np.allclose(G @ G.T, np.eye(2))

    G = gram_factor(np.ones((3, 3)))
    assert G.shape == (3, 1)
    assert np.allclose(np.abs(G), 1.0)
    assert np.allclose(G, G[0])

    G = gram_factor(chsh_hat)
    assert G.shape == (4, 2)
    assert np.allclose(np.linalg.norm(G, axis=1), 1.0)
    assert np.allclose(G @ G.T, chsh_hat, atol=1e-12)


def test_gram_factor_random_psd():
    rng = np.random.default_rng(5)
    B = rng.normal(size=(5, 3))
    M = B @ B.T
    G = gram_factor(M)
    assert G.shape == (5, 3)
    assert np.allclose(G @ G.T, M, atol=1e-10)


def test_gram_factor_rejects_indefinite():
    with pytest.raises(IndefiniteMatrix):
        gram_factor(np.diag([1.0, -0.5]))


def test_psd_helpers():
    assert is_psd(np.ones((3, 3)))
    assert not is_psd(np.diag([1.0, -1e-3]))
    assert np.isclose(min_eig(np.diag([3.0, -2.0, 1.0])), -2.0)
    T = truncate_psd(np.diag([1.0, 1e-12, -1e-12]))
    assert np.allclose(T, np.diag([1.0, 0.0, 0.0]))


def test_hadamard():
    M = np.array([[1.0, 0.5], [0.5, 1.0]])
    assert np.allclose(hadamard(np.eye(2), M), np.eye(2))
    assert np.allclose(hadamard(np.ones((2, 2)), M), M)
    with pytest.raises(DimensionMismatch):
        hadamard(np.eye(2), np.eye(3))
