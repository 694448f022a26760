"""Testes das conversoes A <-> (B, Omega) e dos checadores de grafo."""

import numpy as np
import pytest

from causal import a_to_sem, dag_check, mec_is_singleton, permuted_cholesky_factor, sem_gram, sem_to_a
from model import (
    CovarianceMatrix,
    InputError,
    MixingMatrix,
    NumericError,
    SemModel,
    SignedPermutation,
    SupportPattern,
    permutation_matrix,
    signed_perm_equivalent,
)
from simulate import SimConfig, sample_mixing
from structure import check_lower_triangularizable, check_structural_variability, perfect_matching


def _dag_aleatorio(rng: np.random.Generator, n: int) -> SemModel:
    b = np.tril(rng.uniform(0.2, 0.8, size=(n, n)) * rng.choice([-1.0, 1.0], size=(n, n))
                * (rng.random((n, n)) < 0.5), k=-1).T
    perm = rng.permutation(n)
    return SemModel(b[np.ix_(perm, perm)], rng.uniform(0.5, 2.0, size=n))


def testar_a_to_sem_identidade_e_escala():
    m, pi = a_to_sem(MixingMatrix(np.eye(3)))
    np.testing.assert_array_equal(m.b, np.zeros((3, 3)))
    np.testing.assert_array_equal(m.omega, np.ones(3))
    assert pi == SignedPermutation.identity(3)

    m2, _ = a_to_sem(MixingMatrix(2.0 * np.eye(3)))
    np.testing.assert_array_equal(m2.b, np.zeros((3, 3)))
    np.testing.assert_allclose(m2.omega, np.full(3, 0.25))


def testar_a_to_sem_singular():
    with pytest.raises(NumericError):
        a_to_sem(MixingMatrix(np.array([[1.0, 2.0], [2.0, 4.0]])))


def testar_a_to_sem_em_misturas_validas():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        a = sample_mixing(SimConfig(n=n, t=2), rng)
        m, pi = a_to_sem(a)
        assert dag_check(m.b)
        volta = sem_to_a(m)
        np.testing.assert_allclose(volta.entries, pi.apply(a.entries), atol=1e-12)
        assert signed_perm_equivalent(volta, a, 1e-10) is not None


def testar_sem_to_a_exemplos():
    np.testing.assert_array_equal(sem_to_a(SemModel(np.zeros((3, 3)), np.ones(3))).entries, np.eye(3))
    b = np.zeros((3, 3))
    b[0, 1] = 0.5
    b[1, 2] = -0.4
    a = sem_to_a(SemModel(b, np.ones(3))).entries
    assert np.all(np.triu(a, k=2) == 0) and np.all(np.tril(a, k=-1) == 0)


def testar_sem_gram_identidade_algebrica():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = _dag_aleatorio(rng, int(rng.integers(2, 7)))
        a = sem_to_a(m).entries
        np.testing.assert_allclose(sem_gram(m), a @ a.T, atol=1e-12)


def testar_ida_e_volta_em_modelos_dag():
    rng = np.random.default_rng(2)
    for _ in range(100):
        m = _dag_aleatorio(rng, int(rng.integers(2, 7)))
        m2, pi = a_to_sem(sem_to_a(m))
        assert pi == SignedPermutation.identity(m.n)
        np.testing.assert_allclose(m2.b, m.b, atol=1e-12)
        np.testing.assert_allclose(m2.omega, m.omega, rtol=1e-12)


def testar_conversao_preserva_esparsidade_e_covariancia():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        a = sample_mixing(SimConfig(n=n, t=2), rng)
        m, _ = a_to_sem(a)
        assert a.l0() == int(np.sum(m.b != 0)) + n
        np.testing.assert_allclose(sem_gram(m), a.entries @ a.entries.T, atol=1e-8)
        volta = sem_to_a(m).entries
        np.testing.assert_allclose(volta @ volta.T, a.entries @ a.entries.T, atol=1e-8)


# ==============================================================================
# DAG E CLASSE DE EQUIVALENCIA
# ==============================================================================

def testar_dag_check():
    assert dag_check(np.tril(np.ones((4, 4)), k=-1))
    ciclo = np.zeros((2, 2))
    ciclo[0, 1] = ciclo[1, 0] = 0.5
    assert not dag_check(ciclo)
    with pytest.raises(InputError):
        dag_check(np.eye(2))


def testar_mec_exemplos():
    assert mec_is_singleton(np.zeros((3, 3)))
    aresta = np.zeros((2, 2))
    aresta[0, 1] = 0.7
    assert not mec_is_singleton(aresta)
    v_estrutura = np.zeros((3, 3))
    v_estrutura[0, 2] = 0.5
    v_estrutura[1, 2] = -0.5
    assert mec_is_singleton(v_estrutura)


def testar_mec_rejeita_ciclo():
    ciclo = np.zeros((2, 2))
    ciclo[0, 1] = ciclo[1, 0] = 0.5
    with pytest.raises(InputError):
        mec_is_singleton(ciclo)


def testar_hipoteses_equivalem_a_dag_com_mec_unitaria():
    rng = np.random.default_rng(4)
    testados = 0
    while testados < 1000:
        n = int(rng.integers(2, 7))
        if testados % 2 == 0:
            a = sample_mixing(SimConfig(n=n, t=2, edge_prob=0.5), rng)
        else:
            mask = (rng.random((n, n)) < 0.4) | np.eye(n, dtype=bool)
            mask = mask[:, rng.permutation(n)]
            a = MixingMatrix(np.where(mask, rng.uniform(0.2, 0.8, size=(n, n)), 0.0))
            if perfect_matching(mask) is None or not a.is_nonsingular():
                continue
        testados += 1
        xi = SupportPattern(a.entries != 0)
        hipoteses = check_structural_variability(xi) and check_lower_triangularizable(xi)
        m, _ = a_to_sem(a)
        causal = dag_check(m.b) and mec_is_singleton(m.b)
        assert hipoteses == causal


# ==============================================================================
# CHOLESKY PERMUTADO
# ==============================================================================

def testar_cholesky_identidade():
    fator = permuted_cholesky_factor(CovarianceMatrix(np.eye(4)), [2, 0, 3, 1])
    np.testing.assert_allclose(fator.entries, np.eye(4))


def testar_cholesky_recupera_triangular():
    rng = np.random.default_rng(5)
    verdade = np.tril(rng.normal(size=(4, 4)))
    np.fill_diagonal(verdade, np.abs(np.diag(verdade)) + 0.5)
    fator = permuted_cholesky_factor(CovarianceMatrix(verdade @ verdade.T), [0, 1, 2, 3])
    np.testing.assert_allclose(fator.entries, verdade, atol=1e-10)


def testar_cholesky_permutado_identifica_verdade():
    rng = np.random.default_rng(6)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        base = np.tril(rng.uniform(0.2, 0.8, size=(n, n)) * (rng.random((n, n)) < 0.6))
        np.fill_diagonal(base, rng.uniform(0.5, 1.5, size=n))
        p1 = rng.permutation(n).tolist()
        q = SignedPermutation(tuple(rng.permutation(n).tolist()), tuple(rng.choice([-1, 1], size=n).tolist()))
        verdade = q.apply(permutation_matrix(p1) @ base)
        fator = permuted_cholesky_factor(CovarianceMatrix(verdade @ verdade.T), p1)
        estimada = MixingMatrix(permutation_matrix(p1) @ fator.entries)
        assert signed_perm_equivalent(estimada, MixingMatrix(verdade), 1e-8) is not None


def testar_cholesky_nao_definida_positiva():
    with pytest.raises(NumericError):
        permuted_cholesky_factor(CovarianceMatrix(np.diag([1.0, 0.0])), [0, 1])
