"""Testes das metricas (MCC, Amari), da recuperacao de fontes e do FastICA."""

import numpy as np
import pytest

from metrics import amari_distance, evaluate, fastica_baseline, mcc, recover_sources
from model import InputError, MixingMatrix, NumericError, SignedPermutation
from structure import givens_matrix


def _amari_laco(a_hat: np.ndarray, a_true: np.ndarray) -> float:
    p = np.abs(np.linalg.inv(a_hat) @ a_true)
    n = p.shape[0]
    total = 0.0
    for i in range(n):
        total += sum(p[i, j] for j in range(n)) / max(p[i, j] for j in range(n)) - 1.0
    for j in range(n):
        total += sum(p[i, j] for i in range(n)) / max(p[i, j] for i in range(n)) - 1.0
    return total / (2.0 * n)


def _mistura(rng: np.random.Generator, n: int) -> MixingMatrix:
    return MixingMatrix(np.eye(n) + 0.5 * rng.normal(size=(n, n)))


# ==============================================================================
# RECUPERACAO DE FONTES
# ==============================================================================

def testar_recuperacao_identidade_e_verdade():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 4))
    np.testing.assert_allclose(recover_sources(MixingMatrix(np.eye(4)), x), x)

    a = _mistura(rng, 4)
    s = rng.normal(size=(30, 4))
    np.testing.assert_allclose(recover_sources(a, s @ a.entries.T), s, atol=1e-10)


def testar_recuperacao_com_permutacao_com_sinal():
    rng = np.random.default_rng(1)
    a = _mistura(rng, 4)
    s = rng.normal(size=(30, 4))
    pi = SignedPermutation((2, 0, 3, 1), (1, -1, 1, -1))
    s_hat = recover_sources(MixingMatrix(pi.apply(a.entries)), s @ a.entries.T)
    np.testing.assert_allclose(s_hat, pi.apply(s), atol=1e-10)


def testar_recuperacao_singular():
    with pytest.raises(NumericError):
        recover_sources(MixingMatrix(np.array([[1.0, 2.0], [2.0, 4.0]])), np.ones((5, 2)))


# ==============================================================================
# MCC
# ==============================================================================

def testar_mcc_invariancias():
    rng = np.random.default_rng(2)
    s = rng.normal(size=(500, 4))
    assert mcc(s, s) == pytest.approx(1.0)
    assert mcc(s, -s[:, ::-1]) == pytest.approx(1.0)
    assert mcc(s, s * np.array([2.0, 0.5, 3.0, 1.0])) == pytest.approx(1.0)


def testar_mcc_ruido_independente():
    rng = np.random.default_rng(3)
    assert mcc(rng.normal(size=(10_000, 10)), rng.normal(size=(10_000, 10))) <= 0.15


def testar_mcc_variancia_nula():
    s = np.random.default_rng(4).normal(size=(50, 2))
    s_hat = s.copy()
    s_hat[:, 1] = 1.0
    with pytest.raises(InputError):
        mcc(s, s_hat)


def testar_mcc_shapes_diferentes():
    with pytest.raises(InputError):
        mcc(np.ones((10, 2)), np.ones((10, 3)))


# ==============================================================================
# AMARI
# ==============================================================================

def testar_amari_zero_para_equivalentes():
    rng = np.random.default_rng(5)
    a = _mistura(rng, 5)
    assert amari_distance(a, a) == pytest.approx(0.0, abs=1e-12)
    q = SignedPermutation((4, 2, 0, 1, 3), (-1, 1, 1, -1, 1)).matrix() * np.array([2.0, 0.3, 1.0, 5.0, 0.7])
    assert amari_distance(MixingMatrix(a.entries @ q), a) == pytest.approx(0.0, abs=1e-10)


def testar_amari_positivo_para_rotacao():
    a = _mistura(np.random.default_rng(6), 4)
    rotacionada = MixingMatrix(a.entries @ givens_matrix(4, 0, 2, np.pi / 5))
    assert amari_distance(rotacionada, a) > 0.0


def testar_amari_implementacao_independente():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a_hat, a_true = rng.normal(size=(10, 10)), rng.normal(size=(10, 10))
        d = amari_distance(MixingMatrix(a_hat), MixingMatrix(a_true))
        assert d > 0.0
        assert d == pytest.approx(_amari_laco(a_hat, a_true), rel=1e-8)


def testar_amari_singular():
    with pytest.raises(NumericError):
        amari_distance(MixingMatrix(np.array([[1.0, 1.0], [1.0, 1.0]])), MixingMatrix(np.eye(2)))


# ==============================================================================
# EVALUATE
# ==============================================================================

def testar_evaluate_recupera_permutacao():
    rng = np.random.default_rng(8)
    a = _mistura(rng, 4)
    s = rng.exponential(size=(400, 4)) - 1.0
    pi = SignedPermutation((1, 3, 0, 2), (-1, 1, 1, -1))
    a_hat = MixingMatrix(pi.apply(a.entries))
    relatorio = evaluate(a_hat, a, s @ a.entries.T)
    assert relatorio.mcc == pytest.approx(1.0)
    assert relatorio.amari == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(relatorio.matched_perm.apply(a_hat.entries), a.entries, atol=1e-12)


# ==============================================================================
# FASTICA
# ==============================================================================

def testar_fastica_fontes_uniformes():
    rng = np.random.default_rng(9)
    s = rng.uniform(-np.sqrt(3), np.sqrt(3), size=(20_000, 2))
    a = MixingMatrix(np.array([[1.0, 0.6], [0.4, 1.0]]))
    x = s @ a.entries.T
    resultado = fastica_baseline(x, seed=0)
    assert resultado.converged
    assert resultado.n_iter <= 500
    assert mcc(s, recover_sources(resultado.mixing, x)) >= 0.95


def testar_fastica_uma_fonte_gaussiana():
    rng = np.random.default_rng(10)
    s = np.column_stack([rng.normal(size=20_000), rng.uniform(-np.sqrt(3), np.sqrt(3), size=20_000)])
    a = MixingMatrix(np.array([[1.0, -0.5], [0.3, 1.0]]))
    x = s @ a.entries.T
    resultado = fastica_baseline(x, seed=1)
    assert mcc(s, recover_sources(resultado.mixing, x)) >= 0.9


def testar_fastica_mistura_reproduz_covariancia():
    rng = np.random.default_rng(11)
    x = (rng.exponential(size=(5000, 3)) - 1.0) @ _mistura(rng, 3).entries.T
    resultado = fastica_baseline(x, seed=2)
    xc = x - x.mean(axis=0)
    np.testing.assert_allclose(resultado.mixing.entries @ resultado.mixing.entries.T,
                               xc.T @ xc / x.shape[0], atol=1e-8)


def testar_fastica_exige_mais_amostras_que_fontes():
    with pytest.raises(InputError):
        fastica_baseline(np.ones((3, 3)))


def testar_fastica_sem_convergencia_sinalizada():
    rng = np.random.default_rng(12)
    x = (rng.exponential(size=(2000, 3)) - 1.0) @ _mistura(rng, 3).entries.T
    resultado = fastica_baseline(x, seed=0, max_iter=1)
    assert not resultado.converged
    assert resultado.n_iter == 1
    assert resultado.mixing.n == 3
