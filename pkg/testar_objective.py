"""Testes dos termos do objetivo: valores de referencia e gradientes por diferencas finitas."""

import numpy as np
import pytest

from model import CovarianceMatrix, InputError, MixingMatrix, NumericError, SignedPermutation
from objective import (
    GMode,
    McpParams,
    bic_score,
    decomposition_residual_eval,
    g_eval,
    mcp_eval,
    nll_eval,
)


def _gradiente_numerico(funcao, a: np.ndarray) -> np.ndarray:
    grad = np.zeros_like(a)
    for idx in np.ndindex(a.shape):
        h = 1e-6 * (1.0 + abs(a[idx]))
        mais, menos = a.copy(), a.copy()
        mais[idx] += h
        menos[idx] -= h
        grad[idx] = (funcao(mais) - funcao(menos)) / (2.0 * h)
    return grad


def _erro_relativo(analitico: np.ndarray, numerico: np.ndarray) -> float:
    return float(np.linalg.norm(analitico - numerico) / max(np.linalg.norm(numerico), 1e-8))


def _sigma_aleatoria(rng: np.random.Generator, n: int, t: int = 100) -> CovarianceMatrix:
    b = rng.normal(size=(n, n))
    return CovarianceMatrix(b @ b.T + 0.5 * np.eye(n), sample_count=t)


# ==============================================================================
# g(A)
# ==============================================================================

def testar_g_triangular_inferior_e_nulo():
    a = np.tril(np.random.default_rng(0).normal(size=(5, 5)))
    for mode in GMode:
        av = g_eval(a, mode)
        assert av.value == 0.0
        np.testing.assert_array_equal(av.gradient, np.zeros((5, 5)))


def testar_g_dois_por_dois():
    a, b = 0.7, -1.3
    for mode in GMode:
        assert g_eval(np.array([[0.0, a], [b, 0.0]]), mode).value == pytest.approx(2 * a ** 2 * b ** 2)


def testar_g_n1():
    assert g_eval(np.array([[3.0]])).value == 0.0


def testar_g_modos_concordam():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(2, 21))
        a = rng.normal(scale=0.3, size=(n, n))
        ingenuo = g_eval(a, GMode.NAIVE)
        quadrados = g_eval(a, GMode.LOG_SQUARING)
        assert quadrados.value == pytest.approx(ingenuo.value, rel=1e-10, abs=1e-300)
        np.testing.assert_allclose(quadrados.gradient, ingenuo.gradient, rtol=1e-10, atol=1e-14)


def testar_g_invariante_a_permutacao_simultanea():
    rng = np.random.default_rng(2)
    a = rng.normal(scale=0.5, size=(6, 6))
    perm = rng.permutation(6)
    assert g_eval(a[np.ix_(perm, perm)]).value == pytest.approx(g_eval(a).value, rel=1e-12)
    assert g_eval(a).value >= 0.0


def testar_g_gradiente_diferencas_finitas():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.normal(scale=0.5, size=(6, 6))
        analitico = g_eval(a).gradient
        numerico = _gradiente_numerico(lambda x: g_eval(x).value, a)
        assert _erro_relativo(analitico, numerico) < 1e-5
        assert np.all(np.diag(analitico) == 0.0)


# ==============================================================================
# MCP
# ==============================================================================

def testar_mcp_valores_de_referencia():
    p = McpParams(lam=1.0, alpha=40.0)
    assert mcp_eval(np.array([[0.5]]), p).value == pytest.approx(0.496875)
    fora = mcp_eval(np.array([[50.0]]), p)
    assert fora.value == pytest.approx(40.0 / 2.0)
    assert fora.gradient[0, 0] == 0.0
    zero = mcp_eval(np.zeros((3, 3)), p)
    assert zero.value == 0.0
    np.testing.assert_array_equal(zero.gradient, np.zeros((3, 3)))


def testar_mcp_parametros_invalidos():
    with pytest.raises(InputError):
        McpParams(lam=-1.0, alpha=1.0)
    with pytest.raises(InputError):
        McpParams(lam=1.0, alpha=0.0)
    with pytest.raises(InputError):
        McpParams(lam=float('inf'), alpha=1.0)


def testar_mcp_gradiente_longe_das_quinas():
    p = McpParams(lam=1.0, alpha=2.0)
    rng = np.random.default_rng(4)
    for _ in range(20):
        mag = rng.uniform(0.1, 3.0, size=(6, 6))
        mag = np.where(np.abs(mag - p.knee) < 1e-3, mag + 0.01, mag)
        a = mag * rng.choice([-1.0, 1.0], size=(6, 6))
        numerico = _gradiente_numerico(lambda x: mcp_eval(x, p).value, a)
        assert _erro_relativo(mcp_eval(a, p).gradient, numerico) < 1e-5


# ==============================================================================
# VEROSSIMILHANCA
# ==============================================================================

def testar_nll_identidade():
    n = 4
    sigma = CovarianceMatrix(np.eye(n), sample_count=2)
    assert nll_eval(np.eye(n), sigma, averaged=False).value == pytest.approx(n)
    assert nll_eval(np.eye(n), sigma, averaged=True).value == pytest.approx(n / 2.0)


def testar_nll_estacionaria_na_verdade():
    rng = np.random.default_rng(5)
    a = np.eye(5) + 0.3 * rng.normal(size=(5, 5))
    t = 1000
    sigma = CovarianceMatrix(a @ a.T, sample_count=t)
    assert np.linalg.norm(nll_eval(a, sigma, averaged=False).gradient) <= 1e-8 * t


def testar_nll_gradiente_diferencas_finitas():
    rng = np.random.default_rng(6)
    for _ in range(20):
        a = np.eye(5) + 0.3 * rng.normal(size=(5, 5))
        sigma = _sigma_aleatoria(rng, 5)
        for averaged in (True, False):
            numerico = _gradiente_numerico(lambda x: nll_eval(x, sigma, averaged).value, a)
            assert _erro_relativo(nll_eval(a, sigma, averaged).gradient, numerico) < 1e-5


def testar_nll_invariante_a_permutacao_com_sinal():
    rng = np.random.default_rng(7)
    a = np.eye(4) + 0.4 * rng.normal(size=(4, 4))
    sigma = _sigma_aleatoria(rng, 4)
    pi = SignedPermutation((3, 1, 0, 2), (-1, 1, -1, 1))
    assert nll_eval(pi.apply(a), sigma).value == pytest.approx(nll_eval(a, sigma).value, rel=1e-10)


def testar_nll_singular():
    sigma = CovarianceMatrix(np.eye(2), sample_count=10)
    with pytest.raises(NumericError) as info:
        nll_eval(np.array([[1.0, 2.0], [2.0, 4.0]]), sigma)
    assert info.value.condition is not None


def testar_nll_total_exige_amostras():
    with pytest.raises(InputError):
        nll_eval(np.eye(2), CovarianceMatrix(np.eye(2)), averaged=False)


# ==============================================================================
# RESIDUO DE DECOMPOSICAO
# ==============================================================================

def testar_residuo_valores_de_referencia():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(4, 4))
    exato = decomposition_residual_eval(a, CovarianceMatrix(a @ a.T))
    assert exato.value == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_allclose(exato.gradient, np.zeros((4, 4)), atol=1e-12)
    assert decomposition_residual_eval(np.zeros((3, 3)), CovarianceMatrix(np.eye(3))).value == 3.0


def testar_residuo_gradiente_diferencas_finitas():
    rng = np.random.default_rng(9)
    for _ in range(20):
        a = rng.normal(size=(6, 6))
        sigma = _sigma_aleatoria(rng, 6)
        numerico = _gradiente_numerico(lambda x: decomposition_residual_eval(x, sigma).value, a)
        assert _erro_relativo(decomposition_residual_eval(a, sigma).gradient, numerico) < 1e-5


def testar_residuo_shapes_diferentes():
    with pytest.raises(InputError):
        decomposition_residual_eval(np.eye(2), CovarianceMatrix(np.eye(3)))


# ==============================================================================
# BIC
# ==============================================================================

def testar_bic_identidade():
    n, t = 3, 7
    sigma = CovarianceMatrix(np.eye(n), sample_count=t)
    esperado = (t / 2.0) * n + 0.5 * n * np.log(t)
    assert bic_score(MixingMatrix(np.eye(n)), sigma) == pytest.approx(esperado)


def testar_bic_prefere_verdade_esparsa():
    verdade = np.array([[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.5, 1.0]])
    c, s = np.cos(0.3), np.sin(0.3)
    g = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    densa = verdade @ g
    sigma = CovarianceMatrix(verdade @ verdade.T, sample_count=1000)
    assert MixingMatrix(densa).l0() > MixingMatrix(verdade).l0()
    assert bic_score(MixingMatrix(verdade), sigma) < bic_score(MixingMatrix(densa), sigma)


def testar_bic_limiar_remove_penalidade():
    t = 500
    a = MixingMatrix(np.array([[1.0, 0.005], [0.0, 1.0]]))
    sigma = CovarianceMatrix(np.eye(2), sample_count=t)
    diferenca = bic_score(a, sigma, zero_tol=0.001) - bic_score(a, sigma, zero_tol=0.01)
    assert diferenca == pytest.approx(0.5 * np.log(t))


def testar_bic_exige_amostras():
    with pytest.raises(InputError):
        bic_score(MixingMatrix(np.eye(2)), CovarianceMatrix(np.eye(2)))
