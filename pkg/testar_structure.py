"""Testes dos checadores estruturais, das rotacoes de suporte e do jacobiano."""

import itertools

import numpy as np
import pytest

from model import (
    CovarianceMatrix,
    InputError,
    MixingMatrix,
    SupportPattern,
    signed_perm_equivalent,
)
from objective import GMode, g_eval
from structure import (
    RotationKind,
    apply_support_rotation,
    assumption_report,
    check_column_subset,
    check_lower_triangularizable,
    check_structural_variability,
    check_zheng_assumption4,
    check_zheng_assumption5,
    covariance_jacobian,
    example1_equality_residual,
    example1_inequality_value,
    find_support_reduction,
    has_cycle,
    numeric_givens_reduce,
    perfect_matching,
    sparser_equivalent_rotation,
)

XI1 = SupportPattern.from_rows([[1, 0, 0], [1, 1, 0], [1, 0, 1]])
XI2 = SupportPattern.from_rows([[1, 0, 1], [1, 1, 0], [0, 1, 1]])


def _pesos(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    valores = rng.uniform(0.2, 0.8, size=mask.shape) * rng.choice([-1.0, 1.0], size=mask.shape)
    return np.where(mask, valores, 0.0)


def _triangularizavel_exaustivo(mask: np.ndarray) -> bool:
    """Existe (P1, P2) com P1^T A P2 triangular inferior? Busca sobre todas as colunas."""
    n = mask.shape[0]
    for cols in itertools.permutations(range(n)):
        m = mask[:, cols]
        ultima = [max(np.flatnonzero(linha), default=-1) for linha in m]
        # linhas ordenaveis: a i-esima menor "ultima coluna" deve ser <= i
        if all(u <= i for i, u in enumerate(sorted(ultima))):
            return True
    return False


def _simultaneo_exaustivo(mask: np.ndarray) -> bool:
    n = mask.shape[0]
    for perm in itertools.permutations(range(n)):
        m = mask[np.ix_(perm, perm)]
        if not np.any(np.triu(m, k=1)):
            return True
    return False


# ==============================================================================
# HIPOTESES SOBRE COLUNAS
# ==============================================================================

def testar_variabilidade_estrutural_exemplos():
    assert check_structural_variability(XI1)
    assert not check_structural_variability(SupportPattern.from_rows([[1, 1, 0], [1, 1, 0], [0, 0, 1]]))
    quatro_fontes = SupportPattern.from_rows([[1, 0, 1, 0], [0, 1, 1, 0], [0, 0, 1, 1], [0, 0, 0, 1]])
    assert check_structural_variability(quatro_fontes)


def testar_subconjunto_de_colunas():
    assert not check_column_subset(XI1)
    assert check_column_subset(SupportPattern(np.eye(4, dtype=bool)))
    assert not check_column_subset(SupportPattern.from_rows([[1, 1], [1, 1]]))


def testar_hipotese4_e_hipotese5():
    assert not check_zheng_assumption4(XI1)
    assert not check_zheng_assumption5(XI1)
    identidade = SupportPattern(np.eye(3, dtype=bool))
    assert check_zheng_assumption4(identidade)
    assert check_zheng_assumption5(identidade)
    assert not check_zheng_assumption5(SupportPattern(np.ones((3, 3), dtype=bool)))


def testar_hipotese4_limita_n():
    with pytest.raises(InputError):
        check_zheng_assumption4(SupportPattern(np.eye(13, dtype=bool)))


def testar_cadeia_de_implicacoes():
    rng = np.random.default_rng(7)
    for _ in range(2000):
        n = int(rng.integers(2, 6))
        xi = SupportPattern(rng.random((n, n)) < 0.5)
        subset = check_column_subset(xi)
        if check_zheng_assumption4(xi):
            assert subset
        if check_zheng_assumption5(xi):
            assert subset
        if subset:
            assert check_structural_variability(xi)


def testar_padrao_nao_quadrado():
    with pytest.raises(InputError):
        check_structural_variability(SupportPattern(np.ones((2, 3), dtype=bool)))


# ==============================================================================
# TRIANGULARIZACAO
# ==============================================================================

def testar_perfect_matching_e_ciclo():
    assert perfect_matching(np.array([[1, 1], [1, 0]], dtype=bool)) == [1, 0]
    assert perfect_matching(np.array([[1, 1], [0, 0]], dtype=bool)) is None
    assert has_cycle(np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=bool))
    assert not has_cycle(np.array([[0, 1, 1], [0, 0, 1], [0, 0, 0]], dtype=bool))


def testar_ciclo_laco_e_componentes_disjuntas():
    assert has_cycle(np.array([[1, 0], [0, 0]], dtype=bool))
    dois_ciclos = np.zeros((4, 4), dtype=bool)
    dois_ciclos[0, 1] = dois_ciclos[1, 0] = True
    dois_ciclos[2, 3] = True
    assert has_cycle(dois_ciclos)
    assert not has_cycle(np.zeros((3, 3), dtype=bool))


def testar_perfect_matching_concorda_com_permutacoes():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        mask = rng.random((n, n)) < 0.4
        existe = any(all(mask[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
        casamento = perfect_matching(mask)
        assert (casamento is not None) == existe
        if casamento is not None:
            assert sorted(casamento) == list(range(n))
            assert all(mask[i, casamento[i]] for i in range(n))


def testar_triangularizavel_exemplos():
    assert check_lower_triangularizable(XI1)
    assert not check_lower_triangularizable(XI2)
    # poliarvore: x1 <- s1; x2 <- s1, s2; x3 <- s2, s3
    poliarvore = MixingMatrix(np.array([[0.5, 0.0, 0.0], [0.3, 0.7, 0.0], [0.0, -0.4, 0.6]]))
    assert check_lower_triangularizable(poliarvore)


def testar_triangularizavel_singular():
    with pytest.raises(InputError):
        check_lower_triangularizable(SupportPattern.from_rows([[1, 1], [0, 0]]))


def testar_triangularizavel_concorda_com_busca_exaustiva():
    rng = np.random.default_rng(11)
    testados = 0
    while testados < 200:
        n = int(rng.integers(2, 6))
        mask = rng.random((n, n)) < 0.45
        if perfect_matching(mask) is None:
            continue
        testados += 1
        assert check_lower_triangularizable(SupportPattern(mask)) == _triangularizavel_exaustivo(mask)


def testar_g_nulo_sse_permutacao_simultanea():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        mask = rng.random((n, n)) < 0.3
        np.fill_diagonal(mask, True)
        a = _pesos(mask, rng)
        esperado = _simultaneo_exaustivo(mask)
        for mode in GMode:
            assert (g_eval(a, mode).value == 0.0) == esperado


# ==============================================================================
# ROTACOES DE SUPORTE
# ==============================================================================

def testar_rotacao_reduction():
    xi = SupportPattern.from_rows([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    out = apply_support_rotation(xi, 0, 0, 1)
    assert out.kind == RotationKind.REDUCTION
    esperado = np.array(xi.mask)
    esperado[0, 0] = False
    np.testing.assert_array_equal(out.pattern.mask, esperado)


def testar_rotacao_reversible_acute():
    xi = SupportPattern.from_rows([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
    out = apply_support_rotation(xi, 0, 0, 1)
    assert out.kind == RotationKind.REVERSIBLE_ACUTE
    assert not out.pattern.mask[0, 0]
    assert out.pattern.mask[1, 0] and out.pattern.mask[1, 1]
    assert out.pattern.l0() == xi.l0()


def testar_rotacao_irreversible_acute_e_column_swap():
    xi = SupportPattern.from_rows([[1, 1, 0], [1, 0, 0], [0, 1, 1]])
    out = apply_support_rotation(xi, 0, 0, 1)
    assert out.kind == RotationKind.IRREVERSIBLE_ACUTE
    assert out.pattern.l0() == xi.l0() + 1

    swap = apply_support_rotation(XI1, 0, 0, 1)
    assert swap.kind == RotationKind.COLUMN_SWAP
    np.testing.assert_array_equal(swap.pattern.mask, XI1.mask[:, [1, 0, 2]])


def testar_rotacao_inaplicavel():
    out = apply_support_rotation(XI1, 0, 1, 2)
    assert out.kind == RotationKind.INAPPLICABLE
    assert out.pattern is XI1


def testar_givens_2x2():
    a = MixingMatrix(np.array([[1.0, 1.0], [1.0, -1.0]]))
    r = numeric_givens_reduce(a, 0, 0, 1)
    assert r.entries[0, 0] == 0.0
    np.testing.assert_allclose(r.entries @ r.entries.T, a.entries @ a.entries.T, atol=1e-12)


def testar_givens_pivos_nulos():
    with pytest.raises(InputError):
        numeric_givens_reduce(MixingMatrix(np.eye(3)), 0, 1, 2)


def testar_rotacao_mais_esparsa_para_violacao_da_hipotese1():
    rng = np.random.default_rng(21)
    testados = 0
    while testados < 100:
        n = int(rng.integers(2, 6))
        mask = (rng.random((n, n)) < 0.4) | np.eye(n, dtype=bool)
        j, k = rng.choice(n, size=2, replace=False)
        mask[:, k] = mask[:, j]
        mask[k, k] = True
        a = MixingMatrix(_pesos(mask, rng))
        if not a.is_nonsingular():
            continue
        testados += 1
        assert find_support_reduction(SupportPattern(mask)) is not None
        rotacionada, _ = sparser_equivalent_rotation(a)
        sigma = a.entries @ a.entries.T
        escala = np.linalg.norm(sigma)
        assert np.linalg.norm(rotacionada.entries @ rotacionada.entries.T - sigma) <= 1e-10 * escala
        assert rotacionada.l0() <= a.l0()
        assert signed_perm_equivalent(rotacionada, a, 1e-6) is None


def testar_sem_reducao_quando_hipotese1_vale():
    assert find_support_reduction(XI1) is None


# ==============================================================================
# EXEMPLO DE 3 VARIAVEIS
# ==============================================================================

def testar_restricao_de_igualdade_xi1():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a = _pesos(XI1.mask, rng) * rng.uniform(0.5, 3.0)
        sigma = CovarianceMatrix(a @ a.T)
        escala = np.max(np.abs(sigma.entries)) ** 2
        assert abs(example1_equality_residual(sigma)) <= 1e-9 * escala
    assert example1_equality_residual(CovarianceMatrix(np.eye(3))) == 0.0


def testar_restricao_de_igualdade_generica_nao_nula():
    rng = np.random.default_rng(3)
    nao_nulos = 0
    for _ in range(100):
        a = rng.normal(size=(3, 3))
        if abs(example1_equality_residual(CovarianceMatrix(a @ a.T))) > 1e-12:
            nao_nulos += 1
    assert nao_nulos >= 99


def testar_restricao_de_desigualdade_xi2():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a = _pesos(XI2.mask, rng) * rng.uniform(0.5, 3.0)
        sigma = CovarianceMatrix(a @ a.T)
        escala = np.max(np.abs(sigma.entries)) ** 6
        assert example1_inequality_value(sigma) >= -1e-9 * escala
    # Sigma = I: linear = 1, quadratico = 1, constante = 0
    assert example1_inequality_value(CovarianceMatrix(np.eye(3))) == 1.0


def testar_exemplo1_exige_n3():
    with pytest.raises(InputError):
        example1_equality_residual(CovarianceMatrix(np.eye(4)))


# ==============================================================================
# JACOBIANO
# ==============================================================================

def testar_jacobiano_posto_completo_na_identidade():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        mask = np.tril(rng.random((n, n)) < 0.5, k=-1) | np.eye(n, dtype=bool)
        xi = SupportPattern(mask)
        jac = covariance_jacobian(MixingMatrix(np.eye(n)), xi)
        assert jac.entries.shape == (n * n, xi.l0())
        assert jac.rank() == xi.l0()


def testar_jacobiano_n1():
    jac = covariance_jacobian(MixingMatrix(np.array([[1.5]])), SupportPattern.from_rows([[1]]))
    np.testing.assert_allclose(jac.entries, [[3.0]])
    assert jac.rank() == 1


def testar_jacobiano_diferencas_finitas():
    rng = np.random.default_rng(9)
    n = 4
    mask = np.tril(rng.random((n, n)) < 0.6, k=-1) | np.eye(n, dtype=bool)
    a = _pesos(mask, rng)
    jac = covariance_jacobian(MixingMatrix(a), SupportPattern(mask))
    h = 1e-6
    for c, (k, l) in enumerate(jac.col_index):
        mais, menos = a.copy(), a.copy()
        mais[k, l] += h
        menos[k, l] -= h
        numerico = ((mais @ mais.T) - (menos @ menos.T)).ravel() / (2 * h)
        np.testing.assert_allclose(jac.entries[:, c], numerico, atol=1e-6)


def testar_jacobiano_suporte_violado():
    with pytest.raises(InputError):
        covariance_jacobian(MixingMatrix(np.ones((2, 2))), SupportPattern(np.eye(2, dtype=bool)))


def testar_relatorio_xi1():
    relatorio = assumption_report(XI1)
    assert relatorio == {
        'assumption1': True,
        'assumption2': True,
        'column_subset': False,
        'zheng_a4': False,
        'zheng_a5': False,
    }
