"""
VERIFICACAO DAS HIPOTESES ESTRUTURAIS

Checadores das hipoteses sobre o suporte da matriz de mistura:
1. Variabilidade estrutural (colunas diferem em mais de uma entrada)
2. Triangularizacao inferior por permutacoes separadas de linhas e colunas
3. Subconjunto de colunas e as duas hipoteses alternativas de esparsidade
   (uniao/overlap e interseccao de linhas)

Inclui ainda as rotacoes de suporte (Givens), as restricoes semialgebricas
do exemplo de 3 variaveis e o jacobiano de Sigma = A A^T.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching

from model import (
    CovarianceMatrix,
    InputError,
    MixingMatrix,
    SupportPattern,
    support_of,
)

logger = logging.getLogger(__name__)

# Enumeracao de subconjuntos e exponencial
MAX_N_ASSUMPTION4 = 12
RANK_RTOL = 1e-9


def _require_square(xi: SupportPattern) -> np.ndarray:
    if not xi.is_square:
        raise InputError(f"Padrao deve ser quadrado, recebido shape {xi.mask.shape}")
    return xi.mask


def numeric_rank(matrix: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Posto numerico com corte rtol * sigma_max."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


# ==============================================================================
# HIPOTESES SOBRE COLUNAS
# ==============================================================================

def check_structural_variability(xi: SupportPattern) -> bool:
    """Todo par de colunas difere em mais de uma entrada."""
    mask = _require_square(xi)
    n = mask.shape[1]
    for i, j in itertools.combinations(range(n), 2):
        if np.sum(mask[:, i] != mask[:, j]) <= 1:
            return False
    return True


def check_column_subset(xi: SupportPattern) -> bool:
    """Nenhum suporte de coluna e subconjunto (mesmo igual) de outro."""
    mask = _require_square(xi)
    n = mask.shape[1]
    for i, j in itertools.permutations(range(n), 2):
        if not np.any(mask[:, i] & ~mask[:, j]):
            return False
    return True


def check_zheng_assumption4(xi: SupportPattern) -> bool:
    """
    |uniao dos suportes de I| - rank(overlap(A_I)) > |supp(a_i)| para todo
    I com |I| > 1 e todo i em I.

    overlap(A_I): linhas onde todas as colunas de I sao nao nulas, padrao
    instanciado com uns.
    """
    mask = _require_square(xi)
    n = mask.shape[1]
    if n > MAX_N_ASSUMPTION4:
        raise InputError(f"Hipotese 4 enumera 2^n subconjuntos; n={n} acima do limite {MAX_N_ASSUMPTION4}")

    tamanhos = mask.sum(axis=0)
    for k in range(2, n + 1):
        for subset in itertools.combinations(range(n), k):
            cols = mask[:, subset]
            uniao = int(np.sum(cols.any(axis=1)))
            compartilhadas = cols.all(axis=1)
            overlap = np.ones((int(compartilhadas.sum()), k))
            posto = numeric_rank(overlap)
            if any(uniao - posto <= tamanhos[i] for i in subset):
                return False
    return True


def check_zheng_assumption5(xi: SupportPattern) -> bool:
    """Para toda coluna i existe um conjunto de linhas cuja interseccao de suportes e {i}."""
    mask = _require_square(xi)
    n = mask.shape[1]
    for i in range(n):
        linhas = np.flatnonzero(mask[:, i])
        if linhas.size == 0:
            return False
        # A menor interseccao que contem i usa todas as linhas que contem i
        intersecao = mask[linhas, :].all(axis=0)
        if int(intersecao.sum()) != 1:
            return False
    return True


# ==============================================================================
# TRIANGULARIZACAO INFERIOR (emparelhamento + ciclo)
# ==============================================================================

def perfect_matching(mask: np.ndarray) -> Optional[List[int]]:
    """
    Emparelhamento perfeito linha -> coluna (Hopcroft-Karp do scipy).

    Retorna col[i] para cada linha i, ou None se nao existir.
    """
    mask = np.asarray(mask, dtype=bool)
    n_rows, n_cols = mask.shape
    if n_rows != n_cols:
        return None
    casamento = maximum_bipartite_matching(csr_matrix(mask.astype(float)), perm_type='column')
    if np.any(casamento < 0):
        return None
    return [int(j) for j in casamento]


def has_cycle(adj: np.ndarray) -> bool:
    """adj[u][v] indica aresta u -> v; ha ciclo sse algum laco ou componente forte com mais de um no."""
    adj = np.asarray(adj, dtype=bool)
    if np.any(np.diag(adj)):
        return True
    n_comp, _ = connected_components(csr_matrix(adj.astype(float)), directed=True, connection='strong')
    return n_comp < adj.shape[0]


def check_lower_triangularizable(a, zero_tol: float = 0.0) -> bool:
    """
    Existem P1, P2 com P1^T A P2 triangular inferior?

    Encontra P com diagonal de AP nao nula e verifica se o grafo com arestas
    v_j -> v_i para (AP)_ij != 0, i != j, e aciclico. Aceita MixingMatrix ou
    SupportPattern.
    """
    if isinstance(a, MixingMatrix):
        mask = support_of(a, zero_tol).mask
    elif isinstance(a, SupportPattern):
        mask = _require_square(a)
    else:
        raise InputError(f"Tipo nao suportado: {type(a).__name__}")

    casamento = perfect_matching(mask)
    if casamento is None:
        raise InputError("Matriz singular: nao existe permutacao de colunas com diagonal nao nula")

    # coluna i de AP = coluna casamento[i] de A
    ap = mask[:, casamento]
    arestas = ap.T.copy()
    np.fill_diagonal(arestas, False)
    return not has_cycle(arestas)


# ==============================================================================
# ROTACOES DE SUPORTE
# ==============================================================================

class RotationKind(Enum):
    REDUCTION = 'reduction'
    REVERSIBLE_ACUTE = 'reversible_acute'
    IRREVERSIBLE_ACUTE = 'irreversible_acute'
    COLUMN_SWAP = 'column_swap'
    INAPPLICABLE = 'inapplicable'


@dataclass(frozen=True)
class RotationOutcome:
    pattern: SupportPattern
    kind: RotationKind


def apply_support_rotation(xi: SupportPattern, i: int, j: int, k: int) -> RotationOutcome:
    """Efeito da rotacao de Givens no plano (j, k) que zera xi[i][j]."""
    mask = np.array(_require_square(xi))
    if j == k:
        raise InputError("Rotacao de suporte exige j != k")

    if not mask[i, j]:
        # angulo nulo: nada a zerar
        return RotationOutcome(xi, RotationKind.INAPPLICABLE)

    if not mask[i, k]:
        mask[:, [j, k]] = mask[:, [k, j]]
        return RotationOutcome(SupportPattern(mask), RotationKind.COLUMN_SWAP)

    diferentes = [l for l in np.flatnonzero(mask[:, j] != mask[:, k]).tolist() if l != i]
    mask[i, j] = False
    if not diferentes:
        kind = RotationKind.REDUCTION
    elif len(diferentes) == 1:
        kind = RotationKind.REVERSIBLE_ACUTE
    else:
        kind = RotationKind.IRREVERSIBLE_ACUTE
    for l in diferentes:
        mask[l, j] = True
        mask[l, k] = True
    return RotationOutcome(SupportPattern(mask), kind)


def givens_matrix(n: int, j: int, k: int, theta: float) -> np.ndarray:
    """G com (A G)_j = cos*a_j + sin*a_k e (A G)_k = -sin*a_j + cos*a_k."""
    g = np.eye(n)
    c, s = np.cos(theta), np.sin(theta)
    g[j, j] = c
    g[k, j] = s
    g[j, k] = -s
    g[k, k] = c
    return g


def numeric_givens_reduce(a: MixingMatrix, i: int, j: int, k: int) -> MixingMatrix:
    """A G(j, k, theta) com theta = atan2(-a_ij, a_ik); zera a entrada (i, j)."""
    if j == k:
        raise InputError("Rotacao de Givens exige j != k")
    entries = a.entries
    if entries[i, j] == 0 and entries[i, k] == 0:
        raise InputError(f"Pivos a[{i},{j}] e a[{i},{k}] sao ambos nulos")
    theta = np.arctan2(-entries[i, j], entries[i, k])
    rotacionada = entries @ givens_matrix(a.n, j, k, theta)
    rotacionada[i, j] = 0.0
    return MixingMatrix(rotacionada)


def find_support_reduction(xi: SupportPattern) -> Optional[Tuple[int, int, int, RotationOutcome]]:
    """
    Para um padrao que viola a variabilidade estrutural, encontra (i, j, k)
    cuja rotacao e Reduction ou ReversibleAcute sem aumentar ||xi||_0.
    """
    mask = _require_square(xi)
    n = mask.shape[1]
    for j, k in itertools.permutations(range(n), 2):
        if np.sum(mask[:, j] != mask[:, k]) > 1:
            continue
        comuns = np.flatnonzero(mask[:, j] & mask[:, k])
        for i in comuns.tolist():
            outcome = apply_support_rotation(xi, i, j, k)
            if outcome.kind in (RotationKind.REDUCTION, RotationKind.REVERSIBLE_ACUTE) \
                    and outcome.pattern.l0() <= xi.l0():
                return i, j, k, outcome
    return None


def sparser_equivalent_rotation(a: MixingMatrix) -> Optional[Tuple[MixingMatrix, Tuple[int, int, int]]]:
    """
    Matriz com a mesma covariancia, no maximo o mesmo numero de nao nulos e
    que nao e permutacao com sinais de A (existe se A viola a hipotese 1).
    """
    encontrado = find_support_reduction(support_of(a, 0.0))
    if encontrado is None:
        return None
    i, j, k, outcome = encontrado
    logger.debug(f"Rotacao {outcome.kind.value} em (i={i}, j={j}, k={k})")
    return numeric_givens_reduce(a, i, j, k), (i, j, k)


# ==============================================================================
# RESTRICOES SEMIALGEBRICAS (exemplo de 3 variaveis)
# ==============================================================================

def _sigma3(sigma: CovarianceMatrix) -> np.ndarray:
    if sigma.n != 3:
        raise InputError(f"Restricoes do exemplo sao definidas para n=3, recebido n={sigma.n}")
    return sigma.entries


def example1_equality_residual(sigma: CovarianceMatrix) -> float:
    """Sigma11 Sigma23 - Sigma12 Sigma13 (nulo para suporte xi_1)."""
    s = _sigma3(sigma)
    return float(s[0, 0] * s[1, 2] - s[0, 1] * s[0, 2])


def example1_inequality_value(sigma: CovarianceMatrix) -> float:
    """Discriminante que deve ser >= 0 para suporte xi_2."""
    s = _sigma3(sigma)
    s11, s22, s33 = s[0, 0], s[1, 1], s[2, 2]
    s12, s13, s23 = s[0, 1], s[0, 2], s[1, 2]
    linear = s11 * s22 * s33 + s11 * s23 ** 2 - s22 * s13 ** 2 - s33 * s12 ** 2
    quadratico = s11 * s22 - s12 ** 2
    constante = s11 * s33 * s23 ** 2 - s13 ** 2 * s23 ** 2
    return float(linear ** 2 - 4.0 * quadratico * constante)


# ==============================================================================
# JACOBIANO DE SIGMA = A A^T
# ==============================================================================

@dataclass(frozen=True)
class JacobianMatrix:
    """Linhas indexadas por (i, j) em [n]^2, colunas pelas celulas (k, l) do suporte."""

    entries: np.ndarray
    row_index: Tuple[Tuple[int, int], ...]
    col_index: Tuple[Tuple[int, int], ...]

    def rank(self) -> int:
        return numeric_rank(self.entries)


def covariance_jacobian(a: MixingMatrix, xi: SupportPattern) -> JacobianMatrix:
    mask = _require_square(xi)
    if mask.shape[0] != a.n:
        raise InputError("Padrao e matriz com dimensoes diferentes")
    if np.any((a.entries != 0) & ~mask):
        raise InputError("supp(A) nao esta contido em xi")

    n = a.n
    e = a.entries
    row_index = tuple((i, j) for i in range(n) for j in range(n))
    col_index = tuple((int(k), int(l)) for k, l in zip(*np.nonzero(mask)))
    jac = np.zeros((len(row_index), len(col_index)))

    for r, (i, j) in enumerate(row_index):
        for c, (k, l) in enumerate(col_index):
            if i == j:
                if k == i:
                    jac[r, c] = 2.0 * e[i, l]
            elif k == i:
                jac[r, c] = e[j, l]
            elif k == j:
                jac[r, c] = e[i, l]
    return JacobianMatrix(jac, row_index, col_index)


def assumption_report(xi: SupportPattern) -> Dict[str, Optional[bool]]:
    """Resumo booleano das hipoteses estruturais de um padrao."""
    relatorio: Dict[str, Optional[bool]] = {
        'assumption1': check_structural_variability(xi),
        'column_subset': check_column_subset(xi),
        'zheng_a5': check_zheng_assumption5(xi),
    }
    try:
        relatorio['assumption2'] = check_lower_triangularizable(xi)
    except InputError as exc:
        logger.warning(f"[AVISO] Hipotese 2 nao avaliada: {exc}")
        relatorio['assumption2'] = None
    if xi.n <= MAX_N_ASSUMPTION4:
        relatorio['zheng_a4'] = check_zheng_assumption4(xi)
    else:
        logger.warning(f"[AVISO] Hipotese 4 ignorada para n={xi.n} > {MAX_N_ASSUMPTION4}")
        relatorio['zheng_a4'] = None
    return relatorio
