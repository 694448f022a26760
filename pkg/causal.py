"""
PONTE ENTRE ICA E DESCOBERTA CAUSAL

Conversoes entre a matriz de mistura A e o modelo SEM linear (B, Omega),
com A = (I - B) Omega^{-1/2}, e os checadores de grafo usados nas provas de
identificabilidade: DAG, classe de equivalencia de Markov unitaria e o
fator de Cholesky permutado.
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from model import (
    CovarianceMatrix,
    InputError,
    MixingMatrix,
    NumericError,
    SemModel,
    SignedPermutation,
    SupportPattern,
    permutation_matrix,
)
from structure import check_structural_variability, has_cycle, perfect_matching

logger = logging.getLogger(__name__)

PIVOT_RTOL = 1e-12


def a_to_sem(a: MixingMatrix) -> Tuple[SemModel, SignedPermutation]:
    """
    (B, Omega) e a permutacao com sinal (P, D) tais que A P D = (I - B) Omega^{-1/2}.

    P vem de um emparelhamento perfeito no suporte de A (diagonal de AP nao
    nula); D torna a diagonal positiva.
    """
    if not a.is_nonsingular():
        raise NumericError("Matriz de mistura singular; conversao para SEM indefinida")
    perm = perfect_matching(a.entries != 0)
    if perm is None:
        raise NumericError("Nenhuma permutacao de colunas com diagonal nao nula")

    ap = a.entries[:, perm]
    signs = np.where(np.diag(ap) > 0, 1, -1)
    apd = ap * signs
    diag = np.diag(apd)
    omega = 1.0 / diag ** 2
    b = np.eye(a.n) - apd / diag
    np.fill_diagonal(b, 0.0)
    pi = SignedPermutation(tuple(int(p) for p in perm), tuple(int(s) for s in signs))
    return SemModel(b, omega), pi


def sem_to_a(m: SemModel) -> MixingMatrix:
    return MixingMatrix((np.eye(m.n) - m.b) / np.sqrt(m.omega))


def sem_gram(m: SemModel) -> np.ndarray:
    """(I - B) Omega^{-1} (I - B)^T"""
    i_b = np.eye(m.n) - m.b
    return (i_b / m.omega) @ i_b.T


def dag_check(b: np.ndarray) -> bool:
    """Aresta i -> j quando b_ij != 0; verdadeiro se nao ha ciclo dirigido."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise InputError(f"B deve ser quadrada, recebido shape {b.shape}")
    if np.any(np.diag(b) != 0):
        raise InputError("B deve ter diagonal nula")
    return not has_cycle(b != 0)


def mec_is_singleton(b: np.ndarray) -> bool:
    """Classe de Markov unitaria sse as colunas de supp(I - B) diferem em mais de uma entrada."""
    if not dag_check(b):
        raise InputError("Grafo com ciclo; classe de equivalencia de Markov indefinida")
    b = np.asarray(b, dtype=float)
    return check_structural_variability(SupportPattern((np.eye(b.shape[0]) - b) != 0))


def permuted_cholesky_factor(sigma: CovarianceMatrix, p1: Sequence[int]) -> MixingMatrix:
    """L triangular inferior com diagonal positiva e L L^T = P1^T Sigma P1."""
    p = permutation_matrix(p1)
    if p.shape[0] != sigma.n:
        raise InputError(f"Permutacao de tamanho {p.shape[0]} para Sigma {sigma.n}x{sigma.n}")
    permutada = p.T @ sigma.entries @ p
    try:
        fator = linalg.cholesky(permutada, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericError(f"Sigma nao e definida positiva: {exc}") from exc
    piso = PIVOT_RTOL * np.trace(permutada)
    if np.min(np.diag(fator) ** 2) <= piso:
        raise NumericError("Pivo de Cholesky abaixo da tolerancia; Sigma nao e definida positiva")
    return MixingMatrix(fator)
