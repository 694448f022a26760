"""
METRICAS DE AVALIACAO E BASELINE FASTICA

- MCC: media das correlacoes absolutas entre fontes verdadeiras e estimadas
  apos o casamento otimo (atribuicao de peso maximo via OR-Tools)
- Distancia de Amari sobre P = A_hat^{-1} A_true
- Recuperacao de fontes por fatoracao LU
- FastICA do scikit-learn usado como baseline
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from sklearn.decomposition import FastICA
from sklearn.exceptions import ConvergenceWarning

from model import (
    InputError,
    MixingMatrix,
    NumericError,
    SignedPermutation,
    solve_assignment,
)

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12
FASTICA_TOL = 1e-6
FASTICA_MAX_ITER = 500


@dataclass(frozen=True)
class MetricsReport:
    mcc: float
    amari: float
    matched_perm: SignedPermutation

    def to_row(self) -> dict:
        return {'mcc': self.mcc, 'amari': self.amari}


@dataclass(frozen=True)
class FastIcaResult:
    mixing: MixingMatrix
    converged: bool
    n_iter: int


def _lu_guarded(a: MixingMatrix):
    condition = np.linalg.cond(a.entries)
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise NumericError(f"Matriz singular ou mal condicionada (cond={condition:.3e})", condition=condition)
    return linalg.lu_factor(a.entries)


def recover_sources(a_hat: MixingMatrix, x: np.ndarray) -> np.ndarray:
    """S_hat (T x n) resolvendo A_hat S_hat^T = X^T."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != a_hat.n:
        raise InputError(f"X com shape {x.shape} incompativel com A {a_hat.n}x{a_hat.n}")
    return linalg.lu_solve(_lu_guarded(a_hat), x.T).T


def _matched_correlations(s_true: np.ndarray, s_hat: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    s_true = np.asarray(s_true, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    if s_true.shape != s_hat.shape:
        raise InputError(f"Shapes diferentes: {s_true.shape} e {s_hat.shape}")
    if s_true.shape[0] < 2:
        raise InputError("MCC exige pelo menos 2 amostras")

    def padronizar(s: np.ndarray, nome: str) -> np.ndarray:
        centrado = s - s.mean(axis=0)
        desvio = centrado.std(axis=0)
        if np.any(desvio == 0):
            raise InputError(f"Coluna com variancia nula em {nome}")
        return centrado / desvio

    corr = padronizar(s_true, 's_true').T @ padronizar(s_hat, 's_hat') / s_true.shape[0]
    cols = solve_assignment(np.abs(corr), maximize=True)
    return corr, cols


def mcc(s_true: np.ndarray, s_hat: np.ndarray) -> float:
    corr, cols = _matched_correlations(s_true, s_hat)
    return float(np.mean(np.abs(corr[np.arange(len(cols)), cols])))


def amari_distance(a_hat: MixingMatrix, a_true: MixingMatrix) -> float:
    """Distancia de Amari normalizada em [0, 1) sobre |P|, P = A_hat^{-1} A_true."""
    if a_hat.n != a_true.n:
        raise InputError(f"Dimensoes diferentes: {a_hat.n} e {a_true.n}")
    _lu_guarded(a_true)
    p = np.abs(linalg.lu_solve(_lu_guarded(a_hat), a_true.entries))
    n = p.shape[0]
    linhas = np.sum(p.sum(axis=1) / p.max(axis=1) - 1.0)
    colunas = np.sum(p.sum(axis=0) / p.max(axis=0) - 1.0)
    return float((linhas + colunas) / (2.0 * n))


def evaluate(a_hat: MixingMatrix, a_true: MixingMatrix, x: np.ndarray) -> MetricsReport:
    """MCC no espaco das fontes, Amari e permutacao com sinal que alinha A_hat a A_true."""
    s_true = recover_sources(a_true, x)
    s_hat = recover_sources(a_hat, x)
    corr, cols = _matched_correlations(s_true, s_hat)
    casados = corr[np.arange(len(cols)), cols]
    signs = tuple(1 if c >= 0 else -1 for c in casados)
    return MetricsReport(
        mcc=float(np.mean(np.abs(casados))),
        amari=amari_distance(a_hat, a_true),
        matched_perm=SignedPermutation(tuple(int(c) for c in cols), signs),
    )


# ==============================================================================
# FASTICA
# ==============================================================================

def fastica_baseline(x: np.ndarray, n_components: Optional[int] = None, seed: int = 0,
                     tol: float = FASTICA_TOL, max_iter: int = FASTICA_MAX_ITER) -> FastIcaResult:
    """
    FastICA paralelo (scikit-learn) com contraste logcosh.

    Fontes com variancia unitaria; a mistura retornada (mixing_) ja esta na
    escala original dos dados.
    """
    x = np.asarray(x, dtype=float)
    t, n = x.shape
    if n_components is not None and n_components != n:
        raise InputError(f"Apenas o caso quadrado e suportado (n_components={n_components}, n={n})")
    if t <= n:
        raise InputError(f"FastICA exige T > n (T={t}, n={n})")
    xc = x - x.mean(axis=0)
    if np.min(linalg.eigvalsh(xc.T @ xc / t)) <= 0:
        raise NumericError("Covariancia singular; branqueamento impossivel")

    ica = FastICA(n_components=n, algorithm='parallel', whiten='unit-variance', fun='logcosh',
                  tol=tol, max_iter=max_iter, random_state=seed)
    with warnings.catch_warnings(record=True) as avisos:
        warnings.simplefilter('always', ConvergenceWarning)
        ica.fit(x)
    convergiu = not any(issubclass(a.category, ConvergenceWarning) for a in avisos)
    if not convergiu:
        logger.warning(f"[AVISO] FastICA nao convergiu em {max_iter} iteracoes")
    return FastIcaResult(MixingMatrix(ica.mixing_), convergiu, int(ica.n_iter_))
