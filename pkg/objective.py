"""
Termos diferenciaveis dos problemas de decomposicao e de verossimilhanca.

Cada avaliacao retorna valor e gradiente (ObjectiveEval) sobre matrizes n x n:
- g(A): soma dos tracos das potencias de off(A) o off(A), nula sse A e
  permutavel simultaneamente para triangular inferior
- MCP: penalidade concava minimax
- NLL gaussiana (total ou media)
- residuo de decomposicao ||A A^T - Sigma||_F^2
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import linalg

from model import (
    ZERO_TOL_PADRAO,
    CovarianceMatrix,
    InputError,
    MixingMatrix,
    NumericError,
    support_of,
)

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class ObjectiveEval:
    value: float
    gradient: np.ndarray


@dataclass(frozen=True)
class McpParams:
    lam: float
    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.alpha)):
            raise InputError("Parametros do MCP devem ser finitos")
        if self.lam < 0:
            raise InputError(f"lambda do MCP deve ser >= 0, recebido {self.lam}")
        if self.alpha <= 0:
            raise InputError(f"alpha do MCP deve ser > 0, recebido {self.alpha}")

    @property
    def knee(self) -> float:
        return self.alpha * self.lam


class GMode(Enum):
    NAIVE = 'naive'
    LOG_SQUARING = 'log_squaring'


def _entries(a) -> np.ndarray:
    if isinstance(a, MixingMatrix):
        return a.entries
    return np.asarray(a, dtype=float)


# ==============================================================================
# RESTRICAO g(A)
# ==============================================================================

def _power_sums_naive(m: np.ndarray, n: int):
    """S = sum_{k=2}^n M^k e H = sum_{k=2}^n k M^{k-1}."""
    soma = np.zeros_like(m)
    soma_grad = np.zeros_like(m)
    potencia = m.copy()  # M^{k-1}
    for k in range(2, n + 1):
        soma_grad += k * potencia
        potencia = potencia @ m
        soma += potencia
    return soma, soma_grad


def _power_sums_squaring(m: np.ndarray, n: int):
    """
    Mesmas somas por quadrados sucessivos, O(log n) produtos.

    Mantem P = M^q, F = sum_{k=0}^{q-1} M^k e H = sum_{k=1}^{q} k M^{k-1};
    dobrar q: F <- F + P F, H <- H + P H + q P F, P <- P P;
    incrementar q: F <- F + P, H <- H + (q+1) P, P <- P M.
    """
    eye = np.eye(m.shape[0])
    p, f, h, q = m.copy(), eye.copy(), eye.copy(), 1
    for bit in bin(n)[3:]:
        pf = p @ f
        h = h + p @ h + q * pf
        f = f + pf
        p = p @ p
        q *= 2
        if bit == '1':
            f = f + p
            h = h + (q + 1) * p
            p = p @ m
            q += 1
    # sum_{k=1}^n M^k = M F
    soma = m @ f - m
    return soma, h - eye


def g_eval(a, mode: GMode = GMode.LOG_SQUARING) -> ObjectiveEval:
    """g(A) = tr(sum_{k=2}^n M^k), M = off(A) o off(A)."""
    e = _entries(a)
    n = e.shape[0]
    w = e.copy()
    np.fill_diagonal(w, 0.0)
    if n < 2:
        return ObjectiveEval(0.0, np.zeros_like(e))

    m = w * w
    if mode == GMode.NAIVE:
        soma, soma_grad = _power_sums_naive(m, n)
    else:
        soma, soma_grad = _power_sums_squaring(m, n)

    gradient = soma_grad.T * 2.0 * w
    return ObjectiveEval(float(np.trace(soma)), gradient)


# ==============================================================================
# PENALIDADE MCP
# ==============================================================================

def mcp_eval(a, p: McpParams) -> ObjectiveEval:
    """rho(a) = lam|a| - a^2/(2 alpha) se |a| <= alpha lam, senao alpha lam^2 / 2."""
    e = _entries(a)
    abs_e = np.abs(e)
    dentro = abs_e <= p.knee
    valores = np.where(dentro, p.lam * abs_e - e ** 2 / (2.0 * p.alpha), p.alpha * p.lam ** 2 / 2.0)
    # subgradiente 0 em a = 0
    gradient = np.where(dentro, np.sign(e) * p.lam - e / p.alpha, 0.0)
    return ObjectiveEval(float(valores.sum()), gradient)


# ==============================================================================
# VEROSSIMILHANCA GAUSSIANA
# ==============================================================================

def _guarded_inverse(e: np.ndarray) -> np.ndarray:
    """Inversa via LU pivotada, recusando cond > MAX_CONDITION."""
    sv = np.linalg.svd(e, compute_uv=False)
    condition = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise NumericError(f"Matriz singular ou mal condicionada (cond={condition:.3e})", condition=condition)
    lu = linalg.lu_factor(e)
    return linalg.lu_solve(lu, np.eye(e.shape[0]))


def nll_eval(a, sigma_bar: CovarianceMatrix, averaged: bool = True) -> ObjectiveEval:
    """
    L(A) = (T/2) tr((A A^T)^{-1} Sigma) + T log|det A|.

    averaged=True divide por T. Gradiente T (A^{-T} - (AA^T)^{-1} Sigma (AA^T)^{-1} A).
    """
    e = _entries(a)
    sigma = sigma_bar.entries
    if e.shape != sigma.shape:
        raise InputError(f"Shapes diferentes: A {e.shape}, Sigma {sigma.shape}")
    if averaged:
        escala = 1.0
    else:
        if sigma_bar.sample_count < 1:
            raise InputError("NLL total exige sample_count >= 1")
        escala = float(sigma_bar.sample_count)

    inv = _guarded_inverse(e)
    # (A A^T)^{-1} = Y^T Y com Y = A^{-1}
    y_sigma_yt = inv @ sigma @ inv.T
    _, logdet = np.linalg.slogdet(e)
    value = escala * (0.5 * np.trace(y_sigma_yt) + logdet)
    gradient = escala * (inv.T - inv.T @ y_sigma_yt)
    return ObjectiveEval(float(value), gradient)


# ==============================================================================
# RESIDUO DE DECOMPOSICAO
# ==============================================================================

def decomposition_residual_eval(a, sigma_bar: CovarianceMatrix) -> ObjectiveEval:
    """||A A^T - Sigma||_F^2 com gradiente 4 (A A^T - Sigma) A."""
    e = _entries(a)
    if e.shape != sigma_bar.entries.shape:
        raise InputError(f"Shapes diferentes: A {e.shape}, Sigma {sigma_bar.entries.shape}")
    r = e @ e.T - sigma_bar.entries
    return ObjectiveEval(float(np.sum(r * r)), 4.0 * r @ e)


def bic_score(a: MixingMatrix, sigma_bar: CovarianceMatrix, zero_tol: float = ZERO_TOL_PADRAO) -> float:
    """NLL total + 0.5 ||A||_0 log T."""
    if sigma_bar.sample_count < 1:
        raise InputError("BIC exige sample_count >= 1")
    nll = nll_eval(a, sigma_bar, averaged=False).value
    nnz = support_of(a, zero_tol).l0()
    return nll + 0.5 * nnz * np.log(sigma_bar.sample_count)
