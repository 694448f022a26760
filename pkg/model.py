"""
TIPOS BASICOS DO MODELO ICA ESPARSO

Registros imutaveis compartilhados por todos os modulos:
- MixingMatrix: matriz de mistura A (n x n)
- SupportPattern: padrao de suporte xi (mascara booleana)
- SignedPermutation: permutacao de colunas com troca de sinal
- CovarianceMatrix: covariancia populacional ou empirica
- SemModel: modelo SEM linear (B, Omega)
- Dataset: amostras X com verdade opcional

Tambem concentra a equivalencia por permutacao com sinal, a extracao de
suporte, a persistencia em CSV/JSON e o problema de atribuicao resolvido
com OR-Tools (usado aqui e no calculo do MCC).
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from ortools.linear_solver import pywraplp

logger = logging.getLogger(__name__)

# Limiar pos-otimizacao usado para remover pesos pequenos
ZERO_TOL_PADRAO = 0.01
# |det A| relativo ao produto das normas das colunas
TOL_SINGULAR = 1e-10
TOL_SIMETRIA = 1e-12
TOL_PSD = 1e-10


class InputError(ValueError):
    """Entrada invalida (dimensao, pre-condicao ou configuracao)."""


class NumericError(ArithmeticError):
    """Falha numerica (matriz singular ou mal condicionada)."""

    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message)
        self.condition = condition


class GenerationError(RuntimeError):
    """Orcamento de rejeicoes esgotado na simulacao."""

    def __init__(self, message: str, acceptance_rate: float = 0.0):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


# ==============================================================================
# TIPOS
# ==============================================================================

@dataclass(frozen=True)
class MixingMatrix:
    """Matriz de mistura quadrada x = A s."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputError(f"Matriz de mistura deve ser quadrada, recebido shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InputError("Matriz de mistura contem NaN ou Inf")
        object.__setattr__(self, 'entries', _frozen(entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def is_nonsingular(self, tol: float = TOL_SINGULAR) -> bool:
        """|det A| relativo ao produto das normas das colunas acima de tol."""
        norms = np.linalg.norm(self.entries, axis=0)
        if np.any(norms == 0):
            return False
        _, logdet = np.linalg.slogdet(self.entries)
        return bool(np.exp(logdet - np.sum(np.log(norms))) > tol)

    def l0(self, zero_tol: float = 0.0) -> int:
        return int(np.sum(np.abs(self.entries) > zero_tol))

    def thresholded(self, threshold: float) -> 'MixingMatrix':
        entries = np.array(self.entries)
        entries[np.abs(entries) < threshold] = 0.0
        return MixingMatrix(entries)

    def to_json(self) -> Dict:
        return {'n': self.n, 'rows': self.entries.tolist()}

    @classmethod
    def from_json(cls, payload: Dict) -> 'MixingMatrix':
        matrix = cls(np.array(payload['rows'], dtype=float))
        if 'n' in payload and int(payload['n']) != matrix.n:
            raise InputError(f"Campo n={payload['n']} nao confere com {matrix.n} linhas")
        return matrix

    def to_csv(self, path) -> None:
        save_matrix_csv(self.entries, path)

    @classmethod
    def from_csv(cls, path) -> 'MixingMatrix':
        return cls(load_matrix_csv(path))


@dataclass(frozen=True)
class SupportPattern:
    """Padrao de suporte xi: mask[i][j] = True se a_ij != 0."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.ndim != 2:
            raise InputError(f"Padrao de suporte deve ser 2D, recebido shape {mask.shape}")
        object.__setattr__(self, 'mask', _frozen(mask.astype(bool)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> 'SupportPattern':
        return cls(np.array(rows) != 0)

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @property
    def is_square(self) -> bool:
        return self.mask.shape[0] == self.mask.shape[1]

    def l0(self) -> int:
        return int(self.mask.sum())

    def column(self, j: int) -> frozenset:
        return frozenset(np.flatnonzero(self.mask[:, j]).tolist())

    def row(self, i: int) -> frozenset:
        return frozenset(np.flatnonzero(self.mask[i, :]).tolist())

    def to_csv(self, path) -> None:
        save_matrix_csv(self.mask.astype(int), path, integer=True)

    @classmethod
    def from_csv(cls, path) -> 'SupportPattern':
        return cls(load_matrix_csv(path) != 0)


@dataclass(frozen=True)
class SignedPermutation:
    """
    Permutacao de colunas com sinais.

    Aplicada a B produz B.pi com coluna j igual a signs[j] * B[:, perm[j]].
    """

    perm: Tuple[int, ...]
    signs: Tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        signs = tuple(int(s) for s in self.signs)
        if len(perm) != len(signs):
            raise InputError("perm e signs devem ter o mesmo tamanho")
        if sorted(perm) != list(range(len(perm))):
            raise InputError(f"perm nao e uma bijecao em 0..{len(perm) - 1}: {perm}")
        if any(s not in (1, -1) for s in signs):
            raise InputError(f"Sinais devem ser +1 ou -1: {signs}")
        object.__setattr__(self, 'perm', perm)
        object.__setattr__(self, 'signs', signs)

    @classmethod
    def identity(cls, n: int) -> 'SignedPermutation':
        return cls(tuple(range(n)), (1,) * n)

    @property
    def n(self) -> int:
        return len(self.perm)

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for j, (p, s) in enumerate(zip(self.perm, self.signs)):
            m[p, j] = s
        return m

    def apply(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        return b[:, list(self.perm)] * np.array(self.signs, dtype=float)

    def inverse(self) -> 'SignedPermutation':
        perm = [0] * self.n
        signs = [1] * self.n
        for j, (p, s) in enumerate(zip(self.perm, self.signs)):
            perm[p] = j
            signs[p] = s
        return SignedPermutation(tuple(perm), tuple(signs))

    def to_json(self) -> Dict:
        return {'perm': list(self.perm), 'signs': list(self.signs)}


@dataclass(frozen=True)
class CovarianceMatrix:
    """Covariancia simetrica PSD; sample_count = 0 indica populacional."""

    entries: np.ndarray
    sample_count: int = 0

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputError(f"Covariancia deve ser quadrada, recebido shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InputError("Covariancia contem NaN ou Inf")
        scale = max(np.max(np.abs(entries)), 1.0) if entries.size else 1.0
        if np.max(np.abs(entries - entries.T), initial=0.0) > TOL_SIMETRIA * scale:
            raise InputError("Covariancia nao e simetrica")
        if entries.size:
            menor = np.linalg.eigvalsh(entries).min()
            if menor < -TOL_PSD * np.linalg.norm(entries, 2):
                raise InputError(f"Covariancia nao e PSD (menor autovalor {menor:.3e})")
        if int(self.sample_count) < 0:
            raise InputError("sample_count deve ser >= 0")
        object.__setattr__(self, 'entries', _frozen(0.5 * (entries + entries.T)))
        object.__setattr__(self, 'sample_count', int(self.sample_count))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_mixing(cls, a: MixingMatrix, sample_count: int = 0) -> 'CovarianceMatrix':
        return cls(a.entries @ a.entries.T, sample_count)

    def regularized(self, eta: float) -> 'CovarianceMatrix':
        """Estimador regularizado Sigma + eta I."""
        if eta == 0:
            return self
        return CovarianceMatrix(self.entries + eta * np.eye(self.n), self.sample_count)


@dataclass(frozen=True)
class SemModel:
    """SEM linear x = B^T x + e com Cov(e) = diag(omega)."""

    b: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        omega = np.asarray(self.omega, dtype=float).ravel()
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InputError(f"B deve ser quadrada, recebido shape {b.shape}")
        if omega.shape[0] != b.shape[0]:
            raise InputError("omega deve ter uma variancia por variavel")
        if np.any(np.diag(b) != 0):
            raise InputError("B deve ter diagonal nula")
        if np.any(~np.isfinite(omega)) or np.any(omega <= 0):
            raise InputError("Variancias de ruido devem ser positivas")
        object.__setattr__(self, 'b', _frozen(b))
        object.__setattr__(self, 'omega', _frozen(omega))

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def to_json(self) -> Dict:
        return {'b': self.b.tolist(), 'omega': self.omega.tolist()}

    @classmethod
    def from_json(cls, payload: Dict) -> 'SemModel':
        return cls(np.array(payload['b'], dtype=float), np.array(payload['omega'], dtype=float))


@dataclass(frozen=True)
class Dataset:
    """Amostras X (T x n); se A e S verdadeiros existem, X = S A^T."""

    x: np.ndarray
    true_a: Optional[MixingMatrix] = None
    true_s: Optional[np.ndarray] = None
    gaussian_ratio: float = 1.0
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise InputError(f"X deve ser 2D, recebido shape {x.shape}")
        if not 0.0 <= self.gaussian_ratio <= 1.0:
            raise InputError(f"gaussian_ratio fora de [0, 1]: {self.gaussian_ratio}")
        if self.true_a is not None and self.true_a.n != x.shape[1]:
            raise InputError("Dimensao de true_a nao confere com X")
        if self.true_s is not None:
            s = _frozen(np.asarray(self.true_s, dtype=float))
            if s.shape != x.shape:
                raise InputError("true_s deve ter o mesmo shape de X")
            if self.true_a is not None and not np.allclose(s @ self.true_a.entries.T, x, rtol=1e-10, atol=1e-12):
                raise InputError("Identidade de geracao X = S A^T violada")
            object.__setattr__(self, 'true_s', s)
        object.__setattr__(self, 'x', _frozen(x))

    @property
    def t(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def covariance(self) -> CovarianceMatrix:
        return empirical_covariance(self.x)


# ==============================================================================
# OPERACOES
# ==============================================================================

def empirical_covariance(x: np.ndarray) -> CovarianceMatrix:
    """Sigma_bar = (1/T) Xc^T Xc com colunas centralizadas."""
    x = np.asarray(x, dtype=float)
    t = x.shape[0]
    if t < 2:
        raise InputError(f"Sao necessarias pelo menos 2 amostras, recebido T={t}")
    xc = x - x.mean(axis=0, keepdims=True)
    return CovarianceMatrix(xc.T @ xc / t, sample_count=t)


def support_of(a: MixingMatrix, zero_tol: float = ZERO_TOL_PADRAO) -> SupportPattern:
    """mask[i][j] = |a_ij| > zero_tol."""
    if zero_tol < 0:
        raise InputError("zero_tol deve ser >= 0")
    return SupportPattern(np.abs(a.entries) > zero_tol)


def solve_assignment(cost: np.ndarray, maximize: bool = False) -> np.ndarray:
    """
    Atribuicao linear quadrada via LP (GLOP).

    O politopo de atribuicao tem vertices inteiros, entao a solucao basica
    do simplex ja e uma permutacao. Retorna col[i] atribuida a linha i.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.ndim != 2 or cost.shape[1] != n:
        raise InputError(f"Matriz de custo deve ser quadrada, recebido shape {cost.shape}")
    if n == 0:
        return np.zeros(0, dtype=int)

    solver = pywraplp.Solver.CreateSolver('GLOP')
    if solver is None:
        raise NumericError("Solver GLOP indisponivel no OR-Tools")

    x = {}
    for i in range(n):
        for j in range(n):
            x[i, j] = solver.NumVar(0.0, 1.0, f"x_{i}_{j}")
    for i in range(n):
        solver.Add(sum(x[i, j] for j in range(n)) == 1)
    for j in range(n):
        solver.Add(sum(x[i, j] for i in range(n)) == 1)

    objetivo = sum(float(cost[i, j]) * x[i, j] for i in range(n) for j in range(n))
    if maximize:
        solver.Maximize(objetivo)
    else:
        solver.Minimize(objetivo)

    status = solver.Solve()
    if status != pywraplp.Solver.OPTIMAL:
        raise NumericError(f"Problema de atribuicao sem solucao otima (status {status})")

    valores = np.array([[x[i, j].solution_value() for j in range(n)] for i in range(n)])
    cols = valores.argmax(axis=1)
    if len(set(cols.tolist())) != n:
        raise NumericError("Solucao do LP de atribuicao nao e uma permutacao")
    return cols


def signed_perm_equivalent(a: MixingMatrix, b: MixingMatrix, tol: float) -> Optional[SignedPermutation]:
    """
    Procura pi (permutacao com sinais) com ||a - b.pi||_inf <= tol.

    Custo c[i][j] = min(||a_i - b_j||, ||a_i + b_j||) e atribuicao exata.
    """
    if a.n != b.n:
        raise InputError(f"Dimensoes diferentes: {a.n} e {b.n}")
    if tol <= 0:
        raise InputError("tol deve ser > 0")

    ea, eb = a.entries, b.entries
    menos = np.linalg.norm(ea[:, :, None] - eb[:, None, :], axis=0)
    mais = np.linalg.norm(ea[:, :, None] + eb[:, None, :], axis=0)
    cols = solve_assignment(np.minimum(menos, mais))

    signs = [1 if menos[i, j] <= mais[i, j] else -1 for i, j in enumerate(cols)]
    pi = SignedPermutation(tuple(cols.tolist()), tuple(signs))
    erro = np.max(np.abs(ea - pi.apply(eb)), initial=0.0)
    if erro <= tol:
        return pi
    logger.debug(f"Sem equivalencia: erro {erro:.3e} > tol {tol:.1e}")
    return None


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """P com P[perm[j], j] = 1, de modo que (P^T M P)[i, j] = M[perm[i], perm[j]]."""
    perm = list(perm)
    if sorted(perm) != list(range(len(perm))):
        raise InputError(f"Permutacao invalida: {perm}")
    p = np.zeros((len(perm), len(perm)))
    p[perm, range(len(perm))] = 1.0
    return p


# ==============================================================================
# PERSISTENCIA
# ==============================================================================

def save_matrix_csv(matrix: np.ndarray, path, integer: bool = False) -> None:
    """Uma linha por linha da matriz, sem cabecalho, '.' decimal."""
    fmt = '%d' if integer else '%.17g'
    pd.DataFrame(np.asarray(matrix)).to_csv(path, header=False, index=False, float_format=fmt, encoding='utf-8')


def load_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Arquivo de matriz nao encontrado: {path}")
    df = pd.read_csv(path, header=None)
    try:
        return df.to_numpy(dtype=float)
    except ValueError as exc:
        raise InputError(f"Arquivo {path} contem valores nao numericos") from exc


def dump_json(payload: Dict, path) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, sort_keys=True)


def load_json(path) -> Dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Arquivo JSON nao encontrado: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)
