"""
GERACAO DE DADOS SINTETICOS

Gera a verdade de referencia e as amostras observadas:
1. Matriz de mistura valida (hipoteses 1 e 2) a partir de um DAG aleatorio
2. Matriz de mistura que viola as duas hipoteses (regime "violating")
3. Fontes gaussianas e exponenciais padronizadas
4. Mistura X = S A^T e covariancia empirica

Os datasets sao salvos como X.csv + truth.json.
"""

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, Tuple

import numpy as np

from model import (
    CovarianceMatrix,
    Dataset,
    GenerationError,
    InputError,
    MixingMatrix,
    SupportPattern,
    dump_json,
    empirical_covariance,
    load_json,
    load_matrix_csv,
    save_matrix_csv,
)
from structure import check_lower_triangularizable, check_structural_variability

logger = logging.getLogger(__name__)

REGIMES = ('valid', 'violating')


@dataclass(frozen=True)
class SimConfig:
    n: int = 10
    t: int = 1000
    edge_prob: float = 0.4
    gaussian_ratio: float = 1.0
    weight_range: Tuple[float, float] = (0.2, 0.8)
    seed: int = 0
    max_rejections: int = 1000
    regime: str = 'valid'

    def __post_init__(self):
        object.__setattr__(self, 'weight_range', tuple(float(w) for w in self.weight_range))
        lo, hi = self.weight_range
        if self.n < 1:
            raise InputError(f"n deve ser >= 1, recebido {self.n}")
        if self.t < 2:
            raise InputError(f"Sao necessarias pelo menos 2 amostras, recebido T={self.t}")
        if not 0.0 < self.edge_prob < 1.0:
            raise InputError(f"edge_prob fora de (0, 1): {self.edge_prob}")
        if not 0.0 <= self.gaussian_ratio <= 1.0:
            raise InputError(f"gaussian_ratio fora de [0, 1]: {self.gaussian_ratio}")
        if not 0.0 < lo < hi:
            raise InputError(f"weight_range invalido: {self.weight_range}")
        if self.max_rejections < 1:
            raise InputError("max_rejections deve ser >= 1")
        if self.regime not in REGIMES:
            raise InputError(f"Regime desconhecido '{self.regime}'. Opcoes: {REGIMES}")

    @classmethod
    def from_dict(cls, payload: Dict) -> 'SimConfig':
        desconhecidos = set(payload or {}) - set(cls.__dataclass_fields__)
        if desconhecidos:
            raise InputError(f"Campos de simulacao desconhecidos: {sorted(desconhecidos)}")
        return cls(**(payload or {}))

    def to_json(self) -> Dict:
        payload = asdict(self)
        payload['weight_range'] = list(self.weight_range)
        return payload


def _signed_weights(mask: np.ndarray, weight_range: Tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    lo, hi = weight_range
    magnitudes = rng.uniform(lo, hi, size=mask.shape)
    sinais = rng.choice([-1.0, 1.0], size=mask.shape)
    return np.where(mask, magnitudes * sinais, 0.0)


def _rejection_sample(draw: Callable[[], np.ndarray], accept: Callable[[np.ndarray], bool],
                      cfg: SimConfig, descricao: str) -> Tuple[MixingMatrix, int]:
    for tentativa in range(1, cfg.max_rejections + 1):
        a = draw()
        if accept(a):
            return MixingMatrix(a), tentativa
    raise GenerationError(
        f"Nenhuma matriz {descricao} em {cfg.max_rejections} tentativas (n={cfg.n}, edge_prob={cfg.edge_prob})",
        acceptance_rate=0.0,
    )


def _draw_valid(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.n
    # A = I - B com B estritamente triangular inferior, depois permutacao simultanea
    mask = np.tril(rng.random((n, n)) < cfg.edge_prob, k=-1) | np.eye(n, dtype=bool)
    perm = rng.permutation(n)
    mask = mask[np.ix_(perm, perm)]
    return _signed_weights(mask, cfg.weight_range, rng)


def _accept_valid(a: np.ndarray) -> bool:
    xi = SupportPattern(a != 0)
    return check_structural_variability(xi) and check_lower_triangularizable(xi)


def _draw_violating(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.n
    mask = (rng.random((n, n)) < cfg.edge_prob) | np.eye(n, dtype=bool)
    j, k = rng.choice(n, size=2, replace=False)
    # coluna k = coluna j uniao {k}: diferenca simetrica <= 1
    mask[:, k] = mask[:, j]
    mask[k, k] = True
    return _signed_weights(mask, cfg.weight_range, rng)


def _accept_violating(a: np.ndarray) -> bool:
    xi = SupportPattern(a != 0)
    if check_structural_variability(xi) or not MixingMatrix(a).is_nonsingular():
        return False
    return not check_lower_triangularizable(xi)


def _sample_with_stats(cfg: SimConfig, rng: np.random.Generator) -> Tuple[MixingMatrix, int]:
    if cfg.regime == 'violating':
        if cfg.n < 2:
            raise InputError("O regime 'violating' exige n >= 2")
        return _rejection_sample(lambda: _draw_violating(cfg, rng), _accept_violating, cfg, 'violadora')
    return _rejection_sample(lambda: _draw_valid(cfg, rng), _accept_valid, cfg, 'valida')


def sample_mixing(cfg: SimConfig, rng: np.random.Generator) -> MixingMatrix:
    """Matriz de mistura com suporte valido (hipoteses 1 e 2) e pesos em +-[lo, hi]."""
    return _rejection_sample(lambda: _draw_valid(cfg, rng), _accept_valid, cfg, 'valida')[0]


def sample_mixing_violating(cfg: SimConfig, rng: np.random.Generator) -> MixingMatrix:
    """Matriz nao singular que viola a variabilidade estrutural e a triangularizacao."""
    if cfg.n < 2:
        raise InputError("O regime 'violating' exige n >= 2")
    return _rejection_sample(lambda: _draw_violating(cfg, rng), _accept_violating, cfg, 'violadora')[0]


def sample_sources(n: int, t: int, gaussian_ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Primeiras floor(ratio n) colunas N(0,1); demais Exp(1) - 1."""
    if not 0.0 <= gaussian_ratio <= 1.0:
        raise InputError(f"gaussian_ratio fora de [0, 1]: {gaussian_ratio}")
    if n < 1 or t < 1:
        raise InputError(f"n e t devem ser >= 1 (n={n}, t={t})")
    n_gauss = math.floor(gaussian_ratio * n + 1e-9)
    gaussianas = rng.standard_normal((t, n_gauss))
    exponenciais = rng.exponential(1.0, size=(t, n - n_gauss)) - 1.0
    return np.hstack([gaussianas, exponenciais])


def mix_and_covariance(a: MixingMatrix, s: np.ndarray,
                       gaussian_ratio: float = 1.0) -> Tuple[Dataset, CovarianceMatrix]:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[1] != a.n:
        raise InputError(f"Fontes com shape {s.shape} incompativel com A {a.n}x{a.n}")
    x = s @ a.entries.T
    sigma = empirical_covariance(x)
    return Dataset(x, true_a=a, true_s=s, gaussian_ratio=gaussian_ratio), sigma


def simulate_dataset(cfg: SimConfig) -> Dataset:
    """Gera verdade, fontes e amostras com rng semeado por cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    a, tentativas = _sample_with_stats(cfg, rng)
    s = sample_sources(cfg.n, cfg.t, cfg.gaussian_ratio, rng)
    dataset, _ = mix_and_covariance(a, s, cfg.gaussian_ratio)
    meta = {
        'config': cfg.to_json(),
        'seed': cfg.seed,
        'regime': cfg.regime,
        'attempts': tentativas,
        'acceptance_rate': 1.0 / tentativas,
    }
    logger.info(f"  Dataset gerado: n={cfg.n}, T={cfg.t}, regime={cfg.regime}, "
                f"||A||_0={a.l0()}, tentativas={tentativas}")
    return Dataset(dataset.x, true_a=a, true_s=dataset.true_s, gaussian_ratio=cfg.gaussian_ratio, meta=meta)


def save_dataset(dataset: Dataset, out_dir) -> Tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x_path = out_dir / 'X.csv'
    truth_path = out_dir / 'truth.json'
    save_matrix_csv(dataset.x, x_path)
    dump_json({
        'true_a': dataset.true_a.to_json() if dataset.true_a is not None else None,
        'gaussian_ratio': dataset.gaussian_ratio,
        'meta': dataset.meta,
    }, truth_path)
    logger.info(f"[OK] Dataset salvo em: {out_dir}")
    return x_path, truth_path


def load_dataset(data_dir) -> Dataset:
    data_dir = Path(data_dir)
    x = load_matrix_csv(data_dir / 'X.csv')
    truth_path = data_dir / 'truth.json'
    if not truth_path.exists():
        logger.warning(f"[AVISO] {truth_path} ausente; dataset sem verdade de referencia")
        return Dataset(x)
    truth = load_json(truth_path)
    true_a = MixingMatrix.from_json(truth['true_a']) if truth.get('true_a') else None
    return Dataset(x, true_a=true_a, gaussian_ratio=float(truth.get('gaussian_ratio', 1.0)),
                   meta=truth.get('meta', {}))
