"""
SOLVER ICA ESPARSO (METODO DE PENALIDADE QUADRATICA)

Dois metodos de estimacao da matriz de mistura a partir da covariancia:
1. Decomposicao: rho(A) + (c/2)||A A^T - Sigma||_F^2 + (c/2) g(A)^2
2. Verossimilhanca: L(A; Sigma)/T + rho(A) + (c/2) g(A)^2

Cada subproblema irrestrito e resolvido com L-BFGS (SciPy), com partida a
quente na iteracao anterior e c_{k+1} = beta c_k. O procedimento e repetido
a partir de varias inicializacoes aleatorias e a solucao final e escolhida
por selecao de modelo (BIC para verossimilhanca, esparsidade para
decomposicao). Sem a restricao g (modo "vanilla") o mesmo laco resolve a
versao sem busca restrita a matrizes triangularizaveis.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import optimize

from model import (
    CovarianceMatrix,
    InputError,
    MixingMatrix,
    NumericError,
    dump_json,
)
from objective import (
    GMode,
    McpParams,
    ObjectiveEval,
    bic_score,
    decomposition_residual_eval,
    g_eval,
    mcp_eval,
    nll_eval,
)

logger = logging.getLogger(__name__)


class OptimizationFailure(NumericError):
    """NaN/Inf durante uma minimizacao interna; a reinicializacao e descartada."""


class Method(Enum):
    DECOMPOSITION = 'decomposition'
    LIKELIHOOD = 'likelihood'


# Constantes de implementacao por metodo: c1 e MCP (lambda, alpha)
_DEFAULTS_METODO = {
    Method.DECOMPOSITION: {'c1': 1e-5, 'mcp_lambda': 1.0, 'mcp_alpha': 40.0},
    Method.LIKELIHOOD: {'c1': 1e-2, 'mcp_lambda': 0.1, 'mcp_alpha': 10.0},
}

_DEFAULTS_COMUNS = {
    'beta': 1.5,
    'k_max': 125,
    'eps1': 1e-8,
    'eps2': 1e-8,
    'inner_iters': 250,
    'restarts': 30,
    'init_scale': 0.1,
    'threshold': 0.01,
    'use_g_constraint': True,
    'seed': 0,
    'ridge': 0.0,
    'n_jobs': 1,
    'g_mode': 'log_squaring',
}


@dataclass(frozen=True)
class SolverConfig:
    method: Method
    c1: float
    mcp: McpParams
    beta: float = 1.5
    k_max: int = 125
    eps1: float = 1e-8
    eps2: float = 1e-8
    inner_iters: int = 250
    restarts: int = 30
    init_scale: float = 0.1
    threshold: float = 0.01
    use_g_constraint: bool = True
    seed: int = 0
    ridge: float = 0.0
    n_jobs: int = 1
    g_mode: GMode = GMode.LOG_SQUARING

    def __post_init__(self):
        if self.c1 <= 0:
            raise InputError(f"c1 deve ser > 0, recebido {self.c1}")
        if self.beta <= 1:
            raise InputError(f"beta deve ser > 1, recebido {self.beta}")
        if self.k_max < 1 or self.inner_iters < 1 or self.restarts < 1:
            raise InputError("k_max, inner_iters e restarts devem ser >= 1")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise InputError("Tolerancias eps1 e eps2 devem ser > 0")
        if self.init_scale <= 0:
            raise InputError("init_scale deve ser > 0")
        if self.threshold < 0 or self.ridge < 0:
            raise InputError("threshold e ridge devem ser >= 0")
        if self.n_jobs < 1:
            raise InputError("n_jobs deve ser >= 1")

    @classmethod
    def defaults(cls, method: Method, **overrides) -> 'SolverConfig':
        return cls.from_config({}, method, **overrides)

    @classmethod
    def from_config(cls, config: Dict, method: Method, **overrides) -> 'SolverConfig':
        """Mescla defaults, secoes solver.common / solver.<metodo> do YAML e overrides."""
        secao = (config or {}).get('solver', {}) or {}
        valores = dict(_DEFAULTS_COMUNS)
        valores.update(_DEFAULTS_METODO[method])
        valores.update(secao.get('common', {}) or {})
        valores.update(secao.get(method.value, {}) or {})
        valores.update({k: v for k, v in overrides.items() if v is not None})

        mcp = McpParams(float(valores.pop('mcp_lambda')), float(valores.pop('mcp_alpha')))
        try:
            g_mode = GMode(valores.pop('g_mode'))
        except ValueError as exc:
            raise InputError(f"g_mode invalido: {exc}") from exc
        conhecidos = set(cls.__dataclass_fields__) - {'method', 'mcp', 'g_mode'}
        desconhecidos = set(valores) - conhecidos
        if desconhecidos:
            raise InputError(f"Parametros de solver desconhecidos: {sorted(desconhecidos)}")
        return cls(
            method=method,
            mcp=mcp,
            g_mode=g_mode,
            c1=float(valores['c1']),
            beta=float(valores['beta']),
            k_max=int(valores['k_max']),
            eps1=float(valores['eps1']),
            eps2=float(valores['eps2']),
            inner_iters=int(valores['inner_iters']),
            restarts=int(valores['restarts']),
            init_scale=float(valores['init_scale']),
            threshold=float(valores['threshold']),
            use_g_constraint=bool(valores['use_g_constraint']),
            seed=int(valores['seed']),
            ridge=float(valores['ridge']),
            n_jobs=int(valores['n_jobs']),
        )

    def to_json(self) -> Dict:
        payload = asdict(self)
        payload['method'] = self.method.value
        payload['g_mode'] = self.g_mode.value
        payload['mcp'] = {'lambda': self.mcp.lam, 'alpha': self.mcp.alpha}
        return payload


@dataclass(frozen=True)
class Feasibility:
    residual: float
    g_value: float


@dataclass(frozen=True)
class OuterStep:
    k: int
    c: float
    objective: float
    residual: float
    g_value: float


@dataclass(frozen=True)
class SolveResult:
    a_hat: MixingMatrix
    feasibility: Feasibility
    raw_feasibility: Feasibility
    feasible: bool
    objective: float
    score: float = float('nan')
    restarts_tried: int = 1
    restarts_failed: int = 0
    restart_index: int = 0
    trace: List[OuterStep] = field(default_factory=list)
    method: Method = Method.LIKELIHOOD

    def to_json(self) -> Dict:
        return {
            'method': self.method.value,
            'a_hat': self.a_hat.to_json(),
            'feasible': self.feasible,
            'feasibility': asdict(self.feasibility),
            'raw_feasibility': asdict(self.raw_feasibility),
            'objective': self.objective,
            'score': self.score,
            'restarts_tried': self.restarts_tried,
            'restarts_failed': self.restarts_failed,
            'restart_index': self.restart_index,
            'trace': [asdict(step) for step in self.trace],
        }


# ==============================================================================
# MINIMIZACAO INTERNA
# ==============================================================================

def inner_minimize(objective: Callable[[np.ndarray], ObjectiveEval], x0, iters: int,
                   gtol: float = 1e-6) -> MixingMatrix:
    """L-BFGS sobre matrizes n x n; levanta OptimizationFailure em NaN/Inf."""
    x0 = x0.entries if isinstance(x0, MixingMatrix) else np.asarray(x0, dtype=float)
    shape = x0.shape

    def fun(v: np.ndarray):
        avaliacao = objective(v.reshape(shape))
        if not np.isfinite(avaliacao.value) or not np.all(np.isfinite(avaliacao.gradient)):
            raise OptimizationFailure("Objetivo nao finito durante L-BFGS")
        return avaliacao.value, np.asarray(avaliacao.gradient, dtype=float).ravel()

    sol = optimize.minimize(
        fun, x0.ravel(), jac=True, method='L-BFGS-B',
        options={'maxiter': iters, 'gtol': gtol, 'ftol': np.finfo(float).eps},
    )
    if not np.all(np.isfinite(sol.x)):
        raise OptimizationFailure("L-BFGS retornou ponto nao finito")
    return MixingMatrix(sol.x.reshape(shape))


def penalized_objective(cfg: SolverConfig, sigma: CovarianceMatrix, c: float) -> Callable[[np.ndarray], ObjectiveEval]:
    """Subproblema irrestrito da iteracao com coeficiente c."""

    def objective(x: np.ndarray) -> ObjectiveEval:
        termo = mcp_eval(x, cfg.mcp)
        value, gradient = termo.value, termo.gradient
        if cfg.method == Method.DECOMPOSITION:
            residuo = decomposition_residual_eval(x, sigma)
            value += 0.5 * c * residuo.value
            gradient = gradient + 0.5 * c * residuo.gradient
        else:
            nll = nll_eval(x, sigma, averaged=True)
            value += nll.value
            gradient = gradient + nll.gradient
        if cfg.use_g_constraint:
            g = g_eval(x, cfg.g_mode)
            value += 0.5 * c * g.value ** 2
            gradient = gradient + c * g.value * g.gradient
        return ObjectiveEval(value, gradient)

    return objective


def _is_feasible(cfg: SolverConfig, residual: float, g_value: float) -> bool:
    g_ok = (not cfg.use_g_constraint) or g_value < cfg.eps2
    if cfg.method == Method.DECOMPOSITION:
        return residual < cfg.eps1 and g_ok
    return g_ok


def _measure(cfg: SolverConfig, a: np.ndarray, sigma: CovarianceMatrix) -> Feasibility:
    return Feasibility(
        residual=decomposition_residual_eval(a, sigma).value,
        g_value=g_eval(a, cfg.g_mode).value,
    )


def run_restart(sigma: CovarianceMatrix, cfg: SolverConfig, restart_index: int) -> Optional[SolveResult]:
    """Uma inicializacao do metodo de penalidade; None se falhar numericamente."""
    rng = np.random.default_rng(cfg.seed + restart_index)
    n = sigma.n
    a = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(n, n))
    c = cfg.c1
    trace: List[OuterStep] = []
    feasible = False
    objetivo = float('nan')

    for k in range(1, cfg.k_max + 1):
        objective = penalized_objective(cfg, sigma, c)
        try:
            a = inner_minimize(objective, a, cfg.inner_iters).entries
            objetivo = objective(a).value
        except NumericError as exc:
            logger.debug(f"  Reinicializacao {restart_index} descartada na iteracao {k}: {exc}")
            return None
        medida = _measure(cfg, a, sigma)
        trace.append(OuterStep(k, c, objetivo, medida.residual, medida.g_value))
        logger.debug(f"  [restart {restart_index} | k={k}] c={c:.3e} obj={objetivo:.6e} "
                     f"residuo={medida.residual:.3e} g={medida.g_value:.3e}")
        if _is_feasible(cfg, medida.residual, medida.g_value):
            feasible = True
            break
        c *= cfg.beta

    bruta = _measure(cfg, a, sigma)
    a_hat = MixingMatrix(a).thresholded(cfg.threshold)
    return SolveResult(
        a_hat=a_hat,
        feasibility=_measure(cfg, a_hat.entries, sigma),
        raw_feasibility=bruta,
        feasible=feasible,
        objective=objetivo,
        restart_index=restart_index,
        trace=trace,
        method=cfg.method,
    )


def _run_restart_args(args):
    return run_restart(*args)


# ==============================================================================
# SELECAO DE MODELO
# ==============================================================================

def _violation(result: SolveResult) -> float:
    raw = result.raw_feasibility
    if result.method == Method.DECOMPOSITION:
        return raw.residual + raw.g_value
    return raw.g_value


def select_model(candidates: List[SolveResult], sigma_bar: CovarianceMatrix, method: Method) -> SolveResult:
    """
    Verossimilhanca: menor BIC entre os viaveis.
    Decomposicao: menor ||A||_0 entre os viaveis, empate pelo menor residuo.
    Sem viaveis: o candidato de menor violacao, marcado como inviavel.
    """
    if not candidates:
        raise InputError("Lista de candidatos vazia")

    viaveis = [c for c in candidates if c.feasible]
    if not viaveis:
        escolhido = min(candidates, key=lambda c: (_violation(c), c.restart_index))
        logger.warning(f"[AVISO] Nenhuma reinicializacao viavel; usando a de menor violacao "
                       f"({_violation(escolhido):.3e})")
        return replace(escolhido, feasible=False, score=float('nan'))

    if method == Method.LIKELIHOOD:
        pontuados = []
        for cand in viaveis:
            try:
                score = bic_score(cand.a_hat, sigma_bar, zero_tol=0.0)
            except NumericError as exc:
                logger.debug(f"  BIC indefinido para restart {cand.restart_index}: {exc}")
                score = float('inf')
            pontuados.append((score, cand.restart_index, cand))
        score, _, escolhido = min(pontuados, key=lambda item: (item[0], item[1]))
        return replace(escolhido, score=float(score))

    escolhido = min(viaveis, key=lambda c: (c.a_hat.l0(), c.feasibility.residual, c.restart_index))
    return replace(escolhido, score=float(escolhido.a_hat.l0()))


# ==============================================================================
# ORQUESTRACAO
# ==============================================================================

class SparseICASolver:
    """
    Executa as reinicializacoes e a selecao de modelo para um metodo.

    Exemplo:
    - cfg = SolverConfig.defaults(Method.LIKELIHOOD, restarts=10)
    - resultado = SparseICASolver(cfg).resolver(sigma_bar)
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.resultado: Optional[SolveResult] = None

    def resolver(self, sigma_bar: CovarianceMatrix) -> SolveResult:
        cfg = self.config
        self.logger.info("=" * 80)
        self.logger.info(f"SPARSE ICA | metodo={cfg.method.value} | n={sigma_bar.n} | "
                         f"T={sigma_bar.sample_count} | restricao g={'sim' if cfg.use_g_constraint else 'nao'}")
        self.logger.info("=" * 80)

        sigma = sigma_bar.regularized(cfg.ridge)
        args = [(sigma, cfg, r) for r in range(cfg.restarts)]
        if cfg.n_jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
                brutos = list(pool.map(_run_restart_args, args))
        else:
            brutos = [run_restart(*arg) for arg in args]

        candidatos = [r for r in brutos if r is not None]
        falhas = len(brutos) - len(candidatos)
        self.logger.info(f"  Reinicializacoes: {len(brutos)} | falhas numericas: {falhas} | "
                         f"viaveis: {sum(c.feasible for c in candidatos)}")
        if not candidatos:
            raise NumericError(f"Todas as {len(brutos)} reinicializacoes falharam numericamente")

        escolhido = select_model(candidatos, sigma, cfg.method)
        self.resultado = replace(escolhido, restarts_tried=len(brutos), restarts_failed=falhas)

        if self.resultado.feasible:
            self.logger.info(f"[OK] Solucao viavel (restart {escolhido.restart_index}, "
                             f"||A||_0={self.resultado.a_hat.l0()}, score={self.resultado.score:.4f})")
        else:
            self.logger.warning("[AVISO] Solucao retornada e inviavel")
        return self.resultado

    def save_result(self, path) -> None:
        if self.resultado is None:
            raise InputError("Nenhum resultado para salvar; execute resolver() antes")
        payload = self.resultado.to_json()
        payload['config'] = self.config.to_json()
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        dump_json(payload, path)
        self.logger.info(f"[OK] Resultado salvo em: {path}")


def solve_decomposition(sigma_bar: CovarianceMatrix, cfg: SolverConfig) -> SolveResult:
    if cfg.method != Method.DECOMPOSITION:
        raise InputError(f"Configuracao de metodo {cfg.method.value} passada para decomposicao")
    return SparseICASolver(cfg).resolver(sigma_bar)


def solve_likelihood(sigma_bar: CovarianceMatrix, cfg: SolverConfig) -> SolveResult:
    if cfg.method != Method.LIKELIHOOD:
        raise InputError(f"Configuracao de metodo {cfg.method.value} passada para verossimilhanca")
    if sigma_bar.sample_count < sigma_bar.n:
        raise InputError(f"Verossimilhanca exige T >= n (T={sigma_bar.sample_count}, n={sigma_bar.n})")
    return SparseICASolver(cfg).resolver(sigma_bar)
