"""Testes do solver: configuracao, minimizacao interna, selecao de modelo e laco de penalidade."""

import numpy as np
import pytest

from model import CovarianceMatrix, InputError, MixingMatrix, signed_perm_equivalent
from objective import ObjectiveEval
from simulate import SimConfig, sample_mixing
from solver import (
    Feasibility,
    Method,
    OptimizationFailure,
    SolveResult,
    SolverConfig,
    SparseICASolver,
    inner_minimize,
    penalized_objective,
    select_model,
    solve_decomposition,
    solve_likelihood,
)

VERDADE = np.array([[1.0, 0.0, 0.0], [0.6, 0.8, 0.0], [-0.5, 0.0, 0.7]])


def _rosenbrock(x: np.ndarray) -> ObjectiveEval:
    a, b = x[0, 0], x[0, 1]
    valor = (1 - a) ** 2 + 100 * (b - a ** 2) ** 2 + x[1, 0] ** 2 + x[1, 1] ** 2
    grad = np.array([
        [-2 * (1 - a) - 400 * a * (b - a ** 2), 200 * (b - a ** 2)],
        [2 * x[1, 0], 2 * x[1, 1]],
    ])
    return ObjectiveEval(float(valor), grad)


def _candidato(a: np.ndarray, feasible: bool = True, residual: float = 0.0, g_value: float = 0.0,
               restart_index: int = 0, method: Method = Method.LIKELIHOOD) -> SolveResult:
    medida = Feasibility(residual, g_value)
    return SolveResult(
        a_hat=MixingMatrix(a),
        feasibility=medida,
        raw_feasibility=medida,
        feasible=feasible,
        objective=0.0,
        restart_index=restart_index,
        method=method,
    )


# ==============================================================================
# CONFIGURACAO
# ==============================================================================

def testar_defaults_por_metodo():
    dec = SolverConfig.defaults(Method.DECOMPOSITION)
    assert dec.c1 == 1e-5
    assert (dec.mcp.lam, dec.mcp.alpha) == (1.0, 40.0)
    lik = SolverConfig.defaults(Method.LIKELIHOOD)
    assert lik.c1 == 1e-2
    assert (lik.mcp.lam, lik.mcp.alpha) == (0.1, 10.0)
    assert lik.beta == 1.5 and lik.restarts == 30 and lik.inner_iters == 250 and lik.k_max == 125


def testar_from_config_e_overrides():
    config = {'solver': {'common': {'restarts': 5, 'threshold': 0.05},
                         'likelihood': {'c1': 0.1}}}
    cfg = SolverConfig.from_config(config, Method.LIKELIHOOD, restarts=7, beta=None)
    assert cfg.restarts == 7
    assert cfg.threshold == 0.05
    assert cfg.c1 == 0.1
    assert cfg.beta == 1.5


def testar_from_config_invalida():
    with pytest.raises(InputError):
        SolverConfig.from_config({'solver': {'common': {'nao_existe': 1}}}, Method.LIKELIHOOD)
    with pytest.raises(InputError):
        SolverConfig.defaults(Method.LIKELIHOOD, beta=1.0)
    with pytest.raises(InputError):
        SolverConfig.defaults(Method.LIKELIHOOD, g_mode='cubico')


def testar_config_to_json():
    payload = SolverConfig.defaults(Method.DECOMPOSITION).to_json()
    assert payload['method'] == 'decomposition'
    assert payload['mcp'] == {'lambda': 1.0, 'alpha': 40.0}
    assert payload['g_mode'] == 'log_squaring'


# ==============================================================================
# MINIMIZACAO INTERNA
# ==============================================================================

def testar_inner_minimize_rosenbrock():
    x0 = np.array([[-1.2, 1.0], [0.5, -0.5]])
    resultado = inner_minimize(_rosenbrock, x0, iters=500)
    np.testing.assert_allclose(resultado.entries, [[1.0, 1.0], [0.0, 0.0]], atol=1e-4)


def testar_inner_minimize_nao_finito():
    def objetivo(x):
        return ObjectiveEval(float('nan'), np.zeros_like(x))

    with pytest.raises(OptimizationFailure):
        inner_minimize(objetivo, np.eye(2), iters=10)


@pytest.mark.parametrize('method', list(Method))
def testar_objetivo_penalizado_gradiente(method):
    rng = np.random.default_rng(0)
    cfg = SolverConfig.defaults(method)
    sigma = CovarianceMatrix(VERDADE @ VERDADE.T, sample_count=1000)
    objetivo = penalized_objective(cfg, sigma, c=3.0)
    a = VERDADE + 0.3 * rng.normal(size=(3, 3))
    analitico = objetivo(a).gradient
    numerico = np.zeros_like(a)
    for idx in np.ndindex(a.shape):
        h = 1e-6 * (1.0 + abs(a[idx]))
        mais, menos = a.copy(), a.copy()
        mais[idx] += h
        menos[idx] -= h
        numerico[idx] = (objetivo(mais).value - objetivo(menos).value) / (2 * h)
    np.testing.assert_allclose(analitico, numerico, rtol=1e-5, atol=1e-6)


# ==============================================================================
# SELECAO DE MODELO
# ==============================================================================

def testar_selecao_verossimilhanca_prefere_menor_bic():
    c, s = np.cos(0.4), np.sin(0.4)
    g = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    sigma = CovarianceMatrix(VERDADE @ VERDADE.T, sample_count=1000)
    candidatos = [_candidato(VERDADE @ g, restart_index=0), _candidato(VERDADE, restart_index=1)]
    escolhido = select_model(candidatos, sigma, Method.LIKELIHOOD)
    assert escolhido.restart_index == 1
    assert np.isfinite(escolhido.score)


def testar_selecao_decomposicao_esparsidade_e_residuo():
    sigma = CovarianceMatrix(np.eye(3))
    denso = np.ones((3, 3)) + np.eye(3)
    candidatos = [
        _candidato(denso, residual=0.0, restart_index=0, method=Method.DECOMPOSITION),
        _candidato(np.eye(3), residual=1e-9, restart_index=1, method=Method.DECOMPOSITION),
        _candidato(-np.eye(3), residual=1e-10, restart_index=2, method=Method.DECOMPOSITION),
    ]
    escolhido = select_model(candidatos, sigma, Method.DECOMPOSITION)
    assert escolhido.restart_index == 2
    assert escolhido.score == 3.0


def testar_selecao_sem_viaveis_retorna_menor_violacao():
    sigma = CovarianceMatrix(np.eye(2), sample_count=10)
    candidatos = [
        _candidato(np.eye(2), feasible=False, g_value=0.3, restart_index=0),
        _candidato(np.eye(2), feasible=False, g_value=0.1, restart_index=1),
    ]
    escolhido = select_model(candidatos, sigma, Method.LIKELIHOOD)
    assert escolhido.restart_index == 1
    assert not escolhido.feasible


def testar_selecao_lista_vazia():
    with pytest.raises(InputError):
        select_model([], CovarianceMatrix(np.eye(2)), Method.LIKELIHOOD)


# ==============================================================================
# LACO DE PENALIDADE
# ==============================================================================

def testar_laco_verossimilhanca_estrutura_do_resultado(tmp_path):
    sigma = CovarianceMatrix(VERDADE @ VERDADE.T, sample_count=1000)
    cfg = SolverConfig.defaults(Method.LIKELIHOOD, restarts=2, k_max=8, inner_iters=50)
    solver = SparseICASolver(cfg)
    resultado = solver.resolver(sigma)

    assert resultado.restarts_tried == 2
    assert 1 <= len(resultado.trace) <= cfg.k_max
    for k, passo in enumerate(resultado.trace):
        assert passo.k == k + 1
        assert passo.c == pytest.approx(cfg.c1 * cfg.beta ** k, rel=1e-12)
    entradas = np.abs(resultado.a_hat.entries)
    assert not np.any((entradas > 0) & (entradas < cfg.threshold))

    payload = resultado.to_json()
    assert set(payload) >= {'a_hat', 'feasible', 'feasibility', 'raw_feasibility', 'trace', 'score'}
    solver.save_result(tmp_path / 'result.json')
    assert (tmp_path / 'result.json').exists()


def testar_vanilla_verossimilhanca_uma_iteracao_externa():
    sigma = CovarianceMatrix(VERDADE @ VERDADE.T, sample_count=1000)
    cfg = SolverConfig.defaults(Method.LIKELIHOOD, restarts=1, inner_iters=50, use_g_constraint=False)
    resultado = solve_likelihood(sigma, cfg)
    assert len(resultado.trace) == 1
    assert resultado.feasible


def testar_determinismo_por_semente():
    sigma = CovarianceMatrix(VERDADE @ VERDADE.T, sample_count=1000)
    cfg = SolverConfig.defaults(Method.DECOMPOSITION, restarts=2, k_max=5, inner_iters=30, seed=3)
    a1 = solve_decomposition(sigma, cfg).a_hat.entries
    a2 = solve_decomposition(sigma, cfg).a_hat.entries
    np.testing.assert_array_equal(a1, a2)


def testar_paralelo_igual_sequencial():
    sigma = CovarianceMatrix(VERDADE @ VERDADE.T, sample_count=1000)
    cfg = SolverConfig.defaults(Method.LIKELIHOOD, restarts=3, k_max=4, inner_iters=30, seed=1)
    sequencial = solve_likelihood(sigma, cfg).a_hat.entries
    paralelo = solve_likelihood(sigma, SolverConfig.defaults(
        Method.LIKELIHOOD, restarts=3, k_max=4, inner_iters=30, seed=1, n_jobs=2)).a_hat.entries
    np.testing.assert_array_equal(sequencial, paralelo)


def testar_metodo_errado_e_amostras_insuficientes():
    sigma = CovarianceMatrix(np.eye(3), sample_count=100)
    with pytest.raises(InputError):
        solve_decomposition(sigma, SolverConfig.defaults(Method.LIKELIHOOD))
    with pytest.raises(InputError):
        solve_likelihood(sigma, SolverConfig.defaults(Method.DECOMPOSITION))
    with pytest.raises(InputError):
        solve_likelihood(CovarianceMatrix(np.eye(3), sample_count=2), SolverConfig.defaults(Method.LIKELIHOOD))


# ==============================================================================
# IDENTIFICABILIDADE POPULACIONAL (lento)
# ==============================================================================

@pytest.mark.slow
@pytest.mark.parametrize('method', list(Method))
@pytest.mark.parametrize('n', [3, 4, 5, 6])
def testar_identificabilidade_populacional(method, n):
    acertos = 0
    for trial in range(10):
        rng = np.random.default_rng(1000 * n + trial)
        verdade = sample_mixing(SimConfig(n=n, t=2, seed=trial), rng)
        sigma = CovarianceMatrix.from_mixing(verdade, sample_count=10 ** 6)
        cfg = SolverConfig.defaults(method, restarts=10, seed=trial)
        resultado = SparseICASolver(cfg).resolver(sigma)
        if signed_perm_equivalent(resultado.a_hat, verdade, 5e-2) is not None:
            acertos += 1
    assert acertos >= 9
