"""
INTERFACE DE LINHA DE COMANDO - REPRODUCAO DOS EXPERIMENTOS

Subcomandos:
1. simulate: gera X.csv + truth.json
2. run: executa um metodo sobre um dataset e grava result.json + metrics.csv
3. sweep: varre tamanho amostral ou razao de fontes gaussianas
4. verify: relatorio das hipoteses estruturais de uma matriz

Codigos de saida: 0 sucesso, 2 erro de uso/configuracao, 3 falha numerica.

Uso:
    python cli.py simulate --n 10 --samples 1000 --seed 0 --out resultados/dados
    python cli.py run --data resultados/dados --method sparseica-likelihood
    python cli.py sweep --axis gaussian_ratio --grid 0,0.2,0.4,0.6,0.8,1 --trials 10
    python cli.py verify --matrix matriz.csv
"""

import argparse
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import yaml

from causal import a_to_sem, dag_check, mec_is_singleton
from metrics import FASTICA_MAX_ITER, FASTICA_TOL, evaluate, fastica_baseline
from model import (
    Dataset,
    GenerationError,
    InputError,
    MixingMatrix,
    NumericError,
    dump_json,
    load_matrix_csv,
    support_of,
)
from simulate import SimConfig, load_dataset, save_dataset, simulate_dataset
from solver import Method, SolverConfig, SparseICASolver
from structure import assumption_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

SPARSE_METHODS = {
    'sparseica-likelihood': (Method.LIKELIHOOD, True),
    'sparseica-decomposition': (Method.DECOMPOSITION, True),
    'vanilla-likelihood': (Method.LIKELIHOOD, False),
    'vanilla-decomposition': (Method.DECOMPOSITION, False),
}
FASTICA_METHODS = ('fastica', 'fastica-d')
RUN_METHODS = tuple(SPARSE_METHODS) + ('fastica',)
SWEEP_METHODS = tuple(SPARSE_METHODS) + FASTICA_METHODS

# Pareamento metodo -> regime de dados dos experimentos
PAIRED_REGIME = {
    'sparseica-likelihood': 'valid',
    'sparseica-decomposition': 'valid',
    'fastica-d': 'valid',
    'vanilla-likelihood': 'violating',
    'vanilla-decomposition': 'violating',
    'fastica': 'violating',
}

CONFIG_SECTIONS = ('paths', 'solver', 'simulacao', 'metricas', 'sweep', 'debug', 'meta')

ROW_COLUMNS = ['method', 'n', 'T', 'gaussian_ratio', 'seed', 'mcc', 'amari',
               'runtime_ms', 'config_hash', 'status', 'error']


# ==============================================================================
# CONFIGURACAO E LOGGING
# ==============================================================================

def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s'
    )


def load_config(config_path: Optional[str]) -> Dict:
    """Carrega o YAML; sem arquivo retorna configuracao vazia (defaults internos)."""
    if config_path is None:
        padrao = Path(__file__).resolve().parent / 'config.yaml'
        if not padrao.exists():
            return {}
        config_path = padrao
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"Arquivo de configuracao nao encontrado: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        config = yaml.safe_load(f) or {}
    if not isinstance(config, dict):
        raise InputError(f"Configuracao {path} deve ser um mapeamento")
    desconhecidas = sorted(set(config) - set(CONFIG_SECTIONS))
    if desconhecidas:
        raise InputError(f"Secoes desconhecidas em {path}: {desconhecidas}. Opcoes: {CONFIG_SECTIONS}")
    return config


def config_hash(payload: Dict) -> str:
    canonico = json.dumps(payload, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonico.encode('utf-8')).hexdigest()


def _out_dir(args, config: Dict, subdir: Optional[str] = None) -> Path:
    if args.out:
        return Path(args.out)
    base = Path((config.get('paths', {}) or {}).get('output_dir', 'resultados'))
    return base / subdir if subdir else base


def _sim_config(config: Dict, args, **overrides) -> SimConfig:
    valores = dict(config.get('simulacao', {}) or {})
    flags = {
        'n': getattr(args, 'n', None),
        't': getattr(args, 'samples', None),
        'gaussian_ratio': getattr(args, 'gaussian_ratio', None),
        'seed': getattr(args, 'seed', None),
        'regime': getattr(args, 'regime', None) if getattr(args, 'regime', None) in ('valid', 'violating') else None,
    }
    valores.update({k: v for k, v in flags.items() if v is not None})
    valores.update(overrides)
    return SimConfig.from_dict(valores)


def _solver_config(config: Dict, args, method_name: str, seed: int, n_jobs: int = 1) -> SolverConfig:
    method, usa_g = SPARSE_METHODS[method_name]
    return SolverConfig.from_config(
        config, method,
        restarts=args.restarts,
        c1=args.c1,
        beta=args.beta,
        mcp_lambda=args.lam,
        mcp_alpha=args.alpha,
        threshold=args.threshold,
        use_g_constraint=usa_g and not args.no_g_constraint,
        seed=seed,
        n_jobs=n_jobs,
    )


def _fastica_params(config: Dict) -> Dict:
    secao = config.get('metricas', {}) or {}
    return {
        'tol': float(secao.get('fastica_tol', FASTICA_TOL)),
        'max_iter': int(secao.get('fastica_max_iter', FASTICA_MAX_ITER)),
    }


# ==============================================================================
# EXECUCAO DE UM METODO
# ==============================================================================

def run_method(method_name: str, dataset: Dataset, config: Dict, args, seed: int,
               n_jobs: int = 1) -> Tuple[MixingMatrix, Dict, str, Dict]:
    """Retorna (A_hat, payload JSON, status, configuracao usada)."""
    if method_name in FASTICA_METHODS:
        params = _fastica_params(config)
        resultado = fastica_baseline(dataset.x, seed=seed, **params)
        payload = {
            'method': method_name,
            'a_hat': resultado.mixing.to_json(),
            'converged': resultado.converged,
            'n_iter': resultado.n_iter,
        }
        status = 'ok' if resultado.converged else 'not_converged'
        return resultado.mixing, payload, status, {'method': method_name, **params, 'seed': seed}

    if method_name not in SPARSE_METHODS:
        raise InputError(f"Metodo desconhecido '{method_name}'. Opcoes: {SWEEP_METHODS}")
    cfg = _solver_config(config, args, method_name, seed, n_jobs)
    solver = SparseICASolver(cfg)
    resultado = solver.resolver(dataset.covariance())
    payload = resultado.to_json()
    payload['method_name'] = method_name
    payload['config'] = cfg.to_json()
    status = 'ok' if resultado.feasible else 'infeasible'
    return resultado.a_hat, payload, status, {'method': method_name, **cfg.to_json()}


def _row(method_name: str, dataset: Dataset, seed: int, run_config: Dict) -> Dict:
    return {
        'method': method_name,
        'n': dataset.n,
        'T': dataset.t,
        'gaussian_ratio': dataset.gaussian_ratio,
        'seed': seed,
        'mcc': float('nan'),
        'amari': float('nan'),
        'runtime_ms': float('nan'),
        'config_hash': config_hash({'run': run_config, 'data': dataset.meta.get('config', {})}),
        'status': 'ok',
        'error': '',
    }


def _write_rows(rows: List[Dict], path: Path) -> pd.DataFrame:
    df = pd.DataFrame(rows, columns=ROW_COLUMNS)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format='%.10g', encoding='utf-8')
    return df


# ==============================================================================
# SUBCOMANDOS
# ==============================================================================

def cmd_simulate(args, config: Dict) -> int:
    sim_cfg = _sim_config(config, args)
    dataset = simulate_dataset(sim_cfg)
    out_dir = _out_dir(args, config, 'dados')
    save_dataset(dataset, out_dir)
    print(f"seed={sim_cfg.seed} tentativas={dataset.meta['attempts']} "
          f"taxa_aceitacao={dataset.meta['acceptance_rate']:.4f}")
    return EXIT_OK


def cmd_run(args, config: Dict) -> int:
    dataset = load_dataset(args.data)
    seed = args.seed if args.seed is not None else int(dataset.meta.get('seed', 0))
    out_dir = _out_dir(args, config)
    out_dir.mkdir(parents=True, exist_ok=True)

    inicio = time.perf_counter()
    a_hat, payload, status, run_config = run_method(args.method, dataset, config, args, seed,
                                                    n_jobs=args.workers or 1)
    runtime_ms = (time.perf_counter() - inicio) * 1000.0

    dump_json(payload, out_dir / 'result.json')
    row = _row(args.method, dataset, seed, run_config)
    row.update(runtime_ms=runtime_ms, status=status)
    if dataset.true_a is not None:
        relatorio = evaluate(a_hat, dataset.true_a, dataset.x)
        row.update(mcc=relatorio.mcc, amari=relatorio.amari)
        logger.info(f"[OK] {args.method}: MCC={relatorio.mcc:.4f} | Amari={relatorio.amari:.4f}")
    else:
        logger.warning("[AVISO] Dataset sem verdade de referencia; metricas nao calculadas")
    _write_rows([row], out_dir / 'metrics.csv')
    logger.info(f"[OK] Resultados salvos em: {out_dir}")
    return EXIT_OK


def _sweep_cell(job: Tuple) -> Dict:
    """Uma celula (valor da grade, tentativa, metodo); erros viram status na linha."""
    method_name, sim_cfg, config, args = job
    row = {
        'method': method_name, 'n': sim_cfg.n, 'T': sim_cfg.t,
        'gaussian_ratio': sim_cfg.gaussian_ratio, 'seed': sim_cfg.seed,
        'mcc': float('nan'), 'amari': float('nan'), 'runtime_ms': float('nan'),
        'config_hash': '', 'status': 'error', 'error': '',
    }
    try:
        dataset = simulate_dataset(sim_cfg)
        inicio = time.perf_counter()
        a_hat, _, status, run_config = run_method(method_name, dataset, config, args, sim_cfg.seed)
        runtime_ms = (time.perf_counter() - inicio) * 1000.0
        relatorio = evaluate(a_hat, dataset.true_a, dataset.x)
        row.update(_row(method_name, dataset, sim_cfg.seed, run_config))
        row.update(mcc=relatorio.mcc, amari=relatorio.amari, runtime_ms=runtime_ms, status=status)
    except Exception as exc:
        logger.error(f"[ERRO] Celula {method_name} (seed={sim_cfg.seed}, T={sim_cfg.t}, "
                     f"gaussian_ratio={sim_cfg.gaussian_ratio}): {type(exc).__name__}: {exc}")
        row['error'] = f"{type(exc).__name__}: {exc}"
    return row


def _parse_grid(texto: str, axis: str) -> List[float]:
    try:
        valores = [float(v) for v in texto.split(',') if v.strip()]
    except ValueError as exc:
        raise InputError(f"Grade invalida '{texto}'") from exc
    if not valores:
        raise InputError("Grade vazia")
    if axis == 'sample_size':
        return [int(v) for v in valores]
    return valores


def summarize(df: pd.DataFrame) -> pd.DataFrame:
    """Mediana e erro padrao por celula (metodo, n, T, razao gaussiana)."""
    ok = df[df['status'] != 'error']
    chaves = ['method', 'n', 'T', 'gaussian_ratio']
    if ok.empty:
        return pd.DataFrame(columns=chaves)
    resumo = ok.groupby(chaves)[['mcc', 'amari']].agg(['median', 'sem', 'count'])
    resumo.columns = [f"{metrica}_{estatistica}" for metrica, estatistica in resumo.columns]
    return resumo.reset_index()


def cmd_sweep(args, config: Dict) -> int:
    secao = config.get('sweep', {}) or {}
    axis = args.axis or secao.get('axis', 'gaussian_ratio')
    grid_txt = args.grid or ','.join(str(v) for v in secao.get('grid', []))
    grid = _parse_grid(grid_txt, axis)
    trials = args.trials if args.trials is not None else int(secao.get('trials', 10))
    methods_txt = args.methods or ','.join(secao.get('methods', SWEEP_METHODS))
    methods = [m.strip() for m in methods_txt.split(',') if m.strip()]
    regime = args.regime or secao.get('regime', 'paired')
    workers = args.workers or int(secao.get('workers', 1))

    desconhecidos = [m for m in methods if m not in SWEEP_METHODS]
    if desconhecidos:
        raise InputError(f"Metodos desconhecidos: {desconhecidos}. Opcoes: {SWEEP_METHODS}")
    if trials < 1:
        raise InputError("trials deve ser >= 1")

    base = _sim_config(config, args)
    jobs = []
    for valor in grid:
        eixo = {'t': valor} if axis == 'sample_size' else {'gaussian_ratio': valor}
        for tentativa in range(trials):
            for method_name in methods:
                regime_dados = PAIRED_REGIME[method_name] if regime == 'paired' else regime
                sim_cfg = replace(base, seed=base.seed + tentativa, regime=regime_dados, **eixo)
                jobs.append((method_name, sim_cfg, config, args))

    logger.info("=" * 80)
    logger.info(f"SWEEP | eixo={axis} | grade={grid} | tentativas={trials} | metodos={methods} | regime={regime}")
    logger.info(f"  Celulas: {len(jobs)} | workers: {workers}")
    logger.info("=" * 80)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(job) for job in jobs]

    out_dir = _out_dir(args, config, 'sweep')
    df = _write_rows(rows, out_dir / 'metrics.csv')
    summarize(df).to_csv(out_dir / 'summary.csv', index=False, float_format='%.10g', encoding='utf-8')
    falhas = int((df['status'] == 'error').sum())
    if falhas:
        logger.warning(f"[AVISO] {falhas} celulas com erro (registradas em metrics.csv)")
    logger.info(f"[OK] Sweep concluido: {len(df)} linhas em {out_dir}")
    return EXIT_OK


def verify_matrix(a: MixingMatrix, zero_tol: float = 0.0) -> Dict[str, Optional[bool]]:
    relatorio = assumption_report(support_of(a, zero_tol))
    relatorio['dag_after_conversion'] = None
    relatorio['mec_singleton'] = None
    try:
        sem, _ = a_to_sem(a)
    except NumericError as exc:
        logger.warning(f"[AVISO] Conversao para SEM impossivel: {exc}")
        return relatorio
    b = np.where(np.abs(sem.b) > zero_tol, sem.b, 0.0)
    eh_dag = dag_check(b)
    relatorio['dag_after_conversion'] = eh_dag
    relatorio['mec_singleton'] = mec_is_singleton(b) if eh_dag else False
    return relatorio


def cmd_verify(args, config: Dict) -> int:
    entries = load_matrix_csv(args.matrix)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise InputError(f"Matriz deve ser quadrada, recebido shape {entries.shape}")
    relatorio = verify_matrix(MixingMatrix(entries), args.zero_tol)
    texto = json.dumps(relatorio, indent=2, sort_keys=True)
    print(texto)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        dump_json(relatorio, out_dir / 'verify.json')
    return EXIT_OK


# ==============================================================================
# PARSER
# ==============================================================================

def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument('--restarts', type=int, default=None, help='Numero de reinicializacoes aleatorias')
    p.add_argument('--c1', type=float, default=None, help='Coeficiente inicial da penalidade')
    p.add_argument('--beta', type=float, default=None, help='Fator de crescimento da penalidade')
    p.add_argument('--lambda', dest='lam', type=float, default=None, help='lambda do MCP')
    p.add_argument('--alpha', type=float, default=None, help='alpha do MCP')
    p.add_argument('--threshold', type=float, default=None, help='Limiar pos-otimizacao')
    p.add_argument('--no-g-constraint', action='store_true', help='Desativa a restricao g(A) = 0')
    p.add_argument('--workers', type=int, default=None, help='Processos paralelos')


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument('--n', type=int, default=None, help='Numero de fontes')
    p.add_argument('--samples', type=int, default=None, help='Tamanho amostral T')
    p.add_argument('--gaussian-ratio', type=float, default=None, help='Fracao de fontes gaussianas')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='ICA esparso a partir de estatisticas de segunda ordem')
    parser.add_argument('--config', default=None, help='Arquivo YAML de configuracao')
    parser.add_argument('--verbose', action='store_true', help='Log em nivel DEBUG')
    sub = parser.add_subparsers(dest='command', required=True)

    p_sim = sub.add_parser('simulate', help='Gera dataset sintetico')
    _add_data_flags(p_sim)
    p_sim.add_argument('--seed', type=int, default=None)
    p_sim.add_argument('--regime', choices=['valid', 'violating'], default=None)
    p_sim.add_argument('--out', default=None, help='Padrao: <paths.output_dir>/dados')

    p_run = sub.add_parser('run', help='Executa um metodo sobre um dataset')
    p_run.add_argument('--data', required=True, help='Diretorio com X.csv e truth.json')
    p_run.add_argument('--method', choices=RUN_METHODS, required=True)
    p_run.add_argument('--seed', type=int, default=None)
    p_run.add_argument('--out', default=None, help='Padrao: <paths.output_dir>')
    _add_solver_flags(p_run)

    p_sweep = sub.add_parser('sweep', help='Varredura de experimentos')
    p_sweep.add_argument('--axis', choices=['sample_size', 'gaussian_ratio'], default=None)
    p_sweep.add_argument('--grid', default=None, help='Valores separados por virgula')
    p_sweep.add_argument('--trials', type=int, default=None)
    p_sweep.add_argument('--methods', default=None, help='Metodos separados por virgula')
    p_sweep.add_argument('--regime', choices=['paired', 'valid', 'violating'], default=None)
    p_sweep.add_argument('--seed', type=int, default=None)
    p_sweep.add_argument('--out', default=None, help='Padrao: <paths.output_dir>/sweep')
    _add_data_flags(p_sweep)
    _add_solver_flags(p_sweep)

    p_ver = sub.add_parser('verify', help='Relatorio das hipoteses estruturais')
    p_ver.add_argument('--matrix', required=True, help='CSV com a matriz quadrada')
    p_ver.add_argument('--zero-tol', type=float, default=0.0)
    p_ver.add_argument('--out', default=None)
    return parser


COMMANDS = {
    'simulate': cmd_simulate,
    'run': cmd_run,
    'sweep': cmd_sweep,
    'verify': cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Funcao principal."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        setup_logging(args.verbose or bool((config.get('debug', {}) or {}).get('verbose', False)))
        return COMMANDS[args.command](args, config)
    except (InputError, FileNotFoundError, yaml.YAMLError, TypeError) as exc:
        logger.error(f"[ERRO] {exc}")
        return EXIT_USAGE
    except (NumericError, GenerationError) as exc:
        logger.error(f"[ERRO] Falha numerica: {exc}")
        return EXIT_NUMERIC


if __name__ == '__main__':
    sys.exit(main())
