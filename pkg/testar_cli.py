"""Testes de ponta a ponta da linha de comando."""

import json

import numpy as np
import pandas as pd
import pytest
import yaml

import cli
from cli import ROW_COLUMNS, config_hash, main
from model import NumericError, save_matrix_csv


@pytest.fixture
def config_rapida(tmp_path):
    """Configuracao com orcamento de otimizacao reduzido."""
    config = {
        'solver': {'common': {'k_max': 3, 'inner_iters': 100, 'restarts': 2}},
        'simulacao': {'n': 3, 't': 500, 'seed': 0},
    }
    path = tmp_path / 'config.yaml'
    path.write_text(yaml.safe_dump(config), encoding='utf-8')
    return str(path)


def testar_simulate_gera_arquivos(tmp_path, config_rapida):
    out = tmp_path / 'dados'
    assert main(['--config', config_rapida, 'simulate', '--n', '4', '--samples', '300', '--out', str(out)]) == 0
    assert (out / 'X.csv').exists()
    truth = json.loads((out / 'truth.json').read_text(encoding='utf-8'))
    assert truth['true_a']['n'] == 4
    assert truth['meta']['seed'] == 0


def testar_simulate_amostras_insuficientes(tmp_path, config_rapida):
    assert main(['--config', config_rapida, 'simulate', '--samples', '1', '--out', str(tmp_path / 'x')]) == 2


def testar_simulate_deterministico(tmp_path, config_rapida):
    for nome in ('a', 'b'):
        main(['--config', config_rapida, 'simulate', '--seed', '7', '--out', str(tmp_path / nome)])
    for arquivo in ('X.csv', 'truth.json'):
        assert (tmp_path / 'a' / arquivo).read_bytes() == (tmp_path / 'b' / arquivo).read_bytes()


@pytest.mark.parametrize('method', ['sparseica-likelihood', 'vanilla-likelihood', 'fastica'])
def testar_run_grava_resultado_e_metricas(tmp_path, config_rapida, method):
    dados = tmp_path / 'dados'
    main(['--config', config_rapida, 'simulate', '--gaussian-ratio', '0', '--out', str(dados)])
    out = tmp_path / 'run'
    assert main(['--config', config_rapida, 'run', '--data', str(dados), '--method', method, '--out', str(out)]) == 0

    resultado = json.loads((out / 'result.json').read_text(encoding='utf-8'))
    assert resultado['a_hat']['n'] == 3
    metricas = pd.read_csv(out / 'metrics.csv')
    assert list(metricas.columns) == ROW_COLUMNS
    assert len(metricas) == 1
    assert metricas.loc[0, 'method'] == method
    assert 0.0 <= metricas.loc[0, 'mcc'] <= 1.0


def testar_run_metodo_desconhecido(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(['run', '--data', str(tmp_path), '--method', 'ica-magica'])
    assert info.value.code == 2


def testar_run_dataset_inexistente(tmp_path, config_rapida):
    codigo = main(['--config', config_rapida, 'run', '--data', str(tmp_path / 'nada'), '--method', 'fastica'])
    assert codigo == 2


def testar_sweep_linhas_resumo_e_reprodutibilidade(tmp_path, config_rapida):
    args = ['--config', config_rapida, 'sweep', '--axis', 'gaussian_ratio', '--grid', '0,1',
            '--trials', '2', '--methods', 'sparseica-likelihood,fastica']
    assert main(args + ['--out', str(tmp_path / 's1')]) == 0
    assert main(args + ['--out', str(tmp_path / 's2')]) == 0

    m1 = pd.read_csv(tmp_path / 's1' / 'metrics.csv')
    m2 = pd.read_csv(tmp_path / 's2' / 'metrics.csv')
    assert len(m1) == 2 * 2 * 2
    assert set(m1['method']) == {'sparseica-likelihood', 'fastica'}
    numericas = ['n', 'T', 'gaussian_ratio', 'seed', 'mcc', 'amari']
    pd.testing.assert_frame_equal(m1[numericas], m2[numericas])
    assert list(m1['config_hash']) == list(m2['config_hash'])

    resumo = pd.read_csv(tmp_path / 's1' / 'summary.csv')
    assert {'mcc_median', 'mcc_sem', 'amari_median'} <= set(resumo.columns)


def testar_sweep_grade_vazia(tmp_path, config_rapida):
    assert main(['--config', config_rapida, 'sweep', '--grid', ',', '--out', str(tmp_path)]) == 2


def testar_sweep_excecao_inesperada_vira_linha_de_erro(tmp_path, config_rapida, monkeypatch):
    def quebrar(*args, **kwargs):
        raise ValueError("falha interna")

    monkeypatch.setattr(cli, 'run_method', quebrar)
    out = tmp_path / 'sweep'
    assert main(['--config', config_rapida, 'sweep', '--axis', 'gaussian_ratio', '--grid', '1',
                 '--trials', '2', '--methods', 'fastica', '--workers', '1', '--out', str(out)]) == 0
    metricas = pd.read_csv(out / 'metrics.csv')
    assert len(metricas) == 2
    assert set(metricas['status']) == {'error'}
    assert metricas['error'].str.contains('ValueError: falha interna').all()
    assert metricas['mcc'].isna().all()


def testar_config_mapeamento_de_simulacao_no_topo(tmp_path):
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps({'n': 4, 't': 50, 'seed': 3, 'gaussian_ratio': 0.5}), encoding='utf-8')
    out = tmp_path / 'dados'
    assert main(['--config', str(path), 'simulate', '--out', str(out)]) == 2
    assert not out.exists()


def testar_config_secao_com_nome_errado(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text(yaml.safe_dump({'simulcao': {'n': 4, 't': 50}}), encoding='utf-8')
    assert main(['--config', str(path), 'simulate', '--out', str(tmp_path / 'dados')]) == 2


def testar_verify_exemplo_xi1(tmp_path, capsys):
    path = tmp_path / 'xi1.csv'
    save_matrix_csv(np.array([[1, 0, 0], [1, 1, 0], [1, 0, 1]]), path, integer=True)
    assert main(['verify', '--matrix', str(path), '--out', str(tmp_path)]) == 0
    relatorio = json.loads((tmp_path / 'verify.json').read_text(encoding='utf-8'))
    assert relatorio['assumption1'] is True
    assert relatorio['assumption2'] is True
    assert relatorio['column_subset'] is False
    assert relatorio['zheng_a4'] is False
    assert relatorio['zheng_a5'] is False
    assert relatorio['dag_after_conversion'] is True
    assert relatorio['mec_singleton'] is True
    assert '"assumption1": true' in capsys.readouterr().out


def testar_verify_exemplo_xi2(tmp_path):
    path = tmp_path / 'xi2.csv'
    save_matrix_csv(np.array([[1, 0, 1], [1, 1, 0], [0, 1, 1]]), path, integer=True)
    assert main(['verify', '--matrix', str(path), '--out', str(tmp_path)]) == 0
    relatorio = json.loads((tmp_path / 'verify.json').read_text(encoding='utf-8'))
    assert relatorio['assumption2'] is False
    assert relatorio['dag_after_conversion'] is False
    assert relatorio['mec_singleton'] is False


def testar_verify_nao_quadrada(tmp_path):
    path = tmp_path / 'retangular.csv'
    save_matrix_csv(np.ones((2, 3)), path)
    assert main(['verify', '--matrix', str(path)]) == 2


def testar_falha_numerica_retorna_3(tmp_path, monkeypatch):
    def falhar(args, config):
        raise NumericError("singular")

    monkeypatch.setitem(cli.COMMANDS, 'verify', falhar)
    assert main(['verify', '--matrix', str(tmp_path / 'qualquer.csv')]) == 3


def testar_config_hash_canonico():
    assert config_hash({'a': 1, 'b': [1, 2]}) == config_hash({'b': [1, 2], 'a': 1})
    assert config_hash({'a': 1}) != config_hash({'a': 2})


# ==============================================================================
# REPRODUCAO DOS EXPERIMENTOS (lento)
# ==============================================================================

@pytest.mark.slow
def testar_reproducao_gaussiana_tamanho_amostral(tmp_path):
    out = tmp_path / 'sweep'
    assert main(['sweep', '--axis', 'sample_size', '--grid', '1000,10000', '--trials', '10',
                 '--n', '10', '--gaussian-ratio', '1',
                 '--methods', 'sparseica-likelihood,vanilla-likelihood,fastica',
                 '--regime', 'valid', '--workers', '4', '--out', str(out)]) == 0
    resumo = pd.read_csv(out / 'summary.csv').set_index(['method', 'T'])
    sparse_10k = resumo.loc[('sparseica-likelihood', 10000), 'mcc_median']
    assert sparse_10k >= 0.9
    assert sparse_10k >= resumo.loc[('vanilla-likelihood', 10000), 'mcc_median'] + 0.1
    assert sparse_10k >= resumo.loc[('fastica', 10000), 'mcc_median'] + 0.1
    assert sparse_10k >= resumo.loc[('sparseica-likelihood', 1000), 'mcc_median']
    assert resumo.loc[('sparseica-likelihood', 10000), 'amari_median'] <= \
        resumo.loc[('sparseica-likelihood', 1000), 'amari_median']


@pytest.mark.slow
def testar_reproducao_razao_gaussiana(tmp_path):
    out = tmp_path / 'sweep'
    assert main(['sweep', '--axis', 'gaussian_ratio', '--grid', '0,0.5,1', '--trials', '10',
                 '--n', '10', '--samples', '1000', '--methods', 'sparseica-likelihood,fastica',
                 '--regime', 'valid', '--workers', '4', '--out', str(out)]) == 0
    resumo = pd.read_csv(out / 'summary.csv').set_index(['method', 'gaussian_ratio'])
    sparse = resumo.loc['sparseica-likelihood', 'mcc_median']
    assert sparse.max() - sparse.min() <= 0.1
    fastica = resumo.loc['fastica', 'mcc_median']
    assert fastica.loc[1.0] <= fastica.loc[0.0] - 0.1
