"""Testes da geracao de dados sinteticos."""

import numpy as np
import pytest

from model import GenerationError, InputError, MixingMatrix, SupportPattern
from simulate import (
    SimConfig,
    load_dataset,
    mix_and_covariance,
    sample_mixing,
    sample_mixing_violating,
    sample_sources,
    save_dataset,
    simulate_dataset,
)
from structure import check_lower_triangularizable, check_structural_variability


def _momento_padronizado(x: np.ndarray, ordem: int) -> np.ndarray:
    z = (x - x.mean(axis=0)) / x.std(axis=0)
    return (z ** ordem).mean(axis=0)


def testar_config_invalida():
    with pytest.raises(InputError):
        SimConfig(t=1)
    with pytest.raises(InputError):
        SimConfig(weight_range=(0.8, 0.2))
    with pytest.raises(InputError):
        SimConfig(edge_prob=1.0)
    with pytest.raises(InputError):
        SimConfig(regime='outro')
    with pytest.raises(InputError):
        SimConfig.from_dict({'n': 3, 'desconhecido': 1})


def testar_config_from_dict_lista_de_pesos():
    cfg = SimConfig.from_dict({'n': 4, 'weight_range': [0.1, 0.9]})
    assert cfg.weight_range == (0.1, 0.9)
    assert cfg.to_json()['weight_range'] == [0.1, 0.9]


def testar_mistura_n1():
    a = sample_mixing(SimConfig(n=1), np.random.default_rng(0))
    assert a.n == 1
    assert 0.2 <= abs(a.entries[0, 0]) <= 0.8


def testar_mistura_valida_passa_nos_checadores():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = sample_mixing(SimConfig(n=4, edge_prob=0.5), rng)
        xi = SupportPattern(a.entries != 0)
        assert check_structural_variability(xi)
        assert check_lower_triangularizable(xi)
        assert a.is_nonsingular()


def testar_mistura_padrao_pesos_no_intervalo():
    a = sample_mixing(SimConfig(), np.random.default_rng(2))
    assert a.n == 10
    nao_nulos = np.abs(a.entries[a.entries != 0])
    assert np.all((nao_nulos >= 0.2) & (nao_nulos <= 0.8))


def testar_mistura_violadora():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = sample_mixing_violating(SimConfig(n=5, regime='violating'), rng)
        xi = SupportPattern(a.entries != 0)
        assert not check_structural_variability(xi)
        assert not check_lower_triangularizable(xi)
        assert a.is_nonsingular()


def testar_orcamento_de_rejeicoes_esgotado():
    cfg = SimConfig(n=2, edge_prob=0.999999, max_rejections=3)
    with pytest.raises(GenerationError):
        sample_mixing(cfg, np.random.default_rng(0))


def testar_fontes_gaussianas_e_exponenciais():
    t = 100_000
    s = sample_sources(10, t, 0.6, np.random.default_rng(4))
    assert s.shape == (t, 10)
    assert np.all(np.abs(s.mean(axis=0)) <= 5 / np.sqrt(t))
    assert np.all(np.abs(s.std(axis=0) - 1.0) <= 5 / np.sqrt(t))
    assimetria = _momento_padronizado(s, 3)
    assert np.all(np.abs(assimetria[:6]) < 0.1)
    assert np.all(np.abs(assimetria[6:] - 2.0) < 0.2)


def testar_fontes_todas_gaussianas():
    s = sample_sources(3, 100_000, 1.0, np.random.default_rng(5))
    np.testing.assert_allclose(_momento_padronizado(s, 4), 3.0, atol=0.1)


def testar_fontes_razao_invalida():
    with pytest.raises(InputError):
        sample_sources(3, 10, 1.5, np.random.default_rng(0))


def testar_mistura_e_covariancia():
    rng = np.random.default_rng(6)
    s = rng.normal(size=(50, 3))
    dataset, sigma = mix_and_covariance(MixingMatrix(np.eye(3)), s)
    np.testing.assert_allclose(dataset.x, s)
    np.testing.assert_allclose(sigma.entries, np.cov(s, rowvar=False, bias=True), atol=1e-12)
    with pytest.raises(InputError):
        mix_and_covariance(MixingMatrix(np.eye(3)), s[:1])


def testar_covariancia_no_limite_populacional():
    rng = np.random.default_rng(7)
    a = MixingMatrix(np.array([[0.7, 0.0, 0.0], [0.4, -0.6, 0.0], [0.0, 0.3, 0.5]]))
    s = sample_sources(3, 1_000_000, 1.0, rng)
    _, sigma = mix_and_covariance(a, s)
    gram = a.entries @ a.entries.T
    assert np.max(np.abs(sigma.entries - gram)) <= 0.02 * np.max(np.abs(gram))


def testar_simulacao_deterministica(tmp_path):
    cfg = SimConfig(n=5, t=200, seed=42)
    d1, d2 = simulate_dataset(cfg), simulate_dataset(cfg)
    np.testing.assert_array_equal(d1.x, d2.x)
    np.testing.assert_array_equal(d1.true_a.entries, d2.true_a.entries)

    save_dataset(d1, tmp_path / 'a')
    save_dataset(d2, tmp_path / 'b')
    for nome in ('X.csv', 'truth.json'):
        assert (tmp_path / 'a' / nome).read_bytes() == (tmp_path / 'b' / nome).read_bytes()


def testar_salvar_e_carregar_dataset(tmp_path):
    dataset = simulate_dataset(SimConfig(n=4, t=100, gaussian_ratio=0.5, seed=1, regime='violating'))
    save_dataset(dataset, tmp_path)
    carregado = load_dataset(tmp_path)
    np.testing.assert_array_equal(carregado.x, dataset.x)
    np.testing.assert_array_equal(carregado.true_a.entries, dataset.true_a.entries)
    assert carregado.gaussian_ratio == 0.5
    assert carregado.meta['regime'] == 'violating'
    assert 0.0 < carregado.meta['acceptance_rate'] <= 1.0
