"""Testes dos tipos basicos, da equivalencia por permutacao com sinal e da persistencia."""

import numpy as np
import pytest

from model import (
    CovarianceMatrix,
    Dataset,
    InputError,
    MixingMatrix,
    SemModel,
    SignedPermutation,
    SupportPattern,
    empirical_covariance,
    permutation_matrix,
    signed_perm_equivalent,
    solve_assignment,
    support_of,
)


def testar_mixing_matrix_rejeita_nao_quadrada():
    with pytest.raises(InputError):
        MixingMatrix(np.ones((2, 3)))


def testar_mixing_matrix_imutavel():
    a = MixingMatrix(np.eye(3))
    with pytest.raises(ValueError):
        a.entries[0, 0] = 2.0


def testar_thresholded_remove_pesos_pequenos():
    a = MixingMatrix(np.array([[1.0, 0.005], [-0.009, 0.5]]))
    t = a.thresholded(0.01)
    assert t.l0() == 2
    assert t.entries[0, 1] == 0.0 and t.entries[1, 0] == 0.0


def testar_is_nonsingular():
    assert MixingMatrix(np.eye(4)).is_nonsingular()
    assert not MixingMatrix(np.array([[1.0, 2.0], [2.0, 4.0]])).is_nonsingular()
    assert not MixingMatrix(np.array([[1.0, 0.0], [1.0, 0.0]])).is_nonsingular()


def testar_support_of_e_l0():
    a = MixingMatrix(np.array([[0.5, 0.0, 0.001], [0.0, -0.3, 0.0], [0.2, 0.0, 1.0]]))
    xi = support_of(a)
    assert xi.l0() == 4
    assert xi.column(0) == frozenset({0, 2})
    assert xi.row(0) == frozenset({0})
    assert support_of(a, 0.0).l0() == 5


def testar_signed_permutation_inversa_e_matriz():
    rng = np.random.default_rng(3)
    b = rng.normal(size=(4, 4))
    pi = SignedPermutation((2, 0, 3, 1), (1, -1, -1, 1))
    np.testing.assert_allclose(pi.apply(b), b @ pi.matrix())
    np.testing.assert_allclose(pi.inverse().apply(pi.apply(b)), b)


def testar_signed_permutation_invalida():
    with pytest.raises(InputError):
        SignedPermutation((0, 0), (1, 1))
    with pytest.raises(InputError):
        SignedPermutation((0, 1), (1, 2))


def testar_signed_perm_equivalent_identidade():
    a = MixingMatrix(np.random.default_rng(0).normal(size=(5, 5)))
    pi = signed_perm_equivalent(a, a, 1e-12)
    assert pi == SignedPermutation.identity(5)


def testar_signed_perm_equivalent_troca_e_sinal():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(4, 4))
    b = a[:, [1, 0, 2, 3]].copy()
    b[:, 1] *= -1.0
    pi = signed_perm_equivalent(MixingMatrix(a), MixingMatrix(b), 1e-10)
    assert pi is not None
    assert pi.perm == (1, 0, 2, 3)
    assert pi.signs == (-1, 1, 1, 1)


def testar_signed_perm_equivalent_ausente():
    a = MixingMatrix(np.eye(3))
    b = MixingMatrix(np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    assert signed_perm_equivalent(a, b, 1e-3) is None


def testar_solve_assignment_min_e_max():
    cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    assert solve_assignment(cost).tolist() == [1, 0, 2]
    assert solve_assignment(cost, maximize=True).tolist() == [0, 2, 1]


def testar_permutation_matrix_conjuga_indices():
    perm = [2, 0, 1]
    p = permutation_matrix(perm)
    m = np.arange(9.0).reshape(3, 3)
    np.testing.assert_allclose(p.T @ m @ p, m[np.ix_(perm, perm)])


def testar_covariance_rejeita_assimetrica_e_nao_psd():
    with pytest.raises(InputError):
        CovarianceMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(InputError):
        CovarianceMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))


def testar_covariance_regularizada():
    sigma = CovarianceMatrix(np.eye(3), sample_count=100)
    reg = sigma.regularized(0.5)
    np.testing.assert_allclose(reg.entries, 1.5 * np.eye(3))
    assert reg.sample_count == 100


def testar_empirical_covariance():
    x = np.array([[1.0, 2.0], [3.0, 0.0], [2.0, 1.0], [2.0, 1.0]])
    sigma = empirical_covariance(x)
    xc = x - x.mean(axis=0)
    np.testing.assert_allclose(sigma.entries, xc.T @ xc / 4)
    assert sigma.sample_count == 4
    with pytest.raises(InputError):
        empirical_covariance(np.ones((1, 3)))


def testar_sem_model_exige_diagonal_nula_e_omega_positivo():
    with pytest.raises(InputError):
        SemModel(np.eye(2), np.ones(2))
    with pytest.raises(InputError):
        SemModel(np.zeros((2, 2)), np.array([1.0, 0.0]))


def testar_dataset_verifica_identidade_de_geracao():
    rng = np.random.default_rng(0)
    a = MixingMatrix(rng.normal(size=(3, 3)))
    s = rng.normal(size=(20, 3))
    Dataset(s @ a.entries.T, true_a=a, true_s=s)
    with pytest.raises(InputError):
        Dataset(s @ a.entries.T + 1.0, true_a=a, true_s=s)


def testar_persistencia_csv_json(tmp_path):
    a = MixingMatrix(np.array([[0.1, -0.25], [1.0 / 3.0, 2.0]]))
    a.to_csv(tmp_path / 'a.csv')
    np.testing.assert_array_equal(MixingMatrix.from_csv(tmp_path / 'a.csv').entries, a.entries)
    np.testing.assert_array_equal(MixingMatrix.from_json(a.to_json()).entries, a.entries)

    xi = SupportPattern.from_rows([[1, 0], [1, 1]])
    xi.to_csv(tmp_path / 'xi.csv')
    np.testing.assert_array_equal(SupportPattern.from_csv(tmp_path / 'xi.csv').mask, xi.mask)

    m = SemModel(np.array([[0.0, 0.5], [0.0, 0.0]]), np.array([1.0, 2.0]))
    volta = SemModel.from_json(m.to_json())
    np.testing.assert_array_equal(volta.b, m.b)
    np.testing.assert_array_equal(volta.omega, m.omega)


def testar_from_csv_arquivo_inexistente(tmp_path):
    with pytest.raises(FileNotFoundError):
        MixingMatrix.from_csv(tmp_path / 'nao_existe.csv')
