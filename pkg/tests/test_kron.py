import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crested_markov import kron
from crested_markov.errors import DimensionMismatch, InvalidMeasure, SizeCapError


def test_linear_order_first_coordinate_most_significant():
    assert kron.linearize((1, 0, 1), (2, 2, 2)) == 5
    assert kron.delinearize(5, (2, 2, 2)) == (1, 0, 1)
    assert kron.all_states((2, 3))[:4].tolist() == [[0, 0], [0, 1], [0, 2], [1, 0]]


def test_single_factor_is_itself():
    P = np.array([[0.25, 0.75], [0.5, 0.5]])
    assert np.array_equal(kron.assemble_term([P], (2,)), P)


def test_identity_and_uniform():
    M = kron.assemble_term([kron.IDENTITY, kron.UNIFORM], (2, 3))
    assert np.array_equal(M, np.kron(np.eye(2), np.full((3, 3), 1 / 3)))


def test_term_matches_elementwise_definition():
    rng = np.random.default_rng(0)
    P = rng.random((3, 3))
    sizes = (2, 3, 2)
    M = kron.assemble_term([kron.UNIFORM, P, kron.IDENTITY], sizes)
    X = kron.all_states(sizes)
    for a, x in enumerate(X):
        for b, y in enumerate(X):
            want = 0.5 * P[x[1], y[1]] * (x[2] == y[2])
            assert M[a, b] == pytest.approx(want, abs=1e-15)


def test_size_cap():
    with pytest.raises(SizeCapError):
        kron.check_size((256, 257))
    assert kron.check_size((256, 256)) == 65536


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kron.assemble_term([np.eye(3)], (2,))
    with pytest.raises(DimensionMismatch):
        kron.assemble_term([kron.IDENTITY], (2, 2))


def test_special_factors():
    A = kron.special_factor("A", 3)
    assert A[:, 0].tolist() == [1, 1, 1] and A[:, 1:].sum() == 0
    J = kron.special_factor("J_diag", 3)
    assert J.tolist() == [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    N = kron.special_factor("I_sigma_norm", 2, [0.25, 0.75])
    assert np.allclose(np.diag(N), [2.0, 1 / np.sqrt(0.75)])
    with pytest.raises(InvalidMeasure):
        kron.special_factor("I_sigma_norm", 2, [0.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), st.data())
def test_linearize_roundtrip(sizes, data):
    k = data.draw(st.integers(0, kron.state_count(sizes) - 1))
    x = kron.delinearize(k, sizes)
    assert kron.linearize(x, sizes) == k
    assert tuple(kron.all_states(sizes)[k]) == x


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**31 - 1))
def test_stochastic_factors_give_stochastic_product(sizes, seed):
    rng = np.random.default_rng(seed)
    mats = []
    for m in sizes:
        P = rng.random((m, m))
        mats.append(P / P.sum(axis=1, keepdims=True))
    M = kron.assemble_term(mats, sizes)
    assert np.allclose(M.sum(axis=1), 1.0)
