import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crested_markov import markov
from crested_markov.errors import DimensionMismatch, IsolatedVertex, NotIrreducible, NotReversible

from shapes import dense_eigenvalues, reversible_chain, symmetric_chain


def test_as_chain_rejects_bad_row():
    with pytest.raises(ValueError, match="row 1"):
        markov.as_chain([[0.5, 0.5], [0.2, 0.7]])


def test_as_chain_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        markov.as_chain(np.ones((2, 3)) / 3)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        markov.apply(np.eye(2), [1.0, 2.0, 3.0])


def test_two_state_flip_balance():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert markov.check_detailed_balance(P, [0.5, 0.5]).ok


def test_balance_violation_reports_pair():
    P = np.array([[0.1, 0.6, 0.3], [0.3, 0.1, 0.6], [0.6, 0.3, 0.1]])
    rep = markov.check_detailed_balance(P, np.full(3, 1 / 3))
    assert not rep.ok
    x, y = rep.worst_pair
    assert x != y and rep.max_violation == pytest.approx(0.1)


def test_stationary_of_reducible_chain():
    with pytest.raises(NotIrreducible):
        markov.stationary(np.eye(2))


def test_oracle_on_non_reversible_chain():
    P = np.array([[0.1, 0.6, 0.3], [0.3, 0.1, 0.6], [0.6, 0.3, 0.1]])
    with pytest.raises(NotReversible):
        markov.spectral_oracle(P)


def test_two_state_spectrum():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(markov.spectrum(P), [1.0, -1.0])
    info = markov.classify(P)
    assert info["bipartite"] and info["has_minus_one"] and not info["ergodic"]


def test_self_loop_breaks_bipartiteness():
    P = np.array([[0.5, 0.5], [1.0, 0.0]])
    info = markov.classify(P)
    assert not info["bipartite"] and info["ergodic"] and info["consistent"]


def test_isolated_vertex():
    w = np.array([[0.0, 0.0], [0.0, 1.0]])
    with pytest.raises(IsolatedVertex):
        markov.from_weighted_graph(markov.WeightedGraph(w))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_oracle_contracts(m, seed):
    rng = np.random.default_rng(seed)
    P = reversible_chain(rng, m)
    sd = markov.spectral_oracle(P)
    r1, r2 = sd.residuals(P)
    assert r1 < 1e-10 and r2 < 1e-10
    assert sd.eigenvalues[0] == 1.0
    assert np.allclose(sd.U[:, 0], 1.0)
    assert np.allclose(sd.eigenvalues, dense_eigenvalues(P), atol=1e-10)
    assert np.all(np.diff(sd.eigenvalues) <= 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1), st.integers(0, 12))
def test_kstep_spectral_matches_power(m, seed, k):
    rng = np.random.default_rng(seed)
    P = reversible_chain(rng, m)
    sd = markov.spectral_oracle(P)
    Pk = np.linalg.matrix_power(P, k)
    assert np.abs(sd.kstep_matrix(k) - Pk).max() < 1e-10
    assert abs(markov.kstep_spectral(sd, 0, m - 1, k) - Pk[0, m - 1]) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_weighted_graph_roundtrip(m, seed):
    rng = np.random.default_rng(seed)
    P = reversible_chain(rng, m)
    pi = markov.stationary(P)
    assert markov.check_detailed_balance(P, pi).ok
    Q, mu = markov.from_weighted_graph(markov.to_weighted_graph(P, pi))
    assert np.abs(Q - P).max() < 1e-12
    assert np.abs(mu - pi).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_symmetric_chain_balances_uniform(m, seed):
    P = symmetric_chain(np.random.default_rng(seed), m)
    assert markov.check_detailed_balance(P, np.full(m, 1 / m)).ok
    assert markov.classify(P)["ergodic"]
