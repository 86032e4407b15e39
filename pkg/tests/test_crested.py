import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crested_markov import crested, markov
from crested_markov.crested import CrestedSpec
from crested_markov.errors import InvalidSpec, NotReversible
from crested_markov.poset import Poset

from shapes import (
    SHAPES,
    dense_eigenvalues,
    diamond,
    four_example,
    random_spec,
    reversible_chain,
    symmetric_chain,
)


def cn_posets(n):
    """Every poset where each i in N lies above exactly {i+1, ..., n} and C-elements cover nothing."""
    for r in range(n):
        for N in itertools.combinations(range(1, n), r):
            covers = [(j, i) for i in N for j in range(i + 1, n + 1)]
            yield N, Poset.from_covers(n, covers)


def test_four_example_assembly_by_hand():
    rng = np.random.default_rng(1)
    mats = [symmetric_chain(rng, m) for m in (2, 3, 2, 2)]
    mats[0] = reversible_chain(rng, 2)
    mats[2] = reversible_chain(rng, 2)
    p0 = np.array([0.1, 0.2, 0.3, 0.4])
    spec = CrestedSpec.build(four_example(), mats, p0)
    I = [np.eye(m) for m in (2, 3, 2, 2)]
    J = [np.full((m, m), 1 / m) for m in (2, 3, 2, 2)]

    def k4(a, b, c, d):
        return np.kron(np.kron(np.kron(a, b), c), d)

    want = (
        p0[0] * k4(mats[0], J[1], I[2], J[3])
        + p0[1] * k4(I[0], mats[1], I[2], I[3])
        + p0[2] * k4(I[0], I[1], mats[2], J[3])
        + p0[3] * k4(I[0], I[1], I[2], mats[3])
    )
    assert np.abs(spec.matrix - want).max() < 1e-15


def test_singleton_is_component():
    P = np.array([[0.3, 0.7], [0.35, 0.65]])
    spec = CrestedSpec.build(Poset.chain(1), [P], [1.0])
    assert np.array_equal(spec.matrix, P)
    assert np.allclose(crested.analytic_spectrum(spec), markov.spectrum(P))


def test_invalid_p0():
    P = np.eye(2) * 0.5 + 0.25
    with pytest.raises(InvalidSpec):
        CrestedSpec.build(Poset.chain(2), [P, P], [0.5, 0.6])
    with pytest.raises(InvalidSpec):
        CrestedSpec.build(Poset.chain(2), [P], [1.0])


def test_empty_antichain_block_is_constants():
    spec = random_spec(np.random.default_rng(3), diamond(), (2, 2, 2))
    b0 = crested.eigenblocks(spec)[0]
    assert b0.antichain == () and b0.dimension == 1
    assert b0.eigenvalue == pytest.approx(1.0)
    assert np.allclose(b0.basis, 1.0)


def test_diamond_block_dimensions():
    spec = random_spec(np.random.default_rng(4), diamond(), (2, 2, 2))
    dims = {b.antichain: b.dimension for b in crested.eigenblocks(spec)}
    assert dims == {(): 1, (1,): 1, (2,): 2, (3,): 2, (2, 3): 2}


def test_blocks_are_pi_orthogonal():
    spec = random_spec(np.random.default_rng(5), four_example(), (2, 3, 2, 2))
    pi = spec.reversibility.pi
    blocks = crested.eigenblocks(spec)
    B = np.hstack([b.basis for b in blocks])
    gram = B.T @ (pi[:, None] * B)
    assert np.abs(gram - np.eye(B.shape[1])).max() < 1e-9


def test_nonsymmetric_lower_component_breaks_reversibility():
    rng = np.random.default_rng(6)
    P1 = symmetric_chain(rng, 2)
    P2 = reversible_chain(rng, 3)
    spec = CrestedSpec.build(Poset.chain(2), [P1, P2], [0.5, 0.5])
    rev = spec.reversibility
    assert not rev.reversible and rev.violating == (2,)
    assert not crested.detailed_balance_scan(spec).ok
    with pytest.raises(NotReversible) as exc:
        crested.eigenblocks(spec)
    assert exc.value.violating == (2,)


def test_nonsymmetric_top_component_is_fine():
    rng = np.random.default_rng(7)
    spec = CrestedSpec.build(Poset.chain(2), [reversible_chain(rng, 3), symmetric_chain(rng, 2)], [0.3, 0.7])
    assert spec.reversibility.reversible
    assert crested.detailed_balance_scan(spec).ok


def test_kstep_identity_and_one_step():
    spec = random_spec(np.random.default_rng(8), diamond(), (2, 3, 2))
    assert crested.kstep(spec, (1, 2, 0), (1, 2, 0), 0) == pytest.approx(1.0, abs=1e-12)
    assert crested.kstep(spec, (1, 2, 0), (0, 1, 1), 0) == pytest.approx(0.0, abs=1e-12)
    P = spec.matrix
    assert crested.kstep(spec, 3, 7, 1) == pytest.approx(P[3, 7], abs=1e-12)


def test_kstep_fast_path_agrees_with_general_path():
    spec = random_spec(np.random.default_rng(9), four_example(), (2, 3, 2, 2))
    for y in range(spec.num_states):
        for k in (1, 3):
            fast = crested.kstep(spec, 0, y, k, fast=True)
            slow = crested.kstep(spec, 0, y, k, fast=False)
            assert abs(fast - slow) < 1e-12


def test_first_crested_partition_examples():
    assert crested.first_crested_partition(four_example()) is None
    part = crested.first_crested_partition(Poset.chain(3))
    assert part.C == (3,) and part.N == (1, 2)
    part = crested.first_crested_partition(diamond())
    assert part.C == (2, 3) and part.N == (1,)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_first_crested_product_on_cn_family(n):
    rng = np.random.default_rng(n)
    for N, poset in cn_posets(n):
        sizes = [2] * n
        mats = [reversible_chain(rng, m) for m in sizes]
        p0 = rng.dirichlet(np.ones(n))
        spec = CrestedSpec.build(poset, mats, p0)
        part = crested.first_crested_partition(poset)
        assert part is not None and part.labeling == tuple(range(1, n + 1))
        assert part.N == tuple(i for i in N if i < n)
        direct = crested.first_crested_product(mats, p0, part.C)
        assert np.array_equal(direct, spec.matrix)


def test_relabeled_spec_is_conjugate():
    spec = random_spec(np.random.default_rng(10), four_example(), (2, 3, 2, 2))
    perm = (2, 4, 1, 3)
    other = crested.relabel_spec(spec, perm)
    assert np.allclose(np.sort(np.linalg.eigvals(other.matrix).real), np.sort(np.linalg.eigvals(spec.matrix).real))


def test_ergodic_components_give_ergodic_product():
    spec = random_spec(np.random.default_rng(11), diamond(), (3, 2, 2))
    info = crested.ergodicity(spec)
    assert info["components_ergodic"] and info["ergodic"]
    assert info["multiplicity_of_one"] == 1 and not info["has_minus_one"]


def test_periodic_component():
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    spec = CrestedSpec.build(Poset.chain(1), [flip], [1.0])
    info = crested.ergodicity(spec)
    assert not info["components_ergodic"] and info["has_minus_one"]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(SHAPES)), st.integers(0, 2**31 - 1))
def test_spectrum_and_contracts(name, seed):
    spec = random_spec(np.random.default_rng(seed), SHAPES[name]())
    assert np.abs(crested.analytic_spectrum(spec) - dense_eigenvalues(spec.matrix)).max() < 1e-9
    r1, r2 = spec.spectral.residuals(spec.matrix)
    assert r1 < 1e-9 and r2 < 1e-9
    assert sum(b.dimension for b in crested.eigenblocks(spec)) == spec.num_states
    for b in crested.eigenblocks(spec):
        assert b.basis.shape[1] == b.dimension
        assert np.abs(spec.matrix @ b.basis - b.eigenvalue * b.basis).max() < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(SHAPES)), st.integers(0, 2**31 - 1))
def test_product_measure_balances(name, seed):
    spec = random_spec(np.random.default_rng(seed), SHAPES[name]())
    rep = markov.check_detailed_balance(spec.matrix, spec.reversibility.pi, tol=1e-12)
    assert rep.ok
    assert np.allclose(spec.matrix.sum(axis=1), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(sorted(SHAPES)), st.integers(0, 2**31 - 1), st.integers(0, 20))
def test_kstep_matches_matrix_power(name, seed, k):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, SHAPES[name]())
    x, y = rng.integers(0, spec.num_states, 2)
    Pk = np.linalg.matrix_power(spec.matrix, k)
    assert abs(crested.kstep(spec, int(x), int(y), k) - Pk[x, y]) < 1e-9
    assert abs(crested.kstep(spec, 0, int(y), k) - Pk[0, y]) < 1e-9
