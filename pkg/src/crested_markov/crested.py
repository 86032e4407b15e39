"""Crested products of Markov chains indexed by a finite poset.

For a poset ``(I, <=)`` on ``1..n``, chains ``P_i`` on ``X_i`` and a
selection distribution ``p0`` the operator is

    sum_i p0_i * (P_i at i) (x) (J_j for j below i) (x) (I_j elsewhere)

with every factor placed at its own coordinate.  Its eigenspaces are
indexed by an antichain ``S`` together with a choice of nontrivial
eigenspace of ``P_i`` for each ``i`` in ``S``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kron, markov
from .errors import InvalidSpec, NotIrreducible, NotReversible
from .poset import Poset

SYM_TOL = 1e-12
EIG_GROUP_TOL = 1e-9
MAX_RELABEL_N = 8


@dataclass(frozen=True, eq=False)
class ComponentChain:
    """One coordinate's chain ``P_i`` with its measure and eigenspaces.

    ``eigenspaces[j]`` is ``(eigenvalue, column indices of U)``; ``j = 0``
    is the constants with eigenvalue 1, ``j = 1..r`` the distinct
    nontrivial eigenvalues in descending order.
    """

    P: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_matrix(cls, P, sigma=None) -> "ComponentChain":
        P = markov.as_chain(P)
        if not markov.is_irreducible(P):
            raise NotIrreducible("component chains must be irreducible")
        if sigma is None:
            sigma = markov.stationary(P)
        sigma = markov.as_measure(sigma, P.shape[0], tol=1e-9)
        return cls(P, sigma)

    @cached_property
    def spectral(self) -> markov.SpectralData:
        """Orthonormal eigenbasis; requires the chain to be reversible for ``sigma``."""
        return markov.spectral_oracle(self.P, self.sigma)

    @cached_property
    def eigenspaces(self) -> tuple[tuple[float, tuple[int, ...]], ...]:
        vals = self.spectral.eigenvalues
        groups = [(1.0, (0,))]
        current = []
        for c in range(1, len(vals)):
            if current and abs(vals[c] - vals[current[0]]) > EIG_GROUP_TOL:
                groups.append((float(np.mean(vals[current])), tuple(current)))
                current = []
            current.append(c)
        if current:
            groups.append((float(np.mean(vals[current])), tuple(current)))
        return tuple(groups)

    @property
    def size(self) -> int:
        return self.P.shape[0]

    @property
    def r(self) -> int:
        """Number of distinct nontrivial eigenvalues."""
        return len(self.eigenspaces) - 1

    @property
    def U(self) -> np.ndarray:
        return self.spectral.U

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectral.eigenvalues

    def is_symmetric(self, tol: float = SYM_TOL) -> bool:
        return bool(np.abs(self.P - self.P.T).max() <= tol)


@dataclass(frozen=True, eq=False)
class CrestedSpec:
    poset: Poset
    components: tuple[ComponentChain, ...]
    p0: np.ndarray

    def __post_init__(self):
        comps = tuple(
            c if isinstance(c, ComponentChain) else ComponentChain.from_matrix(c) for c in self.components
        )
        object.__setattr__(self, "components", comps)
        p0 = np.asarray(self.p0, dtype=float)
        object.__setattr__(self, "p0", p0)
        if len(comps) != self.poset.n:
            raise InvalidSpec(f"{len(comps)} components for a poset with {self.poset.n} elements")
        if p0.shape != (self.poset.n,):
            raise InvalidSpec("p0 needs one entry per poset element")
        if (p0 <= 0).any():
            raise InvalidSpec("p0 must be strictly positive")
        if abs(p0.sum() - 1.0) > 1e-12:
            raise InvalidSpec(f"p0 sums to {p0.sum()!r}, not 1")
        kron.check_size(self.sizes)

    @classmethod
    def build(cls, poset: Poset, matrices: Sequence, p0, sigmas=None) -> "CrestedSpec":
        sigmas = sigmas or [None] * len(matrices)
        comps = tuple(ComponentChain.from_matrix(P, s) for P, s in zip(matrices, sigmas))
        return cls(poset, comps, p0)

    @property
    def n(self) -> int:
        return self.poset.n

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.components)

    @property
    def num_states(self) -> int:
        return kron.state_count(self.sizes)

    def component(self, i: int) -> ComponentChain:
        return self.components[i - 1]

    @cached_property
    def matrix(self) -> np.ndarray:
        return assemble(self)

    @cached_property
    def reversibility(self) -> "ReversibilityReport":
        return reversibility(self)

    @cached_property
    def spectral(self) -> markov.SpectralData:
        return spectral_matrices(self)


def term_factors(spec: CrestedSpec, i: int) -> list:
    """Factors of the ``i``-th summand: P_i at i, J below i, I elsewhere."""
    below = spec.poset.hereditary(i)
    out = []
    for j in spec.poset.elements:
        if j == i:
            out.append(spec.component(j).P)
        elif j in below:
            out.append(kron.UNIFORM)
        else:
            out.append(kron.IDENTITY)
    return out


def assemble(spec: CrestedSpec) -> np.ndarray:
    """Dense transition matrix of the crested product on X."""
    total = None
    for i in spec.poset.elements:
        term = spec.p0[i - 1] * kron.assemble_term(term_factors(spec, i), spec.sizes)
        total = term if total is None else total + term
    return total


# -- reversibility ------------------------------------------------------------


@dataclass(frozen=True)
class ReversibilityReport:
    reversible: bool
    pi: np.ndarray | None
    violating: tuple[int, ...]
    """Elements outside the maximal antichain whose chain is not symmetric."""

    def __bool__(self):
        return self.reversible


def product_measure(spec: CrestedSpec) -> np.ndarray:
    """prod_{i maximal} sigma_i(x_i) / prod_{i not maximal} m_i as a vector on X."""
    top = set(spec.poset.maximal_elements())
    parts = []
    for i in spec.poset.elements:
        c = spec.component(i)
        parts.append(c.sigma if i in top else np.full(c.size, 1.0 / c.size))
    out = parts[0]
    for v in parts[1:]:
        out = np.kron(out, v)
    return out


def reversibility(spec: CrestedSpec) -> ReversibilityReport:
    top = set(spec.poset.maximal_elements())
    bad = tuple(k for k in spec.poset.elements if k not in top and not spec.component(k).is_symmetric())
    if bad:
        return ReversibilityReport(False, None, bad)
    return ReversibilityReport(True, product_measure(spec), ())


def detailed_balance_scan(spec: CrestedSpec, tol: float = 1e-12) -> markov.BalanceReport:
    """Scan the assembled operator against its only possible balancing measure.

    For a reversible spec that is the product measure; otherwise the
    stationary measure of the assembled chain, which any balancing measure
    would have to equal.
    """
    P = spec.matrix
    rev = spec.reversibility
    pi = rev.pi if rev.reversible else markov.stationary(P)
    return markov.check_detailed_balance(P, pi, tol=tol)


def _require_reversible(spec: CrestedSpec) -> None:
    rev = spec.reversibility
    if not rev.reversible:
        ks = ", ".join(map(str, rev.violating))
        raise NotReversible(f"chain not symmetric at non-maximal element(s) {ks}", rev.violating)


# -- spectral structure ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenBlock:
    antichain: tuple[int, ...]
    j: tuple[int, ...]
    eigenvalue: float
    dimension: int
    basis: np.ndarray = field(repr=False)


def block_eigenvalue(spec: CrestedSpec, S: Sequence[int], j: Sequence[int]) -> float:
    """sum_{i in S} p0_i lambda^i_{j_i} + sum_{i outside A[S]} p0_i."""
    outside = set(spec.poset.elements) - spec.poset.ancestral_closed(S)
    val = sum(spec.p0[i - 1] * spec.component(i).eigenspaces[ji][0] for i, ji in zip(S, j))
    return float(val + sum(spec.p0[i - 1] for i in outside))


def block_dimension(spec: CrestedSpec, S: Sequence[int], j: Sequence[int]) -> int:
    dim = 1
    for i, ji in zip(S, j):
        dim *= len(spec.component(i).eigenspaces[ji][1])
    for i in spec.poset.ancestral(S):
        dim *= spec.component(i).size
    return dim


def eigenblocks(spec: CrestedSpec) -> list[EigenBlock]:
    """One block per antichain ``S`` and multi-index ``j``, with a basis of its eigenspace.

    Basis columns are orthonormal for the product measure.  Blocks sharing
    an eigenvalue are kept apart.
    """
    _require_reversible(spec)
    poset = spec.poset
    blocks = []
    for S in poset.antichains():
        above = poset.ancestral(S)
        ranges = [range(1, spec.component(i).r + 1) for i in S]
        for j in itertools.product(*ranges):
            jmap = dict(zip(S, j))
            mats = []
            for i in poset.elements:
                c = spec.component(i)
                if i in jmap:
                    mats.append(c.U[:, list(c.eigenspaces[jmap[i]][1])])
                elif i in above:
                    mats.append(kron.special_factor("I_sigma_norm", c.size, c.sigma))
                else:
                    mats.append(np.ones((c.size, 1)))
            basis = kron.kron_all(mats)
            blocks.append(
                EigenBlock(
                    antichain=tuple(S),
                    j=tuple(j),
                    eigenvalue=block_eigenvalue(spec, S, j),
                    dimension=block_dimension(spec, S, j),
                    basis=basis,
                )
            )
    return blocks


def analytic_spectrum(spec: CrestedSpec) -> np.ndarray:
    """Eigenvalues with multiplicity, sorted descending, from the block formula."""
    _require_reversible(spec)
    vals = []
    for S in spec.poset.antichains():
        for j in itertools.product(*[range(1, spec.component(i).r + 1) for i in S]):
            vals.extend([block_eigenvalue(spec, S, j)] * block_dimension(spec, S, j))
    return np.sort(np.array(vals))[::-1]


def _factor_set(spec: CrestedSpec, S: Sequence[int]) -> list[np.ndarray]:
    """Per-coordinate factors of the antichain-S summand of the eigenvector matrix."""
    poset = spec.poset
    above = poset.ancestral(S)
    out = []
    for i in poset.elements:
        c = spec.component(i)
        A = kron.special_factor("A", c.size)
        if i in S:
            out.append(c.U - A)
        elif i in above:
            out.append(kron.special_factor("I_sigma_norm", c.size, c.sigma))
        else:
            out.append(A)
    return out


def eigenvalue_diagonal(spec: CrestedSpec) -> np.ndarray:
    """Diagonal of Delta: sum_i p0_i Delta_i (x) I off H[i] (x) J_diag on H(i)."""
    Z = kron.all_states(spec.sizes)
    lam = np.zeros(Z.shape[0])
    for i in spec.poset.elements:
        below = [j - 1 for j in spec.poset.hereditary(i)]
        mask = np.all(Z[:, below] == 0, axis=1) if below else np.ones(Z.shape[0], dtype=bool)
        lam += spec.p0[i - 1] * spec.component(i).eigenvalues[Z[:, i - 1]] * mask
    return lam


def spectral_matrices(spec: CrestedSpec) -> markov.SpectralData:
    """U, D and Delta of the crested product, assembled from component data."""
    _require_reversible(spec)
    U = None
    for S in spec.poset.antichains():
        term = kron.kron_all(_factor_set(spec, S))
        U = term if U is None else U + term
    D = spec.components[0].sigma
    for c in spec.components[1:]:
        D = np.kron(D, c.sigma)
    return markov.SpectralData(U=U, pi=D, eigenvalues=eigenvalue_diagonal(spec), z0=0)


def _state(spec: CrestedSpec, x) -> tuple[int, ...]:
    if isinstance(x, (int, np.integer)):
        return kron.delinearize(int(x), spec.sizes)
    x = tuple(int(v) for v in x)
    if len(x) != spec.n or any(not 0 <= v < m for v, m in zip(x, spec.sizes)):
        raise IndexError(f"state {x} outside X")
    return x


def eigenvector_row(spec: CrestedSpec, x) -> np.ndarray:
    """u(x, .) = sum_S prod_{S}(u_i - a_i) prod_{A(S)} delta_sigma prod_{rest} a_i."""
    x = _state(spec, x)
    row = None
    for S in spec.poset.antichains():
        rows = [F[xi][None, :] for F, xi in zip(_factor_set(spec, S), x)]
        term = kron.kron_all(rows)[0]
        row = term if row is None else row + term
    return row


def _kstep_from_origin(spec: CrestedSpec, y, k: int, lam: np.ndarray) -> float:
    """Reduced sum for x = (0, ..., 0): only z vanishing off S contribute."""
    poset = spec.poset
    sizes = spec.sizes
    total = 0.0
    for S in poset.antichains():
        above = poset.ancestral(S)
        scale = 1.0
        for i in above:
            scale /= np.sqrt(spec.component(i).sigma[0])
        y_ok = all(y[i - 1] == 0 for i in above)
        for zs in itertools.product(*[range(1, sizes[i - 1]) for i in S]):
            z = [0] * spec.n
            left = scale
            right = 1.0
            for i, zi in zip(S, zs):
                z[i - 1] = zi
                U = spec.component(i).U
                left *= U[0, zi]
                right *= U[y[i - 1], zi]
            if y_ok:
                for i in above:
                    right /= np.sqrt(spec.component(i).sigma[0])
            else:
                right = 0.0
            total += left * lam[kron.linearize(z, sizes)] ** k * right
    return total


def kstep(spec: CrestedSpec, x, y, k: int, fast: bool = True) -> float:
    """k-step transition probability from the explicit eigenvector formula."""
    _require_reversible(spec)
    if k < 0:
        raise ValueError("k must be nonnegative")
    x = _state(spec, x)
    y = _state(spec, y)
    lam = eigenvalue_diagonal(spec)
    pi_y = float(np.prod([spec.component(i).sigma[y[i - 1]] for i in spec.poset.elements]))
    if fast and not any(x):
        return pi_y * _kstep_from_origin(spec, y, k, lam)
    ux = eigenvector_row(spec, x)
    uy = eigenvector_row(spec, y)
    return pi_y * float(np.sum(ux * lam**k * uy))


def kstep_matrix(spec: CrestedSpec, k: int) -> np.ndarray:
    return spec.spectral.kstep_matrix(k)


# -- first crested product --------------------------------------------------------


@dataclass(frozen=True)
class FirstCrestedPartition:
    """Labeling under which the poset meets the first-crested condition.

    ``labeling[i-1]`` is the new label of original element ``i``; ``C`` and
    ``N`` are given in the new labels.
    """

    labeling: tuple[int, ...]
    C: tuple[int, ...]
    N: tuple[int, ...]


def _first_crested_condition(poset: Poset) -> bool:
    n = poset.n
    for i in poset.elements:
        below = poset.hereditary(i)
        if below and below != frozenset(range(i + 1, n + 1)):
            return False
    return True


def first_crested_partition(poset: Poset) -> FirstCrestedPartition | None:
    """First relabeling (lexicographic) turning the operator into a first crested product.

    All relabelings are tried when ``n <= 8``; beyond that only the given one.
    """
    n = poset.n
    perms = itertools.permutations(range(1, n + 1)) if n <= MAX_RELABEL_N else [tuple(range(1, n + 1))]
    for perm in perms:
        q = poset.relabel(perm) if perm != tuple(range(1, n + 1)) else poset
        if _first_crested_condition(q):
            N = tuple(i for i in q.elements if q.hereditary(i))
            C = tuple(i for i in q.elements if i not in N)
            return FirstCrestedPartition(tuple(perm), C, N)
    return None


def relabel_spec(spec: CrestedSpec, perm: Sequence[int]) -> CrestedSpec:
    """Same chain with element ``i`` renamed ``perm[i-1]`` (coordinates permuted)."""
    n = spec.n
    comps = [None] * n
    p0 = np.empty(n)
    for i in range(n):
        comps[perm[i] - 1] = spec.components[i]
        p0[perm[i] - 1] = spec.p0[i]
    return CrestedSpec(spec.poset.relabel(perm), tuple(comps), p0)


def first_crested_product(matrices: Sequence[np.ndarray], p0, C: Sequence[int]) -> np.ndarray:
    """Direct first crested product for the partition ``{1..n} = C + N``.

    Terms in ``C`` act by ``P_i`` alone; terms in ``N`` also uniformize every
    later coordinate.
    """
    n = len(matrices)
    C = set(C)
    total = None
    for i in range(1, n + 1):
        mats = []
        for j in range(1, n + 1):
            m = matrices[j - 1].shape[0]
            if j == i:
                mats.append(np.asarray(matrices[j - 1], dtype=float))
            elif j > i and i not in C:
                mats.append(np.full((m, m), 1.0 / m))
            else:
                mats.append(np.eye(m))
        term = p0[i - 1] * kron.kron_all(mats)
        total = term if total is None else total + term
    return total


# -- ergodicity ---------------------------------------------------------------------


def ergodicity(spec: CrestedSpec) -> dict:
    """Component ergodicity versus a spectral check of the assembled chain."""
    comps = [markov.classify(c.P)["ergodic"] for c in spec.components]
    assembled = markov.classify(spec.matrix)
    components_ergodic = all(comps)
    return {
        "components": comps,
        "components_ergodic": components_ergodic,
        "ergodic": assembled["ergodic"],
        "multiplicity_of_one": assembled["multiplicity_of_one"],
        "has_minus_one": assembled["has_minus_one"],
        "ergodicity_inherited": (not components_ergodic) or assembled["ergodic"],
        "mismatch": components_ergodic != assembled["ergodic"],
    }
