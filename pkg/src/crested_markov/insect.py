"""Generalized Insect Markov chain.

The state space X is the leaf level of a graph obtained by gluing, over
all maximal chains of the ancestral poset, the trees of nested ancestral
equivalence classes.  An insect starts at a leaf, performs a simple random
walk, and stops the first time (after step 0) it stands on a leaf again.

Passage coefficients and level weights are computed exactly as
:class:`fractions.Fraction` from integer class sizes.  On posets where
every element has at most one upper cover (:meth:`Poset.is_forest`) the
walk's law coincides with the crested product with uniform components and
these weights; on other posets the crested chain is still defined from the
weights but the walk on the glued graph follows a different law.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kron
from .crested import CrestedSpec, eigenblocks
from .errors import Degenerate, NotAncestral
from .poset import AncestralPoset, Poset

RNG_ALGORITHM = "splitmix64-counter/v1"
FIRST_PASSAGE = "first_passage"
LITERAL = "literal"


def ancestral_classes(poset: Poset, A, sizes: Sequence[int]) -> list[list[int]]:
    """Classes of ``x ~_A y`` (agreement on every coordinate in ``A``) as lists of linear states."""
    A = frozenset(A)
    if not poset.is_ancestral(A):
        raise NotAncestral(f"{sorted(A)} is not ancestral")
    coords = sorted(i - 1 for i in A)
    Z = kron.all_states(sizes)
    classes: dict[tuple, list[int]] = {}
    for k, z in enumerate(Z):
        classes.setdefault(tuple(z[coords]), []).append(k)
    return [classes[key] for key in sorted(classes)]


@dataclass(frozen=True, eq=False)
class TreeGraph:
    """The glued graph.  Vertices ``0 .. |X|-1`` are the leaves in linear order.

    ``vertices[v]`` is ``(node, key)``: ``node`` indexes the ancestral poset
    (0 is ``I``) and ``key`` lists the shared coordinates of the class.
    """

    poset: Poset
    sizes: tuple[int, ...]
    ancestral: AncestralPoset
    vertices: tuple[tuple[int, tuple[int, ...]], ...]
    adjacency: tuple[tuple[int, ...], ...]
    index: dict = field(repr=False)

    @property
    def num_leaves(self) -> int:
        return kron.state_count(self.sizes)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nb in enumerate(self.adjacency) for v in nb if u < v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def level(self, node: int) -> list[int]:
        return [v for v, (a, _) in enumerate(self.vertices) if a == node]

    def vertex_of(self, node: int, x) -> int:
        """Vertex of level ``node`` whose class contains state ``x``."""
        if isinstance(x, (int, np.integer)):
            x = kron.delinearize(int(x), self.sizes)
        key = tuple(x[i - 1] for i in sorted(self.ancestral.nodes[node]))
        return self.index[(node, key)]

    def neighbor_table(self) -> tuple[np.ndarray, np.ndarray]:
        deg = np.array([len(nb) for nb in self.adjacency], dtype=np.int64)
        table = np.zeros((len(deg), int(deg.max())), dtype=np.int64)
        for v, nb in enumerate(self.adjacency):
            table[v, : len(nb)] = nb
        return table, deg


def build_tree(poset: Poset, sizes: Sequence[int]) -> TreeGraph:
    sizes = tuple(int(m) for m in sizes)
    if len(sizes) != poset.n or any(m < 1 for m in sizes):
        raise ValueError("one positive size per poset element required")
    kron.check_size(sizes)
    ap = poset.ancestral_poset()
    Z = kron.all_states(sizes)
    vertices = []
    index = {}
    for node in range(len(ap)):
        coords = sorted(i - 1 for i in ap.nodes[node])
        keys = sorted({tuple(int(v) for v in z[coords]) for z in Z}) if node else [tuple(map(int, z)) for z in Z]
        for key in keys:
            index[(node, key)] = len(vertices)
            vertices.append((node, key))
    edges = set()
    for a, b in ap.covers:
        up_pos = [sorted(ap.nodes[a]).index(i) for i in sorted(ap.nodes[b])]
        for (node, key), v in list(index.items()):
            if node != a:
                continue
            parent = index[(b, tuple(key[p] for p in up_pos))]
            edges.add((min(v, parent), max(v, parent)))
    adj = [[] for _ in vertices]
    for u, v in sorted(edges):
        adj[u].append(v)
        adj[v].append(u)
    return TreeGraph(poset, sizes, ap, tuple(vertices), tuple(tuple(a) for a in adj), index)


# -- passage coefficients ---------------------------------------------------------


@dataclass(frozen=True)
class InsectCoefficients:
    """``alpha[(a, b)]`` for each cover ``a < b`` of the ancestral poset (node indices);
    ``p[i]`` for each element ``i``; ``reach[a]`` is the probability of ever entering level ``a``."""

    alpha: dict
    p: dict
    reach: dict
    rule: str = FIRST_PASSAGE

    def p_vector(self) -> np.ndarray:
        return np.array([float(self.p[i]) for i in sorted(self.p)])


def _down_weight(ap: AncestralPoset, sizes, a: int, b: int) -> int:
    """Number of level-``a`` vertices below one level-``b`` vertex."""
    w = 1
    for h in ap.nodes[a] - ap.nodes[b]:
        w *= sizes[h - 1]
    return w


def solve_alphas(tree: TreeGraph, rule: str = FIRST_PASSAGE) -> dict:
    """Probability of climbing from a vertex of level ``a`` to its parent at level ``b``.

    Each node's value solves ``alpha = 1/d + sum_k (w_k/d) alpha_k alpha`` in
    closed form, ``d`` being the vertex degree and ``w_k`` the number of
    children at level ``k``.  With ``rule="first_passage"`` a step down to a
    leaf ends the walk and contributes nothing; ``rule="literal"`` keeps the
    leaf term weighted by the leaf's climbing probability unless that
    probability is 1.  Only the first rule agrees with the walk.
    """
    if rule not in (FIRST_PASSAGE, LITERAL):
        raise ValueError(f"unknown rule {rule!r}")
    ap = tree.ancestral
    sizes = tree.sizes
    per_node: dict[int, Fraction] = {0: Fraction(1, len(ap.up(0)))}
    for a in ap.topological_order():
        if a == 0 or not ap.up(a):
            continue
        kids = ap.down(a)
        d = sum(_down_weight(ap, sizes, k, a) for k in kids) + len(ap.up(a))
        loop = Fraction(0)
        for k in kids:
            if k == 0 and (rule == FIRST_PASSAGE or per_node[0] == 1):
                continue
            loop += Fraction(_down_weight(ap, sizes, k, a), d) * per_node[k]
        if 1 - loop <= 0:
            raise Degenerate(f"no solution for node {ap.name(a)}")
        per_node[a] = Fraction(1, d) / (1 - loop)
    return {(a, b): per_node[a] for a, b in ap.covers}


def _reach(ap: AncestralPoset, alpha: dict) -> dict:
    reach = {0: Fraction(1)}
    for a in ap.topological_order():
        if a:
            reach[a] = sum((reach[k] * alpha[(k, a)] for k in ap.down(a)), Fraction(0))
    return reach


def level_weights(tree: TreeGraph, alpha: dict) -> dict:
    """Probability that the walk's highest level is ``A_i``, for each element ``i``.

    Summed over saturated chains from ``I`` to ``A_i`` of the product of
    passage coefficients, times the probability of not climbing further.
    """
    ap = tree.ancestral
    p = {}
    for i in tree.poset.elements:
        through = Fraction(0)
        for chain in ap.saturated_chains(i):
            prod = Fraction(1)
            for a, b in zip(chain, chain[1:]):
                prod *= alpha[(a, b)]
            through += prod
        stay = 1 - sum((alpha[(i, b)] for b in ap.up(i)), Fraction(0))
        p[i] = through * stay
    return p


def coefficients(poset: Poset, sizes: Sequence[int], rule: str = FIRST_PASSAGE) -> InsectCoefficients:
    tree = build_tree(poset, sizes)
    alpha = solve_alphas(tree, rule)
    return InsectCoefficients(alpha, level_weights(tree, alpha), _reach(tree.ancestral, alpha), rule)


def to_crested(poset: Poset, sizes: Sequence[int], rule: str = FIRST_PASSAGE) -> CrestedSpec:
    """Crested product with uniform components and the level weights as selection law."""
    coef = coefficients(poset, sizes, rule)
    mats = [np.full((m, m), 1.0 / m) for m in sizes]
    return CrestedSpec.build(poset, mats, coef.p_vector())


def direct_transition_matrix(poset: Poset, sizes: Sequence[int], coef: InsectCoefficients | None = None) -> np.ndarray:
    """p(x, y) = sum over levels A_i with x ~ y and over chains to A_i, divided by the class size."""
    tree = build_tree(poset, sizes)
    if coef is None:
        coef = coefficients(poset, sizes)
    ap = tree.ancestral
    Z = kron.all_states(sizes)
    out = np.zeros((len(Z), len(Z)))
    for i in poset.elements:
        total = Fraction(0)
        for chain in ap.saturated_chains(i):
            prod = Fraction(1)
            for a, b in zip(chain, chain[1:]):
                prod *= coef.alpha[(a, b)]
            total += prod * (1 - sum((coef.alpha[(i, b)] for b in ap.up(i)), Fraction(0)))
        coords = [h - 1 for h in ap.nodes[i]]
        same = np.all(Z[:, None, coords] == Z[None, :, coords], axis=2)
        class_size = int(np.prod([sizes[h - 1] for h in poset.elements if h not in ap.nodes[i]]))
        out += same * (float(total) / class_size)
    return out


# -- exact walk law -------------------------------------------------------------------


def _transient_solve(tree: TreeGraph, absorbing: set[int]) -> tuple[np.ndarray, list[int]]:
    V = tree.num_vertices
    inner = [v for v in range(V) if v not in absorbing]
    pos = {v: k for k, v in enumerate(inner)}
    M = np.eye(len(inner))
    for v in inner:
        d = tree.degree(v)
        for u in tree.adjacency[v]:
            if u in pos:
                M[pos[v], pos[u]] -= 1.0 / d
    return M, inner


def walk_matrix(tree: TreeGraph) -> np.ndarray:
    """Exact leaf-to-leaf law of the walk, by an absorbing-chain linear solve."""
    N = tree.num_leaves
    leaves = set(range(N))
    M, inner = _transient_solve(tree, leaves)
    pos = {v: k for k, v in enumerate(inner)}
    R = np.zeros((len(inner), N))
    for v in inner:
        for u in tree.adjacency[v]:
            if u < N:
                R[pos[v], u] += 1.0 / tree.degree(v)
    absorb = np.linalg.solve(M, R) if inner else R
    out = np.zeros((N, N))
    for x in range(N):
        d = tree.degree(x)
        for u in tree.adjacency[x]:
            out[x] += (absorb[pos[u]] if u >= N else np.eye(N)[u]) / d
    return out


def hitting_probability(tree: TreeGraph, source: int, target: int) -> float:
    """Probability the walk from vertex ``source`` reaches ``target`` before any leaf."""
    N = tree.num_leaves
    M, inner = _transient_solve(tree, set(range(N)) | {target})
    pos = {v: k for k, v in enumerate(inner)}
    r = np.zeros(len(inner))
    for v in inner:
        if target in tree.adjacency[v]:
            r[pos[v]] = 1.0 / tree.degree(v)
    return float(np.linalg.solve(M, r)[pos[source]])


# -- spectral structure -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InsectBlock:
    antichain: tuple[int, ...]
    eigenvalue: Fraction
    dimension: int
    basis: np.ndarray = field(repr=False)


def exact_eigenvalue(poset: Poset, p: dict, S) -> Fraction:
    """Sum of the level weights over elements outside A[S]."""
    closed = poset.ancestral_closed(S)
    return sum((p[i] for i in poset.elements if i not in closed), Fraction(0))


def insect_eigenstructure(poset: Poset, sizes: Sequence[int]) -> list[InsectBlock]:
    coef = coefficients(poset, sizes)
    spec = to_crested(poset, sizes)
    out = []
    for b in eigenblocks(spec):
        out.append(InsectBlock(b.antichain, exact_eigenvalue(poset, coef.p, b.antichain), b.dimension, b.basis))
    return out


@dataclass(frozen=True)
class SymmetryReport:
    automorphisms: tuple[tuple[int, ...], ...]
    forced_pairs_checked: int
    violations: tuple
    """Triples ``(phi, S, phi(S))`` where equality failed; empty when the claim holds."""
    accidental: tuple
    """Pairs of antichains with equal eigenvalue that no automorphism relates."""

    @property
    def ok(self) -> bool:
        return not self.violations


def eigenvalue_symmetry_check(poset: Poset, sizes: Sequence[int]) -> SymmetryReport:
    """Automorphisms force equal eigenvalues; list equalities they do not explain."""
    autos = poset.automorphisms()
    p = coefficients(poset, sizes).p
    lam = {S: exact_eigenvalue(poset, p, S) for S in poset.antichains()}
    orbit: dict[tuple, set] = {S: set() for S in lam}
    violations = []
    checked = 0
    elems = set(poset.elements)
    for phi in autos:
        for S in lam:
            T = tuple(sorted(phi[i - 1] for i in S))
            orbit[S].add(T)
            checked += 1
            src = elems - poset.ancestral_closed(S)
            dst = elems - poset.ancestral_closed(T)
            same_index_sets = {phi[i - 1] for i in src} == dst
            if not same_index_sets or lam[S] != lam[T]:
                violations.append((phi, S, T))
    accidental = []
    for S, T in itertools.combinations(lam, 2):
        if lam[S] == lam[T] and T not in orbit[S]:
            accidental.append((S, T))
    return SymmetryReport(tuple(autos), checked, tuple(violations), tuple(accidental))


# -- simulation ---------------------------------------------------------------------

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, trajectories: np.ndarray) -> np.ndarray:
    """Independent per-trajectory stream keys derived from ``(seed, index)``."""
    with np.errstate(over="ignore"):
        base = _mix(np.array([seed % 2**64], dtype=np.uint64))
        return _mix(base + np.asarray(trajectories, dtype=np.uint64) * _GAMMA)


def stream_uniform(keys: np.ndarray, step: int) -> np.ndarray:
    """Step-``step`` uniform in [0, 1) of each stream (53-bit resolution)."""
    with np.errstate(over="ignore"):
        z = _mix(keys + np.uint64(step + 1) * _GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _run(tree: TreeGraph, start: int, seed: int, traj: np.ndarray, record: bool = False):
    table, deg = tree.neighbor_table()
    N = tree.num_leaves
    keys = stream_keys(seed, traj)
    pos = np.full(len(traj), start, dtype=np.int64)
    active = np.ones(len(traj), dtype=bool)
    path = [pos.copy()] if record else None
    step = 0
    while active.any():
        idx = np.flatnonzero(active)
        u = stream_uniform(keys[idx], step)
        here = pos[idx]
        choice = np.minimum((u * deg[here]).astype(np.int64), deg[here] - 1)
        pos[idx] = table[here, choice]
        active[idx] = pos[idx] >= N
        step += 1
        if record:
            path.append(pos.copy())
    return pos, path


def _leaf(tree: TreeGraph, start) -> int:
    if isinstance(start, (int, np.integer)):
        start = int(start)
    else:
        start = kron.linearize(start, tree.sizes)
    if not 0 <= start < tree.num_leaves:
        raise ValueError("start must be a leaf")
    return start


def walk(tree: TreeGraph, start_leaf, rng_seed: int, trajectory: int = 0) -> int:
    """End leaf of one trajectory; identical to entry ``trajectory`` of :func:`simulate`."""
    end, _ = _run(tree, _leaf(tree, start_leaf), rng_seed, np.array([trajectory]))
    return int(end[0])


def trajectory(tree: TreeGraph, start_leaf, rng_seed: int, index: int = 0) -> list[int]:
    """Full vertex path of one trajectory."""
    _, path = _run(tree, _leaf(tree, start_leaf), rng_seed, np.array([index]), record=True)
    return [int(p[0]) for p in path]


def simulate(tree: TreeGraph, start_leaf, trials: int, seed: int, chunk: int = 1 << 16) -> np.ndarray:
    """Histogram of end leaves over ``trials`` independent walks."""
    start = _leaf(tree, start_leaf)
    counts = np.zeros(tree.num_leaves, dtype=np.int64)
    for lo in range(0, trials, chunk):
        traj = np.arange(lo, min(trials, lo + chunk), dtype=np.uint64)
        end, _ = _run(tree, start, seed, traj)
        counts += np.bincount(end, minlength=tree.num_leaves)
    return counts
