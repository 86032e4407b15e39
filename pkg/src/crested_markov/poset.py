"""Finite posets on the labels 1..n.

Subsets of elements are handled internally as integer bitmasks (bit ``i-1``
stands for element ``i``); the public API speaks in element labels and
returns frozensets or sorted tuples.  Antichains are sorted tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CycleError, NotAncestral, SizeLimit

MAX_ANTICHAIN_N = 16
MAX_AUTOMORPHISM_N = 10


def _bits(mask: int) -> list[int]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class Poset:
    """A finite partial order on ``{1, ..., n}``.

    Build instances with :meth:`from_covers`.  ``leq[a, b]`` (0-based) is
    true when element ``a+1`` lies below or equals element ``b+1``.
    Instances are immutable after construction.
    """

    def __init__(self, leq: np.ndarray, labels: Sequence[str] | None = None):
        leq = np.array(leq, dtype=bool)
        n = leq.shape[0]
        if leq.shape != (n, n):
            raise ValueError("relation must be square")
        self.n = n
        self.leq = leq
        self.leq.setflags(write=False)
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(1, n + 1))
        if len(self.labels) != n:
            raise ValueError("one label per element required")
        self._check_order()
        # strict down-sets and up-sets as bitmasks
        self._below = [0] * n
        self._above = [0] * n
        for a in range(n):
            for b in range(n):
                if a != b and leq[a, b]:
                    self._below[b] |= 1 << a
                    self._above[a] |= 1 << b
        self.covers = self._compute_covers()
        self._antichains = None

    @classmethod
    def from_covers(cls, n: int, covers: Iterable[Sequence[int]], labels=None) -> "Poset":
        """Transitive-reflexive closure of a list of ``(lower, upper)`` pairs.

        >>> p = Poset.from_covers(3, [(2, 1), (3, 1)])
        >>> p.le(2, 1), p.le(1, 2)
        (True, False)
        """
        if n < 1:
            raise ValueError("a poset needs at least one element")
        rel = np.eye(n, dtype=bool)
        for pair in covers:
            lo, hi = (int(v) for v in pair)
            for v in (lo, hi):
                if not 1 <= v <= n:
                    raise IndexError(f"element {v} outside 1..{n}")
            rel[lo - 1, hi - 1] = True
        # Warshall closure
        for k in range(n):
            rel |= rel[:, [k]] & rel[[k], :]
        both = rel & rel.T
        np.fill_diagonal(both, False)
        if both.any():
            a, b = np.argwhere(both)[0]
            raise CycleError(f"elements {a + 1} and {b + 1} lie on a cycle")
        return cls(rel, labels)

    @classmethod
    def chain(cls, n: int) -> "Poset":
        """Total order 1 > 2 > ... > n."""
        return cls.from_covers(n, [(i + 1, i) for i in range(1, n)])

    @classmethod
    def antichain(cls, n: int) -> "Poset":
        return cls.from_covers(n, [])

    def _check_order(self):
        L = self.leq
        if not L.diagonal().all():
            raise CycleError("relation is not reflexive")
        off = L & L.T
        np.fill_diagonal(off, False)
        if off.any():
            raise CycleError("relation is not antisymmetric")
        closed = L.copy()
        for k in range(self.n):
            closed |= closed[:, [k]] & closed[[k], :]
        if (closed != L).any():
            raise ValueError("relation is not transitive")

    def _compute_covers(self):
        out = []
        for b in range(self.n):
            for a in _bits(self._below[b]):
                a0 = a - 1
                # a < b with nothing strictly between
                if not (self._above[a0] & self._below[b]):
                    out.append((a, b + 1))
        return sorted(out)

    # -- element relations -------------------------------------------------

    def _idx(self, i: int) -> int:
        if not isinstance(i, (int, np.integer)) or not 1 <= i <= self.n:
            raise IndexError(f"element {i!r} outside 1..{self.n}")
        return int(i) - 1

    def _mask(self, items) -> int:
        if isinstance(items, (int, np.integer)):
            return 1 << self._idx(items)
        m = 0
        for i in items:
            m |= 1 << self._idx(i)
        return m

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    def le(self, i: int, j: int) -> bool:
        return bool(self.leq[self._idx(i), self._idx(j)])

    def lt(self, i: int, j: int) -> bool:
        return i != j and self.le(i, j)

    def comparable(self, i: int, j: int) -> bool:
        return self.le(i, j) or self.le(j, i)

    def _union(self, items, table) -> int:
        if isinstance(items, (int, np.integer)):
            return table[self._idx(items)]
        m = 0
        for i in items:
            m |= table[self._idx(i)]
        return m

    def ancestral_mask(self, items) -> int:
        return self._union(items, self._above)

    def hereditary_mask(self, items) -> int:
        return self._union(items, self._below)

    def ancestral(self, items) -> frozenset:
        """A(i): elements strictly above ``i`` (union over a subset)."""
        return frozenset(_bits(self.ancestral_mask(items)))

    def hereditary(self, items) -> frozenset:
        """H(i): elements strictly below ``i`` (union over a subset)."""
        return frozenset(_bits(self.hereditary_mask(items)))

    def ancestral_closed(self, items) -> frozenset:
        return frozenset(_bits(self.ancestral_mask(items) | self._mask(items)))

    def hereditary_closed(self, items) -> frozenset:
        return frozenset(_bits(self.hereditary_mask(items) | self._mask(items)))

    def upper_covers(self, i: int) -> tuple[int, ...]:
        return tuple(b for a, b in self.covers if a == i)

    def lower_covers(self, i: int) -> tuple[int, ...]:
        return tuple(a for a, b in self.covers if b == i)

    def is_forest(self) -> bool:
        """True when every element has at most one upper cover.

        These are the posets whose ancestral poset minus its bottom node is
        a rooted forest; on them the simple random walk on the glued tree
        coincides with the crested chain built from the level weights.
        """
        return all(len(self.upper_covers(i)) <= 1 for i in self.elements)

    # -- subsets -------------------------------------------------------------

    def is_ancestral(self, items) -> bool:
        m = self._mask(items)
        return self.ancestral_mask(_bits(m)) & ~m == 0

    def is_hereditary(self, items) -> bool:
        m = self._mask(items)
        return self.hereditary_mask(_bits(m)) & ~m == 0

    def is_chain(self, items) -> bool:
        items = list(items)
        return all(self.comparable(a, b) for a, b in itertools.combinations(items, 2))

    def _is_antichain_mask(self, m: int) -> bool:
        rest = m
        while rest:
            low = rest & -rest
            i = low.bit_length() - 1
            if (self._above[i] | self._below[i]) & m:
                return False
            rest ^= low
        return True

    def is_antichain(self, items) -> bool:
        return self._is_antichain_mask(self._mask(items))

    def antichains(self) -> list[tuple[int, ...]]:
        """Every antichain, the empty one included, by size then lexicographically."""
        if self._antichains is None:
            if self.n > MAX_ANTICHAIN_N:
                raise SizeLimit(f"antichain enumeration limited to n <= {MAX_ANTICHAIN_N}")
            found = [tuple(_bits(m)) for m in range(1 << self.n) if self._is_antichain_mask(m)]
            found.sort(key=lambda s: (len(s), s))
            self._antichains = tuple(found)
        return list(self._antichains)

    def maximal_elements(self) -> tuple[int, ...]:
        return tuple(i for i in self.elements if self._above[i - 1] == 0)

    def minimal_elements(self) -> tuple[int, ...]:
        return tuple(i for i in self.elements if self._below[i - 1] == 0)

    def ancestral_of_antichain(self, S) -> frozenset:
        """A_S = I minus H[S]."""
        S = tuple(S)
        if not self.is_antichain(S):
            raise ValueError(f"{S} is not an antichain")
        return frozenset(_bits(self.full_mask & ~(self.hereditary_mask(S) | self._mask(S))))

    def antichain_of_ancestral(self, A) -> tuple[int, ...]:
        """Inverse of :meth:`ancestral_of_antichain`: maximal elements of I minus A."""
        A = frozenset(A)
        if not self.is_ancestral(A):
            raise NotAncestral(f"{sorted(A)} is not ancestral")
        rest = self.full_mask & ~self._mask(A)
        return tuple(i for i in _bits(rest) if self._above[i - 1] & rest == 0)

    # -- derived structures --------------------------------------------------

    def ancestral_poset(self) -> "AncestralPoset":
        full = frozenset(self.elements)
        nodes = [full] + [self.ancestral_of_antichain((i,)) for i in self.elements]
        assert len(set(nodes)) == len(nodes), "distinct elements must give distinct ancestral sets"
        return AncestralPoset(tuple(nodes))

    def automorphisms(self, limit: int = MAX_AUTOMORPHISM_N) -> list[tuple[int, ...]]:
        """Order automorphisms as tuples ``phi`` with ``phi[i-1]`` the image of ``i``."""
        n = self.n
        if n > limit:
            raise SizeLimit(f"automorphism search limited to n <= {limit}")
        L = self.leq
        # images must preserve up/down degrees; prune with that first
        sig = [(int(L[i].sum()), int(L[:, i].sum())) for i in range(n)]
        found = []
        image = [-1] * n
        used = [False] * n

        def extend(k):
            if k == n:
                found.append(tuple(v + 1 for v in image))
                return
            for c in range(n):
                if used[c] or sig[c] != sig[k]:
                    continue
                if all(L[k, j] == L[c, image[j]] and L[j, k] == L[image[j], c] for j in range(k)):
                    image[k] = c
                    used[c] = True
                    extend(k + 1)
                    used[c] = False
            image[k] = -1

        extend(0)
        return found

    def relabel(self, perm: Sequence[int]) -> "Poset":
        """Poset in which element ``i`` is renamed ``perm[i-1]``."""
        n = self.n
        if sorted(perm) != list(range(1, n + 1)):
            raise ValueError("relabeling must be a permutation of 1..n")
        covers = [(perm[a - 1], perm[b - 1]) for a, b in self.covers]
        labels = [None] * n
        for i in range(n):
            labels[perm[i] - 1] = self.labels[i]
        return Poset.from_covers(n, covers, labels)

    def __eq__(self, other):
        return isinstance(other, Poset) and self.n == other.n and bool((self.leq == other.leq).all())

    def __hash__(self):
        return hash((self.n, tuple(self.covers)))

    def __repr__(self):
        return f"Poset(n={self.n}, covers={self.covers})"


@dataclass(frozen=True)
class AncestralPoset:
    """Ancestral sets of singleton antichains plus the bottom node ``I``.

    Node 0 is ``I``; node ``i`` (1..n) is ``A_i``.  Node ``a`` lies below
    node ``b`` when ``nodes[a]`` contains ``nodes[b]``.
    """

    nodes: tuple[frozenset, ...]
    covers: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        nodes = self.nodes
        k = len(nodes)
        below = [[a for a in range(k) if nodes[b] < nodes[a]] for b in range(k)]
        cov = []
        for b in range(k):
            for a in below[b]:
                if not any(nodes[b] < nodes[c] < nodes[a] for c in range(k)):
                    cov.append((a, b))
        if len(set(cov)) != len(cov):
            raise AssertionError("duplicate cover pair in ancestral poset")
        object.__setattr__(self, "covers", tuple(sorted(cov)))

    def __len__(self):
        return len(self.nodes)

    def le(self, a: int, b: int) -> bool:
        return self.nodes[a] >= self.nodes[b]

    def up(self, a: int) -> tuple[int, ...]:
        """Nodes covering ``a``."""
        return tuple(b for x, b in self.covers if x == a)

    def down(self, b: int) -> tuple[int, ...]:
        """Nodes covered by ``b``."""
        return tuple(a for a, y in self.covers if y == b)

    def maximal_nodes(self) -> tuple[int, ...]:
        return tuple(a for a in range(len(self.nodes)) if not self.up(a))

    def topological_order(self) -> list[int]:
        """Node indices with every node after all nodes below it."""
        return sorted(range(len(self.nodes)), key=lambda a: (-len(self.nodes[a]), a))

    def saturated_chains(self, target: int) -> list[tuple[int, ...]]:
        """All cover paths from ``I`` to ``target``, listed bottom-up."""
        if target == 0:
            return [(0,)]
        out = []
        for a in self.down(target):
            out.extend(c + (target,) for c in self.saturated_chains(a))
        return sorted(out)

    def maximal_chains(self) -> list[tuple[int, ...]]:
        out = []
        for top in self.maximal_nodes():
            out.extend(self.saturated_chains(top))
        return sorted(out)

    def name(self, a: int) -> str:
        return "I" if a == 0 else f"A_{a}"


def maximal_chains(ap: AncestralPoset) -> list[tuple[int, ...]]:
    """Saturated chains of ``ap`` from ``I`` to a maximal node, bottom-up."""
    return ap.maximal_chains()
