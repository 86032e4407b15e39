"""Finite reversible Markov chains: checks, spectra, k-step probabilities.

Chains are plain ``(m, m)`` row-stochastic numpy arrays and measures are
length-``m`` arrays; :func:`as_chain` and :func:`as_measure` validate them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import DimensionMismatch, InvalidMeasure, IsolatedVertex, NotIrreducible, NotReversible

STOCHASTIC_TOL = 1e-12
BALANCE_TOL = 1e-10
EIG_TOL = 1e-9


def as_chain(P, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"transition matrix must be square, got shape {P.shape}")
    if (P < 0).any():
        x, y = np.argwhere(P < 0)[0]
        raise ValueError(f"negative transition probability at ({x}, {y})")
    dev = np.abs(P.sum(axis=1) - 1.0)
    if (dev > tol).any():
        row = int(np.argmax(dev))
        raise ValueError(f"row {row} sums to {P[row].sum()!r}, not 1")
    return P


def as_measure(pi, m: int | None = None, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1:
        raise InvalidMeasure("measure must be a vector")
    if m is not None and pi.shape[0] != m:
        raise DimensionMismatch(f"measure has {pi.shape[0]} entries, expected {m}")
    if (pi <= 0).any():
        raise InvalidMeasure("measure must be strictly positive")
    if abs(pi.sum() - 1.0) > tol:
        raise InvalidMeasure(f"measure sums to {pi.sum()!r}, not 1")
    return pi


def apply(P, f) -> np.ndarray:
    """(Pf)(x) = sum_y p(x, y) f(y)."""
    P = np.asarray(P, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"function has length {f.shape[0]}, chain has {P.shape[1]} states")
    return P @ f


@dataclass(frozen=True)
class BalanceReport:
    ok: bool
    max_violation: float
    worst_pair: tuple[int, int]

    def __bool__(self):
        return self.ok


def check_detailed_balance(P, pi, tol: float = BALANCE_TOL) -> BalanceReport:
    """Largest |pi(x) p(x,y) - pi(y) p(y,x)| and the pair attaining it."""
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if pi.shape[0] != P.shape[0]:
        raise DimensionMismatch("measure and chain sizes differ")
    flow = pi[:, None] * P
    gap = np.abs(flow - flow.T)
    x, y = np.unravel_index(int(np.argmax(gap)), gap.shape)
    worst = float(gap[x, y])
    return BalanceReport(worst <= tol, worst, (int(x), int(y)))


def is_irreducible(P) -> bool:
    P = np.asarray(P)
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    return n_comp == 1


def stationary(P) -> np.ndarray:
    """Unique stationary distribution of an irreducible chain."""
    P = as_chain(P)
    if not is_irreducible(P):
        raise NotIrreducible("chain is not irreducible; stationary measure is not unique")
    m = P.shape[0]
    # pi (P - I) = 0 with sum(pi) = 1, solved in least squares
    A = np.vstack([P.T - np.eye(m), np.ones((1, m))])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition ``P U = U Delta`` with ``U^T D U = I``.

    ``U`` holds eigenvectors in columns; ``pi`` is the diagonal of ``D`` and
    ``eigenvalues`` the diagonal of ``Delta``.  ``z0`` is the column of the
    eigenvalue 1.
    """

    U: np.ndarray
    pi: np.ndarray
    eigenvalues: np.ndarray
    z0: int = 0

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.pi)

    @property
    def Delta(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def residuals(self, P) -> tuple[float, float]:
        """Max-abs residuals of ``PU - U Delta`` and ``U^T D U - I``."""
        P = np.asarray(P, dtype=float)
        U = self.U
        r1 = np.abs(P @ U - U * self.eigenvalues).max()
        r2 = np.abs(U.T @ (self.pi[:, None] * U) - np.eye(U.shape[1])).max()
        return float(r1), float(r2)

    def kstep_matrix(self, k: int) -> np.ndarray:
        return (self.U * self.eigenvalues**k) @ (self.U.T * self.pi)


def _fix_signs(U: np.ndarray, start: int = 0) -> None:
    for c in range(start, U.shape[1]):
        nz = np.flatnonzero(np.abs(U[:, c]) > 1e-12)
        if nz.size and U[nz[0], c] < 0:
            U[:, c] *= -1


def spectral_oracle(P, pi=None) -> SpectralData:
    """Diagonalize a reversible chain through ``D^1/2 P D^-1/2``.

    Eigenvalues come out in descending order.  Column 0 is the all-ones
    vector (eigenvalue exactly 1); the remaining columns have their first
    nonzero entry positive.
    """
    P = as_chain(P)
    if pi is None:
        pi = stationary(P)
    pi = as_measure(pi, P.shape[0], tol=1e-9)
    bal = check_detailed_balance(P, pi)
    if not bal:
        raise NotReversible(
            f"detailed balance fails at {bal.worst_pair} (violation {bal.max_violation:.3e})"
        )
    s = np.sqrt(pi)
    sym = s[:, None] * P / s[None, :]
    sym = 0.5 * (sym + sym.T)
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    # rotate the eigenvalue-1 cluster so that sqrt(pi) is its first vector
    top = np.flatnonzero(np.abs(vals - 1.0) <= EIG_TOL)
    if top.size:
        block = vecs[:, top]
        basis = np.column_stack([s, block])
        q, _ = np.linalg.qr(basis)
        q = q[:, : top.size]
        if q[:, 0] @ s < 0:
            q[:, 0] *= -1
        vecs[:, top] = q
        vals[top[0]] = 1.0
    U = vecs / s[:, None]
    if top.size:
        U[:, top[0]] = 1.0
    _fix_signs(U, start=1)
    return SpectralData(U=U, pi=pi, eigenvalues=vals, z0=int(top[0]) if top.size else 0)


def kstep_spectral(spectral: SpectralData, x: int, y: int, k: int) -> float:
    """p^(k)(x, y) = pi(y) sum_z u(x, z) lambda_z^k u(y, z)."""
    U = spectral.U
    return float(spectral.pi[y] * np.sum(U[x] * spectral.eigenvalues**k * U[y]))


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric nonnegative weights; edges are the pairs with positive weight."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionMismatch("weight matrix must be square")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        if not np.allclose(w, w.T, atol=1e-14, rtol=0):
            raise ValueError("weights must be symmetric")
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(int(x), int(y)) for x, y in zip(*np.nonzero(np.triu(self.w > 0)))]

    def vertex_weights(self) -> np.ndarray:
        return self.w.sum(axis=1)


def to_weighted_graph(P, pi) -> WeightedGraph:
    """w(x, y) = pi(x) p(x, y) for a chain in detailed balance with ``pi``."""
    P = as_chain(P)
    pi = as_measure(pi, P.shape[0], tol=1e-9)
    bal = check_detailed_balance(P, pi)
    if not bal:
        raise NotReversible(f"detailed balance fails at {bal.worst_pair}")
    w = pi[:, None] * P
    return WeightedGraph(0.5 * (w + w.T))


def from_weighted_graph(graph: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Random walk ``p(x,y) = w(x,y)/W(x)`` and its measure ``W(x)/W``."""
    W = graph.vertex_weights()
    if (W <= 0).any():
        raise IsolatedVertex(f"vertex {int(np.argmin(W))} has no incident edges")
    return graph.w / W[:, None], W / W.sum()


def _graph_bipartite(P) -> bool:
    adj = (np.asarray(P) > 0) | (np.asarray(P) > 0).T
    if np.diag(adj).any():
        return False
    m = adj.shape[0]
    color = [-1] * m
    for s in range(m):
        if color[s] >= 0:
            continue
        color[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(adj[u]):
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return False
    return True


def spectrum(P, pi=None) -> np.ndarray:
    """Real spectrum in descending order (symmetrized when reversible)."""
    P = as_chain(P)
    if pi is None and is_irreducible(P):
        pi = stationary(P)
    if pi is not None and check_detailed_balance(P, pi):
        return spectral_oracle(P, pi).eigenvalues
    vals = np.linalg.eigvals(P)
    return np.sort(vals.real)[::-1] if np.abs(vals.imag).max() < EIG_TOL else vals


def classify(P) -> dict:
    """Irreducibility, bipartiteness and ergodicity, each by two routes.

    Graph route: strong connectivity and 2-colouring of the support graph.
    Spectral route: multiplicity of eigenvalue 1 and presence of -1.
    """
    P = as_chain(P)
    irreducible = is_irreducible(P)
    bipartite = _graph_bipartite(P)
    vals = np.asarray(spectrum(P))
    mult_one = int(np.sum(np.abs(vals - 1.0) <= EIG_TOL))
    has_minus_one = bool(np.any(np.abs(vals + 1.0) <= EIG_TOL))
    ergodic_spectral = mult_one == 1 and not has_minus_one
    ergodic_graph = irreducible and not bipartite
    return {
        "irreducible": irreducible,
        "bipartite": bipartite,
        "ergodic": ergodic_spectral,
        "ergodic_graph": ergodic_graph,
        "multiplicity_of_one": mult_one,
        "has_minus_one": has_minus_one,
        "consistent": ergodic_spectral == ergodic_graph and (mult_one == 1) == irreducible,
        "spectrum": vals,
    }
