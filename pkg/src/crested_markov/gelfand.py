"""Irreducible submodules and spherical functions of the poset action on L(X).

The generalized wreath product itself is never built: the submodules are
the insect eigenspaces ``W_S``, one per antichain, and the spherical
function of ``W_S`` at a base point is a tensor of three elementary
one-coordinate functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kron
from .poset import Poset


def module_decomposition(poset: Poset, sizes: Sequence[int]) -> list[tuple[tuple[int, ...], int]]:
    """``(S, dim W_S)`` for every antichain, with dim = prod_{A(S)} m_i * prod_S (m_i - 1)."""
    out = []
    for S in poset.antichains():
        dim = 1
        for i in poset.ancestral(S):
            dim *= sizes[i - 1]
        for i in S:
            dim *= sizes[i - 1] - 1
        out.append((S, dim))
    return out


@dataclass(frozen=True, eq=False)
class SphericalFunction:
    antichain: tuple[int, ...]
    base_point: tuple[int, ...]
    sizes: tuple[int, ...]
    values: np.ndarray


def spherical(S, x0, poset: Poset, sizes: Sequence[int]) -> SphericalFunction:
    """Indicator of ``x0_i`` on A(S), the centred spike on S, constant 1 elsewhere."""
    S = tuple(sorted(S))
    if not poset.is_antichain(S):
        raise ValueError(f"{S} is not an antichain")
    x0 = tuple(int(v) for v in x0)
    if len(x0) != poset.n or any(not 0 <= v < m for v, m in zip(x0, sizes)):
        raise IndexError(f"base point {x0} outside X")
    if any(sizes[i - 1] < 2 for i in S):
        raise ValueError("W_S is trivial when some i in S has a single state")
    above = poset.ancestral(S)
    factors = []
    for i in poset.elements:
        m = sizes[i - 1]
        f = np.ones(m)
        if i in above:
            f = np.zeros(m)
            f[x0[i - 1]] = 1.0
        elif i in S:
            f = np.full(m, -1.0 / (m - 1))
            f[x0[i - 1]] = 1.0
        factors.append(f)
    values = factors[0]
    for f in factors[1:]:
        values = np.kron(values, f)
    return SphericalFunction(S, x0, tuple(int(m) for m in sizes), values)


@dataclass(frozen=True)
class SphericalReport:
    antichain: tuple[int, ...]
    eigenvalue: float
    residual: float
    value_at_base: float
    ok: bool


def verify_spherical(phi: SphericalFunction, P: np.ndarray, eigenvalue, tol: float = 1e-9) -> SphericalReport:
    """Check ``P phi = eigenvalue * phi`` and ``phi(x0) = 1``."""
    lam = float(eigenvalue)
    resid = float(np.abs(P @ phi.values - lam * phi.values).max())
    at_base = float(phi.values[kron.linearize(phi.base_point, phi.sizes)])
    return SphericalReport(phi.antichain, lam, resid, at_base, resid <= tol and abs(at_base - 1.0) <= 1e-12)
