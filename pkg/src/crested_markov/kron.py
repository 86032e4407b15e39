"""Tensor-product operators on X = X_1 x ... x X_n.

States are linearized in mixed radix with coordinate 1 most significant,
which is exactly the ordering ``np.kron`` produces when factors are taken
in index order 1..n.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatch, InvalidMeasure, SizeCapError

IDENTITY = "identity"
UNIFORM = "uniform"
MAX_STATES = 65536

Factor = Union[str, np.ndarray]


def state_count(sizes: Sequence[int]) -> int:
    return int(np.prod([int(m) for m in sizes], dtype=object))


def check_size(sizes: Sequence[int]) -> int:
    total = state_count(sizes)
    if total > MAX_STATES:
        raise SizeCapError(f"state space has {total} points, cap is {MAX_STATES}")
    return total


def linearize(x: Sequence[int], sizes: Sequence[int]) -> int:
    return int(np.ravel_multi_index(tuple(int(v) for v in x), tuple(sizes)))


def delinearize(k: int, sizes: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(v) for v in np.unravel_index(int(k), tuple(sizes)))


def all_states(sizes: Sequence[int]) -> np.ndarray:
    """Array of shape ``(prod m_i, n)`` listing X in linear order."""
    grids = np.indices(tuple(sizes)).reshape(len(sizes), -1)
    return grids.T


def factor_matrix(factor: Factor, size: int) -> np.ndarray:
    if isinstance(factor, str):
        if factor == IDENTITY:
            return np.eye(size)
        if factor == UNIFORM:
            return np.full((size, size), 1.0 / size)
        raise ValueError(f"unknown factor kind {factor!r}")
    M = np.asarray(factor, dtype=float)
    if M.shape != (size, size):
        raise DimensionMismatch(f"factor has shape {M.shape}, expected ({size}, {size})")
    return M


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.ones((1, 1)))


def assemble_term(factors: Sequence[Factor], sizes: Sequence[int]) -> np.ndarray:
    """Kronecker product of one factor per coordinate, in coordinate order.

    ``factors[i]`` is ``IDENTITY``, ``UNIFORM`` or an explicit
    ``sizes[i] x sizes[i]`` matrix.
    """
    if len(factors) != len(sizes):
        raise DimensionMismatch(f"{len(factors)} factors for {len(sizes)} coordinates")
    check_size(sizes)
    return kron_all([factor_matrix(f, int(m)) for f, m in zip(factors, sizes)])


def special_factor(kind: str, size: int, sigma=None) -> np.ndarray:
    """Building blocks of the eigenvector and eigenvalue matrices.

    ``"A"``: ones in the first column, zeros elsewhere.
    ``"I_sigma_norm"``: diagonal of ``1/sqrt(sigma)``.
    ``"J_diag"``: ``diag(1, 0, ..., 0)``.
    """
    if kind == "A":
        M = np.zeros((size, size))
        M[:, 0] = 1.0
        return M
    if kind == "J_diag":
        M = np.zeros((size, size))
        M[0, 0] = 1.0
        return M
    if kind == "I_sigma_norm":
        if sigma is None:
            raise InvalidMeasure("I_sigma_norm needs a measure")
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != (size,) or (sigma <= 0).any():
            raise InvalidMeasure("measure must be strictly positive with one entry per state")
        return np.diag(1.0 / np.sqrt(sigma))
    raise ValueError(f"unknown special factor {kind!r}")
