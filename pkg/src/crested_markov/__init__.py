"""Crested products of finite Markov chains over a poset, and the insect chain.

Build the operator over a finite poset, read off its eigenstructure
without diagonalizing, and construct the generalized Insect chain on the
glued tree of ancestral relations.
"""

__version__ = "0.1.0"

from .errors import (
    CrestedError,
    CycleError,
    Degenerate,
    DimensionMismatch,
    InvalidMeasure,
    InvalidSpec,
    IsolatedVertex,
    NotAncestral,
    NotIrreducible,
    NotReversible,
    SizeCapError,
    SizeLimit,
)
from .poset import AncestralPoset, Poset
from .crested import ComponentChain, CrestedSpec, EigenBlock

__all__ = [
    "__version__",
    "AncestralPoset",
    "ComponentChain",
    "CrestedError",
    "CrestedSpec",
    "CycleError",
    "Degenerate",
    "DimensionMismatch",
    "EigenBlock",
    "InvalidMeasure",
    "InvalidSpec",
    "IsolatedVertex",
    "NotAncestral",
    "NotIrreducible",
    "NotReversible",
    "Poset",
    "SizeCapError",
    "SizeLimit",
]
