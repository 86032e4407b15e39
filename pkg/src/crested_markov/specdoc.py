"""Reading JSON spec documents for the command line."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, kron
from .crested import CrestedSpec
from .errors import CrestedError
from .poset import Poset

TOOL = "crested-markov"

SCHEMA = {
    "type": "object",
    "required": ["poset", "mode", "components"],
    "properties": {
        "poset": {
            "type": "object",
            "required": ["n", "covers"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "covers": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                },
                "labels": {"type": "array", "items": {"type": "string"}},
            },
        },
        "mode": {"enum": ["crested", "insect"]},
        "components": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["index", "size"],
                "properties": {
                    "index": {"type": "integer", "minimum": 1},
                    "size": {"type": "integer", "minimum": 1},
                    "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                    "sigma": {"type": "array", "items": {"type": "number"}},
                },
            },
        },
        "p0": {"type": "array", "items": {"type": "number"}},
        "base_point": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
    "if": {"properties": {"mode": {"const": "crested"}}},
    "then": {
        "required": ["p0"],
        "properties": {"components": {"items": {"required": ["index", "size", "matrix"]}}},
    },
}


class SchemaError(CrestedError):
    """Document does not match the schema (exit code 2)."""


class ValidationError(CrestedError):
    """Document is well formed but mathematically invalid (exit code 3)."""


@dataclass
class Document:
    raw: dict
    digest: str
    poset: Poset
    mode: str
    sizes: tuple[int, ...]
    matrices: list | None
    sigmas: list
    p0: np.ndarray | None
    base_point: tuple[int, ...] | None

    def header(self) -> str:
        return f"# {TOOL} v{__version__} hash={self.digest}"

    def poset_hash(self) -> str:
        text = json.dumps([self.poset.n, self.poset.covers])
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def metadata(self) -> str:
        sizes = "x".join(map(str, self.sizes))
        return f"# sizes={sizes} mode={self.mode} poset_hash={self.poset_hash()}"

    def to_spec(self) -> CrestedSpec:
        from . import insect

        if self.mode == "insect":
            return insect.to_crested(self.poset, self.sizes)
        return CrestedSpec.build(self.poset, self.matrices, self.p0, self.sigmas)


def _path(err) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def load(path, check_math: bool = True) -> Document:
    """Parse and validate a spec document.

    With ``check_math=False`` row-stochasticity and ``p0`` normalization are
    left to the caller (used by ``verify`` to report them as failures).
    """
    data = Path(path).read_bytes()
    digest = hashlib.sha256(data).hexdigest()[:16]
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SchemaError(f"{_path(e)}: {e.message}")
    n = raw["poset"]["n"]
    try:
        poset = Poset.from_covers(n, raw["poset"]["covers"], raw["poset"].get("labels"))
    except (IndexError, ValueError) as exc:
        raise ValidationError(f"/poset: {exc}") from exc
    comps = {}
    for k, c in enumerate(raw["components"]):
        if c["index"] in comps:
            raise ValidationError(f"/components/{k}/index: duplicate index {c['index']}")
        if c["index"] > n:
            raise ValidationError(f"/components/{k}/index: {c['index']} outside 1..{n}")
        comps[c["index"]] = c
    missing = sorted(set(range(1, n + 1)) - set(comps))
    if missing:
        raise ValidationError(f"/components: no component for element(s) {missing}")
    ordered = [comps[i] for i in range(1, n + 1)]
    sizes = tuple(c["size"] for c in ordered)
    kron.check_size(sizes)
    mode = raw["mode"]
    matrices = None
    sigmas = [None] * n
    p0 = None
    if mode == "crested":
        matrices = []
        for i, c in enumerate(ordered, start=1):
            M = np.array(c["matrix"], dtype=float)
            if M.shape != (c["size"], c["size"]):
                raise ValidationError(f"component {i}: matrix shape {M.shape} does not match size {c['size']}")
            matrices.append(M)
            if "sigma" in c:
                sigmas[i - 1] = np.array(c["sigma"], dtype=float)
        p0 = np.array(raw["p0"], dtype=float)
        if p0.shape != (n,):
            raise ValidationError(f"/p0: expected {n} entries, got {p0.size}")
        if check_math:
            for i, M in enumerate(matrices, start=1):
                msg = row_problem(M)
                if msg:
                    raise ValidationError(f"component {i}: {msg}")
            if (p0 <= 0).any() or abs(p0.sum() - 1.0) > 1e-12:
                raise ValidationError(f"/p0: must be positive and sum to 1 (sum {p0.sum()!r})")
    base = raw.get("base_point")
    if base is not None:
        base = tuple(base)
        if len(base) != n or any(v >= m for v, m in zip(base, sizes)):
            raise ValidationError(f"/base_point: {list(base)} outside X")
    return Document(raw, digest, poset, mode, sizes, matrices, sigmas, p0, base)


def row_problem(M: np.ndarray, tol: float = 1e-12) -> str | None:
    """Description of the first non-stochastic row, or ``None``."""
    for r, row in enumerate(M):
        if (row < 0).any():
            return f"row {r} has a negative entry"
        if abs(row.sum() - 1.0) > tol:
            return f"row {r} sums to {row.sum()!r}"
    return None
