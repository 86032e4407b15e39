"""Command line interface: ``crested-markov <verb> SPEC [options]``."""

from __future__ import annotations

import argparse
import io
import os
import sys
from fractions import Fraction

import numpy as np

from . import crested, gelfand, insect, kron, markov, specdoc
from .errors import CrestedError, NotReversible, SizeCapError

SEED_ENV = "CRESTED_MARKOV_SEED"

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_MATH = 3
EXIT_SIZE = 4

KSTEP_CHECKS = (0, 1, 2, 5)


def _fmt(v: float) -> str:
    return "%.17g" % v


def _state_arg(text: str, sizes) -> tuple[int, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) == 1 and len(sizes) > 1 and len(parts[0]) == len(sizes):
        parts = list(parts[0])
    x = tuple(int(p) for p in parts)
    if len(x) != len(sizes) or any(not 0 <= v < m for v, m in zip(x, sizes)):
        raise specdoc.ValidationError(f"state {text!r} outside X (sizes {list(sizes)})")
    return x


def _state_str(x) -> str:
    return "".join(map(str, x)) if all(v < 10 for v in x) else ",".join(map(str, x))


def _set_str(S) -> str:
    return "{" + ",".join(map(str, S)) + "}"


def matrix_csv(doc: specdoc.Document, P: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(doc.header() + "\n")
    buf.write(doc.metadata() + "\n")
    for row in P:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_matrix_csv(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line and not line.startswith("#")]
    return np.array([[float(v) for v in line.split(",")] for line in rows])


# -- verbs -----------------------------------------------------------------------


def cmd_build(args, out) -> int:
    doc = specdoc.load(args.spec)
    text = matrix_csv(doc, doc.to_spec().matrix)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_spectrum(args, out) -> int:
    doc = specdoc.load(args.spec)
    spec = doc.to_spec()
    out.write(doc.header() + "\n")
    out.write(doc.metadata() + "\n")
    rev = spec.reversibility
    if not rev.reversible:
        ks = ", ".join(map(str, rev.violating))
        out.write(f"not reversible: P_k is not symmetric for k = {ks} (outside the maximal elements)\n")
        return EXIT_MATH
    exact = None
    if doc.mode == "insect":
        p = insect.coefficients(doc.poset, doc.sizes).p
        exact = {S: insect.exact_eigenvalue(doc.poset, p, S) for S in doc.poset.antichains()}
    for b in crested.eigenblocks(spec):
        line = f"S={_set_str(b.antichain)} j=({','.join(map(str, b.j))}) lambda={b.eigenvalue:.12g} dim={b.dimension}"
        if exact is not None:
            line += f" exact={exact[b.antichain]}"
        out.write(line + "\n")
    dev = float(np.abs(crested.analytic_spectrum(spec) - markov.spectrum(spec.matrix, rev.pi)).max())
    verdict = "PASS" if dev <= 1e-9 else "FAIL"
    out.write(f"oracle max_deviation={dev:.3e} {verdict}\n")
    return EXIT_OK if verdict == "PASS" else EXIT_MATH


def cmd_kstep(args, out) -> int:
    doc = specdoc.load(args.spec)
    spec = doc.to_spec()
    x = _state_arg(args.from_, doc.sizes)
    y = _state_arg(args.to, doc.sizes)
    if args.k < 0:
        raise specdoc.ValidationError("--k must be nonnegative")
    val = crested.kstep(spec, x, y, args.k)
    out.write(doc.header() + "\n")
    out.write(f"p^({args.k})({_state_str(x)} -> {_state_str(y)}) = {_fmt(val)}\n")
    if args.verify:
        ref = np.linalg.matrix_power(spec.matrix, args.k)[kron.linearize(x, doc.sizes), kron.linearize(y, doc.sizes)]
        dev = abs(val - ref)
        verdict = "PASS" if dev <= 1e-9 else "FAIL"
        out.write(f"matrix_power = {_fmt(ref)} deviation={dev:.3e} {verdict}\n")
        if verdict == "FAIL":
            return EXIT_MATH
    return EXIT_OK


def cmd_insect(args, out) -> int:
    doc = specdoc.load(args.spec)
    poset, sizes = doc.poset, doc.sizes
    tree = insect.build_tree(poset, sizes)
    ap = tree.ancestral
    coef = insect.coefficients(poset, sizes, args.rule)
    out.write(doc.header() + "\n")
    out.write(doc.metadata() + f" rule={args.rule}\n")
    out.write("ancestral poset: " + " ".join(ap.name(a) + "=" + _set_str(sorted(ap.nodes[a])) for a in range(len(ap))) + "\n")
    out.write(f"tree: vertices={tree.num_vertices} leaves={tree.num_leaves} edges={len(tree.edges)}\n")
    for a in range(len(ap)):
        lvl = tree.level(a)
        out.write(f"level {ap.name(a)}: vertices={len(lvl)} degree={tree.degree(lvl[0])}\n")
    for (a, b), v in sorted(coef.alpha.items()):
        out.write(f"alpha[{ap.name(a)}->{ap.name(b)}] = {v} ({float(v):.12g})\n")
    for i, v in sorted(coef.p.items()):
        out.write(f"p[{i}] = {v} ({float(v):.12g})\n")
    total = sum(coef.p.values(), Fraction(0))
    out.write(f"sum p = {total}\n")
    law = insect.walk_matrix(tree)
    chain = insect.to_crested(poset, sizes, args.rule).matrix
    dev = float(np.abs(law - chain).max())
    note = "walk law equals crested chain" if dev <= 1e-12 else "walk law differs from crested chain"
    out.write(f"{note}: max_deviation={dev:.3e} forest={poset.is_forest()}\n")
    return EXIT_OK


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise specdoc.ValidationError(f"{SEED_ENV}={env!r} is not an integer") from None


def cmd_simulate(args, out) -> int:
    doc = specdoc.load(args.spec)
    if args.trials < 0:
        raise specdoc.ValidationError("--trials must be nonnegative")
    seed = _seed(args)
    start = _state_arg(args.start, doc.sizes) if args.start else (0,) * doc.poset.n
    tree = insect.build_tree(doc.poset, doc.sizes)
    counts = insect.simulate(tree, start, args.trials, seed)
    analytic = insect.to_crested(doc.poset, doc.sizes).matrix[kron.linearize(start, doc.sizes)]
    out.write(doc.header() + "\n")
    out.write(f"# rng={insect.RNG_ALGORITHM} seed={seed} trials={args.trials} start={_state_str(start)}\n")
    out.write("state,count,frequency,analytic,stderr\n")
    if args.trials == 0:
        return EXIT_OK
    for k, c in enumerate(counts):
        f = c / args.trials
        se = np.sqrt(analytic[k] * (1 - analytic[k]) / args.trials)
        state = _state_str(kron.delinearize(k, doc.sizes))
        out.write(f"{state},{c},{_fmt(f)},{_fmt(analytic[k])},{_fmt(se)}\n")
    return EXIT_OK


class _Checks:
    def __init__(self, out):
        self.out = out
        self.failed = 0
        self.count = 0

    def add(self, name: str, ok: bool, detail: str = "") -> bool:
        self.count += 1
        self.failed += not ok
        self.out.write(f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "") + "\n")
        return ok

    def skip(self, name: str, why: str) -> None:
        self.out.write(f"SKIP {name}: {why}\n")

    def info(self, text: str) -> None:
        self.out.write(f"INFO {text}\n")


def cmd_verify(args, out) -> int:
    doc = specdoc.load(args.spec, check_math=False)
    out.write(doc.header() + "\n")
    out.write(doc.metadata() + "\n")
    ck = _Checks(out)
    poset = doc.poset
    ck.add("poset", True, f"n={poset.n} covers={len(poset.covers)} antichains={len(poset.antichains())}")
    valid = True
    if doc.mode == "crested":
        for i, M in enumerate(doc.matrices, start=1):
            msg = specdoc.row_problem(M)
            valid &= ck.add(f"stochastic component {i}", msg is None, msg or "")
        p0 = doc.p0
        valid &= ck.add(
            "p0 distribution", bool((p0 > 0).all() and abs(p0.sum() - 1) <= 1e-12), f"sum={_fmt(p0.sum())}"
        )
    part = crested.first_crested_partition(poset)
    if part is None:
        ck.info("first-crested partition: none under any labeling")
    else:
        ck.info(f"first-crested partition: labeling={list(part.labeling)} C={_set_str(part.C)} N={_set_str(part.N)}")
    if not valid:
        ck.skip("remaining checks", "spec is not a valid chain")
        out.write(f"verdict: FAIL ({ck.failed} of {ck.count} checks failed)\n")
        return EXIT_MATH
    try:
        spec = doc.to_spec()
    except CrestedError as exc:
        ck.add("components", False, str(exc))
        out.write(f"verdict: FAIL ({ck.failed} of {ck.count} checks failed)\n")
        return EXIT_MATH
    P = spec.matrix
    ck.add("assembled rows sum to 1", bool(np.abs(P.sum(axis=1) - 1).max() <= 1e-12))
    for i, c in enumerate(spec.components, start=1):
        rep = markov.check_detailed_balance(c.P, c.sigma, tol=1e-10)
        ck.info(f"component {i}: reversible={rep.ok} symmetric={c.is_symmetric()}")
    rev = spec.reversibility
    scan = crested.detailed_balance_scan(spec)
    ck.add(
        "reversibility condition agrees with detailed-balance scan",
        rev.reversible == scan.ok,
        f"reversible={rev.reversible} violating={list(rev.violating)}",
    )
    if rev.reversible:
        stat = markov.stationary(P) if markov.is_irreducible(P) else None
        if stat is not None:
            ck.add("product measure is stationary", bool(np.abs(stat - rev.pi).max() <= 1e-10))
        dims = sum(b.dimension for b in crested.eigenblocks(spec))
        ck.add("block dimensions sum to |X|", dims == spec.num_states, f"{dims} vs {spec.num_states}")
        dev = float(np.abs(crested.analytic_spectrum(spec) - markov.spectrum(P, rev.pi)).max())
        ck.add("analytic spectrum matches dense oracle", dev <= 1e-9, f"max_deviation={dev:.3e}")
        r1, r2 = spec.spectral.residuals(P)
        ck.add("P U = U Delta", r1 <= 1e-9, f"residual={r1:.3e}")
        ck.add("U^T D U = I", r2 <= 1e-9, f"residual={r2:.3e}")
        worst = max(float(np.abs(P @ b.basis - b.eigenvalue * b.basis).max()) for b in crested.eigenblocks(spec))
        ck.add("eigenblock residuals", worst <= 1e-9, f"max={worst:.3e}")
        y = spec.num_states - 1
        kdev = max(abs(crested.kstep(spec, 0, y, k) - np.linalg.matrix_power(P, k)[0, y]) for k in KSTEP_CHECKS)
        ck.add("k-step formula matches matrix power", kdev <= 1e-9, f"k={list(KSTEP_CHECKS)} max_deviation={kdev:.3e}")
    else:
        ck.skip("spectral checks", "chain is not reversible")
    erg = crested.ergodicity(spec)
    ck.add(
        "ergodicity",
        erg["ergodicity_inherited"],
        f"components_ergodic={erg['components_ergodic']} assembled_ergodic={erg['ergodic']}",
    )
    if part is not None:
        relabeled = crested.relabel_spec(spec, part.labeling)
        direct = crested.first_crested_product([c.P for c in relabeled.components], relabeled.p0, part.C)
        ck.add("first crested product equals relabeled operator", bool(np.array_equal(direct, relabeled.matrix)))
    if doc.mode == "insect":
        coef = insect.coefficients(poset, doc.sizes)
        ck.add("level weights sum to 1", sum(coef.p.values(), Fraction(0)) == 1)
        ck.add("passage coefficients in (0, 1]", all(0 < a <= 1 for a in coef.alpha.values()))
        direct = insect.direct_transition_matrix(poset, doc.sizes, coef)
        ddev = float(np.abs(direct - P).max())
        ck.add("direct formula equals crested chain", ddev <= 1e-12, f"max_deviation={ddev:.3e}")
        law = insect.walk_matrix(insect.build_tree(poset, doc.sizes))
        wdev = float(np.abs(law - P).max())
        if poset.is_forest():
            ck.add("walk law equals crested chain", wdev <= 1e-12, f"max_deviation={wdev:.3e}")
        else:
            ck.info(f"walk law vs crested chain on a non-forest poset: max_deviation={wdev:.3e}")
        x0 = doc.base_point or (0,) * poset.n
        lam = {S: insect.exact_eigenvalue(poset, coef.p, S) for S in poset.antichains()}
        reports = [
            gelfand.verify_spherical(gelfand.spherical(S, x0, poset, doc.sizes), P, lam[S])
            for S in poset.antichains()
            if all(doc.sizes[i - 1] > 1 for i in S)
        ]
        ck.add("spherical functions", all(r.ok for r in reports), f"{len(reports)} checked at {_state_str(x0)}")
    verdict = "PASS" if ck.failed == 0 else "FAIL"
    tail = f"{ck.count} checks" if ck.failed == 0 else f"{ck.failed} of {ck.count} checks failed"
    out.write(f"verdict: {verdict} ({tail})\n")
    return EXIT_OK if verdict == "PASS" else EXIT_MATH


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crested-markov",
        description="Crested products of Markov chains over a poset, and the insect chain.",
        epilog=(
            f"Environment: {SEED_ENV} sets the simulation seed when --seed is not given. "
            "Exit codes: 0 ok, 2 schema error, 3 math validation error, 4 state space too large."
        ),
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("build", help="write the transition matrix as CSV")
    p.add_argument("spec")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("spectrum", help="eigenvalues per block, checked against a dense solver")
    p.add_argument("spec")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("kstep", help="k-step transition probability")
    p.add_argument("spec")
    p.add_argument("--from", dest="from_", required=True, help="start state, e.g. 0,1,0")
    p.add_argument("--to", required=True, help="end state")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--verify", action="store_true", help="compare against the k-th matrix power")
    p.set_defaults(func=cmd_kstep)

    p = sub.add_parser("insect", help="tree, passage coefficients and level weights")
    p.add_argument("spec")
    p.add_argument("--rule", choices=[insect.FIRST_PASSAGE, insect.LITERAL], default=insect.FIRST_PASSAGE)
    p.set_defaults(func=cmd_insect)

    p = sub.add_parser(
        "simulate",
        help="histogram of random-walk end leaves",
        epilog=f"If --seed is omitted the seed is read from {SEED_ENV} (default 0).",
    )
    p.add_argument("spec")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--start", default=None, help="start leaf (default: all zeros)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run every invariant check on one spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None, out=None) -> int:
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    try:
        return args.func(args, out)
    except specdoc.SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SizeCapError as exc:
        print(f"size cap: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except NotReversible as exc:
        print(f"not reversible: {exc}", file=sys.stderr)
        return EXIT_MATH
    except (CrestedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
