"""Command-line front end.

Exit status: 0 when the answer is positive (coverable, valid, certified,
realizable), 1 when it is negative, 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import automata as am
from .buchi import (WeightRanking, build_buchi_cover_generator, solve_realizability,
                    validate_weight_ranking, verify_generator)
from .oracle import BudgetExceeded, CyclicTransducerError, level_profile, oracle_coverable_acyclic
from .search import solve_weight_ranking
from .simple import WeightDistribution, solve_weights, validate_weights
from .trees import FREE, build_cover_generator, check_coverage, materialize_prefix, prefix_to_dot


class UsageError(Exception):
    pass


def _emit(obj, out):
    out.write(json.dumps(obj, indent=2, ensure_ascii=False))
    out.write("\n")


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None


def _load_machine(path) -> am.Transducer:
    try:
        return am.parse_transducer(_read_json(path))
    except am.FixtureError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_spec(path) -> am.BuchiSpec:
    try:
        return am.parse_buchi(_read_json(path))
    except am.FixtureError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _certificate_doc(path) -> dict:
    doc = _read_json(path)
    # accept a bare certificate or a solver report that embeds one
    if isinstance(doc, dict) and "certificate" in doc:
        doc = doc["certificate"]
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: certificate must be a JSON object")
    return doc


def _directions(args, spec: am.BuchiSpec | None = None) -> tuple[str, ...]:
    if args.directions:
        dirs = tuple(x for x in args.directions.split(",") if x)
        if not dirs or len(set(dirs)) != len(dirs):
            raise UsageError("--directions needs distinct, nonempty names")
        return dirs
    if spec is not None:
        if args.branching is not None and args.branching != len(spec.inputs):
            raise UsageError(f"--branching {args.branching} does not match the "
                             f"{len(spec.inputs)} spec inputs")
        return tuple(spec.inputs)
    if args.branching is None:
        raise UsageError("--branching or --directions is required")
    if args.branching < 1:
        raise UsageError("--branching must be positive")
    return am.branching_directions(args.branching)


def _problem(args, d, spec=None) -> am.CoverProblem:
    dirs = _directions(args, spec)
    root = args.root if args.root is not None else dirs[0]
    try:
        return am.CoverProblem(d, dirs, root, spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _deterministic(d):
    try:
        am.require_deterministic(d)
    except am.NondeterministicError as exc:
        raise UsageError(str(exc)) from None


def _word(w) -> str:
    return am.format_word(w)


# -- cover -------------------------------------------------------------------

def cmd_cover_solve(args, out) -> int:
    d = _load_machine(args.transducer)
    _deterministic(d)
    p = _problem(args, d)
    dec = solve_weights(d, p.branching)
    if args.format == "json":
        doc = dec.to_json(d)
        doc["branching"] = list(p.branching)
        _emit(doc, out)
    else:
        if dec.coverable:
            out.write(f"coverable with branching {len(p.branching)}\n")
            for q in d.states:
                out.write(f"  w({q}) = {dec.certificate.state_weight[q]}\n")
        else:
            out.write(f"not coverable with branching {len(p.branching)}: {dec.reason}\n")
            for q, w in dec.obstruction:
                out.write(f"  {q} -> {w}\n")
    return 0 if dec.coverable else 1


def cmd_cover_check(args, out) -> int:
    d = _load_machine(args.transducer)
    _deterministic(d)
    p = _problem(args, d)
    try:
        w = WeightDistribution.from_json(_certificate_doc(args.cert))
        bad = validate_weights(d, p.branching, w)
    except ValueError as exc:
        raise UsageError(f"{args.cert}: {exc}") from None
    if args.format == "json":
        _emit({"valid": not bad, "violations": [v.to_json() for v in bad]}, out)
    else:
        out.write("valid weight distribution\n" if not bad else "invalid weight distribution\n")
        for v in bad:
            out.write(f"  {v}\n")
    return 0 if not bad else 1


def cmd_cover_tree(args, out) -> int:
    d = _load_machine(args.transducer)
    _deterministic(d)
    p = _problem(args, d)
    if args.cert:
        try:
            w = WeightDistribution.from_json(_certificate_doc(args.cert))
            bad = validate_weights(d, p.branching, w)
        except ValueError as exc:
            raise UsageError(f"{args.cert}: {exc}") from None
        if bad:
            out.write(f"invalid weight distribution: {bad[0]}\n")
            return 1
    else:
        dec = solve_weights(d, p.branching)
        if not dec.coverable:
            out.write(f"not coverable with branching {len(p.branching)}: {dec.reason}\n")
            return 1
        w = dec.certificate
    fill = _fill(args, d)
    g = build_cover_generator(d, p.branching, w)
    t = materialize_prefix(g, args.depth, fill, p.root)
    missing = check_coverage(t, d)
    if args.format == "dot":
        for line in prefix_to_dot(t):
            out.write(line + "\n")
    elif args.format == "json":
        _emit({"generator": g.to_json(), "depth": args.depth,
               "coverage": {"ok": not missing, "missing": [_word(x) for x in missing]}}, out)
    else:
        _write_tree(t, out)
        out.write("coverage ok\n" if not missing else f"missing {len(missing)} words\n")
    return 0 if not missing else 1


def _fill(args, d):
    fill = args.fill if args.fill is not None else d.alphabet[0]
    if fill not in d.alphabet:
        raise UsageError(f"--fill {fill!r} is not in the alphabet")
    return fill


def _write_tree(t, out):
    for path in sorted(t.labels, key=lambda x: (len(x), x)):
        s = t.states[path]
        tag = " (free)" if s == FREE else (" (sink)" if s.core == am.SINK else "")
        name = ".".join(path) if path else "root"
        out.write(f"{'  ' * len(path)}{name}: {t.labels[path]}{tag}\n")


# -- buchi -------------------------------------------------------------------

def _buchi_setup(args):
    d = _load_machine(args.transducer)
    _deterministic(d)
    b = _load_spec(args.spec)
    p = _problem(args, d, b)
    return d, b, p


def cmd_buchi_solve(args, out) -> int:
    d, b, p = _buchi_setup(args)
    if not args.skip_precheck:
        nb = am.product_nonblocking_check(d, b, p)
        if not nb.ok:
            msg = (f"the Buchi spec cannot follow the transducer: word {_word(nb.word)} "
                   f"(state {nb.state}, direction {nb.direction}) is rejected for every input")
            if args.format == "json":
                _emit({"status": "INCOMPATIBLE", "detail": msg}, out)
            else:
                out.write(msg + "\n")
            return 1
    if args.weight_cap is not None and args.weight_cap < 1:
        raise UsageError("--weight-cap must be positive")
    try:
        dec = solve_weight_ranking(d, b, p, args.max_memory, args.weight_cap,
                                   literal_initial=args.literal_initial)
    except OverflowError as exc:
        raise UsageError(str(exc)) from None
    doc = dec.to_json()
    rep = None
    if dec.certified:
        g = build_buchi_cover_generator(d, b, p, dec.certificate)
        rep = verify_generator(g, d, b, p, args.depth, literal_initial=args.literal_initial)
        doc["generator"] = g.to_json()
        doc["verification"] = rep.to_json()
    if args.format == "json":
        _emit(doc, out)
    else:
        if dec.certified:
            c = dec.certificate
            out.write(f"certified with memory size {len(c.memory)}\n")
            for k, v in c.state_weight.items():
                if v:
                    out.write(f"  w({'/'.join(k)}) = {v}  rank {c.d(k)}\n")
            out.write(f"verification at depth {args.depth}: "
                      f"{'ok' if rep.ok else 'FAILED'}\n")
        else:
            out.write("no certificate within bounds (exit status 1 is not a refutation: "
                      "the certificates are sufficient, not necessary)\n")
            for e in dec.stats["tried"]:
                out.write(f"  memory {e['memory']} weight<={e['maxWeight']} rank<={e['maxRank']}"
                          f" nodes {e['nodes']}{' exhaustive' if e['exhaustive'] else ''}\n")
    return 0 if dec.certified and rep.ok else 1


def cmd_buchi_verify(args, out) -> int:
    d, b, p = _buchi_setup(args)
    try:
        c = WeightRanking.from_json(_certificate_doc(args.cert))
        if args.literal_initial and not c.literal_initial:
            c = WeightRanking(c.memory, c.initial_memory, c.state_weight, c.trans_weight,
                              c.rank, True)
        bad = validate_weight_ranking(d, b, p, c)
    except ValueError as exc:
        raise UsageError(f"{args.cert}: {exc}") from None
    doc = {"valid": not bad, "violations": [v.to_json() for v in bad]}
    rep = None
    if not bad:
        g = build_buchi_cover_generator(d, b, p, c)
        rep = verify_generator(g, d, b, p, args.depth, literal_initial=c.literal_initial)
        doc["verification"] = rep.to_json()
    if args.format == "json":
        _emit(doc, out)
    else:
        if bad:
            out.write("invalid weight-ranking\n")
            for v in bad:
                out.write(f"  {v}\n")
        else:
            out.write(f"valid weight-ranking; coverage {'ok' if rep.coverage_ok else 'FAILED'}, "
                      f"acceptance {'ok' if rep.acceptance_ok else 'FAILED'}\n")
    return 0 if not bad and rep.ok else 1


def cmd_realizable(args, out) -> int:
    b = _load_spec(args.spec)
    if args.directions or args.branching is not None:
        dirs = _directions(args, b)
    else:
        dirs = tuple(b.inputs)
    root = args.root if args.root is not None else dirs[0]
    if root not in dirs:
        raise UsageError(f"root direction {root!r} is not a branching direction")
    res = solve_realizability(b, dirs, root)
    if args.format == "json":
        _emit(res.to_json(b), out)
    else:
        out.write("realizable\n" if res.realizable else "unrealizable\n")
        for s in b.states:
            out.write(f"  rank({s}) = {res.ranks[s]}\n")
    return 0 if res.realizable else 1


# -- oracle / det ------------------------------------------------------------

def cmd_oracle_acyclic(args, out) -> int:
    d = _load_machine(args.transducer)
    _deterministic(d)
    p = _problem(args, d)
    try:
        ok = oracle_coverable_acyclic(d, p.branching)
    except (CyclicTransducerError, BudgetExceeded) as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        _emit({"coverable": ok, "branching": list(p.branching)}, out)
    else:
        out.write(("coverable" if ok else "not coverable") + f" with branching {len(p.branching)}\n")
    return 0 if ok else 1


def cmd_oracle_levels(args, out) -> int:
    d = _load_machine(args.transducer)
    _deterministic(d)
    p = _problem(args, d)
    try:
        prof = level_profile(d, p.branching, args.depth)
    except BudgetExceeded as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        _emit(prof.to_json(), out)
    else:
        for e in prof.to_json()["levels"]:
            out.write(f"level {e['level']}: {e['runs']} runs, demand {e['demand']}, "
                      f"capacity {e['capacity']}\n")
        out.write("feasible\n" if prof.feasible else "infeasible\n")
    return 0 if prof.feasible else 1


def cmd_det(args, out) -> int:
    d = _load_machine(args.transducer)
    _emit(am.determinize_transducer(d).to_json(), out)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coverkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, depth=None, fmt=("json", "text")):
        sp.add_argument("--branching", type=int, metavar="N",
                        help="number of tree directions (named u0..uN-1)")
        sp.add_argument("--directions", metavar="LIST", help="comma-separated direction names")
        sp.add_argument("--root", help="direction of the root (default: the first direction)")
        sp.add_argument("--format", choices=fmt, default="json")
        if depth is not None:
            sp.add_argument("--depth", type=int, default=depth)

    cover = sub.add_parser("cover", help="simple coverability").add_subparsers(dest="action", required=True)
    sp = cover.add_parser("solve", help="least weight distribution")
    sp.add_argument("transducer")
    common(sp)
    sp.set_defaults(func=cmd_cover_solve)
    sp = cover.add_parser("check", help="validate a weight distribution")
    sp.add_argument("transducer")
    sp.add_argument("--cert", required=True)
    common(sp)
    sp.set_defaults(func=cmd_cover_check)
    sp = cover.add_parser("tree", help="witness tree from weights")
    sp.add_argument("transducer")
    sp.add_argument("--cert")
    sp.add_argument("--fill")
    common(sp, depth=4, fmt=("json", "dot", "text"))
    sp.set_defaults(func=cmd_cover_tree)

    buchi = sub.add_parser("buchi", help="coverability under a Buchi spec").add_subparsers(
        dest="action", required=True)
    sp = buchi.add_parser("solve", help="search for a weight-ranking")
    sp.add_argument("transducer")
    sp.add_argument("spec")
    sp.add_argument("--max-memory", type=int, default=1)
    sp.add_argument("--weight-cap", type=int)
    sp.add_argument("--literal-initial", action="store_true",
                    help="anchor the root class at the initial state of the Buchi spec")
    sp.add_argument("--skip-precheck", action="store_true")
    common(sp, depth=6)
    sp.set_defaults(func=cmd_buchi_solve)
    sp = buchi.add_parser("verify", help="validate a weight-ranking and its witness tree")
    sp.add_argument("transducer")
    sp.add_argument("spec")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--literal-initial", action="store_true")
    common(sp, depth=6)
    sp.set_defaults(func=cmd_buchi_verify)

    sp = sub.add_parser("realizable", help="plain realizability of a Buchi spec")
    sp.add_argument("spec")
    common(sp)
    sp.set_defaults(func=cmd_realizable)

    oracle = sub.add_parser("oracle", help="certificate-free diagnostics").add_subparsers(
        dest="action", required=True)
    sp = oracle.add_parser("acyclic", help="exact check for acyclic transducers")
    sp.add_argument("transducer")
    common(sp)
    sp.set_defaults(func=cmd_oracle_acyclic)
    sp = oracle.add_parser("levels", help="per-level node demand")
    sp.add_argument("transducer")
    common(sp, depth=3)
    sp.set_defaults(func=cmd_oracle_levels)

    sp = sub.add_parser("det", help="determinize a transducer")
    sp.add_argument("transducer")
    sp.set_defaults(func=cmd_det)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if getattr(args, "depth", 0) < 0:
        print("coverkit: error: --depth must be nonnegative", file=sys.stderr)
        return 2
    if getattr(args, "max_memory", 1) < 1:
        print("coverkit: error: --max-memory must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"coverkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
