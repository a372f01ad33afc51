"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 probabilistic
failure reported by a solver.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

import numpy as np

from .graph import format_graph, load_graph
from .semiring import (BoundViolation, InvalidArgument, NegativeCycle, NoPath, ParseError,
                       PreconditionViolation, ProbabilisticFailure, SamplingFailure, ValidationError,
                       format_matrix, parse_matrix)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_PROBABILISTIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ------------------------------------------------------------ file formats

def parse_matrices(text: str) -> list:
    """One or more matrix blocks, each starting with a 'matrix r c' header."""
    blocks, cur = [], []
    for line in text.splitlines():
        if line.strip().startswith("matrix") and cur:
            blocks.append("\n".join(cur))
            cur = []
        cur.append(line)
    if any(ln.strip() and not ln.strip().startswith("#") for ln in cur):
        blocks.append("\n".join(cur))
    if not blocks:
        raise ParseError("no matrix found")
    return [parse_matrix(b) for b in blocks]


def format_instance(a, b, M: int) -> str:
    return f"minplus M {M}\n" + format_matrix(a) + format_matrix(b)


def parse_instance(text: str):
    """A 'minplus M <bound>' line followed by matrices A and B."""
    lines = text.splitlines()
    M = None
    body = []
    for ln in lines:
        s = ln.strip()
        if s.startswith("minplus"):
            parts = s.split()
            if len(parts) != 3 or parts[1] != "M":
                raise ParseError("expected 'minplus M <bound>'")
            try:
                M = int(parts[2])
            except ValueError:
                raise ParseError("bad entry bound") from None
        else:
            body.append(ln)
    mats = parse_matrices("\n".join(body))
    if len(mats) != 2:
        raise ParseError(f"expected two matrices, found {len(mats)}")
    return mats[0], mats[1], M


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _format_counts(c, dist) -> str:
    out = [f"matrix {c.shape[0]} {c.shape[1]}"]
    for row in c:
        out.append(" ".join(repr(float(x)) if isinstance(x, float | np.floating) else str(int(x))
                            for x in row.tolist()))
    return "\n".join(out) + "\n"


def _emit(args, text: str, algo: str, extra: dict | None = None, t0: float = 0.0) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if args.json:
        doc = {"command": args.command, "algo": algo, "seed": getattr(args, "seed", None),
               "wall_time": round(time.perf_counter() - t0, 6),
               "checksum": hashlib.sha256(text.encode()).hexdigest(),
               "output": args.out}
        if extra:
            doc.update(extra)
        if not args.out:
            doc["result"] = text
        print(json.dumps(doc, sort_keys=True, default=str))
    elif not args.out:
        sys.stdout.write(text)


def _engine(args):
    return None if args.engine in (None, "auto") else args.engine


# ------------------------------------------------------------ subcommands

def cmd_apsp(args):
    from . import exact, oracles
    g = load_graph(args.graph)
    algo = args.algo
    if algo == "auto":
        if not g.directed and g.is_unweighted():
            algo = "seidel"
        elif not g.directed and (g.m == 0 or g.w.min() >= 0):
            algo = "small-weight"
        else:
            algo = "zwick"
    t0 = time.perf_counter()
    eng = _engine(args)
    if algo == "seidel":
        d = exact.seidel_apsp(g)
    elif algo == "zwick":
        d = exact.zwick_apsp(g, engine=eng, seed=args.seed)
    elif algo == "small-weight":
        d = exact.undirected_small_weight_apsp(g, seed=args.seed, engine=eng)
    elif algo == "floyd":
        d = oracles.floyd_warshall(g)
    elif algo == "dijkstra":
        d = oracles.oracle_apsp(g)
    elif algo == "bellman-ford":
        d = oracles.bellman_ford_apsp(g)
    elif algo == "johnson":
        d = oracles.johnson_apsp(g)
    else:
        raise UsageError(f"unknown apsp algorithm {algo!r}")
    _emit(args, format_matrix(d), algo, t0=t0)


def cmd_approx(args):
    from .approx import K_CONSTANT, ErrorProfile, approx_apsp
    g = load_graph(args.graph)
    t0 = time.perf_counter()
    est, cert = approx_apsp(g, ErrorProfile.power(args.p), seed=args.seed, engine=_engine(args),
                            granularity_scale=args.granularity_scale)
    _emit(args, format_matrix(est), "approx", {"p": args.p, "K": K_CONSTANT}, t0)


def cmd_lex2(args):
    from . import lex2
    g = load_graph(args.graph)
    t0 = time.perf_counter()
    fn = {"auto": lex2._dispatch, "directed": lex2.lex2_directed, "undirected": lex2.lex2_undirected_positive,
          "gamma": lex2.lex2_gamma, "aplsp": lex2.aplsp, "apslp": lex2.apslp}[args.algo]
    kw = {"engine": _engine(args)}
    if args.algo in ("auto", "directed", "aplsp", "apslp"):
        if args.algo == "directed" or (args.algo != "auto" and g.directed):
            kw["seed"] = args.seed
    r = fn(g, **kw)
    _emit(args, format_matrix(r.d1) + format_matrix(r.d2), args.algo, t0=t0)


def cmd_count(args):
    from . import counting
    g = load_graph(args.graph)
    mode = args.mode
    if mode is None:
        mode = "mod" if args.mod else ("capped" if args.cap else "exact")
    U = args.mod if mode == "mod" else (args.cap if mode == "capped" else args.U)
    if mode in ("mod", "capped", "approx") and not U:
        raise UsageError(f"mode {mode} needs {'--mod' if mode == 'mod' else '--cap' if mode == 'capped' else '--U'}")
    t0 = time.perf_counter()
    algo = args.algo
    if mode == "exact":
        cm = counting.count_exact(g)
        algo = "exact"
    elif mode == "approx":
        cm = counting.count_approx(g, U)
        algo = "approx"
    elif algo == "seidel" or (algo == "auto" and not g.directed):
        cm = counting.count_undirected_seidel(g, mode, U)
        algo = "seidel"
    elif mode == "mod":
        cm = counting.count_mod_directed(g, U)
        algo = "gamma"
    else:
        cm = counting.count_capped_directed(g, U, seed=args.seed)
        algo = "sampled"
    _emit(args, _format_counts(cm.counts, cm.dist), algo, {"mode": mode, "U": U}, t0)


def cmd_bc(args):
    from . import counting
    g = load_graph(args.graph)
    t0 = time.perf_counter()
    U = args.U or 100
    verts = [args.vertex] if args.vertex is not None else list(range(g.n))
    if args.vertex is not None and not 0 <= args.vertex < g.n:
        raise InvalidArgument(f"vertex {args.vertex} out of range")
    cm = counting._counts_for_bc(g, args.mode, U)
    lines = []
    for v in verts:
        val = counting.betweenness(g, v, args.mode, U, counts=cm)
        if args.halve:
            val = val / 2
        lines.append(f"{v} {val}" if isinstance(val, Fraction) else f"{v} {val!r}")
    _emit(args, "\n".join(lines) + "\n", f"bc-{args.mode}", t0=t0)


def cmd_cred(args):
    from . import exact
    g = load_graph(args.graph)
    t0 = time.perf_counter()
    if args.algo == "one-red":
        if args.budget != 1:
            raise UsageError("the one-red algorithm needs --budget 1")
        d = exact.one_red_apsp(g)
    else:
        d = exact.cred_apsp(g, args.budget)
    _emit(args, format_matrix(d), args.algo, {"budget": args.budget}, t0)


def cmd_reduce(args):
    from . import reductions as R
    from .approx import ErrorProfile
    a, b, M = parse_instance(_read(args.instance))
    inst = R.MinPlusInstance(a, b, M)
    t0 = time.perf_counter()
    if args.gadget == "2red":
        gg = R.encode_minplus_as_2red(inst, args.budget if args.budget is not None else 2)
    elif args.gadget == "additive_lb":
        if args.ell is None:
            raise UsageError("additive_lb needs --ell")
        gg = R.encode_minplus_additive_lb(inst, ErrorProfile.power(args.p), args.ell)
    elif args.gadget in R.ENCODERS:
        gg = R.ENCODERS[args.gadget](inst)
    else:
        raise UsageError(f"unknown gadget {args.gadget!r}")
    if not args.out:
        raise UsageError("reduce needs --out for the graph file")
    map_path = args.map or args.out + ".decode"
    with open(map_path, "w") as fh:
        fh.write(gg.decode_map.to_text())
    _emit(args, format_graph(gg.graph), args.gadget, {"decode_map": map_path}, t0)


def cmd_decode(args):
    from .reductions import DecodeMap
    mats = parse_matrices(_read(args.distances))
    map_path = args.map or (args.graph + ".decode" if args.graph else None)
    if map_path is None:
        raise UsageError("decode needs --map (or --graph)")
    dm = DecodeMap.from_text(_read(map_path))
    t0 = time.perf_counter()
    if dm.component in ("d1", "d2"):
        if len(mats) < 2:
            raise ValidationError("this gadget decodes the second matrix of a lex2 result")
        dist = (mats[0], mats[1])
    else:
        dist = mats[0]
    _emit(args, format_matrix(dm.decode(dist)), "decode", t0=t0)


def cmd_gen(args):
    from . import generators
    if args.kind not in generators.KINDS:
        raise UsageError(f"unknown kind {args.kind!r}; choose from {', '.join(generators.KINDS)}")
    t0 = time.perf_counter()
    obj = generators.generate(args.kind, args.size, args.seed)
    if args.kind == "minplus":
        a, b = obj
        text = format_instance(a, b, 6)
    else:
        text = format_graph(obj)
    _emit(args, text, args.kind, t0=t0)


def cmd_bench(args):
    from .bench import bench
    try:
        sizes = [int(x) for x in args.sizes.split(",") if x.strip()]
    except ValueError:
        raise UsageError("--sizes must be a comma-separated list of integers") from None
    if len(sizes) < 3:
        raise UsageError("a slope fit needs at least three sizes")
    t0 = time.perf_counter()
    rep = bench(args.suite, sizes, args.reps, args.seed)
    text = json.dumps(rep, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.json and args.out:
        print(json.dumps({"command": "bench", "algo": args.suite, "seed": args.seed, "output": args.out,
                          "wall_time": round(time.perf_counter() - t0, 6),
                          "checksum": hashlib.sha256(text.encode()).hexdigest()}, sort_keys=True))


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--algo", default="auto")
    common.add_argument("--engine", choices=["brute", "blocked", "scaled", "auto"], default="auto")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out")
    common.add_argument("--json", action="store_true")
    common.add_argument("--workers", type=int, default=1,
                        help="accepted for interface compatibility; results do not depend on it")
    p = _Parser(prog="tropapsp", description="Shortest paths through min-plus and counting products.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("apsp", parents=[common])
    s.add_argument("graph")
    s.set_defaults(fn=cmd_apsp)

    s = sub.add_parser("approx", parents=[common])
    s.add_argument("graph")
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--granularity-scale", type=float, default=1.0)
    s.set_defaults(fn=cmd_approx)

    s = sub.add_parser("lex2", parents=[common])
    s.add_argument("graph")
    s.set_defaults(fn=cmd_lex2)

    s = sub.add_parser("count", parents=[common])
    s.add_argument("graph")
    s.add_argument("--mode", choices=["exact", "capped", "mod", "approx"])
    s.add_argument("--cap", type=int)
    s.add_argument("--mod", type=int)
    s.add_argument("--U", type=int)
    s.set_defaults(fn=cmd_count)

    s = sub.add_parser("bc", parents=[common])
    s.add_argument("graph")
    s.add_argument("--vertex", type=int)
    s.add_argument("--mode", choices=["exact", "approx"], default="exact")
    s.add_argument("--U", type=int)
    s.add_argument("--halve", action="store_true", help="report unordered pairs (undirected graphs)")
    s.set_defaults(fn=cmd_bc)

    s = sub.add_parser("cred", parents=[common])
    s.add_argument("graph")
    s.add_argument("--budget", type=int, required=True)
    s.set_defaults(fn=cmd_cred)

    s = sub.add_parser("reduce", parents=[common])
    s.add_argument("instance")
    s.add_argument("--gadget", required=True,
                   choices=["uapsp", "dag_aplp", "2red", "aplsp01", "vertex_weighted", "additive_lb"])
    s.add_argument("--budget", type=int)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--ell", type=int)
    s.add_argument("--map")
    s.set_defaults(fn=cmd_reduce)

    s = sub.add_parser("decode", parents=[common])
    s.add_argument("distances")
    s.add_argument("--map")
    s.add_argument("--graph")
    s.set_defaults(fn=cmd_decode)

    s = sub.add_parser("gen", parents=[common])
    s.add_argument("kind")
    s.add_argument("--size", type=int, required=True)
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("bench", parents=[common])
    s.add_argument("suite")
    s.add_argument("--sizes", default="64,128,256")
    s.add_argument("--reps", type=int, default=3)
    s.set_defaults(fn=cmd_bench)
    return p


_ALGOS = {
    "apsp": {"auto", "seidel", "zwick", "small-weight", "floyd", "dijkstra", "bellman-ford", "johnson"},
    "lex2": {"auto", "directed", "undirected", "gamma", "aplsp", "apslp"},
    "count": {"auto", "seidel", "directed"},
    "cred": {"auto", "layered", "one-red"},
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        allowed = _ALGOS.get(args.command)
        if allowed is not None and args.algo not in allowed:
            raise UsageError(f"unknown --algo {args.algo!r} for {args.command}; choose from {sorted(allowed)}")
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        if args.command == "cred" and args.algo == "auto":
            args.algo = "layered"
        args.fn(args)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProbabilisticFailure, SamplingFailure) as exc:
        print(f"probabilistic failure: {exc}", file=sys.stderr)
        return EXIT_PROBABILISTIC
    except (ValidationError, ParseError, InvalidArgument, BoundViolation, PreconditionViolation,
            NegativeCycle, NoPath, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
