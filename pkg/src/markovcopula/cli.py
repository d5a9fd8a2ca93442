"""Command-line front end.

Exit codes: 0 success, 1 usage/validation error, 2 a verified property
exceeded its tolerance.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import analysis, copulas, families, grid, simulate

EXIT_OK, EXIT_USAGE, EXIT_DEFECT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument helpers


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text} is not a 64-bit unsigned integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


_NAMED = {
    "pi": lambda: copulas.PI,
    "m": lambda: copulas.M,
    "w": lambda: copulas.W,
    "binaryscaling": copulas.BinaryScaling,
    "frechet": lambda a, b: copulas.Frechet(a, b),
    "ltheta": lambda th: copulas.LTheta(th),
    "rtheta": lambda th: copulas.RTheta(th),
}


def parse_copula(spec: str) -> copulas.ClosedCopula:
    """``Pi``, ``M``, ``W``, ``BinaryScaling``, ``Frechet:a,b``, ``LTheta:t``,
    ``RTheta:t``, a JSON object, or a path to a JSON file."""
    s = spec.strip()
    if s.startswith("{"):
        return copulas.copula_from_json(s)
    if s.endswith(".json") and os.path.exists(s):
        with open(s) as fh:
            return copulas.copula_from_dict(json.load(fh))
    name, _, args = s.partition(":")
    try:
        make = _NAMED[name.lower()]
    except KeyError:
        raise ValueError(f"unknown copula {spec!r}") from None
    return make(*_floats(args)) if args else make()


def _operand(spec: str, n: int | None) -> grid.GridCopula:
    if os.path.exists(spec) and not spec.endswith(".json"):
        g = grid.read_grid(spec)
        if n is not None and g.n != n:
            raise grid.GridError(f"{spec}: grid has n={g.n}, --grid asks for {n}")
        return g
    if n is None:
        raise ValueError(f"--grid is required to discretise {spec!r}")
    return grid.discretize(parse_copula(spec), n)


def _emit(text: str, out: str | None):
    if out:
        grid.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _family_from_args(args):
    if args.spec:
        return families.load_family(args.spec)
    if args.family == "hom-frechet":
        return families.HomFrechetFamily(
            args.lam, args.mu, getattr(args, "instant_restart", False), getattr(args, "instant_switch", False)
        )
    raise ValueError(f"--family {args.family} needs a JSON --spec file")


def _add_family_opts(p):
    p.add_argument("--family", choices=["hom-frechet", "inhom-frechet", "poisson-jump"], default="hom-frechet")
    p.add_argument("--spec", help="family JSON file")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--instant-restart", action="store_true")
    p.add_argument("--instant-switch", action="store_true")


def halton(k: int, base: int) -> float:
    f, r = 1.0, 0.0
    while k:
        f /= base
        r += f * (k % base)
        k //= base
    return r


# ---------------------------------------------------------------------------
# subcommands


def cmd_discretize(args):
    _emit(grid.format_grid(grid.discretize(parse_copula(args.copula), args.grid)), args.out)
    return EXIT_OK


def cmd_product(args):
    a = _operand(args.left, args.grid)
    b = _operand(args.right, args.grid)
    _emit(grid.format_grid(grid.markov_product(a, b, args.workers)), args.out)
    return EXIT_OK


def cmd_power(args):
    a = _operand(args.copula, args.grid)
    _emit(grid.format_grid(grid.power(a, args.k, args.workers)), args.out)
    return EXIT_OK


def cmd_family(args):
    fam = _family_from_args(args)
    if isinstance(fam, families.PoissonJumpFamily):
        g = families.poisson_jump_copula(fam, args.t, args.tail_tol, args.workers)
        _emit(grid.format_grid(g), args.out)
        return EXIT_OK
    if isinstance(fam, families.HomFrechetFamily):
        c = families.hom_coeffs(fam, args.t - args.s)
    else:
        c = families.inhom_coeffs(fam, args.s, args.t)
    if args.grid:
        _emit(grid.format_grid(grid.discretize(c.copula(), args.grid)), args.out)
    else:
        _emit(json.dumps({"s": args.s, "t": args.t, "alpha": c.alpha, "beta": c.beta}) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args):
    cfg = simulate.SimConfig(args.seed, args.paths, "uniform" if args.x0 is None else args.x0)
    if args.process == "chain":
        if not args.copula:
            raise UsageError("simulate chain needs --copula")
        paths = simulate.simulate_chain(parse_copula(args.copula), args.steps, cfg, args.workers)
    elif args.process == "frechet":
        if not args.times:
            raise UsageError("simulate frechet needs --times")
        fam = _family_from_args(args)
        if isinstance(fam, families.PoissonJumpFamily):
            raise UsageError("poisson-jump families have no path simulator")
        paths = simulate.simulate_frechet_process(fam, args.times, cfg, args.workers)
    else:
        if not args.times:
            raise UsageError("simulate reflected-bm needs --times")
        paths = simulate.simulate_reflected_bm(args.times, cfg, args.workers)
    _emit(simulate.format_paths(paths), args.out)
    return EXIT_OK


def _verify_semigroup(args):
    fam = _family_from_args(args)
    if not isinstance(fam, families.HomFrechetFamily):
        raise UsageError("verify semigroup needs a hom-frechet family")
    worst, where = 0.0, None
    for k in range(1, args.pairs + 1):
        s, t = 2.0 * halton(k, 2), 2.0 * halton(k, 3)
        d = families.semigroup_check(fam, s, t)
        if d > worst or where is None:
            worst, where = max(d, worst), (s, t)
    return worst, {"pairs": args.pairs, "worst_at": where}


def _verify_two_time(args):
    fam = _family_from_args(args)
    if not isinstance(fam, families.InhomFrechetFamily):
        fam = families.InhomFrechetFamily.homogeneous(fam.lam, fam.mu)
    worst, where = 0.0, None
    for k in range(1, args.pairs + 1):
        r, s, t = sorted(args.horizon * halton(k, b) for b in (2, 3, 5))
        d = families.two_time_consistency(fam, r, s, t)
        if where is None or d > worst:
            worst, where = max(d, worst), (r, s, t)
    return worst, {"triples": args.pairs, "worst_at": where}


def _verify_identities(args):
    n = args.grid
    Wg, Mg, Pg = (grid.discretize(c, n) for c in (copulas.W, copulas.M, copulas.PI))
    A = grid.discretize(copulas.Frechet(0.2, 0.3), n)
    checks = {
        "W*W=M": grid.sup_distance(grid.markov_product(Wg, Wg), Mg),
        "M*A=A": grid.sup_distance(grid.markov_product(Mg, A), A),
        "A*M=A": grid.sup_distance(grid.markov_product(A, Mg), A),
        "Pi*A=Pi": grid.sup_distance(grid.markov_product(Pg, A), Pg),
        "A*Pi=Pi": grid.sup_distance(grid.markov_product(A, Pg), Pg),
    }
    return max(checks.values()), {"checks": checks, "n": n}


def _verify_idempotent(args):
    g = _operand(args.copula, args.grid)
    return grid.idempotency_defect(g), {"n": g.n}


def _verify_inverse(args):
    g = _operand(args.copula, args.grid)
    left, right = grid.inverse_defect(g)
    return right, {"left": left, "right": right, "n": g.n}


def _verify_bm_ck(args):
    p1 = simulate.ReflectedBMParams(args.t)
    p2 = simulate.ReflectedBMParams(2 * args.t)
    g1 = simulate.reflected_bm_grid(p1, args.grid)
    d = grid.sup_distance(grid.markov_product(g1, g1, args.workers), simulate.reflected_bm_grid(p2, args.grid))
    return d, {"t": args.t, "n": args.grid}


_VERIFIERS = {
    "semigroup": _verify_semigroup,
    "two-time": _verify_two_time,
    "identities": _verify_identities,
    "idempotent": _verify_idempotent,
    "inverse": _verify_inverse,
    "bm-chapman-kolmogorov": _verify_bm_ck,
}


def cmd_verify(args):
    if args.check in ("idempotent", "inverse") and not args.copula:
        raise UsageError(f"verify {args.check} needs --copula")
    if args.check in ("identities", "bm-chapman-kolmogorov") and not args.grid:
        raise UsageError(f"verify {args.check} needs --grid")
    defect, info = _VERIFIERS[args.check](args)
    ok = defect <= args.tol
    report = {"check": args.check, "defect": defect, "tol": args.tol, "passed": ok, **info}
    _emit(json.dumps(report) + "\n", args.out)
    return EXIT_OK if ok else EXIT_DEFECT


_GENERATORS = {
    "clayton": lambda a: copulas.clayton_generator(a.theta),
    "gumbel": lambda a: copulas.gumbel_generator(a.theta),
    "exponential": lambda a: copulas.exponential_generator(a.c),
}


def cmd_gap(args):
    g = _GENERATORS[args.generator](args)
    report = analysis.archimedean_gap(g, args.lattice)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--workers", type=_positive_int, default=1)

    p = _Parser(prog="markovcopula", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("discretize", parents=[common], help="grid a closed-form copula")
    d.add_argument("--copula", required=True)
    d.add_argument("--grid", type=_positive_int, required=True)
    d.set_defaults(func=cmd_discretize)

    pr = sub.add_parser("product", parents=[common], help="grid Markov product")
    pr.add_argument("--left", required=True)
    pr.add_argument("--right", required=True)
    pr.add_argument("--grid", type=_positive_int)
    pr.set_defaults(func=cmd_product)

    pw = sub.add_parser("power", parents=[common], help="k-fold grid Markov product")
    pw.add_argument("--copula", required=True)
    pw.add_argument("--k", type=int, required=True)
    pw.add_argument("--grid", type=_positive_int)
    pw.set_defaults(func=cmd_power)

    f = sub.add_parser("family", parents=[common], help="evaluate a copula family at (s, t)")
    _add_family_opts(f)
    f.add_argument("--s", type=float, default=0.0)
    f.add_argument("--t", type=float, required=True)
    f.add_argument("--grid", type=_positive_int, help="emit a grid file instead of coefficients")
    f.add_argument("--tail-tol", type=float, default=1e-10)
    f.set_defaults(func=cmd_family)

    s = sub.add_parser("simulate", parents=[common], help="simulate paths to CSV")
    s.add_argument("process", choices=["chain", "frechet", "reflected-bm"])
    s.add_argument("--seed", type=_u64, required=True)
    s.add_argument("--paths", type=_positive_int, default=1000)
    s.add_argument("--x0", type=float)
    s.add_argument("--copula")
    s.add_argument("--steps", type=_positive_int, default=10)
    s.add_argument("--times", type=_floats)
    _add_family_opts(s)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="run a verification; exit 2 on defect")
    v.add_argument("check", choices=sorted(_VERIFIERS))
    v.add_argument("--tol", type=float, required=True)
    v.add_argument("--pairs", type=_positive_int, default=100)
    v.add_argument("--horizon", type=float, default=2.0)
    v.add_argument("--copula")
    v.add_argument("--grid", type=_positive_int)
    v.add_argument("--t", type=float, default=0.1)
    _add_family_opts(v)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gap", parents=[common], help="Archimedean Markov-violation gap")
    g.add_argument("--generator", choices=sorted(_GENERATORS), required=True)
    g.add_argument("--theta", type=float, default=1.0)
    g.add_argument("--c", type=float, default=1.0)
    g.add_argument("--lattice", type=_floats, default=list(analysis.DEFAULT_LATTICE))
    g.set_defaults(func=cmd_gap)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"markovcopula: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ZeroDivisionError, OverflowError, OSError, KeyError, TypeError) as e:
        print(f"markovcopula: error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
