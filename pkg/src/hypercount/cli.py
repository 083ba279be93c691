"""``hypercount`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .counting import (
    BoxSpec,
    CongruenceClass,
    count_affine,
    count_on_coordinate_subspace,
    count_projective,
    default_workers,
)
from .detlab import (
    DEFAULT_CONSTANTS,
    AuxiliaryNotFound,
    BudgetExceeded,
    PlanConstants,
    PlanError,
    covering_report,
    select_primes,
)
from .geometry import (
    DEFAULT_KMAX,
    SINGULAR,
    SMOOTH,
    Hypersurface,
    certify_smooth_over_Q,
    exponent_table,
    is_smooth_mod_p,
    theta,
    verify_witness,
)
from .poly import PolySyntaxError, read_poly_file
from .report import CATALOG, DEFAULT_B_SERIES, emit, fit_exponent, verify_entry
from .slicer import SearchExhausted, search_slicing_matrix, slice_scan

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _int_range(text: str) -> list[int]:
    """``a..b`` (inclusive) or a comma-separated list."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return _csv_ints(text)


def _load(path: str, projective: bool, n: int | None = None) -> Hypersurface:
    p = Path(path)
    if not p.exists():
        name = p.name[:-5] if p.name.endswith(".poly") else p.name
        if name in CATALOG:
            p = CATALOG[name].path()
        else:
            raise UsageError(f"no such file or catalog instance: {path}")
    try:
        poly = read_poly_file(p)
    except PolySyntaxError as e:
        raise UsageError(f"{p}: {e}")
    try:
        if projective:
            return Hypersurface.projective_from(poly, n)
        return Hypersurface.affine_from(poly, n)
    except ValueError as e:
        raise UsageError(f"{p}: {e}")


def _catalog_kind(path: str) -> bool | None:
    name = Path(path).name
    name = name[:-5] if name.endswith(".poly") else name
    entry = CATALOG.get(name)
    return entry.projective if entry else None


def _output(args, obj, plain: str) -> None:
    if args.format is None:
        text = plain + "\n"
        if args.output:
            Path(args.output).write_text(text)
    else:
        text = emit(obj, args.format, args.output, args.deterministic)
    if not args.output:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_count(args) -> int:
    projective = args.projective if (args.projective or args.affine) else bool(_catalog_kind(args.file))
    H = _load(args.file, projective, args.n)
    box = BoxSpec(args.B)
    width = 2 * args.B + 1
    if width ** max(H.n - 1, 1) > args.budget:
        raise BudgetExceeded(f"{width}^{H.n - 1} fibres exceed the budget {args.budget}")
    if args.subspace is not None:
        if not projective:
            raise UsageError("--subspace needs --projective")
        rep = count_on_coordinate_subspace(H, args.subspace, box, workers=args.workers)
    elif projective:
        if args.mod is not None:
            raise UsageError("--mod applies to affine counts")
        rep = count_projective(H, box, mode=args.mode, workers=args.workers, cap=args.cap)
    else:
        cls = None
        if args.mod is not None:
            residue = args.residue if args.residue is not None else [0] * H.n
            if len(residue) != H.n:
                raise UsageError(f"--residue needs {H.n} entries")
            cls = CongruenceClass(args.mod, tuple(z % args.mod for z in residue))
        rep = count_affine(H, box, cls, mode=args.mode, workers=args.workers, cap=args.cap)
    status = EXIT_OK
    if args.oracle_check:
        if args.subspace is not None:
            check = count_projective(H, box, mode="oracle", cap=None)
            expected = sum(1 for pt in check.points if all(pt[i] == 0 for i in args.subspace))
        elif projective:
            expected = count_projective(H, box, mode="oracle").count
        else:
            expected = count_affine(H, box, cls, mode="oracle").count
        if expected != rep.count:
            sys.stderr.write(f"oracle mismatch: {rep.count} != {expected}\n")
            status = EXIT_FAIL
    _output(args, rep, str(rep.count))
    return status


def cmd_smooth(args) -> int:
    projective = _catalog_kind(args.file)
    H = _load(args.file, projective if projective is not None else not args.affine, args.n)
    primes = [p for p in args.primes if p >= 2]
    if not primes:
        raise UsageError("empty prime range")
    from sympy import isprime

    primes = [p for p in primes if isprime(p)]
    v = certify_smooth_over_Q(H.closure(), primes, args.kmax)
    if v.status == SMOOTH:
        plain = f"smooth (certifying prime {v.certifying_prime})"
    else:
        plain = f"{v.status} after primes {primes[0]}..{primes[-1]}"
        for p in primes:
            w = is_smooth_mod_p(H.closure(), p, args.kmax)
            if w.status == SINGULAR and w.witness is not None and verify_witness(H, w):
                plain += f"; singular mod {p} at {w.witness} over F_{p}^{w.field_degree}"
                break
    _output(args, v, plain)
    return EXIT_OK if v.status == SMOOTH else EXIT_FAIL


def cmd_theta(args) -> int:
    if args.d < 6:
        raise UsageError("theta needs d >= 6")
    t = theta(args.d)
    plain = str(t) if t.is_Rational else f"{t} = {float(t):.15g}"
    payload = {"kind": "theta", "d": args.d, "exact": str(t), "value": float(t)}
    _output(args, payload, plain)
    return EXIT_OK


def cmd_bounds(args) -> int:
    try:
        table = exponent_table(args.n, args.d)
    except ValueError as e:
        raise UsageError(str(e))
    plain = "\n".join(f"{k}: {v}" for k, v in table.as_dict().items())
    _output(args, table, plain)
    return EXIT_OK


def cmd_slice(args) -> int:
    brange = args.range
    if args.search_matrix:
        X = _load(args.file, True, args.n)
        try:
            A, scan = search_slicing_matrix(X, args.entry_bound, brange, args.budget)
        except SearchExhausted as e:
            sys.stderr.write(f"{e}\n")
            return EXIT_FAIL
        plain = f"A = {[list(r) for r in A.entries]}\nbad = {scan.bad}"
        payload = {"kind": "slicing-matrix", "A": [list(r) for r in A.entries], **scan.as_dict()}
        _output(args, payload, plain)
        return EXIT_OK
    Y = _load(args.file, False, args.n)
    var = args.var if args.var is not None else Y.n
    scan = slice_scan(Y, var, brange)
    plain = f"bad = {scan.bad} (proven {scan.proven_bad}, unresolved {scan.unresolved})"
    _output(args, scan, plain)
    return EXIT_OK


def cmd_aux(args) -> int:
    Y = _load(args.file, False, args.n)
    constants = DEFAULT_CONSTANTS
    if args.constants:
        vals = [float(x) for x in args.constants.split(",")]
        if len(vals) != 4:
            raise UsageError("--constants needs C2,C3,C4,C5")
        constants = PlanConstants(*vals)
    try:
        plan = select_primes(Y, args.B, args.r, args.eps, constants)
    except PlanError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_FAIL
    try:
        rep = covering_report(Y, args.B, plan, args.Dmax, workers=args.workers)
    except AuxiliaryNotFound as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_FAIL
    plain = (f"plan r={plan.r} p={list(plan.primes)} m={plan.modulus} K={plan.K:.4f}\n"
             f"classes {len(rep.certificates)} non-empty of {rep.total_classes}; "
             f"points {rep.points_covered}/{rep.points_total}; degrees {rep.degree_histogram()}; "
             f"target {rep.target_degree:.4f}")
    _output(args, rep, plain)
    ok = rep.all_verified and rep.points_covered == rep.points_total
    return EXIT_OK if ok else EXIT_FAIL


def cmd_fit(args) -> int:
    projective = args.projective or (not args.affine and bool(_catalog_kind(args.file)))
    H = _load(args.file, projective, args.n)
    pairs = []
    for B in args.B_list:
        if args.subspace is not None:
            rep = count_on_coordinate_subspace(H, args.subspace, BoxSpec(B), workers=args.workers)
        elif projective:
            rep = count_projective(H, BoxSpec(B), workers=args.workers)
        else:
            rep = count_affine(H, BoxSpec(B), workers=args.workers)
        pairs.append((B, rep.count))
    table = exponent_table(H.n, H.degree) if args.compare else None
    try:
        fit = fit_exponent(pairs, table, affine=not projective)
    except ValueError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_FAIL
    lines = [f"{b} {n}" for b, n in pairs] + [f"slope {fit.slope:.6f}"]
    lines += [c["verdict"] + f" (margin {c['margin']:+.4f})" for c in fit.comparisons]
    _output(args, fit, "\n".join(lines))
    return EXIT_OK


def cmd_demo(args) -> int:
    if args.list:
        for e in CATALOG.values():
            space = "P" if e.projective else "A"
            print(f"{e.name:24s} {space}^{e.n}  {e.provenance}")
        return EXIT_OK
    if args.verify:
        status = EXIT_OK
        for e in CATALOG.values():
            for check, ok, detail in verify_entry(e):
                print(f"{'PASS' if ok else 'FAIL'} {e.name}: {check} - {detail}")
                if not ok:
                    status = EXIT_FAIL
        return status
    if args.run:
        if args.run not in CATALOG:
            raise UsageError(f"unknown instance {args.run}")
        e = CATALOG[args.run]
        H = e.load()
        print(H)
        v = certify_smooth_over_Q(H.closure())
        print(f"closure: {v.status} (prime {v.certifying_prime})")
        if e.plane is not None:
            for B in DEFAULT_B_SERIES[:2]:
                print(f"plane points B={B}: {count_on_coordinate_subspace(H, e.plane, B).count}")
        elif H.n <= 4:
            B = 3 if H.n >= 4 else 10
            rep = count_projective(H, B) if e.projective else count_affine(H, B)
            print(f"N(B={B}) = {rep.count}")
        return EXIT_OK
    raise UsageError("demo needs --list, --verify or --run NAME")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _emit_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["json", "csv", "text"], default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--deterministic", action="store_true",
                   help="omit timings, worker counts and shard layout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypercount", description="Integral points on hypersurfaces")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count points of bounded height")
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--affine", action="store_true")
    kind.add_argument("--projective", action="store_true")
    p.add_argument("-f", "--file", required=True)
    p.add_argument("-n", type=int, default=None, help="ambient dimension (default from the variables)")
    p.add_argument("-B", type=int, required=True)
    p.add_argument("--mod", type=int, default=None)
    p.add_argument("--residue", type=_csv_ints, default=None)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--mode", choices=["solve-var", "scan", "oracle"], default="solve-var")
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--subspace", type=_csv_ints, default=None, help="coordinates set to zero")
    p.add_argument("--cap", type=int, default=0, help="points to include in the report")
    p.add_argument("--budget", type=int, default=10 ** 9, help="maximum number of fibres")
    _emit_opts(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("smooth", help="certify smoothness by reduction mod p")
    p.add_argument("-f", "--file", required=True)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--affine", action="store_true", help="treat the file as affine (closure is tested)")
    p.add_argument("--primes", type=_int_range, default=list(range(2, 51)))
    p.add_argument("--kmax", type=int, default=DEFAULT_KMAX)
    _emit_opts(p)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("theta", help="exponent penalty theta(d)")
    p.add_argument("-d", type=int, required=True)
    _emit_opts(p)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("bounds", help="growth exponents for (n, d)")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-d", type=int, required=True)
    _emit_opts(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("slice", help="bad-slice scan and slicing-matrix search")
    p.add_argument("-f", "--file", required=True)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--var", type=int, default=None)
    p.add_argument("--range", type=_int_range, default=list(range(-10, 11)))
    p.add_argument("--search-matrix", action="store_true")
    p.add_argument("--entry-bound", type=int, default=1)
    p.add_argument("--budget", type=int, default=0, help="allowed number of bad slices")
    _emit_opts(p)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("aux", help="prime plan and auxiliary-polynomial covering")
    p.add_argument("-f", "--file", required=True)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("-B", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--Dmax", type=int, default=6)
    p.add_argument("--constants", default=None, help="C2,C3,C4,C5")
    p.add_argument("--workers", type=int, default=default_workers())
    _emit_opts(p)
    p.set_defaults(func=cmd_aux)

    p = sub.add_parser("fit", help="fit the growth exponent of N(B)")
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--affine", action="store_true")
    kind.add_argument("--projective", action="store_true")
    p.add_argument("-f", "--file", required=True)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--B-list", dest="B_list", type=_csv_ints, default=list(DEFAULT_B_SERIES))
    p.add_argument("--subspace", type=_csv_ints, default=None)
    p.add_argument("--compare", action="store_true")
    p.add_argument("--workers", type=int, default=default_workers())
    _emit_opts(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("demo", help="bundled instances")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--list", action="store_true")
    g.add_argument("--verify", action="store_true")
    g.add_argument("--run", default=None, metavar="NAME")
    p.set_defaults(func=cmd_demo)
    return ap


def run_subcommand(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except BudgetExceeded as e:
        sys.stderr.write(f"budget exceeded: {e}\n")
        return EXIT_BUDGET
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_subcommand())


if __name__ == "__main__":
    main()
