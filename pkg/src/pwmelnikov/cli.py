"""Command-line entry point: integrals, reduce, verify, cycles.

Every command writes comma-separated tables plus ``summary.json`` into the
output directory, and exits 1 when any of its checks fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from scipy.optimize import brentq

from . import picard_fuchs as pf
from .errors import MelnikovError
from .polynomials import as_fraction
from .quadrature import (abelian_derivative, abelian_integral, fd_step, finite_difference, lower_abelian_integral,
                         melnikov_direct)
from .reduction import evaluate_representation, melnikov_representation
from .simulator import SECTION_GUARD, find_limit_cycles
from .systems import BT, LV, Perturbation, SystemId, oval_endpoints
from .zeros import bt_second_derivative, bt_second_derivative_zero, isolate_zeros, one_zero_perturbation

THREADS_ENV = "MELNIKOV_THREADS"
ARRAY_NAMES = {"a+": "a_plus", "a-": "a_minus", "b+": "b_plus", "b-": "b_minus"}
DEFAULT_SUITES = ("pf", "riccati", "reflection", "derivative", "annihilator", "bt-h0")
ALL_SUITES = DEFAULT_SUITES + ("second-order",)

THRESHOLDS = {
    "pf": 1e-6,
    "second-order": 1e-5,
    "riccati": 1e-5,
    "reflection": 1e-8,
    "derivative": 1e-6,
    "annihilator": 1e-8,
    "bt-h0": 1e-6,
}


class UsageError(Exception):
    pass


# --- configuration ------------------------------------------------------------


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def read_perturbation(path: str, degree: int | None = None) -> Perturbation:
    """CSV with header ``array,i,j,value``; array is one of a+, a-, b+, b-.

    Values may be integers, decimals or ``p/q`` fractions. The degree defaults
    to the largest i + j present (at least 1).
    """
    arrays = {name: {} for name in ARRAY_NAMES.values()}
    top = 1
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["array", "i", "j", "value"]:
            raise UsageError(f"{path}: header must be array,i,j,value")
        for row in reader:
            name = ARRAY_NAMES.get(row["array"].strip())
            if name is None:
                raise UsageError(f"{path}: unknown array {row['array']!r}")
            i, j = int(row["i"]), int(row["j"])
            arrays[name][(i, j)] = arrays[name].get((i, j), 0) + as_fraction(row["value"].strip())
            top = max(top, i + j)
    try:
        return Perturbation(degree if degree is not None else top, **arrays)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_indices(text: str) -> list[tuple[int, int]]:
    """``"0,0;1,0"`` -> [(0, 0), (1, 0)]."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise UsageError(f"index pair {chunk!r} must be i,j")
        out.append((int(parts[0]), int(parts[1])))
    if not out:
        raise UsageError("the index list is empty")
    return out


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def ordered_map(fn, items):
    """map() that may use worker threads but always returns results in input order."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def energies(system: SystemId, count: int, guard: float) -> list[float]:
    if count < 1:
        raise UsageError("the energy count must be positive")
    return [float(h) for h in system.sample_energies(count, guard)]


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_summary(out: Path, summary: dict) -> None:
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def fmt(x) -> str:
    return repr(float(x))


def perturbation_from_args(args, rng: random.Random | None = None) -> Perturbation:
    if getattr(args, "zero", False):
        return Perturbation.zero(args.degree)
    if args.perturbation:
        return read_perturbation(args.perturbation, args.degree_given)
    return Perturbation.random(args.degree, rng or random.Random(args.seed))


# --- integrals ----------------------------------------------------------------


def cmd_integrals(args) -> int:
    system = args.system
    indices = parse_indices(args.indices)
    hs = energies(system, args.grid, args.guard)
    jobs = [(i, j, h) for i, j in indices for h in hs]

    def one(job):
        i, j, h = job
        return abelian_integral(system, i, j, h, args.tol)

    values = ordered_map(one, jobs)
    rows = [[system.value, i, j, fmt(h), fmt(v), fmt((-1) ** (j + 1) * v)] for (i, j, h), v in zip(jobs, values)]
    write_csv(args.out / "integrals.csv", ["system", "i", "j", "h", "I", "J"], rows)
    write_summary(args.out, {
        "command": "integrals",
        "system": system.value,
        "indices": [list(e) for e in indices],
        "energies": len(hs),
        "rows": len(rows),
        "tol": args.tol,
        "pass": True,
    })
    return 0


# --- reduce -------------------------------------------------------------------


def cmd_reduce(args) -> int:
    system = args.system
    p = perturbation_from_args(args)
    rep = melnikov_representation(system, p)
    (args.out / "representation.json").write_text(rep.to_json() + "\n")
    hs = energies(system, args.h_count, args.guard)

    def one(h):
        return evaluate_representation(rep, h), melnikov_direct(system, p, h, 1e-12)

    pairs = ordered_map(one, hs)
    rows, worst = [], 0.0
    for h, (a, b) in zip(hs, pairs):
        rel = float(abs(a - b) / max(1.0, abs(b)))
        worst = max(worst, rel)
        rows.append([fmt(h), fmt(a), fmt(b), fmt(rel)])
    write_csv(args.out / "oracle.csv", ["h", "representation", "direct", "rel_error"], rows)
    violations = rep.degree_violations()
    oracle_ok = worst < args.tol
    summary = {
        "command": "reduce",
        "system": system.value,
        "n": p.n,
        "seed": None if (args.perturbation or args.zero) else args.seed,
        "denom_power": rep.decomposition.denom_power,
        "degrees": {f"{i},{j}": d for (i, j), d in sorted(rep.decomposition.degrees().items())},
        "degree_violations": violations,
        "degrees_within_bounds": not violations,
        "max_oracle_mismatch": worst,
        "oracle_tol": args.tol,
        "oracle_pass": oracle_ok,
        "pass": oracle_ok and not violations,
    }
    write_summary(args.out, summary)
    return 0 if summary["pass"] else 1


# --- verify -------------------------------------------------------------------


def corrupt(pf_sys: pf.PFSystem, amount: Fraction) -> pf.PFSystem:
    A = [list(r) for r in pf_sys.A]
    A[0][0] += amount
    return dataclasses.replace(pf_sys, A=tuple(map(tuple, A)))


def _suite_pf(args):
    for (system, block), table in sorted(pf.PF_SYSTEMS.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
        if args.corrupt_pf is not None:
            table = corrupt(table, args.corrupt_pf)
        for h in energies(system, args.h_count, args.guard):
            yield f"{system.value}/{block}", h, max(pf.pf_residual(table, h), pf.differentiated_pf_residual(table, h))


def _suite_second_order(args):
    for system, block in ((LV, "V2"), (BT, "V1"), (BT, "V2")):
        for h in energies(system, args.h_count, args.guard):
            yield (f"{system.value}/{block}/{args.second_order_table}", h,
                   pf.second_order_residual(system, block, h, table=args.second_order_table))


def _suite_riccati(args):
    for kind, system in (("omega_LV", LV), ("chi_BT_V2", BT), ("omega_BT_second", BT)):
        for h in energies(system, args.h_count, args.guard):
            yield kind, h, pf.riccati_residual(system, kind, h)


def _suite_reflection(args):
    for system in (LV, BT):
        for h in energies(system, args.reflection_count, args.guard):
            oval = oval_endpoints(system, h)
            for total in range(9):
                for i in range(total + 1):
                    j = total - i
                    upper = abelian_integral(system, i, j, h, 1e-12, oval)
                    lower = lower_abelian_integral(system, i, j, h, 1e-12, oval)
                    yield f"{system.value}/{i},{j}", h, abs(lower + (-1) ** j * upper) / (1.0 + abs(upper))


def _suite_derivative(args):
    cases = {LV: ((0, 1), (-1, 1), (1, 0), (0, 0), (0, 2)), BT: ((0, 0), (1, 0), (0, 1), (1, 1))}
    for system in (LV, BT):
        for h in energies(system, args.h_count, max(args.guard, 0.05)):
            step = fd_step(system, h)
            for i, j in cases[system]:
                for order in (1, 2):
                    exact = abelian_derivative(system, i, j, h, order)
                    fd = finite_difference(lambda t: abelian_integral(system, i, j, t, 1e-13), h, step, order)
                    yield f"{system.value}/{i},{j}/d{order}", h, abs(exact - fd) / (1.0 + abs(exact))


def _suite_annihilator(args):
    rng = random.Random(args.seed)
    for system in (LV, BT):
        for k in range(args.annihilator_count):
            n = 2 + k % 5
            rep = melnikov_representation(system, Perturbation.random(n, rng))
            ann = pf.construct_annihilator(system, rep)
            remainder = pf.annihilation_remainder(rep, ann)
            exact_ok = all(r.is_zero() for r in remainder) and not ann.degree_violations()
            rp = pf.residual_polynomials(rep, ann)
            for h in energies(system, 3, 0.1):
                lhs = pf.annihilator_residual(system, rep, ann, h)
                rhs = rp.evaluate(system, h)
                rel = abs(lhs - rhs) / (1.0 + pf.operator_scale(ann, rep, h))
                yield f"{system.value}/rep{k}/n{n}", h, rel if exact_ok else float("inf")


def _suite_bt_h0(args):
    root, (lo, hi) = bt_second_derivative_zero(args.zero_grid)

    def fd_second(h):
        return finite_difference(lambda t: abelian_integral(BT, 0, 0, t, 1e-13), h, fd_step(BT, h), 2)

    fd_root = brentq(fd_second, lo, hi, xtol=1e-13)
    yield "BT/h0_closed_form", root, abs(bt_second_derivative(root))
    yield "BT/h0_vs_fd_root", fd_root, abs(root - fd_root)


SUITES = {
    "pf": _suite_pf,
    "second-order": _suite_second_order,
    "riccati": _suite_riccati,
    "reflection": _suite_reflection,
    "derivative": _suite_derivative,
    "annihilator": _suite_annihilator,
    "bt-h0": _suite_bt_h0,
}


def cmd_verify(args) -> int:
    names = [s.strip() for s in args.suites.split(",") if s.strip()]
    if not names:
        raise UsageError("no suites selected")
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise UsageError(f"unknown suites {unknown}; choose from {', '.join(ALL_SUITES)}")
    rows, report = [], {}
    for name in names:
        limit = THRESHOLDS[name]
        worst, failures, count, error = 0.0, 0, 0, None
        try:
            for case, h, value in SUITES[name](args):
                ok = bool(value < limit)
                worst = max(worst, float(value))
                failures += not ok
                count += 1
                rows.append([name, case, fmt(h), fmt(value), fmt(limit), "PASS" if ok else "FAIL"])
        except MelnikovError as exc:
            error = f"{type(exc).__name__}: {exc}"
            failures += 1
        entry = {"cases": count, "failures": failures, "worst": worst, "threshold": limit, "pass": failures == 0}
        if error:
            entry["error"] = error
        if name == "bt-h0" and error is None:
            entry["h0"] = float(next(r for r in rows if r[1] == "BT/h0_closed_form")[2])
        report[name] = entry
    write_csv(args.out / "verify.csv", ["suite", "case", "h", "value", "threshold", "status"], rows)
    passed = all(e["pass"] for e in report.values())
    write_summary(args.out, {
        "command": "verify",
        "suites": report,
        "second_order_table": args.second_order_table,
        "corrupt_pf": None if args.corrupt_pf is None else str(args.corrupt_pf),
        "pass": passed,
    })
    return 0 if passed else 1


# --- cycles -------------------------------------------------------------------


def cmd_cycles(args) -> int:
    system = args.system
    if args.eps == 0:
        raise UsageError("eps must be nonzero for the limit-cycle search")
    if abs(args.eps) > 0.1:
        raise UsageError("|eps| must not exceed 0.1")
    if args.suite:
        return _cycles_suite(args)
    if args.constructed is not None:
        lo, hi = (float(v) for v in system.energy_interval)
        if not lo < args.constructed < hi:
            raise UsageError(f"constructed zero {args.constructed} is outside ({lo}, {hi})")
        p = one_zero_perturbation(system, args.constructed)
    else:
        p = perturbation_from_args(args)
    rep = melnikov_representation(system, p)
    report = isolate_zeros(rep, grid=args.grid, tol=args.tol)
    (args.out / "zeros.json").write_text(report.to_json() + "\n")
    (args.out / "zeros.csv").write_text(report.to_csv())
    findings = find_limit_cycles(system, p, args.eps, samples=args.samples)
    write_csv(args.out / "cycles.csv", ["eps", "fixed_x", "h_cycle", "residual"],
              [[fmt(f.eps), fmt(f.fixed_x), fmt(f.h_cycle), fmt(f.residual)] for f in findings])
    # only odd-simple zeros inside the sampled annulus are visible to the return map
    lo, hi = system.guarded_interval(SECTION_GUARD)
    visible = [b.root for b in report.brackets if b.multiplicity == "odd-simple" and lo <= b.root <= hi]
    matches = len(visible) == len(findings) and all(
        abs(f.h_cycle - r) < args.match_tol for f, r in zip(sorted(findings, key=lambda f: f.h_cycle), visible))
    summary = {
        "command": "cycles",
        "system": system.value,
        "n": p.n,
        "eps": args.eps,
        "constructed_zero": args.constructed,
        "odd_simple": report.odd_count,
        "even_suspected": report.even_count,
        "bound": report.bound,
        "within_bound": report.within_bound,
        "zeros_in_search_range": len(visible),
        "cycles_found": len(findings),
        "counts_match": matches,
        "match_tol": args.match_tol,
        "pass": matches and report.within_bound,
    }
    write_summary(args.out, summary)
    return 0 if summary["pass"] else 1


def _cycles_suite(args) -> int:
    system = args.system
    rng = random.Random(args.seed)
    perts = [Perturbation.random(args.degree, rng) for _ in range(args.suite)]

    def one(p):
        return isolate_zeros(melnikov_representation(system, p), grid=args.grid, tol=args.tol)

    reports = ordered_map(one, perts)
    rows = [[k, r.odd_count, r.even_count, r.bound, str(r.within_bound).lower()] for k, r in enumerate(reports)]
    write_csv(args.out / "suite.csv", ["index", "odd_simple", "even_suspected", "bound", "within_bound"], rows)
    ok = all(r.within_bound for r in reports)
    write_summary(args.out, {
        "command": "cycles",
        "system": system.value,
        "n": args.degree,
        "seed": args.seed,
        "suite": args.suite,
        "bound": reports[0].bound if reports else None,
        "max_odd_simple": max((r.odd_count for r in reports), default=0),
        "all_within_bound": ok,
        "pass": ok,
    })
    return 0 if ok else 1


# --- argument handling ----------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwmelnikov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value file; explicit flags win")
        p.add_argument("--system", type=SystemId.parse, default=None, help="LV or BT")
        p.add_argument("--out", type=Path, default=None, help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--guard", type=float, default=None, help="energy guard as a fraction of the interval width")

    p = sub.add_parser("integrals", help="tabulate I_{i,j}(h) on an energy grid")
    common(p)
    p.add_argument("--indices", default=None, help='semicolon-separated pairs, e.g. "0,0;1,0"')
    p.add_argument("--grid", type=_positive_int, default=None, help="number of energies")
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("reduce", help="Melnikov representation and its quadrature oracle")
    common(p)
    p.add_argument("--degree", type=_positive_int, default=None)
    p.add_argument("--perturbation", default=None, help="CSV file array,i,j,value")
    p.add_argument("--zero", action="store_true", help="use the zero perturbation")
    p.add_argument("--h-count", type=_positive_int, default=None)
    p.add_argument("--tol", type=float, default=None, help="relative oracle tolerance")

    p = sub.add_parser("verify", help="run the residual suites")
    common(p)
    p.add_argument("--suites", default=None, help=f"comma-separated subset of {', '.join(ALL_SUITES)}")
    p.add_argument("--h-count", type=_positive_int, default=None)
    p.add_argument("--reflection-count", type=_positive_int, default=None)
    p.add_argument("--annihilator-count", type=_positive_int, default=None)
    p.add_argument("--zero-grid", type=_positive_int, default=None)
    p.add_argument("--second-order-table", choices=("printed", "derived"), default=None)
    p.add_argument("--corrupt-pf", type=as_fraction, default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("cycles", help="zero counting and limit-cycle search")
    common(p)
    p.add_argument("--degree", type=_positive_int, default=None)
    p.add_argument("--perturbation", default=None)
    p.add_argument("--constructed", type=float, default=None, help="build a perturbation with one zero at this h")
    p.add_argument("--suite", type=int, default=None, help="count random perturbations only, this many")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--grid", type=_positive_int, default=None)
    p.add_argument("--samples", type=_positive_int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--match-tol", type=float, default=None)
    return parser


DEFAULTS = {
    "integrals": {"system": BT, "indices": "0,0", "grid": 21, "tol": 1e-10, "guard": 0.02, "seed": 0},
    "reduce": {"system": LV, "degree": 2, "h_count": 20, "tol": 1e-6, "guard": 0.02, "seed": 0},
    "verify": {"system": LV, "suites": ",".join(DEFAULT_SUITES), "h_count": 30, "reflection_count": 5,
               "annihilator_count": 10, "zero_grid": 512, "second_order_table": "printed", "guard": 0.02, "seed": 0},
    "cycles": {"system": LV, "degree": 1, "eps": 1e-3, "grid": 512, "samples": 40, "tol": 1e-10,
               "match_tol": 0.05, "guard": 0.02, "seed": 0},
}

CONVERTERS = {
    "system": SystemId.parse, "degree": int, "grid": int, "h_count": int, "reflection_count": int,
    "annihilator_count": int, "zero_grid": int, "samples": int, "suite": int, "seed": int,
    "tol": float, "guard": float, "eps": float, "match_tol": float, "constructed": float,
    "out": Path, "corrupt_pf": as_fraction, "zero": lambda v: v.lower() in ("1", "true", "yes"),
}


def resolve(args) -> argparse.Namespace:
    """Fill unset flags from --config, then from the command defaults."""
    config = read_config(args.config) if args.config else {}
    known = vars(args)
    unknown = [k for k in config if k not in known]
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    args.degree_given = getattr(args, "degree", None)
    for key, value in config.items():
        if known.get(key) is None or known.get(key) is False:
            setattr(args, key, CONVERTERS.get(key, str)(value))
    if args.config and "degree" in config and args.degree_given is None:
        args.degree_given = args.degree
    for key, value in DEFAULTS[args.command].items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.out is None:
        args.out = Path("pwmelnikov-out") / args.command
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve(args)
        args.out.mkdir(parents=True, exist_ok=True)
        return {"integrals": cmd_integrals, "reduce": cmd_reduce, "verify": cmd_verify,
                "cycles": cmd_cycles}[args.command](args)
    except UsageError as exc:
        print(f"pwmelnikov: error: {exc}", file=sys.stderr)
        return 2
    except (MelnikovError, ValueError) as exc:
        print(f"pwmelnikov: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
