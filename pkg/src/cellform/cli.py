"""Command line front end.

Exit codes: 0 optimal or clean, 2 infeasible, 3 invalid instance or
arguments, 4 solver limit reached, 5 engines (or the independent
verification) disagree.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import formulations as F
from .analysis import OracleGuardExceeded, decode, semantic_oracle
from .instance import InstanceError, load_instance, validate_instance
from .milp import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, SolverOptions, solve_bb
from .report import dumps, render_tables, render_text, solution_report
from .study import differences, find_scenario

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3
EXIT_LIMIT = 4
EXIT_DISAGREE = 5

FORMULATIONS = ("I", "II", "III", "IV", "phase1")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _weights(text: str) -> tuple[float, float]:
    try:
        wc, wm = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two numbers, e.g. 1,2") from None
    return wc, wm


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cellform", description="Cell formation integer programs.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check an instance document")
    v.add_argument("instance")

    s = sub.add_parser("solve", help="build, solve, decode and verify a formulation")
    s.add_argument("instance")
    s.add_argument("--formulation", "-f", required=True, choices=FORMULATIONS)
    s.add_argument("--cells", type=int)
    s.add_argument("--min-per-cell", type=int)
    s.add_argument("--max-per-cell", type=int)
    s.add_argument("--budget-investment", type=float)
    s.add_argument("--budget-operating", type=float)
    s.add_argument("--weights", type=_weights, help="w_cell,w_mach (default 1,1)")
    s.add_argument("--engine", choices=("bb", "oracle", "both"), default="bb")
    s.add_argument("--format", choices=("text", "structured"), default="text")
    s.add_argument("--out", help="write the report here instead of stdout")
    s.add_argument("--node-limit", type=int)
    s.add_argument("--time-limit", type=float)
    s.add_argument("--guard", type=int, default=50_000_000, help="oracle enumeration limit")
    s.add_argument("--dump-lp", help="also write the model in LP format")

    st = sub.add_parser("stats", help="model size of a formulation")
    st.add_argument("instance")
    st.add_argument("--formulation", "-f", default="II", choices=FORMULATIONS)
    st.add_argument("--compare-rajamani", action="store_true")
    st.add_argument("--cells", type=int)
    st.add_argument("--max-per-cell", type=int)

    t = sub.add_parser("tables", help="render the grids of a structured solution report")
    t.add_argument("report")
    return p


def _options(args) -> F.FormulationOptions:
    wc, wm = args.weights or (1.0, 1.0)
    for name in ("cells",):
        val = getattr(args, name)
        if val is not None and val < 1:
            raise UsageError(f"--{name} must be >= 1")
    for name in ("min_per_cell", "max_per_cell", "budget_investment", "budget_operating"):
        val = getattr(args, name, None)
        if val is not None and val < 0:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 0")
    try:
        return F.FormulationOptions(
            w_cell=wc, w_mach=wm,
            operating_limit=args.budget_operating,
            investment_budget=args.budget_investment,
            cells=args.cells, min_per_cell=args.min_per_cell, max_per_cell=args.max_per_cell,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_valid(path: str):
    inst = load_instance(path)
    problems = validate_instance(inst)
    if problems:
        raise InstanceError(path, "; ".join(str(v) for v in problems))
    return inst


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    try:
        inst = load_instance(args.instance)
    except (InstanceError, OSError) as exc:
        print(f"invalid: {exc}")
        return EXIT_INVALID
    problems = validate_instance(inst)
    if not problems:
        print(f"{args.instance}: ok ({inst.K} parts, {inst.M} machine types)")
        return EXIT_OK
    for v in problems:
        print(v)
    return EXIT_INVALID


def cmd_solve(args) -> int:
    inst = _load_valid(args.instance)
    opts = _options(args)
    kind = args.formulation
    try:
        F.resolve(inst, kind, opts)
        model, idx = F.build(inst, kind, opts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.dump_lp:
        Path(args.dump_lp).write_text(model.to_lp())
    stats = F.measured_stats(model)
    notes: list[str] = []
    code = EXIT_OK

    bb_sol = g_bb = None
    if args.engine in ("bb", "both"):
        bb_sol = solve_bb(model, SolverOptions(node_limit=args.node_limit,
                                               time_limit=args.time_limit))
        if bb_sol.values is not None:
            g_bb = decode(bb_sol, idx, inst)
    oracle = None
    if args.engine in ("oracle", "both"):
        try:
            oracle = semantic_oracle(inst, kind, opts, guard=args.guard)
        except OracleGuardExceeded as exc:
            raise UsageError(str(exc)) from None

    if args.engine == "oracle":
        status, g, cert = oracle.status, oracle.solution, {"candidates": oracle.candidates}
    else:
        status, g, cert = bb_sol.status, g_bb, bb_sol.certificate
    if status == UNBOUNDED:
        status = INFEASIBLE if g is None else status

    if oracle is not None and bb_sol is not None:
        if bb_sol.status == LIMIT:
            code = EXIT_LIMIT
        elif bb_sol.status != oracle.status:
            notes.append(f"engine disagreement: bb {bb_sol.status}, oracle {oracle.status}")
            code = EXIT_DISAGREE
        elif status == OPTIMAL and not math.isclose(
            bb_sol.objective_value, oracle.objective, rel_tol=1e-6, abs_tol=1e-6
        ):
            notes.append(f"engine disagreement: bb {bb_sol.objective_value:g}, "
                         f"oracle {oracle.objective:g}")
            code = EXIT_DISAGREE
        cert = dict(cert, oracle_objective=oracle.objective, oracle_candidates=oracle.candidates)

    discrepancies = []
    scen = find_scenario(kind, opts) if inst.name == "rajamani1990" else None
    doc = solution_report(inst, kind, opts, status, g, engine=args.engine,
                          model_stats=stats, certificate=cert)
    if scen is not None and g is not None:
        discrepancies = differences(scen.published, doc, "published")
        notes.extend(differences(scen.oracle, doc, "enumerated"))
    doc["discrepancies"] = discrepancies + notes
    if code == EXIT_OK:
        if status == INFEASIBLE:
            code = EXIT_INFEASIBLE
        elif status == LIMIT:
            code = EXIT_LIMIT
        elif doc["verification"]:
            code = EXIT_DISAGREE
        elif doc.get("recomputed_objective") is not None and not math.isclose(
            doc["recomputed_objective"], doc["objective"], rel_tol=1e-6, abs_tol=1e-6
        ):
            doc["discrepancies"].append("recomputed objective differs from solver objective")
            code = EXIT_DISAGREE
    doc["exit_code"] = code
    _emit(dumps(doc) + "\n" if args.format == "structured" else render_text(doc), args.out)
    return code


def cmd_stats(args) -> int:
    inst = _load_valid(args.instance)
    opts = F.FormulationOptions(cells=args.cells, max_per_cell=args.max_per_cell)
    kind = args.formulation
    if kind == "II":
        formula = F.formulation_stats(inst, "II", opts)
        # a non-binding placeholder so the operating-cost row is present
        limit = sum(
            part.demand * max(e.cost for e in op.eligible)
            for part, plan in inst.plans() for op in plan.operations
        )
        measured = F.measured_stats(F.build(inst, "II", F.with_operating_limit(opts, limit))[0])
        readings = F.constraint_count_readings(inst, opts)
    else:
        formula = None
        measured = F.measured_stats(F.build(inst, kind, opts)[0])
    rows = [("", "binary", "integer", "continuous", "constraints")]
    if formula is not None:
        rows.append((f"formulation {kind} (formula)", *map(str, formula.as_tuple())))
    rows.append((f"formulation {kind} (built)", *map(str, measured.as_tuple())))
    if args.compare_rajamani:
        rows.append(("Rajamani et al. (linearized)", *map(str, F.rajamani_stats(inst, opts).as_tuple())))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    for r in rows:
        print("  ".join(v.ljust(widths[0]) if i == 0 else v.rjust(widths[i]) for i, v in enumerate(r)))
    if formula is not None:
        print(f"constraint count with one assignment row per operation and cell: {readings['TS']}; "
              f"per plan and cell: {readings['TPP']}")
    return EXIT_OK


def cmd_tables(args) -> int:
    try:
        doc = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(render_tables(doc))
    return EXIT_OK


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return {"validate": cmd_validate, "solve": cmd_solve,
                "stats": cmd_stats, "tables": cmd_tables}[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InstanceError, OSError) as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
