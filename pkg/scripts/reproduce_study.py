"""Solve every scenario of the bundled four-part example and compare.

    python3 scripts/reproduce_study.py [--oracle] [--tables]

Prints one summary row per scenario (objective, plans, copies, movements,
costs) and then every difference from the published values.
"""

import argparse
import time

from cellform.analysis import decode, semantic_oracle
from cellform.formulations import build
from cellform.instance import example_instance
from cellform.milp import solve_bb
from cellform.report import render_tables, solution_report
from cellform.study import differences, scenarios


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--oracle", action="store_true", help="also run the exhaustive oracle")
    ap.add_argument("--tables", action="store_true", help="print the assignment grids")
    args = ap.parse_args()

    inst = example_instance()
    diffs = []
    head = f"{'scenario':26} {'obj':>6} {'plans':>9} {'copies':>12} {'inter':>5} {'intra':>5} {'amort':>6} {'oper':>6} {'sec':>6}"
    print(head)
    print("-" * len(head))
    for sc in scenarios():
        model, idx = build(inst, sc.kind, sc.options)
        t0 = time.perf_counter()
        sol = solve_bb(model)
        g = decode(sol, idx, inst)
        dt = time.perf_counter() - t0
        doc = solution_report(inst, sc.kind, sc.options, sol.status, g)
        plans = "".join(str(d["plan"]) for d in doc["plan_selection"])
        copies = ",".join(str(m) for m in g.allocation_multiset())
        mv, c = doc["movements"], doc["costs"]
        print(f"{sc.name:26} {doc['objective']:6g} {plans:>9} {copies:>12} {mv['intercell']:5d} "
              f"{mv['intracell']:5d} {c['amortized']:6g} {c['operating']:6g} {dt:6.1f}")
        if args.tables:
            print(render_tables(doc))
        diffs += [f"{sc.name}: {d}" for d in differences(sc.published, doc, "published")]
        diffs += [f"{sc.name}: {d}" for d in differences(sc.oracle, doc, "enumerated")]
        if args.oracle:
            t0 = time.perf_counter()
            r = semantic_oracle(inst, sc.kind, sc.options)
            agree = abs(r.objective - sol.objective_value) <= 1e-6
            print(f"{'':26} oracle {r.objective:g} over {r.candidates} candidates "
                  f"({time.perf_counter() - t0:.1f}s) {'agrees' if agree else 'DISAGREES'}")

    print()
    print("differences:" if diffs else "no differences")
    for d in diffs:
        print("  " + d)


if __name__ == "__main__":
    main()
