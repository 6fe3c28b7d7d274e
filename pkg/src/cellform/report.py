"""Solution report documents and their text rendering."""

from __future__ import annotations

import json
from typing import Any

from .analysis import GroupingSolution, cost_breakdown, movements, verify_solution
from .formulations import FormulationOptions, ModelStats, resolve
from .instance import Instance


def solution_report(
    inst: Instance,
    kind: str,
    opts: FormulationOptions | None,
    status: str,
    g: GroupingSolution | None,
    *,
    engine: str = "bb",
    model_stats: ModelStats | None = None,
    certificate: dict | None = None,
    discrepancies: list[str] | None = None,
) -> dict[str, Any]:
    """Structured report for one solve; the text output is rendered from it."""
    s = resolve(inst, kind, opts)
    doc: dict[str, Any] = {
        "instance": inst.name,
        "formulation": kind,
        "engine": engine,
        "status": status,
        "setting": {
            "cells": s.C, "min_per_cell": list(s.min_c), "max_per_cell": list(s.max_c),
            "operating_limit": s.toc, "investment_budget": s.budget,
            "weights": [s.w_cell, s.w_mach],
        },
        "objective": None,
        "plan_selection": [],
        "assignments": [],
        "allocation": None,
        "movements": None,
        "costs": None,
        "verification": [],
        "model_stats": None if model_stats is None else dict(zip(
            ("binary", "integer", "continuous", "constraints"), model_stats.as_tuple())),
        "certificate": certificate,
        "discrepancies": list(discrepancies or []),
    }
    if g is None:
        return doc
    doc["objective"] = g.objective
    doc["plan_selection"] = [{"part": k, "plan": p} for k, p in sorted(g.plan_selection.items())]
    doc["assignments"] = [
        {"part": k, "plan": p, "operation": op, "machine": m, "cell": c}
        for (k, p, op), (m, c) in sorted(g.assignment.items())
    ]
    doc["allocation"] = {
        "machines": list(inst.machine_ids),
        "cells": list(range(1, g.C + 1)),
        "N": [[g.allocation.get((m, c), 0) for c in range(1, g.C + 1)] for m in inst.machine_ids],
    }
    doc["movements"] = movements(g, inst).as_dict()
    doc["costs"] = cost_breakdown(g, inst).as_dict()
    rep = verify_solution(g, inst, kind, opts)
    doc["verification"] = [str(v) for v in rep.violations]
    doc["recomputed_objective"] = rep.objective
    doc["family"] = {str(k): c for k, c in sorted(g.family.items())}
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, default=_json_default)


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _grid(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    line = lambda r: "  ".join(v.rjust(w) for v, w in zip(r, widths))  # noqa: E731
    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows])


def render_tables(doc: dict) -> str:
    """Operation x part grid of "machine, cell" entries and machine x cell copies."""
    if not doc.get("assignments"):
        return f"status: {doc.get('status')} (no assignment to show)\n"
    plans = {d["part"]: d["plan"] for d in doc["plan_selection"]}
    ops = sorted({a["operation"] for a in doc["assignments"]})
    cell = {(a["part"], a["operation"]): f"{a['machine']}, {a['cell']}" for a in doc["assignments"]}
    header = ["s \\ (k, p)"] + [f"k={k} p={p}" for k, p in sorted(plans.items())]
    rows = [[f"s = {s}"] + [cell.get((k, s), "-") for k in sorted(plans)] for s in ops]
    out = []
    if doc.get("objective") is not None:
        out.append(f"Objective function value = {doc['objective']:g}")
    out.append("Operation assignment (machine, cell):")
    out.append(_grid(header, rows))
    alloc = doc["allocation"]
    header = ["m \\ c"] + [f"c = {c}" for c in alloc["cells"]]
    rows = [[f"m = {m}"] + [str(n) for n in row] for m, row in zip(alloc["machines"], alloc["N"])]
    out.append("")
    out.append("Machine copies per cell:")
    out.append(_grid(header, rows))
    return "\n".join(out) + "\n"


def render_text(doc: dict) -> str:
    out = [
        f"formulation {doc['formulation']} on {doc['instance'] or '<unnamed>'}"
        f" [{doc['engine']}]: {doc['status']}",
    ]
    if doc.get("objective") is not None:
        mv, costs = doc["movements"], doc["costs"]
        out.append(f"objective: {doc['objective']:g}")
        out.append(
            f"movements: intercell {mv['intercell']}, intracell {mv['intracell']}, "
            f"none {mv['no_movement']} (of {mv['total_pairs']} pairs)"
        )
        out.append(
            f"costs: investment {costs['investment']:g}, amortized {costs['amortized']:g}, "
            f"operating {costs['operating']:g}"
        )
        out.append("")
        out.append(render_tables(doc).rstrip())
    if doc.get("verification"):
        out.append("")
        out.append("verification failures:")
        out.extend(f"  {v}" for v in doc["verification"])
    if doc.get("discrepancies"):
        out.append("")
        out.append("differences from published values:")
        out.extend(f"  {d}" for d in doc["discrepancies"])
    if doc.get("certificate"):
        c = doc["certificate"]
        parts = [f"{k} {v:.4g}" if isinstance(v, float) else f"{k} {v}" for k, v in c.items()
                 if v is not None]
        out.append("")
        out.append("certificate: " + ", ".join(parts))
    return "\n".join(out) + "\n"
