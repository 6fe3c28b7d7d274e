"""The bundled four-part example and the published results to compare against.

Each scenario carries two sets of reference values: the ones printed with the
original example (``published``) and the ones established by exhaustive
enumeration (``oracle``).  Checks assert against the oracle values and list
every difference from the printed ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .formulations import FormulationOptions


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    options: FormulationOptions
    published: dict
    oracle: dict


def scenarios() -> list[Scenario]:
    doc = json.loads(
        resources.files("cellform.data").joinpath("rajamani1990_study.json").read_text()
    )
    return [
        Scenario(d["name"], d["kind"], FormulationOptions(**d["options"]), d["published"], d["oracle"])
        for d in doc["scenarios"]
    ]


def scenario(name: str) -> Scenario:
    for s in scenarios():
        if s.name == name:
            return s
    raise KeyError(name)


def find_scenario(kind: str, opts: FormulationOptions) -> Scenario | None:
    """Scenario with the same formulation and effective overrides, if any."""
    for s in scenarios():
        if s.kind != kind:
            continue
        o = s.options
        if (o.investment_budget, o.operating_limit) != (opts.investment_budget, opts.operating_limit):
            continue
        if (opts.w_cell, opts.w_mach) != (1.0, 1.0):
            continue
        if all(getattr(opts, f) in (None, getattr(o, f))
               for f in ("cells", "min_per_cell", "max_per_cell")):
            return s
    return None


def _observed(report: dict) -> dict:
    obs: dict = {}
    if report.get("objective") is None:
        return obs
    obs["objective"] = report["objective"]
    obs["plan_selection"] = {str(d["part"]): d["plan"] for d in report["plan_selection"]}
    alloc = report["allocation"]
    obs["allocation"] = sorted(
        m for m, row in zip(alloc["machines"], alloc["N"]) for n in row for _ in range(n)
    )
    obs["movements"] = report["movements"]
    obs["amortized"] = report["costs"]["amortized"]
    obs["operating"] = report["costs"]["operating"]
    obs["investment"] = report["costs"]["investment"]
    return obs


def differences(reference: dict, report: dict, label: str, tol: float = 1e-6) -> list[str]:
    """Human-readable mismatches between ``reference`` values and a report.

    Only invariant quantities are compared: objective, cost totals, plan
    choice, movement counts and the multiset of machine copies.  Cell labels
    are not, since relabelling cells changes nothing.
    """
    obs = _observed(report)
    if not obs:
        return [f"{label}: no solution to compare"]
    out = []
    for key in ("objective", "amortized", "operating", "investment"):
        if key in reference and abs(reference[key] - obs[key]) > tol * max(1, abs(reference[key])):
            out.append(f"{label} {key}: expected {reference[key]:g}, got {obs[key]:g}")
    if "plan_selection" in reference and reference["plan_selection"] != obs["plan_selection"]:
        out.append(f"{label} plan selection: expected {reference['plan_selection']}, "
                   f"got {obs['plan_selection']}")
    if "allocation" in reference and sorted(reference["allocation"]) != obs["allocation"]:
        out.append(f"{label} machine copies: expected {sorted(reference['allocation'])}, "
                   f"got {obs['allocation']}")
    for key, val in reference.get("movements", {}).items():
        if obs["movements"][key] != val:
            out.append(f"{label} {key} movements: expected {val}, got {obs['movements'][key]}")
    return out
