"""Problem instances for cell formation with alternative process plans.

An :class:`Instance` holds machine types, parts with one or more process
plans, the cell configuration and optional budgets.  Everything is immutable
after construction.  Operations are scoped to their plan: the operation ``id``
is a label, and eligibility/time/cost data live on the operation itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

SEQUENCE_MODES = ("strict", "unordered", "explicit")


class InstanceError(ValueError):
    """Raised when an instance document cannot be turned into an Instance."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class MachineType:
    id: int
    capacity: float
    invest_cost: float = 0.0
    amortized_cost: float | None = None
    available: int | None = None

    @property
    def amortized(self) -> float:
        """Amortized cost per copy; falls back to the investment cost."""
        return self.invest_cost if self.amortized_cost is None else self.amortized_cost


@dataclass(frozen=True)
class Eligibility:
    machine: int
    time: float
    cost: float = 0.0


@dataclass(frozen=True)
class OperationSpec:
    id: int
    eligible: tuple[Eligibility, ...]

    @property
    def machines(self) -> tuple[int, ...]:
        return tuple(e.machine for e in self.eligible)

    def on(self, machine: int) -> Eligibility:
        for e in self.eligible:
            if e.machine == machine:
                return e
        raise KeyError(machine)


@dataclass(frozen=True)
class ProcessPlan:
    id: int
    operations: tuple[OperationSpec, ...]
    sequence: str = "strict"
    # explicit mode only: operation id -> ids of operations that may follow it
    successors: tuple[tuple[int, tuple[int, ...]], ...] = ()

    @property
    def op_ids(self) -> tuple[int, ...]:
        return tuple(o.id for o in self.operations)

    def operation(self, op_id: int) -> OperationSpec:
        for o in self.operations:
            if o.id == op_id:
                return o
        raise KeyError(op_id)


@dataclass(frozen=True)
class Part:
    id: int
    demand: float
    plans: tuple[ProcessPlan, ...]

    def plan(self, plan_id: int) -> ProcessPlan:
        for p in self.plans:
            if p.id == plan_id:
                return p
        raise KeyError(plan_id)


@dataclass(frozen=True)
class CellConfig:
    count: int = 1
    min_per_cell: int | None = None
    max_per_cell: int | None = None
    # optional per-cell overrides, one entry per cell
    min_list: tuple[int, ...] | None = None
    max_list: tuple[int, ...] | None = None

    def lower(self, c: int, default: int = 0) -> int:
        """Minimum machine count for 1-based cell ``c``."""
        if self.min_list is not None:
            return self.min_list[c - 1]
        return default if self.min_per_cell is None else self.min_per_cell

    def upper(self, c: int) -> int | None:
        if self.max_list is not None:
            return self.max_list[c - 1]
        return self.max_per_cell


@dataclass(frozen=True)
class Budgets:
    operating: float | None = None
    investment: float | None = None


@dataclass(frozen=True)
class Instance:
    machines: tuple[MachineType, ...]
    parts: tuple[Part, ...]
    cells: CellConfig = field(default_factory=CellConfig)
    budgets: Budgets = field(default_factory=Budgets)
    name: str = ""

    @property
    def K(self) -> int:
        return len(self.parts)

    @property
    def M(self) -> int:
        return len(self.machines)

    @property
    def C(self) -> int:
        return self.cells.count

    def machine(self, m: int) -> MachineType:
        for mt in self.machines:
            if mt.id == m:
                return mt
        raise KeyError(m)

    def part(self, k: int) -> Part:
        for p in self.parts:
            if p.id == k:
                return p
        raise KeyError(k)

    @property
    def machine_ids(self) -> tuple[int, ...]:
        return tuple(m.id for m in self.machines)

    def plans(self) -> Iterable[tuple[Part, ProcessPlan]]:
        """Yield every (part, plan) in creation order."""
        for part in self.parts:
            for plan in part.plans:
                yield part, plan

    def with_cells(self, **changes: Any) -> "Instance":
        from dataclasses import replace

        return replace(self, cells=replace(self.cells, **changes))

    def with_budgets(self, **changes: Any) -> "Instance":
        from dataclasses import replace

        return replace(self, budgets=replace(self.budgets, **changes))


# ---------------------------------------------------------------------------
# derived index sets


def successor_map(plan: ProcessPlan) -> dict[int, tuple[int, ...]]:
    ids = plan.op_ids
    if plan.sequence == "strict":
        return {s: ((ids[n + 1],) if n + 1 < len(ids) else ()) for n, s in enumerate(ids)}
    if plan.sequence == "unordered":
        return {s: tuple(t for t in ids if t != s) for s in ids}
    if plan.sequence == "explicit":
        members = set(ids)
        out = {s: () for s in ids}
        for s, succ in plan.successors:
            if s not in members:
                raise InstanceError(f"plan {plan.id}.successors", f"unknown operation {s}")
            bad = [t for t in succ if t not in members]
            if bad:
                raise InstanceError(
                    f"plan {plan.id}.successors[{s}]", f"unknown operation(s) {bad}"
                )
            out[s] = tuple(succ)
        return out
    raise InstanceError(f"plan {plan.id}.sequence", f"unknown mode {plan.sequence!r}")


def consecutive_pairs(plan: ProcessPlan) -> tuple[tuple[int, int], ...]:
    """Pairs (i, j) with i < j of operations that may follow one another.

    Each unordered pair appears once, sorted lexicographically.  For explicit
    successor lists a pair is included if either operation may follow the
    other, so ``i`` following ``j`` and ``j`` following ``i`` is one pair.
    """
    succ = successor_map(plan)
    pairs = set()
    for s, following in succ.items():
        for t in following:
            if s != t:
                pairs.add((min(s, t), max(s, t)))
    return tuple(sorted(pairs))


@dataclass(frozen=True)
class PlanStats:
    part: int
    plan: int
    TS: int
    TO: int
    TM: tuple[int, ...]
    R: tuple[int, ...]

    @property
    def TR(self) -> int:
        return len(self.R)


@dataclass(frozen=True)
class InstanceStats:
    K: int
    M: int
    S: int
    C: int
    TPP: tuple[int, ...]
    plans: tuple[PlanStats, ...]

    @property
    def total_plans(self) -> int:
        return sum(self.TPP)

    @property
    def total_operations(self) -> int:
        return sum(p.TS for p in self.plans)

    @property
    def total_pairs(self) -> int:
        return sum(p.TO for p in self.plans)

    @property
    def total_eligibilities(self) -> int:
        return sum(sum(p.TM) for p in self.plans)

    def as_dict(self) -> dict[str, Any]:
        return {
            "K": self.K,
            "M": self.M,
            "S": self.S,
            "C": self.C,
            "sum_TPP": self.total_plans,
            "total_operations": self.total_operations,
            "total_pairs": self.total_pairs,
            "sum_TM": self.total_eligibilities,
            "plans": [
                {"part": p.part, "plan": p.plan, "TS": p.TS, "TO": p.TO,
                 "TM": list(p.TM), "R": list(p.R), "TR": p.TR}
                for p in self.plans
            ],
        }


def derived_stats(inst: Instance) -> InstanceStats:
    plans = []
    labels = set()
    for part, plan in inst.plans():
        req: set[int] = set()
        for op in plan.operations:
            labels.add(op.id)
            req.update(op.machines)
        plans.append(
            PlanStats(
                part=part.id,
                plan=plan.id,
                TS=len(plan.operations),
                TO=len(consecutive_pairs(plan)),
                TM=tuple(len(op.eligible) for op in plan.operations),
                R=tuple(sorted(req)),
            )
        )
    return InstanceStats(
        K=inst.K,
        M=inst.M,
        S=len(labels),
        C=inst.C,
        TPP=tuple(len(p.plans) for p in inst.parts),
        plans=tuple(plans),
    )


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


def _finite(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate_instance(inst: Instance) -> list[Violation]:
    """Every invariant violation of ``inst``, located by path; empty if valid."""
    out: list[Violation] = []

    def bad(path: str, msg: str) -> None:
        out.append(Violation(path, msg))

    if inst.M < 1:
        bad("machines", "at least one machine type is required")
    if inst.K < 1:
        bad("parts", "at least one part is required")

    seen_m: set[int] = set()
    for mt in inst.machines:
        where = f"machines[{mt.id}]"
        if mt.id in seen_m:
            bad(where, "duplicate machine id")
        seen_m.add(mt.id)
        if not (_finite(mt.capacity) and mt.capacity > 0):
            bad(f"{where}.capacity", f"must be > 0, got {mt.capacity}")
        if not (_finite(mt.invest_cost) and mt.invest_cost >= 0):
            bad(f"{where}.invest_cost", f"must be >= 0, got {mt.invest_cost}")
        if mt.amortized_cost is not None and not (
            _finite(mt.amortized_cost) and mt.amortized_cost >= 0
        ):
            bad(f"{where}.amortized_cost", f"must be >= 0, got {mt.amortized_cost}")
        if mt.available is not None and not (
            isinstance(mt.available, int) and mt.available >= 0
        ):
            bad(f"{where}.available", f"must be a nonnegative integer, got {mt.available}")

    seen_k: set[int] = set()
    for part in inst.parts:
        where = f"parts[{part.id}]"
        if part.id in seen_k:
            bad(where, "duplicate part id")
        seen_k.add(part.id)
        if not (_finite(part.demand) and part.demand > 0):
            bad(f"{where}.demand", f"must be > 0, got {part.demand}")
        if not part.plans:
            bad(f"{where}.plans", "at least one process plan is required")
        seen_p: set[int] = set()
        for plan in part.plans:
            pwhere = f"{where}.plans[{plan.id}]"
            if plan.id in seen_p:
                bad(pwhere, "duplicate plan id")
            seen_p.add(plan.id)
            if plan.sequence not in SEQUENCE_MODES:
                bad(f"{pwhere}.sequence", f"unknown mode {plan.sequence!r}")
            if not plan.operations:
                bad(f"{pwhere}.operations", "at least one operation is required")
            seen_s: set[int] = set()
            for op in plan.operations:
                owhere = f"{pwhere}.operations[{op.id}]"
                if op.id in seen_s:
                    bad(owhere, "duplicate operation id")
                seen_s.add(op.id)
                if not op.eligible:
                    bad(f"{owhere}.eligible", "at least one eligible machine is required")
                seen_e: set[int] = set()
                for e in op.eligible:
                    ewhere = f"{owhere}.eligible[{e.machine}]"
                    if e.machine in seen_e:
                        bad(ewhere, "duplicate machine in eligibility list")
                    seen_e.add(e.machine)
                    if e.machine not in inst.machine_ids:
                        bad(ewhere, "references an undeclared machine")
                    if not (_finite(e.time) and e.time > 0):
                        bad(f"{ewhere}.time", f"must be > 0, got {e.time}")
                    if not (_finite(e.cost) and e.cost >= 0):
                        bad(f"{ewhere}.cost", f"must be >= 0, got {e.cost}")
            if plan.sequence == "explicit":
                try:
                    successor_map(plan)
                except InstanceError as exc:
                    bad(f"{pwhere}.successors", str(exc))

    cells = inst.cells
    if not (isinstance(cells.count, int) and cells.count >= 1):
        bad("cells.count", f"must be >= 1, got {cells.count}")
    lo, hi = cells.min_per_cell, cells.max_per_cell
    if lo is not None and lo < 0:
        bad("cells", f"min_per_cell must be >= 0, got {lo}")
    if hi is not None and hi < 0:
        bad("cells", f"max_per_cell must be >= 0, got {hi}")
    if lo is not None and hi is not None and lo > hi:
        bad("cells", f"min_per_cell {lo} exceeds max_per_cell {hi}")
    for name, lst in (("min_list", cells.min_list), ("max_list", cells.max_list)):
        if lst is not None and len(lst) != cells.count:
            bad(f"cells.{name}", f"expected {cells.count} entries, got {len(lst)}")
    if cells.min_list is not None and cells.max_list is not None:
        for c, (a, b) in enumerate(zip(cells.min_list, cells.max_list), start=1):
            if a > b:
                bad(f"cells[{c}]", f"minimum {a} exceeds maximum {b}")

    for name in ("operating", "investment"):
        v = getattr(inst.budgets, name)
        if v is not None and not (_finite(v) and v >= 0):
            bad(f"budgets.{name}", f"must be >= 0, got {v}")
    return out


# ---------------------------------------------------------------------------
# parsing and rendering


def _num(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceError(path, f"expected a number, got {v!r}")
    return v


def _int(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise InstanceError(path, f"expected an integer, got {v!r}")
    return v


def _opt(d: Mapping[str, Any], key: str, conv, path: str):
    v = d.get(key)
    return None if v is None else conv(v, f"{path}.{key}")


def _req(d: Mapping[str, Any], key: str, path: str) -> Any:
    if not isinstance(d, Mapping):
        raise InstanceError(path, "expected an object")
    if key not in d:
        raise InstanceError(f"{path}.{key}", "missing required field")
    return d[key]


def _unique(ids: list[int], path: str) -> None:
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise InstanceError(path, f"duplicate ids {dup}")


def instance_from_dict(doc: Mapping[str, Any]) -> Instance:
    """Build an Instance from the canonical document structure.

    Raises :class:`InstanceError` naming the offending location on schema
    violations, duplicate ids and dangling machine references.
    """
    if not isinstance(doc, Mapping):
        raise InstanceError("$", "expected an object")
    machines = []
    for n, md in enumerate(_req(doc, "machines", "$")):
        path = f"machines[{n}]"
        machines.append(
            MachineType(
                id=_int(_req(md, "id", path), f"{path}.id"),
                capacity=_num(_req(md, "capacity", path), f"{path}.capacity"),
                invest_cost=_opt(md, "invest_cost", _num, path) or 0,
                amortized_cost=_opt(md, "amortized_cost", _num, path),
                available=_opt(md, "available", _int, path),
            )
        )
    _unique([m.id for m in machines], "machines")
    declared = {m.id for m in machines}

    parts = []
    for n, kd in enumerate(_req(doc, "parts", "$")):
        path = f"parts[{n}]"
        plans = []
        for q, pd in enumerate(_req(kd, "plans", path)):
            ppath = f"{path}.plans[{q}]"
            ops = []
            for r, od in enumerate(_req(pd, "operations", ppath)):
                opath = f"{ppath}.operations[{r}]"
                elig = []
                for t, ed in enumerate(_req(od, "eligible", opath)):
                    epath = f"{opath}.eligible[{t}]"
                    m = _int(_req(ed, "machine", epath), f"{epath}.machine")
                    if m not in declared:
                        raise InstanceError(
                            f"{epath}.machine", f"references undeclared machine {m}"
                        )
                    elig.append(
                        Eligibility(
                            machine=m,
                            time=_num(_req(ed, "time", epath), f"{epath}.time"),
                            cost=_opt(ed, "cost", _num, epath) or 0,
                        )
                    )
                _unique([e.machine for e in elig], f"{opath}.eligible")
                ops.append(OperationSpec(id=_int(_req(od, "id", opath), f"{opath}.id"),
                                         eligible=tuple(elig)))
            _unique([o.id for o in ops], f"{ppath}.operations")
            seq = pd.get("sequence", "strict")
            if seq not in SEQUENCE_MODES:
                raise InstanceError(f"{ppath}.sequence", f"unknown mode {seq!r}")
            succ: tuple = ()
            if seq == "explicit":
                raw = _req(pd, "successors", ppath)
                if not isinstance(raw, Mapping):
                    raise InstanceError(f"{ppath}.successors", "expected an object")
                succ = tuple(
                    sorted(
                        (
                            _int(int(s) if isinstance(s, str) else s, f"{ppath}.successors"),
                            tuple(_int(t, f"{ppath}.successors[{s}]") for t in v),
                        )
                        for s, v in raw.items()
                    )
                )
            plan = ProcessPlan(
                id=_int(_req(pd, "id", ppath), f"{ppath}.id"),
                operations=tuple(ops),
                sequence=seq,
                successors=succ,
            )
            if seq == "explicit":
                successor_map(plan)
            plans.append(plan)
        _unique([p.id for p in plans], f"{path}.plans")
        parts.append(
            Part(
                id=_int(_req(kd, "id", path), f"{path}.id"),
                demand=_num(_req(kd, "demand", path), f"{path}.demand"),
                plans=tuple(plans),
            )
        )
    _unique([k.id for k in parts], "parts")

    cd = doc.get("cells") or {}
    lo = cd.get("min_per_cell")
    hi = cd.get("max_per_cell")
    cells = CellConfig(
        count=_int(cd.get("count", 1), "cells.count"),
        min_per_cell=None if isinstance(lo, list) else _opt(cd, "min_per_cell", _int, "cells"),
        max_per_cell=None if isinstance(hi, list) else _opt(cd, "max_per_cell", _int, "cells"),
        min_list=tuple(_int(v, "cells.min_per_cell") for v in lo) if isinstance(lo, list) else None,
        max_list=tuple(_int(v, "cells.max_per_cell") for v in hi) if isinstance(hi, list) else None,
    )
    bd = doc.get("budgets") or {}
    budgets = Budgets(
        operating=_opt(bd, "operating", _num, "budgets"),
        investment=_opt(bd, "investment", _num, "budgets"),
    )
    return Instance(
        machines=tuple(machines),
        parts=tuple(parts),
        cells=cells,
        budgets=budgets,
        name=str(doc.get("name", "")),
    )


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    """Canonical document for ``inst``; inverse of :func:`instance_from_dict`."""

    def plan_doc(plan: ProcessPlan) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": plan.id,
            "sequence": plan.sequence,
            "operations": [
                {
                    "id": op.id,
                    "eligible": [
                        {"machine": e.machine, "time": e.time, "cost": e.cost}
                        for e in op.eligible
                    ],
                }
                for op in plan.operations
            ],
        }
        if plan.sequence == "explicit":
            d["successors"] = {str(s): list(t) for s, t in plan.successors}
        return d

    c = inst.cells
    doc: dict[str, Any] = {
        "machines": [
            {
                "id": m.id,
                "capacity": m.capacity,
                "available": m.available,
                "invest_cost": m.invest_cost,
                "amortized_cost": m.amortized_cost,
            }
            for m in inst.machines
        ],
        "parts": [
            {"id": k.id, "demand": k.demand, "plans": [plan_doc(p) for p in k.plans]}
            for k in inst.parts
        ],
        "cells": {
            "count": c.count,
            "min_per_cell": list(c.min_list) if c.min_list is not None else c.min_per_cell,
            "max_per_cell": list(c.max_list) if c.max_list is not None else c.max_per_cell,
        },
        "budgets": {"operating": inst.budgets.operating, "investment": inst.budgets.investment},
    }
    if inst.name:
        doc["name"] = inst.name
    return doc


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError("$", f"not valid JSON ({exc})") from exc
    return instance_from_dict(doc)


def render_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2)


def load_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())


def example_instance() -> Instance:
    """The four-part, three-machine example bundled with the package."""
    from importlib import resources

    text = resources.files("cellform.data").joinpath("rajamani1990.json").read_text()
    return parse_instance(text)
