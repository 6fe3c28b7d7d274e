"""Grouping solutions: decoding, movement and cost accounting, verification.

Everything here works from instance data directly.  :func:`verify_solution`
and :func:`semantic_oracle` never look at a :class:`~cellform.milp.Model`,
which makes them usable as independent checks on the solver.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .formulations import FormulationOptions, Setting, VarIndex, resolve
from .instance import Instance, consecutive_pairs
from .milp import LIMIT, OPTIMAL, MilpSolution

MOVEMENT_KINDS = ("I", "IV")
DISJOINT_KINDS = ("II", "III", "phase1")


class DecodeError(ValueError):
    pass


@dataclass
class GroupingSolution:
    """Plan choice, operation placement and machine allocation."""

    kind: str
    C: int
    plan_selection: dict[int, int]
    assignment: dict[tuple[int, int, int], tuple[int, int]]
    allocation: dict[tuple[int, int], int]
    objective: float | None = None

    @property
    def Z(self) -> dict[tuple[int, int], int]:
        return {key: int(n > 0) for key, n in self.allocation.items()}

    @property
    def visits(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {k: set() for k in self.plan_selection}
        for (k, _, _), (_, c) in self.assignment.items():
            out.setdefault(k, set()).add(c)
        return out

    @property
    def family(self) -> dict[int, int]:
        """Cell hosting most of a part's operations; lowest cell on ties."""
        out = {}
        for k in self.plan_selection:
            hits = Counter(c for (kk, _, _), (_, c) in self.assignment.items() if kk == k)
            out[k] = min(hits, key=lambda c: (-hits[c], c)) if hits else 1
        return out

    def machines_in(self, c: int) -> list[int]:
        """Machine copies in cell ``c`` as a sorted multiset of type ids."""
        return sorted(m for (m, cc), n in self.allocation.items() if cc == c for _ in range(n))

    def allocation_multiset(self) -> list[int]:
        return sorted(m for (m, _), n in self.allocation.items() for _ in range(n))


def decode(sol: MilpSolution, idx: VarIndex, inst: Instance, tol: float = 1e-6) -> GroupingSolution:
    if sol.values is None or sol.status not in (OPTIMAL, LIMIT):
        raise DecodeError(f"no solution values to decode (status {sol.status})")
    x = sol.values

    def integral(fam: str, key: tuple, j: int) -> int:
        v = x[j]
        r = round(v)
        if abs(v - r) > tol:
            raise DecodeError(f"{fam}{list(key)} = {v} is not integral")
        return int(r)

    chosen: dict[tuple, int] = {}
    plan_selection: dict[int, int] = {}
    for key, j in idx.Y.items():
        if integral("Y", key, j):
            chosen[key] = 1
            k, p = key[0], key[1]
            if k in plan_selection and plan_selection[k] != p:
                raise DecodeError(f"part {k} has more than one selected plan")
            plan_selection[k] = p
    per_cell = idx.kind in DISJOINT_KINDS
    assignment: dict[tuple[int, int, int], tuple[int, int]] = {}
    for key, j in idx.X.items():
        if not integral("X", key, j):
            continue
        k, p, s, m, c = key
        ykey = (k, p, c) if per_cell else (k, p)
        if ykey not in chosen:
            raise DecodeError(f"X{list(key)} is active but Y{list(ykey)} is not")
        if (k, p, s) in assignment:
            raise DecodeError(f"operation {(k, p, s)} assigned twice")
        assignment[(k, p, s)] = (m, c)
    allocation = {key: integral("N", key, j) for key, j in idx.N.items()}
    return GroupingSolution(
        kind=idx.kind, C=idx.setting.C, plan_selection=plan_selection,
        assignment=assignment, allocation=allocation, objective=sol.objective_value,
    )


# ---------------------------------------------------------------------------
# reports


@dataclass
class MovementReport:
    per_part: dict[int, dict[str, int]]
    intercell: int
    intracell: int
    no_movement: int
    total_pairs: int

    def as_dict(self) -> dict:
        return {
            "intercell": self.intercell, "intracell": self.intracell,
            "no_movement": self.no_movement, "total_pairs": self.total_pairs,
            "per_part": {str(k): v for k, v in self.per_part.items()},
        }


def movements(g: GroupingSolution, inst: Instance) -> MovementReport:
    """Classify every consecutive pair of each selected plan.

    Same machine in the same cell is no movement, different machines in one
    cell an intracell movement, different cells an intercell movement.
    """
    per_part = {}
    for k, p in sorted(g.plan_selection.items()):
        counts = {"intercell": 0, "intracell": 0, "no_movement": 0, "total_pairs": 0}
        for i, j in consecutive_pairs(inst.part(k).plan(p)):
            mi, ci = g.assignment[(k, p, i)]
            mj, cj = g.assignment[(k, p, j)]
            if ci != cj:
                counts["intercell"] += 1
            elif mi != mj:
                counts["intracell"] += 1
            else:
                counts["no_movement"] += 1
            counts["total_pairs"] += 1
        per_part[k] = counts
    tot = {key: sum(v[key] for v in per_part.values())
           for key in ("intercell", "intracell", "no_movement", "total_pairs")}
    return MovementReport(per_part=per_part, **tot)


@dataclass
class CostReport:
    investment: float
    amortized: float
    operating: float
    operating_per_part: dict[int, float]
    load: dict[tuple[int, int], float]
    utilization: dict[tuple[int, int], float]
    unit_time: dict[tuple[int, int], float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "investment": self.investment, "amortized": self.amortized,
            "operating": self.operating,
            "operating_per_part": {str(k): v for k, v in self.operating_per_part.items()},
            "load": [{"machine": m, "cell": c, "load": v} for (m, c), v in sorted(self.load.items())],
            "utilization": [
                {"machine": m, "cell": c, "utilization": v}
                for (m, c), v in sorted(self.utilization.items())
            ],
            "unit_time": [
                {"part": k, "machine": m, "time": v} for (k, m), v in sorted(self.unit_time.items())
            ],
        }


def cost_breakdown(g: GroupingSolution, inst: Instance) -> CostReport:
    investment = sum(inst.machine(m).invest_cost * n for (m, _), n in g.allocation.items())
    amortized = sum(inst.machine(m).amortized * n for (m, _), n in g.allocation.items())
    load = {(mt.id, c): 0.0 for mt in inst.machines for c in range(1, g.C + 1)}
    per_part: dict[int, float] = {}
    unit_time: dict[tuple[int, int], float] = {}
    for (k, p, s), (m, c) in g.assignment.items():
        part = inst.part(k)
        e = part.plan(p).operation(s).on(m)
        load[(m, c)] = load.get((m, c), 0.0) + part.demand * e.time
        per_part[k] = per_part.get(k, 0.0) + part.demand * e.cost
        unit_time[(k, m)] = unit_time.get((k, m), 0.0) + e.time
    util = {}
    for (m, c), v in load.items():
        cap = inst.machine(m).capacity * g.allocation.get((m, c), 0)
        util[(m, c)] = v / cap if cap > 0 else (0.0 if v == 0 else math.inf)
    return CostReport(
        investment=investment, amortized=amortized, operating=sum(per_part.values()),
        operating_per_part=dict(sorted(per_part.items())), load=load, utilization=util,
        unit_time=unit_time,
    )


def movement_score(g: GroupingSolution, inst: Instance, w_cell: float = 1.0,
                   w_mach: float = 1.0) -> float:
    """Weighted count of consecutive pairs kept inside one cell."""
    total = 0.0
    for k, p in g.plan_selection.items():
        for i, j in consecutive_pairs(inst.part(k).plan(p)):
            mi, ci = g.assignment[(k, p, i)]
            mj, cj = g.assignment[(k, p, j)]
            if ci == cj:
                total += w_mach if mi == mj else w_cell
    return total


def objective_of(g: GroupingSolution, inst: Instance, setting: Setting) -> float:
    if setting.kind in MOVEMENT_KINDS:
        return movement_score(g, inst, setting.w_cell, setting.w_mach)
    costs = cost_breakdown(g, inst)
    if setting.kind == "II":
        return costs.investment
    return costs.amortized + costs.operating


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class Violation:
    constraint: str
    where: str
    slack: float

    def __str__(self) -> str:
        return f"({self.constraint}) at {self.where}: slack {self.slack:g}"


@dataclass
class FeasibilityReport:
    violations: list[Violation]
    objective: float | None

    @property
    def feasible(self) -> bool:
        return not self.violations


def verify_solution(g: GroupingSolution, inst: Instance, kind: str,
                    opts: FormulationOptions | None = None, tol: float = 1e-6) -> FeasibilityReport:
    """Re-check every constraint of formulation ``kind`` from instance data.

    Constraint ids: ``plan``, ``assign``, ``single_cell`` (a part split
    across cells where cells must be disjoint), ``capacity``, ``cell_min``,
    ``cell_max``, ``availability``, ``operating_limit``,
    ``investment_budget``, and ``domain`` for malformed assignments or
    allocations.
    """
    s = resolve(inst, kind, opts)
    out: list[Violation] = []

    def add(cid: str, where: str, slack: float) -> None:
        out.append(Violation(cid, where, slack))

    disjoint = kind in DISJOINT_KINDS

    for part in inst.parts:
        p = g.plan_selection.get(part.id)
        if p is None or p not in {pl.id for pl in part.plans}:
            add("plan", f"part {part.id}", -1)
    for k in g.plan_selection:
        if k not in {part.id for part in inst.parts}:
            add("plan", f"part {k}", -1)

    for part in inst.parts:
        p = g.plan_selection.get(part.id)
        if p is None or p not in {pl.id for pl in part.plans}:
            continue
        plan = part.plan(p)
        cells_used = set()
        for op in plan.operations:
            got = g.assignment.get((part.id, p, op.id))
            if got is None:
                add("assign", f"k{part.id} p{p} s{op.id}", -1)
                continue
            m, c = got
            if m not in op.machines or not (1 <= c <= s.C):
                add("domain", f"k{part.id} p{p} s{op.id} -> ({m}, {c})", -1)
            cells_used.add(c)
        if disjoint and len(cells_used) > 1:
            add("single_cell", f"part {part.id} cells {sorted(cells_used)}",
                -(len(cells_used) - 1))
    for (k, p, sid) in g.assignment:
        if g.plan_selection.get(k) != p:
            add("assign", f"k{k} p{p} s{sid} (plan not selected)", -1)

    for key, n in g.allocation.items():
        if n < 0 or n != int(n):
            add("domain", f"N{list(key)} = {n}", -1)

    costs = cost_breakdown(g, inst)
    for mt in inst.machines:
        for c in range(1, s.C + 1):
            slack = mt.capacity * g.allocation.get((mt.id, c), 0) - costs.load.get((mt.id, c), 0.0)
            if slack < -tol:
                add("capacity", f"(m{mt.id}, c{c})", slack)
    for c in range(1, s.C + 1):
        size = sum(g.allocation.get((mt.id, c), 0) for mt in inst.machines)
        if kind == "I" and size < s.min_c[c - 1]:
            add("cell_min", f"cell {c}", size - s.min_c[c - 1])
        hi = s.max_c[c - 1]
        if hi is not None and size > hi:
            add("cell_max", f"cell {c}", hi - size)
    if kind == "I":
        for mt in inst.machines:
            used = sum(g.allocation.get((mt.id, c), 0) for c in range(1, s.C + 1))
            if used > mt.available:
                add("availability", f"m{mt.id}", mt.available - used)
    if s.toc is not None and costs.operating > s.toc + tol:
        add("operating_limit", "total", s.toc - costs.operating)
    if s.budget is not None and costs.investment > s.budget + tol:
        add("investment_budget", "total", s.budget - costs.investment)

    try:
        obj = objective_of(g, inst, s)
    except KeyError:
        obj = None
    return FeasibilityReport(out, obj)


# ---------------------------------------------------------------------------
# exhaustive oracle


class OracleGuardExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    status: str
    objective: float | None
    solution: GroupingSolution | None
    candidates: int


@dataclass
class _PartOptions:
    part: int
    plans: list[int]
    choices: list[tuple[tuple[int, int], ...]]  # (m, c) per operation
    load: np.ndarray  # (n_options, M*C)
    score: np.ndarray
    opcost: np.ndarray


def _part_options(inst: Instance, part, s: Setting, single_cell: bool) -> _PartOptions:
    mpos = {mt.id: n for n, mt in enumerate(inst.machines)}
    C = s.C
    plans, choices, loads, scores, costs = [], [], [], [], []
    for plan in part.plans:
        pairs = consecutive_pairs(plan)
        slots = [[(m, c) for m in sorted(op.machines) for c in range(1, C + 1)]
                 for op in plan.operations]
        for combo in itertools.product(*slots):
            if single_cell and len({c for _, c in combo}) > 1:
                continue
            load = np.zeros(len(inst.machines) * C)
            cost = 0.0
            for op, (m, c) in zip(plan.operations, combo):
                e = op.on(m)
                load[mpos[m] * C + c - 1] += part.demand * e.time
                cost += part.demand * e.cost
            where = dict(zip(plan.op_ids, combo))
            score = 0.0
            for i, j in pairs:
                (mi, ci), (mj, cj) = where[i], where[j]
                if ci == cj:
                    score += s.w_mach if mi == mj else s.w_cell
            plans.append(plan.id)
            choices.append(combo)
            loads.append(load)
            scores.append(score)
            costs.append(cost)
    return _PartOptions(
        part=part.id, plans=plans, choices=choices,
        load=np.array(loads).reshape(len(loads), len(inst.machines) * C),
        score=np.array(scores), opcost=np.array(costs),
    )


def oracle_size(inst: Instance, kind: str, opts: FormulationOptions | None = None) -> int:
    """Number of (plan selection, assignment) candidates the oracle visits."""
    s = resolve(inst, kind, opts)
    single = kind in DISJOINT_KINDS
    total = 1
    for part in inst.parts:
        n = 0
        for plan in part.plans:
            per = math.prod(len(op.eligible) for op in plan.operations)
            n += per * s.C if single else per * s.C ** len(plan.operations)
        total *= n
    return total


def _pad_allocation(N: np.ndarray, inst: Instance, s: Setting) -> np.ndarray | None:
    """Top up cells below their minimum size with the cheapest spare machines."""
    N = N.copy()
    order = sorted(range(len(inst.machines)),
                   key=lambda n: (inst.machines[n].invest_cost, inst.machines[n].id))
    spare = [inst.machines[n].available - N[n].sum() for n in range(len(inst.machines))]
    for c in range(s.C):
        need = s.min_c[c] - N[:, c].sum()
        for n in order:
            while need > 0 and spare[n] > 0:
                N[n, c] += 1
                spare[n] -= 1
                need -= 1
        if need > 0:
            return None
    return N


def semantic_oracle(inst: Instance, kind: str, opts: FormulationOptions | None = None,
                    guard: int = 50_000_000, block: int = 200_000) -> OracleResult:
    """Optimum of formulation ``kind`` by enumerating plan choices and placements.

    Candidates are ordered part by part (part 1 outermost); within a part,
    plans ascending, then operations' (machine, cell) choices
    lexicographically.  Each candidate gets the fewest machine copies its
    loads need, which is optimal for the cost objectives and least
    restrictive for the movement ones; under formulation I cells below the
    minimum size are padded with the cheapest spare copies.  The first
    optimum in that order is returned.
    """
    s = resolve(inst, kind, opts)
    if kind == "I":
        missing = [mt.id for mt in inst.machines if mt.available is None]
        if missing:
            raise ValueError(f"formulation I needs available copies for machines {missing}")
    size = oracle_size(inst, kind, opts)
    if size > guard:
        raise OracleGuardExceeded(f"{size} candidates exceed guard {guard}")
    single = kind in DISJOINT_KINDS
    parts = [_part_options(inst, part, s, single) for part in inst.parts]
    M, C = len(inst.machines), s.C
    cap = np.repeat([mt.capacity for mt in inst.machines], C)
    invest = np.array([mt.invest_cost for mt in inst.machines])
    amort = np.array([mt.amortized for mt in inst.machines])
    avail = np.array([mt.available if mt.available is not None else 0 for mt in inst.machines])
    max_c = np.array([np.inf if h is None else h for h in s.max_c])
    maximize = kind in MOVEMENT_KINDS

    # vectorise over a suffix of parts, loop over the prefix
    split = len(parts) - 1
    while split > 0 and math.prod(len(p.plans) for p in parts[split - 1:]) <= block:
        split -= 1
    head, tail = parts[:split], parts[split:]
    grids = np.meshgrid(*[np.arange(len(p.plans)) for p in tail], indexing="ij")
    tail_idx = [gr.ravel() for gr in grids]
    t_load = sum(p.load[ix] for p, ix in zip(tail, tail_idx))
    t_score = sum(p.score[ix] for p, ix in zip(tail, tail_idx))
    t_cost = sum(p.opcost[ix] for p, ix in zip(tail, tail_idx))

    best_val, best = None, None
    for combo in itertools.product(*[range(len(p.plans)) for p in head]):
        load = t_load + sum((p.load[o] for p, o in zip(head, combo)), np.zeros(M * C))
        score = t_score + sum(p.score[o] for p, o in zip(head, combo))
        opcost = t_cost + sum(p.opcost[o] for p, o in zip(head, combo))
        N = np.ceil(load / cap - 1e-9).astype(int).reshape(-1, M, C)
        size_c = N.sum(axis=1)
        ok = (size_c <= max_c).all(axis=1)
        if kind == "I":
            used = N.sum(axis=2)
            ok &= (used <= avail).all(axis=1)
            deficit = np.maximum(np.array(s.min_c) - size_c, 0).sum(axis=1)
            ok &= deficit <= (avail - used).sum(axis=1)
        inv = (N.sum(axis=2) * invest).sum(axis=1)
        if s.budget is not None:
            ok &= inv <= s.budget + 1e-9
        if s.toc is not None:
            ok &= opcost <= s.toc + 1e-9
        if kind in MOVEMENT_KINDS:
            val = score
        elif kind == "II":
            val = inv.astype(float)
        else:
            val = (N.sum(axis=2) * amort).sum(axis=1) + opcost
        if not ok.any():
            continue
        cand = np.where(ok, val, -np.inf if maximize else np.inf)
        r = int(np.argmax(cand) if maximize else np.argmin(cand))
        v = float(cand[r])
        if best_val is None or (
            v > best_val + 1e-9 * max(1, abs(v)) if maximize else v < best_val - 1e-9 * max(1, abs(v))
        ):
            best_val = v
            best = (combo, tuple(int(ix[r]) for ix in tail_idx), N[r])

    if best is None:
        return OracleResult("infeasible", None, None, size)
    combo, tail_pick, N = best
    if kind == "I":
        N = _pad_allocation(N, inst, s)
    plan_selection, assignment = {}, {}
    for p, o in zip(parts, tuple(combo) + tail_pick):
        plan = p.plans[o]
        plan_selection[p.part] = plan
        for op_id, mc in zip(inst.part(p.part).plan(plan).op_ids, p.choices[o]):
            assignment[(p.part, plan, op_id)] = mc
    allocation = {(mt.id, c + 1): int(N[n, c]) for n, mt in enumerate(inst.machines) for c in range(C)}
    g = GroupingSolution(kind=kind, C=C, plan_selection=plan_selection,
                         assignment=assignment, allocation=allocation, objective=best_val)
    return OracleResult(OPTIMAL, best_val, g, size)
