"""Integer programs for grouping parts and machines into cells.

Five builds share one variable vocabulary:

==========  ==========================================  =========
kind        objective                                   sense
==========  ==========================================  =========
``I``       same-cell consecutive pairs (movements)     maximize
``II``      investment in machines                      minimize
``III``     amortized machine cost + operating cost     minimize
``phase1``  ``III`` with one uncapped cell              minimize
``IV``      same-cell consecutive pairs, budgeted       maximize
==========  ==========================================  =========

Variables are created parts, plans, operations, machines, cells ascending,
with Y before X before N before the linearization variables V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from .instance import Instance, consecutive_pairs, derived_stats
from .milp import BINARY, CONTINUOUS, INTEGER, Model, ModelError

KINDS = ("I", "II", "III", "IV", "phase1")
# objective weights that prefer keeping consecutive operations on one machine
PREFER_SAME_MACHINE = (1.0, 2.0)


@dataclass(frozen=True)
class FormulationOptions:
    """Weights and overrides applied on top of the instance data.

    ``w_cell`` multiplies products of consecutive operations placed on
    different machines of one cell, ``w_mach`` those placed on the same
    machine.  With the defaults the movement objective counts consecutive
    pairs kept inside a cell.
    """

    w_cell: float = 1.0
    w_mach: float = 1.0
    operating_limit: float | None = None
    investment_budget: float | None = None
    cells: int | None = None
    min_per_cell: int | None = None
    max_per_cell: int | None = None

    def __post_init__(self):
        if self.w_cell < 0 or self.w_mach < 0:
            raise ValueError("objective weights must be nonnegative")
        if self.w_cell == 0 and self.w_mach == 0:
            raise ValueError("objective weights must not both be zero")
        if self.cells is not None and self.cells < 1:
            raise ValueError("cell count must be >= 1")
        for name in ("operating_limit", "investment_budget", "min_per_cell", "max_per_cell"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class Setting:
    """Resolved parameters for one build: overrides, then instance, then defaults."""

    kind: str
    C: int
    min_c: tuple[int, ...]
    max_c: tuple[int | None, ...]
    toc: float | None
    budget: float | None
    w_cell: float
    w_mach: float


def resolve(inst: Instance, kind: str, opts: FormulationOptions | None = None) -> Setting:
    if kind not in KINDS:
        raise ValueError(f"unknown formulation {kind!r}; expected one of {KINDS}")
    opts = opts or FormulationOptions()
    cells = inst.cells
    C = opts.cells if opts.cells is not None else cells.count
    if kind == "phase1":
        C = 1
    per_cell = opts.cells is None or opts.cells == cells.count

    def lower(c: int) -> int:
        if opts.min_per_cell is not None:
            return opts.min_per_cell
        if per_cell and cells.min_list is not None:
            return cells.min_list[c - 1]
        if cells.min_per_cell is not None:
            return cells.min_per_cell
        return 1 if kind == "I" else 0

    def upper(c: int) -> int | None:
        if opts.max_per_cell is not None:
            return opts.max_per_cell
        if per_cell and cells.max_list is not None:
            return cells.max_list[c - 1]
        return cells.max_per_cell

    min_c = tuple(lower(c) if kind == "I" else 0 for c in range(1, C + 1))
    max_c = tuple(None if kind == "phase1" else upper(c) for c in range(1, C + 1))
    for lo, hi in zip(min_c, max_c):
        if hi is not None and lo > hi:
            raise ValueError(f"minimum cell size {lo} exceeds maximum {hi}")
    toc = opts.operating_limit if opts.operating_limit is not None else inst.budgets.operating
    budget = (
        opts.investment_budget if opts.investment_budget is not None else inst.budgets.investment
    )
    return Setting(
        kind=kind, C=C, min_c=min_c, max_c=max_c,
        toc=toc if kind in ("II", "IV") else None,
        budget=budget if kind == "IV" else None,
        w_cell=opts.w_cell, w_mach=opts.w_mach,
    )


@dataclass
class VarIndex:
    """Two-way map between grouping keys and model variable positions.

    Keys: ``X[k, p, s, m, c]``, ``Y[k, p]`` (I/IV) or ``Y[k, p, c]``
    (II/III/phase1), ``N[m, c]`` and ``V[k, p, i, j, m, n, c]`` for the
    product of ``X[k, p, i, m, c]`` and ``X[k, p, j, n, c]``.
    """

    kind: str
    setting: Setting
    X: dict[tuple, int] = field(default_factory=dict)
    Y: dict[tuple, int] = field(default_factory=dict)
    N: dict[tuple, int] = field(default_factory=dict)
    V: dict[tuple, int] = field(default_factory=dict)

    def keys(self) -> dict[int, tuple[str, tuple]]:
        out = {}
        for fam in ("Y", "X", "N", "V"):
            for key, j in getattr(self, fam).items():
                out[j] = (fam, key)
        return out

    def __len__(self) -> int:
        return len(self.X) + len(self.Y) + len(self.N) + len(self.V)


@dataclass(frozen=True)
class ModelStats:
    binary: int
    integer: int
    continuous: int
    constraints: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.binary, self.integer, self.continuous, self.constraints)


def _name(fam: str, key: tuple) -> str:
    return f"{fam}_" + "_".join(str(v) for v in key)


def copies_cap(inst: Instance, m: int) -> int:
    """Copies of machine ``m`` that could ever be needed in one cell."""
    mt = inst.machine(m)
    load = 0.0
    for part, plan in inst.plans():
        for op in plan.operations:
            if m in op.machines:
                load += part.demand * op.on(m).time
    return max(1, math.ceil(load / mt.capacity - 1e-9))


def _add_y(model: Model, idx: VarIndex, inst: Instance, per_cell: bool) -> None:
    for part, plan in inst.plans():
        if per_cell:
            for c in range(1, idx.setting.C + 1):
                key = (part.id, plan.id, c)
                idx.Y[key] = model.add_var(_name("Y", key), BINARY)
        else:
            key = (part.id, plan.id)
            idx.Y[key] = model.add_var(_name("Y", key), BINARY)


def _add_x(model: Model, idx: VarIndex, inst: Instance) -> None:
    C = idx.setting.C
    for part, plan in inst.plans():
        for op in plan.operations:
            for m in sorted(op.machines):
                for c in range(1, C + 1):
                    key = (part.id, plan.id, op.id, m, c)
                    idx.X[key] = model.add_var(_name("X", key), BINARY)


def _add_n(model: Model, idx: VarIndex, inst: Instance, availability: bool) -> None:
    s = idx.setting
    for mt in inst.machines:
        for c in range(1, s.C + 1):
            cap = s.max_c[c - 1]
            if cap is None:
                cap = copies_cap(inst, mt.id)
            if availability:
                cap = min(cap, mt.available)
            key = (mt.id, c)
            idx.N[key] = model.add_var(_name("N", key), INTEGER, 0, cap)


def _plan_selection_rows(model: Model, idx: VarIndex, inst: Instance) -> None:
    # one plan per part; with per-cell Y also one cell
    for part in inst.parts:
        terms = [(j, 1.0) for key, j in idx.Y.items() if key[0] == part.id]
        model.add_constraint(terms, "==", 1, name=f"plan_k{part.id}")


def _assignment_rows(model: Model, idx: VarIndex, inst: Instance, per_cell: bool) -> None:
    C = idx.setting.C
    for part, plan in inst.plans():
        for op in plan.operations:
            if per_cell:
                for c in range(1, C + 1):
                    terms = [(idx.X[(part.id, plan.id, op.id, m, c)], 1.0) for m in sorted(op.machines)]
                    terms.append((idx.Y[(part.id, plan.id, c)], -1.0))
                    model.add_constraint(
                        terms, "==", 0, name=f"assign_k{part.id}_p{plan.id}_s{op.id}_c{c}"
                    )
            else:
                terms = [
                    (idx.X[(part.id, plan.id, op.id, m, c)], 1.0)
                    for m in sorted(op.machines)
                    for c in range(1, C + 1)
                ]
                terms.append((idx.Y[(part.id, plan.id)], -1.0))
                model.add_constraint(terms, "==", 0, name=f"assign_k{part.id}_p{plan.id}_s{op.id}")


def _load_rows(model: Model, idx: VarIndex, inst: Instance) -> None:
    for mt in inst.machines:
        for c in range(1, idx.setting.C + 1):
            terms = []
            for part, plan in inst.plans():
                for op in plan.operations:
                    if mt.id in op.machines:
                        terms.append(
                            (idx.X[(part.id, plan.id, op.id, mt.id, c)], part.demand * op.on(mt.id).time)
                        )
            terms.append((idx.N[(mt.id, c)], -mt.capacity))
            model.add_constraint(terms, "<=", 0, name=f"load_m{mt.id}_c{c}")


def _operating_terms(idx: VarIndex, inst: Instance) -> list[tuple[int, float]]:
    terms = []
    for (k, p, s, m, c), j in idx.X.items():
        part = inst.part(k)
        oc = part.plan(p).operation(s).on(m).cost
        terms.append((j, part.demand * oc))
    return terms


def _cell_size_rows(model: Model, idx: VarIndex, inst: Instance, lower: bool) -> None:
    s = idx.setting
    for c in range(1, s.C + 1):
        terms = [(idx.N[(mt.id, c)], 1.0) for mt in inst.machines]
        if lower:
            model.add_constraint(terms, ">=", s.min_c[c - 1], name=f"cellmin_c{c}")
        if s.max_c[c - 1] is not None:
            model.add_constraint(terms, "<=", s.max_c[c - 1], name=f"cellmax_c{c}")


def movement_products(inst: Instance, idx: VarIndex) -> list[tuple[tuple, int, int, float]]:
    """Products of consecutive-operation assignments sharing a cell.

    Each entry is ``(V key, X_i position, X_j position, coefficient)``.
    """
    s = idx.setting
    out = []
    for part, plan in inst.plans():
        for i, j in consecutive_pairs(plan):
            oi, oj = plan.operation(i), plan.operation(j)
            for c in range(1, s.C + 1):
                for m in sorted(oi.machines):
                    for n in sorted(oj.machines):
                        coef = s.w_mach if m == n else s.w_cell
                        key = (part.id, plan.id, i, j, m, n, c)
                        out.append((
                            key,
                            idx.X[(part.id, plan.id, i, m, c)],
                            idx.X[(part.id, plan.id, j, n, c)],
                            coef,
                        ))
    return out


def linearize_products(
    model: Model, products: Iterable[tuple[tuple, int, int, float]]
) -> tuple[Model, dict[tuple, int]]:
    """Replace binary products in a maximisation objective by bounded variables.

    Each product ``x_i * x_j`` becomes a continuous ``v`` in [0, 1] with
    ``v <= x_i`` and ``v <= x_j``.  The third inequality
    ``x_i + x_j - v <= 1`` is left out: with a nonnegative objective
    coefficient ``v`` is pushed up to ``min(x_i, x_j)`` anyway.  That
    argument needs maximisation and nonnegative coefficients, so anything
    else is rejected.  Returns a new model and the key -> variable map.
    """
    products = list(products)
    out = model.copy()
    if not products:
        return out, {}
    if model.sense != "maximize":
        raise ModelError("product linearization without the third inequality needs maximization")
    obj = dict(out.objective)
    keys: dict[tuple, int] = {}
    for key, xi, xj, coef in products:
        for j in (xi, xj):
            if model.variables[j].kind != BINARY:
                raise ModelError(f"product term {key}: {model.variables[j].name} is not binary")
        if coef < 0:
            raise ModelError(f"product term {key}: negative coefficient {coef} under maximization")
        v = out.add_var(_name("V", key), CONTINUOUS, 0, 1)
        keys[key] = v
        out.add_constraint([(v, 1.0), (xi, -1.0)], "<=", 0, name=f"lin_a_{v}")
        out.add_constraint([(v, 1.0), (xj, -1.0)], "<=", 0, name=f"lin_b_{v}")
        if coef:
            obj[v] = obj.get(v, 0.0) + coef
    out.set_objective(obj, constant=out.constant)
    return out, keys


# ---------------------------------------------------------------------------
# builders


def build_formulation_I(inst: Instance, opts: FormulationOptions | None = None):
    """Operational-level grouping: maximise consecutive pairs kept in one cell.

    Every machine type needs an available copy count; at most that many
    copies are spread over the cells.
    """
    missing = [mt.id for mt in inst.machines if mt.available is None]
    if missing:
        raise ValueError(f"formulation I needs available copies for machines {missing}")
    idx = VarIndex("I", resolve(inst, "I", opts))
    model = Model("formulation_I", "maximize")
    _add_y(model, idx, inst, per_cell=False)
    _add_x(model, idx, inst)
    _add_n(model, idx, inst, availability=True)
    _plan_selection_rows(model, idx, inst)
    _assignment_rows(model, idx, inst, per_cell=False)
    _load_rows(model, idx, inst)
    _cell_size_rows(model, idx, inst, lower=True)
    for mt in inst.machines:
        model.add_constraint(
            [(idx.N[(mt.id, c)], 1.0) for c in range(1, idx.setting.C + 1)],
            "<=", mt.available, name=f"avail_m{mt.id}",
        )
    model, idx.V = linearize_products(model, movement_products(inst, idx))
    return model, idx


def _build_disjoint(inst: Instance, kind: str, opts: FormulationOptions | None):
    idx = VarIndex(kind, resolve(inst, kind, opts))
    model = Model(f"formulation_{kind}", "minimize")
    _add_y(model, idx, inst, per_cell=True)
    _add_x(model, idx, inst)
    _add_n(model, idx, inst, availability=False)
    _plan_selection_rows(model, idx, inst)
    _assignment_rows(model, idx, inst, per_cell=True)
    if idx.setting.toc is not None:
        model.add_constraint(_operating_terms(idx, inst), "<=", idx.setting.toc, name="operating")
    _load_rows(model, idx, inst)
    _cell_size_rows(model, idx, inst, lower=False)
    return model, idx


def build_formulation_II(inst: Instance, opts: FormulationOptions | None = None):
    """Design-level grouping into disjoint cells at least investment cost."""
    model, idx = _build_disjoint(inst, "II", opts)
    model.set_objective({j: inst.machine(m).invest_cost for (m, c), j in idx.N.items()})
    return model, idx


def _amortized_objective(model: Model, idx: VarIndex, inst: Instance) -> None:
    obj: dict[int, float] = {}
    for (m, c), j in idx.N.items():
        obj[j] = inst.machine(m).amortized
    for j, a in _operating_terms(idx, inst):
        obj[j] = obj.get(j, 0.0) + a
    model.set_objective(obj)


def build_formulation_III(inst: Instance, opts: FormulationOptions | None = None):
    """Disjoint cells at least amortized machine cost plus operating cost."""
    model, idx = _build_disjoint(inst, "III", opts)
    _amortized_objective(model, idx, inst)
    return model, idx


def build_phase1_aggregate(inst: Instance, opts: FormulationOptions | None = None):
    """Total machine requirement and plan choice, without any cell structure.

    This is the first stage of a hierarchical design: formulation III with a
    single cell and no size limit.
    """
    model, idx = _build_disjoint(inst, "phase1", opts)
    _amortized_objective(model, idx, inst)
    return model, idx


def build_formulation_IV(inst: Instance, opts: FormulationOptions | None = None):
    """Design-level movement objective under an investment budget.

    Machines are bought, so there is no availability limit and no minimum
    cell size.  Without a budget the investment constraint is omitted.
    """
    idx = VarIndex("IV", resolve(inst, "IV", opts))
    model = Model("formulation_IV", "maximize")
    _add_y(model, idx, inst, per_cell=False)
    _add_x(model, idx, inst)
    _add_n(model, idx, inst, availability=False)
    _plan_selection_rows(model, idx, inst)
    _assignment_rows(model, idx, inst, per_cell=False)
    if idx.setting.toc is not None:
        model.add_constraint(_operating_terms(idx, inst), "<=", idx.setting.toc, name="operating")
    _load_rows(model, idx, inst)
    _cell_size_rows(model, idx, inst, lower=False)
    if idx.setting.budget is not None:
        model.add_constraint(
            [(j, inst.machine(m).invest_cost) for (m, c), j in idx.N.items()],
            "<=", idx.setting.budget, name="investment",
        )
    model, idx.V = linearize_products(model, movement_products(inst, idx))
    return model, idx


BUILDERS = {
    "I": build_formulation_I,
    "II": build_formulation_II,
    "III": build_formulation_III,
    "IV": build_formulation_IV,
    "phase1": build_phase1_aggregate,
}


def build(inst: Instance, kind: str, opts: FormulationOptions | None = None):
    if kind not in BUILDERS:
        raise ValueError(f"unknown formulation {kind!r}; expected one of {KINDS}")
    return BUILDERS[kind](inst, opts)


# ---------------------------------------------------------------------------
# model size


def measured_stats(model: Model) -> ModelStats:
    c = model.counts()
    return ModelStats(c[BINARY], c[INTEGER], c[CONTINUOUS], c["constraints"])


def formulation_stats(inst: Instance, kind: str = "II",
                      opts: FormulationOptions | None = None) -> ModelStats:
    """Model size of a formulation.

    For ``II`` this is the closed-form count (one operating-cost row
    included); other kinds are measured from the built model.
    """
    if kind != "II":
        return measured_stats(build(inst, kind, opts)[0])
    st = derived_stats(inst)
    C = resolve(inst, "II", opts).C
    return ModelStats(
        binary=C * (st.total_plans + st.total_eligibilities),
        integer=st.M * C,
        continuous=0,
        constraints=st.K + C * st.total_operations + 1 + st.M * C + C,
    )


def constraint_count_readings(inst: Instance, opts: FormulationOptions | None = None) -> dict:
    """Constraint count of formulation II with the per-plan term read two ways.

    ``"TS"`` counts one assignment row per operation and cell (what the
    model actually has); ``"TPP"`` counts one per plan and cell.
    """
    st = derived_stats(inst)
    C = resolve(inst, "II", opts).C
    base = st.K + 1 + st.M * C + C
    return {"TS": base + C * st.total_operations, "TPP": base + C * st.total_plans}


def rajamani_stats(inst: Instance, opts: FormulationOptions | None = None) -> ModelStats:
    """Closed-form size of the linearized Rajamani-Singh-Aneja model."""
    st = derived_stats(inst)
    C = resolve(inst, "II", opts).C
    tm = st.total_eligibilities
    return ModelStats(
        binary=st.total_plans + tm + st.K * C,
        integer=st.M * C,
        continuous=C * tm,
        constraints=2 * st.K + st.total_operations + st.M * C + 1 + C + 2 * C * tm + st.K * C,
    )


def with_operating_limit(opts: FormulationOptions | None, limit: float) -> FormulationOptions:
    return replace(opts or FormulationOptions(), operating_limit=limit)
