"""A small mixed-integer linear programming layer.

:class:`Model` is a plain container of variables, linear constraints and a
linear objective.  Two engines work on it:

* :func:`solve_bb` -- depth-first branch and bound over LP relaxations
  (HiGHS via :func:`scipy.optimize.linprog`), most-fractional branching.
* :func:`brute_force_model` -- exhaustive enumeration of every integral
  assignment with interval feasibility checks; used as a test oracle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"
KINDS = (BINARY, INTEGER, CONTINUOUS)
RELATIONS = ("<=", "==", ">=")

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit_reached"


class ModelError(ValueError):
    """A model violates its structural invariants."""


class GuardExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the allowed size."""


@dataclass(frozen=True)
class Var:
    name: str
    kind: str
    lb: float
    ub: float

    @property
    def integral(self) -> bool:
        return self.kind != CONTINUOUS


@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[int, float], ...]
    rel: str
    rhs: float
    name: str = ""

    def activity(self, x) -> float:
        return sum(a * x[j] for j, a in self.terms)

    def slack(self, x) -> float:
        """Signed slack; negative means violated."""
        act = self.activity(x)
        if self.rel == "<=":
            return self.rhs - act
        if self.rel == ">=":
            return act - self.rhs
        return -abs(act - self.rhs)


class Model:
    """Variables, linear constraints and a linear objective.

    Variables are referred to by their position (the value returned by
    :meth:`add_var`).  Build the model once, then treat it as read-only.
    """

    def __init__(self, name: str = "model", sense: str = "minimize"):
        self.name = name
        self.variables: list[Var] = []
        self.constraints: list[Constraint] = []
        self.sense = sense
        self.objective: dict[int, float] = {}
        self.constant = 0.0
        self._names: dict[str, int] = {}

    def add_var(self, name: str, kind: str = BINARY, lb: float = 0, ub: float = 1) -> int:
        if kind not in KINDS:
            raise ModelError(f"variable {name!r}: unknown kind {kind!r}")
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lb, ub = 0, 1
        self.variables.append(Var(name, kind, lb, ub))
        self._names[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_constraint(
        self, terms: Mapping[int, float] | Iterable[tuple[int, float]], rel: str,
        rhs: float, name: str = "",
    ) -> int:
        if isinstance(terms, Mapping):
            terms = terms.items()
        merged: dict[int, float] = {}
        for j, a in terms:
            merged[j] = merged.get(j, 0.0) + a
        self.constraints.append(
            Constraint(tuple((j, a) for j, a in merged.items() if a != 0), rel, rhs, name)
        )
        return len(self.constraints) - 1

    def set_objective(self, terms: Mapping[int, float], sense: str | None = None,
                      constant: float = 0.0) -> None:
        if sense is not None:
            self.sense = sense
        self.objective = {j: a for j, a in terms.items() if a != 0}
        self.constant = constant

    def index(self, name: str) -> int:
        return self._names[name]

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def counts(self) -> dict[str, int]:
        out = {BINARY: 0, INTEGER: 0, CONTINUOUS: 0}
        for v in self.variables:
            out[v.kind] += 1
        out["constraints"] = len(self.constraints)
        return out

    def evaluate(self, x) -> float:
        return self.constant + sum(a * x[j] for j, a in self.objective.items())

    def check(self) -> None:
        """Raise :class:`ModelError` naming the first malformed element."""
        if self.sense not in ("minimize", "maximize"):
            raise ModelError(f"unknown objective sense {self.sense!r}")
        n = self.num_vars
        for v in self.variables:
            if not (math.isfinite(v.lb) and math.isfinite(v.ub)):
                raise ModelError(f"variable {v.name!r}: bounds must be finite")
            if v.lb > v.ub:
                raise ModelError(f"variable {v.name!r}: lb {v.lb} > ub {v.ub}")
            if v.integral and (v.lb != math.floor(v.lb) or v.ub != math.floor(v.ub)):
                raise ModelError(f"variable {v.name!r}: integer bounds must be integral")
        for i, con in enumerate(self.constraints):
            label = con.name or f"#{i}"
            if con.rel not in RELATIONS:
                raise ModelError(f"constraint {label}: unknown relation {con.rel!r}")
            if not math.isfinite(con.rhs):
                raise ModelError(f"constraint {label}: rhs must be finite")
            for j, a in con.terms:
                if not (0 <= j < n):
                    raise ModelError(f"constraint {label}: undeclared variable {j}")
                if not math.isfinite(a):
                    raise ModelError(f"constraint {label}: non-finite coefficient")
        for j, a in self.objective.items():
            if not (0 <= j < n):
                raise ModelError(f"objective: undeclared variable {j}")
            if not math.isfinite(a):
                raise ModelError("objective: non-finite coefficient")
        if not math.isfinite(self.constant):
            raise ModelError("objective: non-finite constant")

    def copy(self) -> "Model":
        other = Model(self.name, self.sense)
        other.variables = list(self.variables)
        other.constraints = list(self.constraints)
        other.objective = dict(self.objective)
        other.constant = self.constant
        other._names = dict(self._names)
        return other

    def to_lp(self) -> str:
        """LP-format style dump for eyeballing or feeding to other solvers."""

        def expr(terms) -> str:
            parts = []
            for j, a in terms:
                sign = "-" if a < 0 else "+"
                parts.append(f"{sign} {abs(a):g} {self.variables[j].name}")
            s = " ".join(parts) or "0"
            return s[2:] if s.startswith("+ ") else s

        rel = {"<=": "<=", ">=": ">=", "==": "="}
        lines = [f"\\ {self.name}", "Maximize" if self.sense == "maximize" else "Minimize"]
        lines.append(f" obj: {expr(sorted(self.objective.items()))}")
        lines.append("Subject To")
        for i, con in enumerate(self.constraints):
            lines.append(f" {con.name or f'c{i}'}: {expr(con.terms)} {rel[con.rel]} {con.rhs:g}")
        lines.append("Bounds")
        for v in self.variables:
            if v.kind != BINARY:
                lines.append(f" {v.lb:g} <= {v.name} <= {v.ub:g}")
        for kind, head in ((BINARY, "Binary"), (INTEGER, "General")):
            names = [v.name for v in self.variables if v.kind == kind]
            if names:
                lines.append(head)
                lines.extend(f" {n}" for n in names)
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SolverOptions:
    node_limit: int | None = None
    time_limit: float | None = None
    branching: str = "most_fractional"
    tol: float = 1e-6
    record_nodes: bool = False

    def __post_init__(self):
        if self.node_limit is not None and self.node_limit < 0:
            raise ValueError("node_limit must be nonnegative")
        if self.time_limit is not None and self.time_limit < 0:
            raise ValueError("time_limit must be nonnegative")
        if self.branching not in ("most_fractional", "first_fractional"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass
class MilpSolution:
    status: str
    values: np.ndarray | None = None
    objective_value: float | None = None
    best_bound: float | None = None
    nodes: int = 0
    wall_time: float = 0.0
    node_log: list[tuple] = field(default_factory=list)

    @property
    def certificate(self) -> dict:
        return {"best_bound": self.best_bound, "nodes": self.nodes, "wall_time": self.wall_time}


# ---------------------------------------------------------------------------
# LP relaxation


class _Relaxation:
    """The model in ``min c.x`` form, ready for repeated LP solves."""

    def __init__(self, model: Model):
        model.check()
        self.model = model
        n = model.num_vars
        self.flip = -1.0 if model.sense == "maximize" else 1.0
        self.c = np.zeros(n)
        for j, a in model.objective.items():
            self.c[j] = self.flip * a
        ub_rows, eq_rows = [], []
        for con in model.constraints:
            if con.rel == "==":
                eq_rows.append((con.terms, con.rhs))
            elif con.rel == "<=":
                ub_rows.append((con.terms, con.rhs))
            else:
                ub_rows.append((tuple((j, -a) for j, a in con.terms), -con.rhs))
        self.A_ub, self.b_ub = self._stack(ub_rows, n)
        self.A_eq, self.b_eq = self._stack(eq_rows, n)
        self.lb = np.array([v.lb for v in model.variables], dtype=float)
        self.ub = np.array([v.ub for v in model.variables], dtype=float)
        self.integral = np.array([v.integral for v in model.variables], dtype=bool)

    @staticmethod
    def _stack(rows, n):
        if not rows:
            return None, None
        data, ri, ci = [], [], []
        for r, (terms, _) in enumerate(rows):
            for j, a in terms:
                ri.append(r)
                ci.append(j)
                data.append(a)
        A = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        return A, np.array([b for _, b in rows], dtype=float)

    def solve(self, lb: np.ndarray, ub: np.ndarray):
        """Return (status, x, value) with value in internal minimize form."""
        if self.model.num_vars == 0:
            return OPTIMAL, np.zeros(0), 0.0
        res = linprog(
            self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
            bounds=np.column_stack([lb, ub]), method="highs",
        )
        if res.status == 0:
            return OPTIMAL, res.x, float(res.fun)
        if res.status == 2:
            return INFEASIBLE, None, math.inf
        if res.status == 3:
            return UNBOUNDED, None, -math.inf
        raise RuntimeError(f"LP solver failed: {res.message}")


def relaxation_bound(model: Model) -> float:
    """LP-relaxation bound on the integer optimum, in the model's own sense.

    For maximisation the result is >= the integer optimum, for minimisation
    it is <=.  An infeasible relaxation yields -inf (max) or +inf (min); an
    unbounded one yields +inf (max) or -inf (min).
    """
    rel = _Relaxation(model)
    status, _, val = rel.solve(rel.lb, rel.ub)
    if status == INFEASIBLE:
        return -math.inf if model.sense == "maximize" else math.inf
    if status == UNBOUNDED:
        return math.inf if model.sense == "maximize" else -math.inf
    return rel.flip * val + model.constant


# ---------------------------------------------------------------------------
# branch and bound


def _pick_branch(x: np.ndarray, integral: np.ndarray, tol: float, rule: str) -> int | None:
    frac = np.abs(x - np.round(x))
    frac[~integral] = 0.0
    cand = np.flatnonzero(frac > tol)
    if cand.size == 0:
        return None
    if rule == "first_fractional":
        return int(cand[0])
    # distance to nearest integer; argmax returns the lowest index on ties
    return int(cand[np.argmax(frac[cand])])


def solve_bb(model: Model, opts: SolverOptions | None = None) -> MilpSolution:
    """Solve ``model`` to proven optimality by LP-based branch and bound.

    Depth-first search; the branching variable is the integral variable whose
    LP value is furthest from an integer (lowest index on ties).  Under
    maximisation the round-up child is explored first, under minimisation
    the round-down child.  The run is deterministic for fixed options.
    """
    opts = opts or SolverOptions()
    start = time.perf_counter()
    rel = _Relaxation(model)
    tol = opts.tol
    maximize = model.sense == "maximize"
    up_first = maximize

    incumbent_x = None
    incumbent = math.inf  # internal minimize form
    nodes = 0
    log: list[tuple] = []
    stack = [(rel.lb.copy(), rel.ub.copy(), -math.inf)]
    limit_hit = False
    unbounded = False

    def dominated(bound: float) -> bool:
        # cannot beat the incumbent by more than the optimality tolerance
        return math.isfinite(incumbent) and bound >= incumbent - tol * max(1.0, abs(incumbent))

    while stack:
        if (opts.node_limit is not None and nodes >= opts.node_limit) or (
            opts.time_limit is not None and time.perf_counter() - start > opts.time_limit
        ):
            limit_hit = True
            break
        lb, ub, parent_bound = stack.pop()
        if dominated(parent_bound):
            if opts.record_nodes:
                log.append((nodes, parent_bound, "pruned_parent"))
            continue
        nodes += 1
        status, x, val = rel.solve(lb, ub)
        if status == INFEASIBLE:
            if opts.record_nodes:
                log.append((nodes, math.inf, "infeasible"))
            continue
        if status == UNBOUNDED:
            unbounded = True
            break
        if dominated(val):
            if opts.record_nodes:
                log.append((nodes, val, "pruned"))
            continue
        j = _pick_branch(x, rel.integral, tol, opts.branching)
        if j is None:
            xi = x.copy()
            xi[rel.integral] = np.round(xi[rel.integral])
            incumbent_x = xi
            incumbent = float(rel.c @ xi)
            if opts.record_nodes:
                log.append((nodes, val, "incumbent"))
            continue
        if opts.record_nodes:
            log.append((nodes, val, "branch", j))
        down_ub = ub.copy()
        down_ub[j] = math.floor(x[j])
        up_lb = lb.copy()
        up_lb[j] = math.ceil(x[j])
        down = (lb, down_ub, val)
        up = (up_lb, ub, val)
        # last pushed is explored first
        if up_first:
            stack.extend([down, up])
        else:
            stack.extend([up, down])

    elapsed = time.perf_counter() - start

    def external(v: float) -> float:
        return rel.flip * v + model.constant

    if unbounded:
        return MilpSolution(UNBOUNDED, nodes=nodes, wall_time=elapsed, node_log=log)
    if limit_hit:
        open_bound = min([b for _, _, b in stack], default=incumbent)
        bound = min(open_bound, incumbent)
        return MilpSolution(
            LIMIT,
            values=incumbent_x,
            objective_value=None if incumbent_x is None else external(incumbent),
            best_bound=external(bound) if math.isfinite(bound) else None,
            nodes=nodes, wall_time=elapsed, node_log=log,
        )
    if incumbent_x is None:
        return MilpSolution(INFEASIBLE, nodes=nodes, wall_time=elapsed, node_log=log)
    obj = external(incumbent)
    return MilpSolution(
        OPTIMAL, values=incumbent_x, objective_value=obj, best_bound=obj,
        nodes=nodes, wall_time=elapsed, node_log=log,
    )


# ---------------------------------------------------------------------------
# exhaustive enumeration oracle


def enumeration_size(model: Model) -> int:
    size = 1
    for v in model.variables:
        if v.integral:
            size *= int(v.ub - v.lb) + 1
    return size


def brute_force_model(model: Model, guard: int = 1 << 20, tol: float = 1e-6) -> MilpSolution:
    """Exact optimum of ``model`` by enumerating every integral assignment.

    Partial assignments are abandoned as soon as some constraint cannot be
    met whatever the remaining variables do (interval check on activities);
    the objective is never used to cut the search, so no bound is involved.
    Continuous variables must be separable: each constraint may mention at
    most one of them.  With the integral part fixed, each continuous variable
    then lies in an interval and takes the endpoint favoured by the objective.
    The first optimum in enumeration order (variables in model order, values
    ascending) is returned.
    """
    model.check()
    size = enumeration_size(model)
    if size > guard:
        raise GuardExceeded(f"enumeration size {size} exceeds guard {guard}")
    start = time.perf_counter()
    vars_ = model.variables
    n = len(vars_)
    cons = model.constraints
    ints = [j for j, v in enumerate(vars_) if v.integral]
    conts = [j for j, v in enumerate(vars_) if not v.integral]
    cont_rows: dict[int, list[int]] = {j: [] for j in conts}
    for r, con in enumerate(cons):
        cs = [j for j, _ in con.terms if not vars_[j].integral]
        if len(cs) > 1:
            raise ModelError(
                f"constraint {con.name or r}: brute force needs at most one continuous variable per row"
            )
        if cs:
            cont_rows[cs[0]].append(r)

    sign = 1.0 if model.sense == "maximize" else -1.0
    lo = np.array([v.lb for v in vars_], dtype=float)
    hi = np.array([v.ub for v in vars_], dtype=float)
    minact = [sum(a * (lo[j] if a > 0 else hi[j]) for j, a in c.terms) for c in cons]
    maxact = [sum(a * (hi[j] if a > 0 else lo[j]) for j, a in c.terms) for c in cons]
    col: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for r, c in enumerate(cons):
        for j, a in c.terms:
            col[j].append((r, a))
    rels = [c.rel for c in cons]
    rhs = [c.rhs for c in cons]

    def row_ok(r: int) -> bool:
        if rels[r] == "<=":
            return minact[r] <= rhs[r] + tol
        if rels[r] == ">=":
            return maxact[r] >= rhs[r] - tol
        return minact[r] <= rhs[r] + tol and maxact[r] >= rhs[r] - tol

    x = lo.copy()
    best = {"val": -math.inf, "x": None}

    def leaf() -> None:
        for j in conts:
            a_lo, a_hi = lo[j], hi[j]
            for r in cont_rows[j]:
                con = cons[r]
                a = 0.0
                rest = 0.0
                for jj, cc in con.terms:
                    if jj == j:
                        a = cc
                    else:
                        rest += cc * x[jj]
                room = con.rhs - rest
                if con.rel in ("<=", "=="):
                    if a > 0:
                        a_hi = min(a_hi, room / a)
                    else:
                        a_lo = max(a_lo, room / a)
                if con.rel in (">=", "=="):
                    if a > 0:
                        a_lo = max(a_lo, room / a)
                    else:
                        a_hi = min(a_hi, room / a)
            if a_lo > a_hi + tol:
                return
            cj = sign * model.objective.get(j, 0.0)
            x[j] = a_hi if cj > 0 else min(a_lo, a_hi)
        val = sign * model.evaluate(x)
        if val > best["val"] + tol * max(1.0, abs(val)):
            best["val"] = val
            best["x"] = x.copy()

    def fix(j: int, v: float) -> bool:
        ok = True
        for r, a in col[j]:
            if a > 0:
                minact[r] += a * (v - lo[j])
                maxact[r] += a * (v - hi[j])
            else:
                minact[r] += a * (v - hi[j])
                maxact[r] += a * (v - lo[j])
            if ok and not row_ok(r):
                ok = False
        return ok

    def unfix(j: int, v: float) -> None:
        for r, a in col[j]:
            if a > 0:
                minact[r] -= a * (v - lo[j])
                maxact[r] -= a * (v - hi[j])
            else:
                minact[r] -= a * (v - hi[j])
                maxact[r] -= a * (v - lo[j])

    def rec(depth: int) -> None:
        if depth == len(ints):
            leaf()
            return
        j = ints[depth]
        for v in range(int(lo[j]), int(hi[j]) + 1):
            x[j] = v
            if fix(j, v):
                rec(depth + 1)
            unfix(j, v)
        x[j] = lo[j]

    if all(row_ok(r) for r in range(len(cons))):
        rec(0)
    elapsed = time.perf_counter() - start
    if best["x"] is None:
        return MilpSolution(INFEASIBLE, nodes=size, wall_time=elapsed)
    obj = model.evaluate(best["x"])
    return MilpSolution(OPTIMAL, values=best["x"], objective_value=obj, best_bound=obj,
                        nodes=size, wall_time=elapsed)


def check_solution(model: Model, x, tol: float = 1e-6) -> list[str]:
    """Constraint, bound and integrality violations of ``x``; empty when feasible."""
    out = []
    for j, v in enumerate(model.variables):
        if x[j] < v.lb - tol or x[j] > v.ub + tol:
            out.append(f"{v.name}: value {x[j]} outside [{v.lb}, {v.ub}]")
        if v.integral and abs(x[j] - round(x[j])) > tol:
            out.append(f"{v.name}: value {x[j]} not integral")
    for i, con in enumerate(model.constraints):
        s = con.slack(x)
        if s < -tol:
            out.append(f"{con.name or f'#{i}'}: violated by {-s:g}")
    return out
