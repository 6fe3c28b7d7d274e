"""Seeded generator of tiny instances for property checks."""

from __future__ import annotations

import os

import numpy as np

from .instance import (
    Budgets, CellConfig, Eligibility, Instance, MachineType, OperationSpec, Part, ProcessPlan,
)

SEED_VAR = "CELLFORM_SEED"


def base_seed(default: int = 20261015) -> int:
    return int(os.environ.get(SEED_VAR, default))


def random_instance(
    rng: np.random.Generator,
    max_parts: int = 3,
    max_plans: int = 2,
    max_ops: int = 3,
    max_machines: int = 3,
    max_cells: int = 2,
    sequences: tuple[str, ...] = ("strict", "unordered"),
) -> Instance:
    """Small instance with integer data; every machine has an availability."""
    M = int(rng.integers(1, max_machines + 1))
    machines = tuple(
        MachineType(
            id=m,
            capacity=int(rng.integers(10, 31)),
            invest_cost=int(rng.integers(1, 10)) * 10,
            amortized_cost=int(rng.integers(1, 10)) * 10,
            available=int(rng.integers(1, 3)),
        )
        for m in range(1, M + 1)
    )
    parts = []
    for k in range(1, int(rng.integers(1, max_parts + 1)) + 1):
        plans = []
        for p in range(1, int(rng.integers(1, max_plans + 1)) + 1):
            ops = []
            for s in range(1, int(rng.integers(1, max_ops + 1)) + 1):
                n_elig = int(rng.integers(1, min(2, M) + 1))
                ms = sorted(int(m) for m in rng.choice(np.arange(1, M + 1), n_elig, replace=False))
                ops.append(OperationSpec(s, tuple(
                    Eligibility(m, int(rng.integers(1, 8)), int(rng.integers(0, 6))) for m in ms
                )))
            plans.append(ProcessPlan(p, tuple(ops), sequence=str(rng.choice(sequences))))
        parts.append(Part(k, int(rng.integers(1, 4)), tuple(plans)))
    C = int(rng.integers(1, max_cells + 1))
    hi = int(rng.integers(1, 4))
    return Instance(
        machines=machines,
        parts=tuple(parts),
        cells=CellConfig(count=C, min_per_cell=int(rng.integers(0, 2)) if hi >= 1 else 0,
                         max_per_cell=hi),
        budgets=Budgets(),
        name="random",
    )
