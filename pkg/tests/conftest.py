import os
import sys

import numpy as np
import pytest
from hypothesis import settings

from cellform.instance import example_instance
from cellform.random_instances import base_seed

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("fast", deadline=None, max_examples=10)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def example():
    return example_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(base_seed())


def single_op_doc(demand=10, time=5, capacity=100, cost=3, invest=100, amortized=40, available=1,
                  cells=1):
    return {
        "machines": [{"id": 1, "capacity": capacity, "available": available,
                      "invest_cost": invest, "amortized_cost": amortized}],
        "parts": [{"id": 1, "demand": demand, "plans": [
            {"id": 1, "sequence": "strict", "operations": [
                {"id": 1, "eligible": [{"machine": 1, "time": time, "cost": cost}]}]}]}],
        "cells": {"count": cells, "min_per_cell": None, "max_per_cell": None},
        "budgets": {"operating": None, "investment": None},
    }


@pytest.fixture(scope="session")
def solved(example):
    """Cache of branch-and-bound solves on the bundled example."""
    from cellform.analysis import decode
    from cellform.formulations import build
    from cellform.milp import solve_bb

    cache = {}

    def get(kind, opts=None):
        key = (kind, opts)
        if key not in cache:
            model, idx = build(example, kind, opts)
            sol = solve_bb(model)
            cache[key] = (model, idx, sol, decode(sol, idx, example) if sol.values is not None else None)
        return cache[key]

    return get


def tiny_instance(seed, limit=20_000, **kw):
    """Random instance whose exhaustive enumeration stays small."""
    from cellform.analysis import oracle_size
    from cellform.random_instances import random_instance

    rng = np.random.default_rng(seed)
    while True:
        inst = random_instance(rng, **kw)
        if oracle_size(inst, "I") <= limit:
            return inst


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(results.values()):
        terminalreporter.write_line(line)
