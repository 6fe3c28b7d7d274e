"""Cross-check bb, model brute force and the semantic oracle on random instances.

    CELLFORM_SEED=7 python3 scripts/random_agreement.py -n 200
"""

import argparse
import time
from collections import Counter

import numpy as np

from cellform.analysis import oracle_size, semantic_oracle
from cellform.formulations import KINDS, FormulationOptions, build
from cellform.milp import brute_force_model, solve_bb
from cellform.random_instances import base_seed, random_instance


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-n", type=int, default=100, help="number of instances")
    ap.add_argument("--max-candidates", type=int, default=20_000,
                    help="skip instances whose oracle enumeration is larger")
    args = ap.parse_args()

    seed = base_seed()
    rng = np.random.default_rng(seed)
    tally, bad = Counter(), 0
    t0 = time.perf_counter()
    done = 0
    while done < args.n:
        inst = random_instance(rng)
        if oracle_size(inst, "I") > args.max_candidates:
            continue
        done += 1
        for kind in KINDS:
            opts = FormulationOptions(investment_budget=float(rng.integers(20, 200))) if kind == "IV" else None
            model, _ = build(inst, kind, opts)
            a, b, c = solve_bb(model), brute_force_model(model, guard=10**60), semantic_oracle(inst, kind, opts)
            tally[kind, a.status] += 1
            same = a.status == b.status == c.status and (
                a.objective_value is None
                or abs(a.objective_value - b.objective_value) + abs(a.objective_value - c.objective) < 1e-6
            )
            if not same:
                bad += 1
                print(f"instance {done} {kind}: bb {a.status} {a.objective_value}, "
                      f"brute {b.status} {b.objective_value}, oracle {c.status} {c.objective}")
    print(f"seed {seed}: {done} instances, {bad} disagreements, {time.perf_counter() - t0:.1f}s")
    for (kind, status), n in sorted(tally.items()):
        print(f"  {kind:7} {status:11} {n}")


if __name__ == "__main__":
    main()
