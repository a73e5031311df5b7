"""Smoke test for the cs_bandits_py extension module.

Build the extension first (see README), then run:

    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import cs_bandits_py as cb


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # round arithmetic
    assert cb.sample_quota(5e6, 1.0) == 31
    assert close(cb.exploration_bonus(5e6, 1.0, 31), 0.498788, 1e-6)
    assert cb.max_round(5_000_000) == 10
    assert cb.presumed_gap(3) == 0.125
    assert cb.etc_exploration_budget(100_000, 4) == 4275

    # instances and gap profiles
    asym = cb.Instance.asymmetric_pe()
    assert len(asym) == 4 and asym.means == [0.74, 0.5, 0.8, 0.75]
    profile = cb.gap_profile(asym, cb.Setting.known_ell(3, 0.0))
    assert profile["a_star"] == 3 and close(profile["mu_cs"], 0.8)
    assert close(profile["delta_c"][3], 0.04) and close(profile["delta_q"][0], 0.06)

    custom = cb.Instance([0.9, 0.2], [0.5, 0.1], name="two")
    assert custom.costs == [0.1, 0.5], "arms are stored in cost order"
    assert custom.to_csv().startswith("label,mean,cost")

    # bounds
    toy = cb.Instance.toy(0.6)
    report = json.loads(cb.bound_report(toy, cb.Setting.known_ell(3, 0.2), 100_000))
    assert close(report["lower"]["coefficients"][0], 78.125)
    assert close(report["lower"]["coefficients"][2], 512.0)

    # simulation
    one = cb.run_single("pe", asym, cb.Setting.known_ell(3, 0.0), 20_000, seed=3)
    assert sum(one["pulls"]) == 20_000
    assert one["checkpoints"][-1][0] == 20_000
    decomposed = sum(n * dc for n, dc in zip(one["pulls"], profile["delta_c"]))
    assert close(one["cost_regret"], decomposed, 1e-9)

    batch = cb.run_batch("ucb-cs", toy, cb.Setting.subsidized(0.2), 5_000, runs=4, seed0=10, jobs=2)
    assert [r["seed"] for r in batch] == [10, 11, 12, 13]
    again = cb.run_batch("ucb-cs", toy, cb.Setting.subsidized(0.2), 5_000, runs=4, seed0=10)
    assert [r["cost_regret"] for r in batch] == [r["cost_regret"] for r in again]

    # errors surface as Python exceptions
    for bad in (
        lambda: cb.run_single("greedy", toy, cb.Setting.subsidized(0.2), 100),
        lambda: cb.gap_profile(toy, cb.Setting.fixed(0.99)),
        lambda: cb.Instance([1.5], [0.1]),
    ):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        cb.Instance.load("/no/such/file.csv")
    except OSError:
        pass
    else:
        raise AssertionError("expected OSError")

    assert "pe-cs" in cb.POLICIES and len(cb.POLICIES) == 8
    assert not math.isnan(one["quality_regret"])
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
