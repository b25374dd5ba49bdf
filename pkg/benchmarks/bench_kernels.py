"""Benchmark the hot kernels under numba against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py            # both modes, comparison table
    python benchmarks/bench_kernels.py --single   # current mode only

The second form is what the script runs in a subprocess with
MULTIBANG_DISABLE_NUMBA=1 to produce the fallback column.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _suite(repeats):
    from multibang import accel_mode, bloch, oracles, ssn
    from multibang.penalties import PenaltyModel
    from multibang.sets import PenaltyParams, RadialSet

    rng = np.random.default_rng(0)
    results = {"mode": accel_mode()}

    problem = bloch.BlochProblem(
        omegas=[2.6751, 5.3502, 8.0253, 10.7004],
        duration=5.0,
        n_steps=1000,
        targets=np.tile([1.0, 0.0, 0.0], (4, 1)),
    )
    u = 0.3 * rng.standard_normal((1000, 2))
    bloch.reduced_gradient(problem, u)  # warm up (jit compile)
    t0 = time.perf_counter()
    for _ in range(repeats):
        traj = bloch.forward_solve(problem, u)
        adj = bloch.adjoint_solve(problem, u, traj)
        bloch.reduced_gradient(problem, u, traj, adj)
    results["bloch_sweep_ms"] = (time.perf_counter() - t0) / repeats * 1e3

    rset = RadialSet(1.0, [-np.pi, -np.pi / 3, np.pi / 3])
    params = PenaltyParams(0.1, 0.1)
    Q = rng.uniform(-5, 5, (200, 2))
    oracles.prox_oracle_batch(Q[:2], rset.admissible(0.1), params)  # warm up
    t0 = time.perf_counter()
    oracles.prox_oracle_batch(Q, rset.admissible(0.1), params)
    results["prox_oracle_ms_per_point"] = (time.perf_counter() - t0) / len(Q) * 1e3

    small = bloch.BlochProblem(
        omegas=[2.6751], duration=5.0, n_steps=200, targets=[[1.0, 0.0, 0.0]]
    )
    penalty = PenaltyModel(rset, 0.1)
    sched = ssn.ContinuationSchedule(gamma0=100.0, gamma_min=1e-2)
    t0 = time.perf_counter()
    ssn.ssn_solve_bloch(small, penalty, sched, ssn.NewtonConfig.bloch_default())
    results["ssn_bloch_small_s"] = time.perf_counter() - t0
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--single", action="store_true", help="current mode only")
    parser.add_argument("--json", action="store_true", help="emit JSON")
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    mine = _suite(args.repeats)
    if args.json:
        print(json.dumps(mine))
        return
    if args.single:
        for k, v in mine.items():
            print(f"{k}: {v}")
        return

    env = dict(os.environ, MULTIBANG_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, __file__, "--json", "--repeats", "3"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    other = json.loads(out.stdout.strip().splitlines()[-1])
    a, b = (mine, other) if mine["mode"] == "numba" else (other, mine)
    print(f"{'kernel':<28} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for key, unit in [
        ("bloch_sweep_ms", "ms"),
        ("prox_oracle_ms_per_point", "ms"),
        ("ssn_bloch_small_s", "s"),
    ]:
        ratio = b[key] / a[key] if a[key] > 0 else float("inf")
        print(f"{key:<28} {a[key]:>10.3f} {unit} {b[key]:>10.3f} {unit} {ratio:>8.1f}x")


if __name__ == "__main__":
    main()
