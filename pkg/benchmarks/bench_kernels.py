"""Compare the compiled contact kernel against the pure-Python reference.

Each backend runs in its own subprocess (selected via PUSHCLUTTER_KERNEL,
so the import-time choice stays honest) over three deterministic
workloads:

  propagate   contact-heavy control steps on a cluttered shelf
  rollout     the scripted push suite end to end
  planner     one bare planner call per algorithm at a fixed
              iteration budget

Workloads are seeded, so both backends trace identical trees and the
wall-clock ratio is a like-for-like speedup.

    python3 benchmarks/bench_kernels.py
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads():
    from pushclutter import generate_random_scene
    from pushclutter.dynamics import Control, propagate, rollout_controls
    from pushclutter.planners import PlannerRequest, plan
    from pushclutter.scene import ReachGoalObject
    import random

    scene = generate_random_scene(1, n_movables=10)
    q0 = scene.initial_configuration()

    def bench_propagate():
        rng = random.Random(3)
        q = q0
        steps = 0
        t0 = time.perf_counter()
        for _ in range(400):
            u = Control(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                        rng.uniform(-0.5, 0.5), rng.uniform(0.5, 3.0))
            q2, report = propagate(q, u, scene)
            steps += 1
            q = q2 if report.valid else q0
        return steps / (time.perf_counter() - t0), "controls/s"

    def bench_rollout():
        rng = random.Random(5)
        controls = [Control(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                            rng.uniform(-0.5, 0.5), 1.0)
                    for _ in range(60)]
        t0 = time.perf_counter()
        reps = 20
        for _ in range(reps):
            rollout_controls(q0, controls, scene)
        return reps * len(controls) / (time.perf_counter() - t0), "controls/s"

    def bench_planner(algorithm):
        def run():
            req = PlannerRequest(start=q0, goal=ReachGoalObject(),
                                 algorithm=algorithm, rng_seed=11,
                                 iteration_budget=3000)
            t0 = time.perf_counter()
            res = plan(req, scene)
            dt = time.perf_counter() - t0
            return res.stats.iterations / dt, "iters/s"
        return run

    return {
        "propagate": bench_propagate,
        "rollout": bench_rollout,
        "planner-rrt": bench_planner("rrt"),
        "planner-kpiece": bench_planner("kpiece"),
    }


def worker() -> None:
    from pushclutter import kernels
    rows = {}
    for name, fn in _workloads().items():
        fn()  # warm caches so both backends pay compile/alloc once
        rate, unit = fn()
        rows[name] = {"rate": rate, "unit": unit}
    print(json.dumps({"backend": kernels.BACKEND, "rows": rows}))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker()
        return 0

    from pushclutter.kernels import available_backends
    results = {}
    for backend in available_backends():
        env = dict(os.environ, PUSHCLUTTER_KERNEL=backend)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker"],
            env=env, capture_output=True, text=True, check=True)
        payload = json.loads(out.stdout)
        assert payload["backend"] == backend
        results[backend] = payload["rows"]

    names = list(next(iter(results.values())))
    width = max(len(n) for n in names)
    header = f"{'workload':<{width}}"
    for backend in results:
        header += f"  {backend:>14}"
    if len(results) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for name in names:
        line = f"{name:<{width}}"
        rates = []
        for backend in results:
            row = results[backend][name]
            rates.append(row["rate"])
            line += f"  {row['rate']:>10.0f} {row['unit'].split('/')[0][:3]}/s"
        if len(rates) == 2:
            line += f"  {rates[1] / rates[0]:>7.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
