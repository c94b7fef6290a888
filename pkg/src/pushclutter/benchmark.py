"""Batch evaluation of guidance modes across scenes and seeds.

A cell is one (scene, mode, seed) run of the guided loop. Cells are
independent, so a worker pool may execute them in any order; records
always come back in enumeration order (scenes outermost, seeds inner),
which keeps parallel output identical to sequential output under
iteration budgets.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from .grtc import Budgets, PlannerConfig, run_grtc
from .protocol import HITL, MODES
from .service import build_strategy, resolve_algorithm

RESULTS_VERSION = 1


@dataclass(frozen=True)
class BenchmarkRecord:
    scene_id: str
    mode: str
    seed: int
    success: bool
    planning_time: float
    guidance_time: float
    proposed_actions: int
    successful_actions: int
    idle_time: float
    detail: str = ""


@dataclass(frozen=True)
class CellSummary:
    scene_id: str
    mode: str
    n: int
    success_rate: float
    success_ci: tuple
    mean_planning_time: float
    mean_proposed: float
    mean_successful: float
    mean_idle: float


def ci95(values) -> tuple:
    """Normal-approximation 95% interval for the mean of a sample."""
    values = list(values)
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return (mean, mean)
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    half = 1.96 * math.sqrt(var / n)
    return (mean - half, mean + half)


def run_cell(scene, scene_id: str, mode: str, seed: int,
             budgets: Budgets = Budgets(), script_text: str = None,
             algorithm: str = None) -> BenchmarkRecord:
    """One guided run, folded into a record. A crash inside the run
    becomes a failure record so the batch always completes."""
    if mode == HITL:
        raise ValueError("hitl cells need an operator and cannot be batched")
    config = PlannerConfig(algorithm=resolve_algorithm(mode, algorithm),
                           seed=seed)
    try:
        strategy = build_strategy(mode, scene, seed, config,
                                  script_text=script_text)
        outcome = run_grtc(scene, strategy, budgets, config)
    except Exception as e:
        return BenchmarkRecord(scene_id, mode, seed, False, 0.0, 0.0, 0, 0,
                               0.0, detail=f"{type(e).__name__}: {e}")
    executed = outcome.executed_actions
    return BenchmarkRecord(
        scene_id=scene_id, mode=mode, seed=seed,
        success=outcome.succeeded,
        planning_time=outcome.planning_time,
        guidance_time=outcome.guidance_time,
        proposed_actions=len(executed),
        successful_actions=sum(e.success for e in executed),
        idle_time=outcome.guidance_time,
        detail="" if outcome.succeeded else outcome.status)


def run_benchmark(scenes, modes, seeds, budgets: Budgets = Budgets(),
                  scripts=None, algorithm: str = None,
                  workers: int = 1) -> list:
    """Every scene x mode x seed cell, in enumeration order.

    scenes: iterable of (scene_id, Scene); scripts: scene_id -> script
    text, consulted only for scripted cells.
    """
    scripts = scripts or {}
    cells = []
    for scene_id, scene in scenes:
        for mode in modes:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}")
            for seed in seeds:
                cells.append((scene, scene_id, mode, seed))

    def one(cell):
        scene, scene_id, mode, seed = cell
        return run_cell(scene, scene_id, mode, seed, budgets,
                        script_text=scripts.get(scene_id),
                        algorithm=algorithm)

    if workers <= 1:
        return [one(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, cells))


def summarize(records) -> list:
    """Per (scene, mode) aggregates, in first-appearance order."""
    groups = {}
    for r in records:
        groups.setdefault((r.scene_id, r.mode), []).append(r)
    out = []
    for (scene_id, mode), rs in groups.items():
        n = len(rs)
        successes = [1.0 if r.success else 0.0 for r in rs]
        out.append(CellSummary(
            scene_id=scene_id, mode=mode, n=n,
            success_rate=sum(successes) / n,
            success_ci=ci95(successes),
            mean_planning_time=sum(r.planning_time for r in rs) / n,
            mean_proposed=sum(r.proposed_actions for r in rs) / n,
            mean_successful=sum(r.successful_actions for r in rs) / n,
            mean_idle=sum(r.idle_time for r in rs) / n))
    return out


def summary_table(summaries) -> str:
    header = ("scene", "mode", "n", "success", "ci95", "plan[u]",
              "actions", "ok")
    rows = [header]
    for s in summaries:
        rows.append((s.scene_id, s.mode, str(s.n),
                     f"{s.success_rate:.2f}",
                     f"[{s.success_ci[0]:.2f},{s.success_ci[1]:.2f}]",
                     f"{s.mean_planning_time:.1f}",
                     f"{s.mean_proposed:.1f}",
                     f"{s.mean_successful:.1f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def write_records(records, path) -> None:
    """JSON Lines: a version header, then one record per line."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"results_version": RESULTS_VERSION}) + "\n")
        for r in records:
            f.write(json.dumps(asdict(r), sort_keys=True) + "\n")


def read_records(path) -> list:
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty results file")
    header = json.loads(lines[0])
    if header.get("results_version") != RESULTS_VERSION:
        raise ValueError(f"unsupported results file: {lines[0]!r}")
    return [BenchmarkRecord(**json.loads(line)) for line in lines[1:]]
