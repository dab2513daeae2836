"""Experiment harness: paired fixed-vs-adaptive benchmarks and file outputs.

For each configured step count and seed, one fixed-schedule batch run and
one adaptive batch run consume identical initial noise (verified by
hashing). Energy distances are measured against a held-out data batch.
Outputs: metrics.json, curve.csv, bench.csv and a trace.jsonl per run,
all re-parseable by this module. The ADADIFFUSE_THREADS environment
variable caps the worker count for fanning runs out across processes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .datasets import generate, held_out
from .diffusion import training_schedule
from .metrics import energy_distance, eval_estimator_curve
from .models import Denoiser, Estimator
from .sampler import SamplerConfig, SamplingRun, StepRecord, sample_batch

METHODS = ("fixed", "adaptive")


@dataclass
class BenchRow:
    method: str
    steps: int
    seed: int
    energy_distance: float
    wall_ms_per_sample: float
    clamp_events: int
    y_init_sha: str


@dataclass
class MetricsRecord:
    estimator_curve: list[tuple[float, float]] = field(default_factory=list)
    rows: list[BenchRow] = field(default_factory=list)
    wall_time_ms: dict = field(default_factory=dict)  # (method, N) -> {mean, std}
    clamp_events: int = 0

    def energy_distances(self, method: str, steps: int) -> list[float]:
        return [r.energy_distance for r in self.rows
                if r.method == method and r.steps == steps]


def _sha(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def write_trace_jsonl(steps: list[StepRecord], path) -> None:
    with open(path, "w") as fh:
        for rec in steps:
            fh.write(json.dumps({
                "n": rec.n,
                "alpha_hat": rec.alpha_hat,
                "betas": [float(b) for b in rec.betas],
                "wall_ms": rec.wall_ms,
            }) + "\n")


def read_trace_jsonl(path) -> list[StepRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            out.append(StepRecord(
                n=int(obj["n"]),
                alpha_hat=obj["alpha_hat"],
                betas=np.asarray(obj["betas"], dtype=np.float64),
                wall_ms=float(obj["wall_ms"]),
            ))
    return out


def write_curve_csv(curve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha_bar", "mse"])
        w.writerows([(f"{a!r}", f"{m!r}") for a, m in curve])


def read_curve_csv(path) -> list[tuple[float, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(float(r["alpha_bar"]), float(r["mse"])) for r in rows]


def write_bench_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "N", "seed", "energy_distance", "wall_ms"])
        for r in rows:
            w.writerow([r.method, r.steps, r.seed,
                        f"{r.energy_distance!r}", f"{r.wall_ms_per_sample!r}"])


def read_bench_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{"method": r["method"], "N": int(r["N"]), "seed": int(r["seed"]),
             "energy_distance": float(r["energy_distance"]),
             "wall_ms": float(r["wall_ms"])} for r in rows]


def write_samples_csv(samples: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(samples.shape[1])])
        w.writerows([[f"{float(v)!r}" for v in row] for row in samples])


def write_metrics_json(record: MetricsRecord, path) -> None:
    payload = {
        "estimator_curve": [[a, m] for a, m in record.estimator_curve],
        "runs": [{
            "method": r.method, "N": r.steps, "seed": r.seed,
            "energy_distance": r.energy_distance,
            "wall_ms_per_sample": r.wall_ms_per_sample,
            "clamp_events": r.clamp_events, "y_init_sha": r.y_init_sha,
        } for r in record.rows],
        "wall_time_ms": {f"{m}/{n}": v for (m, n), v in record.wall_time_ms.items()},
        "clamp_events": record.clamp_events,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def read_metrics_json(path) -> MetricsRecord:
    with open(path) as fh:
        payload = json.load(fh)
    rec = MetricsRecord(
        estimator_curve=[(a, m) for a, m in payload["estimator_curve"]],
        rows=[BenchRow(
            method=r["method"], steps=r["N"], seed=r["seed"],
            energy_distance=r["energy_distance"],
            wall_ms_per_sample=r["wall_ms_per_sample"],
            clamp_events=r["clamp_events"], y_init_sha=r["y_init_sha"],
        ) for r in payload["runs"]],
        wall_time_ms={(k.split("/")[0], int(k.split("/")[1])): v
                      for k, v in payload["wall_time_ms"].items()},
        clamp_events=payload["clamp_events"],
    )
    return rec


def worker_count(n_tasks: int) -> int:
    env = os.environ.get("ADADIFFUSE_THREADS")
    cap = max(1, int(env)) if env else 1
    return max(1, min(cap, n_tasks))


def _run_pair(args) -> tuple[list[BenchRow], dict[str, SamplingRun]]:
    denoiser, estimator, cfg, steps, seed, reference = args
    scfg = replace(cfg.sampler, steps=steps,
                   adjustment_set=frozenset(range(1, steps + 1)))
    bounds = training_schedule(cfg.train.stage_count).boundaries
    batch = cfg.bench.samples_per_run
    rows, runs = [], {}
    for method in METHODS:
        rng = np.random.default_rng([scfg.seed, steps, seed])
        run = sample_batch(
            denoiser, scfg, rng, batch,
            estimator=estimator, adaptive=(method == "adaptive"),
            train_bounds=bounds,
        )
        rows.append(BenchRow(
            method=method, steps=steps, seed=seed,
            energy_distance=energy_distance(run.y0, reference),
            wall_ms_per_sample=run.wall_ms / batch,
            clamp_events=run.clamp_events,
            y_init_sha=_sha(run.y_init),
        ))
        runs[method] = run
    if rows[0].y_init_sha != rows[1].y_init_sha:
        raise RuntimeError(f"paired runs diverged on initial noise at N={steps} seed={seed}")
    return rows, runs


def run_benchmark(cfg: RunConfig, denoiser: Denoiser, estimator: Estimator,
                  out_dir, write_traces: bool = True) -> MetricsRecord:
    """Paired fixed/adaptive comparison over cfg.bench.steps_list x cfg.seeds."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reference = generate(held_out(cfg.dataset, size=cfg.bench.reference_size))
    record = MetricsRecord()
    record.estimator_curve = eval_estimator_curve(
        estimator, generate(cfg.dataset), cfg.eval_grid, cfg.eval_samples_per_point
    )

    tasks = [(denoiser, estimator, cfg, steps, seed, reference)
             for steps in cfg.bench.steps_list for seed in cfg.seeds]
    workers = worker_count(len(tasks))
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_pair, tasks))
        else:
            results = [_run_pair(t) for t in tasks]
        for (rows, runs), (_, _, _, steps, seed, _) in zip(results, tasks):
            record.rows.extend(rows)
            if write_traces:
                for method, run in runs.items():
                    write_trace_jsonl(
                        run.steps, out_dir / f"trace_{method}_N{steps}_seed{seed}.jsonl"
                    )
    finally:
        # flush whatever completed, even on failure
        record.rows.sort(key=lambda r: (r.steps, r.seed, r.method))
        record.clamp_events = sum(r.clamp_events for r in record.rows)
        for steps in cfg.bench.steps_list:
            for method in METHODS:
                walls = [r.wall_ms_per_sample for r in record.rows
                         if r.method == method and r.steps == steps]
                if walls:
                    record.wall_time_ms[(method, steps)] = {
                        "mean": float(np.mean(walls)),
                        "std": float(np.std(walls)),
                    }
        write_bench_csv(record.rows, out_dir / "bench.csv")
        write_curve_csv(record.estimator_curve, out_dir / "curve.csv")
        write_metrics_json(record, out_dir / "metrics.json")
    return record
