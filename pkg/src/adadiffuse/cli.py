"""Command-line experiment runner.

Subcommands: train-denoiser, train-estimator, eval-estimator,
solve-schedule, sample, benchmark. Exit codes: 0 success, 2 config or
usage error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .bench import run_benchmark, write_curve_csv, write_samples_csv, write_trace_jsonl
from .checkpoint import load_checkpoint, save_checkpoint
from .config import load_config, with_overrides
from .datasets import generate
from .diffusion import train_denoiser, train_estimator, training_schedule
from .errors import ConfigError
from .metrics import eval_estimator_curve
from .models import make_denoiser, make_estimator
from .sampler import initial_noise_schedule, sample_adaptive, sample_fixed
from .schedule import ScheduleFamily, update_noise_schedule


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adadiffuse",
        description="Adaptive noise-schedule diffusion experiments",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a run config file")
    common.add_argument("--seed", type=int, help="override train/sampler seed")
    common.add_argument("--out", help="override output directory")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("train-denoiser", parents=[common])
    sub.add_parser("train-estimator", parents=[common])

    p = sub.add_parser("eval-estimator", parents=[common])
    p.add_argument("--models", help="directory holding estimator.nesd")

    p = sub.add_parser("solve-schedule", parents=[common])
    p.add_argument("--family", choices=("linear", "fibonacci"), required=True)
    p.add_argument("--alpha-bar", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--beta0", type=float, required=True)

    p = sub.add_parser("sample", parents=[common])
    p.add_argument("--models", help="directory holding model checkpoints")
    p.add_argument("--mode", choices=("fixed", "adaptive"), default="adaptive")

    p = sub.add_parser("benchmark", parents=[common])
    p.add_argument("--models", help="directory holding model checkpoints")
    return parser


def _require_config(args) -> "RunConfig":
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    return with_overrides(cfg, seed=args.seed, out=args.out)


def _out_dir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_loss_csv(losses, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss"])
        w.writerows([(i, f"{v!r}") for i, v in enumerate(losses)])


def _load_models(args, cfg, need=("denoiser", "estimator")):
    directory = Path(args.models) if getattr(args, "models", None) else Path(cfg.output_dir)
    models = {}
    for name in need:
        path = directory / f"{name}.nesd"
        if not path.is_file():
            raise FileNotFoundError(f"missing checkpoint: {path}")
        loaded, _ = load_checkpoint(path)
        if name not in loaded:
            raise FileNotFoundError(f"checkpoint {path} does not contain a {name}")
        models[name] = loaded[name]
    return models


def _cmd_train(args, which: str) -> int:
    cfg = _require_config(args)
    out = _out_dir(cfg)
    data = generate(cfg.dataset)
    schedule = training_schedule(cfg.train.stage_count)
    if which == "denoiser":
        model = make_denoiser(cfg.dataset.dim, cfg.train.seed, cfg.sampler.conditioning_mode)
        trainer, key = train_denoiser, "denoiser"
    else:
        model = make_estimator(cfg.dataset.dim, cfg.train.seed)
        trainer, key = train_estimator, "estimator"
    ckpt_path = out / f"{key}.nesd"

    def progress(step, _loss):
        if cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
            save_checkpoint({key: model}, schedule, ckpt_path)

    losses = trainer(model, data, cfg.train, progress=progress)
    save_checkpoint({key: model}, schedule, ckpt_path)
    _write_loss_csv(losses, out / f"{key}_loss.csv")
    print(f"trained {key}: final loss {losses[-1]:.6f} -> {ckpt_path}")
    return 0


def _cmd_eval_estimator(args) -> int:
    cfg = _require_config(args)
    out = _out_dir(cfg)
    est = _load_models(args, cfg, need=("estimator",))["estimator"]
    curve = eval_estimator_curve(
        est, generate(cfg.dataset), cfg.eval_grid, cfg.eval_samples_per_point
    )
    write_curve_csv(curve, out / "curve.csv")
    for ab, mse in curve:
        print(f"alpha_bar={ab:g} mse={mse:.6g}")
    return 0


def _cmd_solve_schedule(args) -> int:
    family = ScheduleFamily(args.family, args.beta0)
    schedule = update_noise_schedule(args.alpha_bar, args.steps, family)
    lines = ["i,beta,alpha_bar,l"]
    for i in range(len(schedule)):
        lines.append(
            f"{i},{float(schedule.betas[i])!r},{float(schedule.alpha_bars[i])!r},"
            f"{float(schedule.boundaries[i + 1])!r}"
        )
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    return 0


def _cmd_sample(args) -> int:
    cfg = _require_config(args)
    out = _out_dir(cfg)
    need = ("denoiser",) if args.mode == "fixed" else ("denoiser", "estimator")
    models = _load_models(args, cfg, need=need)
    rng = np.random.default_rng(cfg.sampler.seed)
    bounds = training_schedule(cfg.train.stage_count).boundaries
    if args.mode == "fixed":
        run = sample_fixed(
            models["denoiser"], initial_noise_schedule(cfg.sampler), cfg.sampler, rng,
            train_bounds=bounds,
        )
    else:
        run = sample_adaptive(
            models["denoiser"], models["estimator"], cfg.sampler, rng,
            train_bounds=bounds,
        )
    write_samples_csv(run.y0[None, :], out / "sample.csv")
    write_trace_jsonl(run.steps, out / "trace.jsonl")
    print(f"sampled ({args.mode}, N={cfg.sampler.steps}) -> {out / 'sample.csv'}")
    return 0


def _cmd_benchmark(args) -> int:
    cfg = _require_config(args)
    models = _load_models(args, cfg)
    record = run_benchmark(cfg, models["denoiser"], models["estimator"], cfg.output_dir)
    for (method, steps), stats in sorted(record.wall_time_ms.items()):
        eds = record.energy_distances(method, steps)
        print(
            f"{method:<8} N={steps:<5} mean_energy_distance={np.mean(eds):.5f} "
            f"wall_ms/sample={stats['mean']:.3f}"
        )
    print(f"clamp_events={record.clamp_events} -> {Path(cfg.output_dir) / 'metrics.json'}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "train-denoiser":
            return _cmd_train(args, "denoiser")
        if args.command == "train-estimator":
            return _cmd_train(args, "estimator")
        if args.command == "eval-estimator":
            return _cmd_eval_estimator(args)
        if args.command == "solve-schedule":
            return _cmd_solve_schedule(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "benchmark":
            return _cmd_benchmark(args)
        parser.print_usage(sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
