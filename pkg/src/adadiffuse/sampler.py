"""Reverse-process sampling: fixed schedules and mid-run schedule adaptation.

The adaptive procedure runs the usual reverse updates but, at a configured
set of step indices, asks the noise-level estimator where the chain
actually is and re-derives the remaining schedule in closed form. A step
always executes (mean update and its noise injection) under the schedule
in force when it started; a re-solve triggered at step n governs steps
n-1 .. 1.

One vectorized engine evolves a batch of independent chains (per-chain
estimates, per-chain re-solved schedules); the public single-chain
operations are batch-1 wrappers over it.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ScheduleError, ShapeError
from .models import Denoiser, Estimator
from .schedule import (
    BETA_CEIL,
    BETA_FLOOR,
    PHI,
    PHI_CONJ,
    NoiseSchedule,
    ScheduleFamily,
)

UPDATE_RULES = ("ddpm", "ddim")

AB_CLAMP = 1e-7  # estimator outputs clipped into (0,1) before solving


@dataclass(frozen=True)
class SamplerConfig:
    steps: int
    adjustment_set: frozenset[int] = frozenset()
    family: ScheduleFamily = ScheduleFamily("linear", 1e-4)
    update_rule: str = "ddpm"
    eta: float = 0.0
    conditioning_mode: str = "continuous_alpha"
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        object.__setattr__(self, "adjustment_set", frozenset(self.adjustment_set))
        if not all(1 <= u <= self.steps for u in self.adjustment_set):
            raise ValueError("adjustment set must be a subset of {1..steps}")
        if self.update_rule not in UPDATE_RULES:
            raise ValueError(f"unknown update rule {self.update_rule!r}")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")


@dataclass
class StepRecord:
    """One executed reverse step: index, optional estimate, in-force betas."""

    n: int
    alpha_hat: float | None
    betas: np.ndarray
    wall_ms: float


@dataclass
class SamplingRun:
    """Result of one reverse run (a batch of independent chains)."""

    y0: np.ndarray
    steps: list[StepRecord]
    y_init: np.ndarray
    clamp_events: int = 0
    wall_ms: float = 0.0


def initial_noise_schedule(cfg: SamplerConfig) -> NoiseSchedule:
    """Fixed N-step baseline for the configured family.

    linear: betas evenly spaced from beta0 to 2e-2; fibonacci: the
    recurrence seeded (beta0, beta0), truncated and clamped.
    """
    n, beta0 = cfg.steps, cfg.family.beta0
    if cfg.family.kind == "linear":
        betas = np.linspace(beta0, 2e-2, n)
    else:
        seq = [beta0, beta0]
        while len(seq) < n:
            seq.append(seq[-1] + seq[-2])
        betas = np.array(seq[:n])
    return NoiseSchedule.from_betas(np.clip(betas, BETA_FLOOR, BETA_CEIL))


def ddpm_update(y_n, eps_hat, n: int, schedule: NoiseSchedule, z) -> np.ndarray:
    """Stochastic reverse step; injects sqrt(beta_n)*z except at n = 1."""
    y_n = np.asarray(y_n, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if not (1 <= n <= len(schedule)):
        raise ScheduleError(f"step index {n} outside schedule of length {len(schedule)}")
    if eps_hat.shape != y_n.shape or z.shape != y_n.shape:
        raise ShapeError("eps_hat and z must match the state shape")
    beta = schedule.betas[n - 1]
    alpha = schedule.alphas[n - 1]
    abar = schedule.alpha_bar(n)
    # beta = 0 adds no noise: the eps coefficient vanishes even when abar = 1
    coef = 0.0 if beta == 0.0 else (1.0 - alpha) / np.sqrt(1.0 - abar)
    out = (y_n - coef * eps_hat) / np.sqrt(alpha)
    if n != 1:
        out = out + np.sqrt(beta) * z
    return out


def ddim_update(y_n, eps_hat, n: int, schedule: NoiseSchedule, eta: float, z) -> np.ndarray:
    """Reverse step through the predicted clean sample; deterministic at eta = 0."""
    y_n = np.asarray(y_n, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if not (1 <= n <= len(schedule)):
        raise ScheduleError(f"step index {n} outside schedule of length {len(schedule)}")
    if eps_hat.shape != y_n.shape or z.shape != y_n.shape:
        raise ShapeError("eps_hat and z must match the state shape")
    beta = schedule.betas[n - 1]
    abar = schedule.alpha_bar(n)
    abar_prev = schedule.alpha_bar(n - 1)
    y0_hat = (y_n - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)
    sigma = eta * np.sqrt(beta * (1.0 - abar_prev) * (1.0 - abar))
    resid = 1.0 - abar_prev - sigma**2
    if resid < -1e-9:
        raise ScheduleError(f"inconsistent schedule: 1 - abar_prev - sigma^2 = {resid}")
    resid = max(resid, 0.0)
    return np.sqrt(abar_prev) * y0_hat + np.sqrt(resid) * eps_hat + sigma * z


def predicted_clean(y_n, eps_hat, abar: float) -> np.ndarray:
    """Invert the closed-form corruption given a noise prediction."""
    y_n = np.asarray(y_n, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    return (y_n - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)


def _solve_batch(ab_hat: np.ndarray, m: int, family: ScheduleFamily) -> tuple[np.ndarray, int]:
    """Vectorized remaining-schedule solve for a batch of targets.

    Returns the clamped (batch, m) beta matrix and the clamp count.
    """
    target = -np.log(ab_hat)
    if m == 1:
        raw = (1.0 - ab_hat)[:, None]
    elif family.kind == "linear":
        x = -2.0 * (np.log(ab_hat) + m * family.beta0) / (m * (m - 1))
        raw = family.beta0 + x[:, None] * np.arange(m)
    elif m == 2:
        raw = np.stack([np.full_like(target, family.beta0), target - family.beta0], axis=1)
    else:
        geo = lambda r: (r**m - 1.0) / (r - 1.0)
        a = (target - family.beta0 * geo(PHI_CONJ)) / (geo(PHI) - geo(PHI_CONJ))
        b = family.beta0 - a
        i = np.arange(m)
        raw = a[:, None] * PHI**i + b[:, None] * PHI_CONJ**i
    clamped = np.clip(raw, BETA_FLOOR, BETA_CEIL)
    return clamped, int(np.count_nonzero(clamped != raw))


def _indices_for_levels(ab: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    level = np.sqrt(ab)
    t = np.searchsorted(-bounds, -level, side="left")
    return np.clip(t, 1, bounds.size - 1)


def _reverse_engine(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    estimator: Estimator | None,
    adjust: frozenset[int],
    batch: int,
    y_init: np.ndarray | None,
    train_bounds: np.ndarray | None,
) -> SamplingRun:
    n_steps = cfg.steps
    if len(schedule) != n_steps:
        raise ScheduleError(f"schedule length {len(schedule)} != configured steps {n_steps}")
    if adjust and estimator is None:
        raise ValueError("adjustment steps configured but no estimator supplied")
    if cfg.conditioning_mode == "discrete_index" and train_bounds is None:
        raise ValueError("discrete_index conditioning needs the training boundary table")
    dim = denoiser.data_dim

    if y_init is None:
        y = rng.standard_normal((batch, dim))
    else:
        y = np.array(y_init, dtype=np.float64)
        if y.shape != (batch, dim):
            raise ShapeError(f"y_init shape {y.shape} != {(batch, dim)}")
    y_start = y.copy()

    betas = np.tile(schedule.betas, (batch, 1))
    abar = np.ones((batch, n_steps + 1))
    abar[:, 1:] = np.cumprod(1.0 - betas, axis=1)

    trace: list[StepRecord] = []
    clamp_events = 0
    run_t0 = time.perf_counter()

    for n in range(n_steps, 0, -1):
        t0 = time.perf_counter()
        col = n - 1
        beta_n = betas[:, col]
        alpha_n = 1.0 - beta_n
        abar_n = abar[:, n]
        abar_prev = abar[:, n - 1]
        in_force = betas[0, :n].copy()

        if cfg.conditioning_mode == "discrete_index":
            t_idx = _indices_for_levels(abar_n, train_bounds)
            cond = t_idx / float(train_bounds.size - 1)
        else:
            cond = np.sqrt(abar_n)
        eps_hat = denoiser.net.forward(denoiser.conditioned_input(y, cond))
        z = rng.standard_normal((batch, dim))

        if cfg.update_rule == "ddpm":
            y_det = (y - ((1.0 - alpha_n) / np.sqrt(1.0 - abar_n))[:, None] * eps_hat) / np.sqrt(
                alpha_n
            )[:, None]
            noise_scale = np.sqrt(beta_n) if n != 1 else np.zeros(batch)
        else:
            y0_hat = (y - np.sqrt(1.0 - abar_n)[:, None] * eps_hat) / np.sqrt(abar_n)[:, None]
            sigma = cfg.eta * np.sqrt(beta_n * (1.0 - abar_prev) * (1.0 - abar_n))
            resid = 1.0 - abar_prev - sigma**2
            if np.any(resid < -1e-9):
                raise ScheduleError("inconsistent schedule: 1 - abar_prev - sigma^2 < 0")
            resid = np.maximum(resid, 0.0)
            y_det = (
                np.sqrt(abar_prev)[:, None] * y0_hat + np.sqrt(resid)[:, None] * eps_hat
            )
            noise_scale = sigma

        alpha_hat_rec = None
        if n in adjust:
            ab_hat = np.clip(
                np.atleast_1d(estimator.predict(y_det)), AB_CLAMP, 1.0 - AB_CLAMP
            )
            alpha_hat_rec = float(ab_hat[0])
            if n - 1 >= 1:
                new_betas, n_clamped = _solve_batch(ab_hat, n - 1, cfg.family)
                clamp_events += n_clamped
                betas[:, : n - 1] = new_betas
                abar[:, 1:n] = np.cumprod(1.0 - new_betas, axis=1)

        y = y_det + noise_scale[:, None] * z
        if not np.all(np.isfinite(y)):
            raise ValueError(f"non-finite state after step {n}")
        trace.append(
            StepRecord(
                n=n,
                alpha_hat=alpha_hat_rec,
                betas=in_force,
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )

    return SamplingRun(
        y0=y,
        steps=trace,
        y_init=y_start,
        clamp_events=clamp_events,
        wall_ms=(time.perf_counter() - run_t0) * 1e3,
    )


def sample_fixed(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    train_bounds: np.ndarray | None = None,
    y_init: np.ndarray | None = None,
) -> SamplingRun:
    """Run the reverse process once under an unchanging schedule."""
    run = _reverse_engine(
        denoiser, schedule, cfg, rng,
        estimator=None, adjust=frozenset(), batch=1,
        y_init=None if y_init is None else np.atleast_2d(y_init),
        train_bounds=train_bounds,
    )
    run.y0 = run.y0[0]
    run.y_init = run.y_init[0]
    return run


def sample_adaptive(
    denoiser: Denoiser,
    estimator: Estimator,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    train_bounds: np.ndarray | None = None,
    y_init: np.ndarray | None = None,
) -> SamplingRun:
    """Reverse process with estimator-driven schedule re-solves at cfg.adjustment_set."""
    run = _reverse_engine(
        denoiser, initial_noise_schedule(cfg), cfg, rng,
        estimator=estimator, adjust=cfg.adjustment_set, batch=1,
        y_init=None if y_init is None else np.atleast_2d(y_init),
        train_bounds=train_bounds,
    )
    run.y0 = run.y0[0]
    run.y_init = run.y_init[0]
    return run


def sample_batch(
    denoiser: Denoiser,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    batch: int,
    estimator: Estimator | None = None,
    adaptive: bool = False,
    train_bounds: np.ndarray | None = None,
    y_init: np.ndarray | None = None,
) -> SamplingRun:
    """Evolve a batch of independent chains in one vectorized run."""
    return _reverse_engine(
        denoiser, initial_noise_schedule(cfg), cfg, rng,
        estimator=estimator if adaptive else None,
        adjust=cfg.adjustment_set if adaptive else frozenset(),
        batch=batch, y_init=y_init, train_bounds=train_bounds,
    )
