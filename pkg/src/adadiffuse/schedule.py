"""Noise-schedule algebra and the closed-form remaining-schedule solvers.

A schedule is a per-step noise sequence beta_1..beta_N with derived
retention factors alpha_i = 1 - beta_i, cumulative products alpha_bar_n,
and interval boundaries l_0..l_N (square roots of the cumulative
products, l_0 = 1). Two solver families reconstruct a schedule for a
given remaining step count from a target cumulative retention: an
arithmetic progression and a Fibonacci recurrence with golden-ratio
closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ScheduleError

BETA_FLOOR = 1e-6
BETA_CEIL = 0.999

PHI = (1.0 + math.sqrt(5.0)) / 2.0
PHI_CONJ = (1.0 - math.sqrt(5.0)) / 2.0

FAMILIES = ("linear", "fibonacci")


def _validate_betas(betas, floor: float) -> np.ndarray:
    b = np.asarray(betas, dtype=np.float64)
    if b.ndim != 1 or b.size == 0:
        raise ScheduleError("betas must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(b)):
        raise ScheduleError("betas contain non-finite entries")
    if np.any(b < floor) or np.any(b > BETA_CEIL):
        raise ScheduleError(f"betas outside [{floor}, {BETA_CEIL}]")
    return b


def boundaries(betas) -> np.ndarray:
    """Interval boundaries l_0..l_N, l_s = sqrt(prod_{i<=s}(1 - beta_i))."""
    b = _validate_betas(betas, floor=0.0)
    return np.concatenate([[1.0], np.sqrt(np.cumprod(1.0 - b))])


def cumulative_alpha_bar(betas) -> np.ndarray:
    """Cumulative retention alpha_bar_1..alpha_bar_N."""
    b = _validate_betas(betas, floor=0.0)
    return np.cumprod(1.0 - b)


@dataclass(frozen=True)
class NoiseSchedule:
    """Beta sequence with derived alpha, alpha-bar and boundary arrays."""

    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    boundaries: np.ndarray
    clamped: int = 0  # solver entries that hit the beta clamp

    @classmethod
    def from_betas(cls, betas, strict: bool = True, clamped: int = 0) -> "NoiseSchedule":
        b = _validate_betas(betas, floor=BETA_FLOOR if strict else 0.0)
        return cls(
            betas=b,
            alphas=1.0 - b,
            alpha_bars=np.cumprod(1.0 - b),
            boundaries=np.concatenate([[1.0], np.sqrt(np.cumprod(1.0 - b))]),
            clamped=clamped,
        )

    def __len__(self) -> int:
        return self.betas.size

    def alpha_bar(self, n: int) -> float:
        """alpha_bar_n with alpha_bar_0 defined as 1."""
        if n == 0:
            return 1.0
        return float(self.alpha_bars[n - 1])


@dataclass(frozen=True)
class ScheduleFamily:
    """Solver selector: schedule kind plus its first noise parameter."""

    kind: str
    beta0: float

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ScheduleError(f"unknown schedule family {self.kind!r}")
        if not (1e-6 <= self.beta0 <= 1e-2):
            raise ScheduleError(f"beta0 {self.beta0} outside [1e-6, 1e-2]")


def _check_solver_args(alpha_bar_hat: float, n: int) -> None:
    if n < 1:
        raise ScheduleError(f"remaining step count must be >= 1, got {n}")
    if not (0.0 < alpha_bar_hat < 1.0) or not math.isfinite(alpha_bar_hat):
        raise ScheduleError(f"target alpha_bar {alpha_bar_hat} outside (0, 1)")


def clamp_betas(raw: np.ndarray) -> tuple[np.ndarray, int]:
    clamped = np.clip(raw, BETA_FLOOR, BETA_CEIL)
    return clamped, int(np.count_nonzero(clamped != raw))


def solve_linear(alpha_bar_hat: float, n: int, beta0: float, clamp: bool = True) -> np.ndarray:
    """Arithmetic-progression betas: beta_i = beta0 + i*x, i = 0..n-1.

    The common difference is x = -2*(log(alpha_bar_hat) + n*beta0)/(n*(n-1)),
    which makes the beta sum equal -log(alpha_bar_hat) exactly. n = 1 returns
    the exact single-step schedule [1 - alpha_bar_hat] regardless of beta0.
    With clamp=True (default) entries are clipped into [1e-6, 0.999]; pass
    clamp=False to inspect the raw solution.
    """
    _check_solver_args(alpha_bar_hat, n)
    if n == 1:
        raw = np.array([1.0 - alpha_bar_hat])
    else:
        x = -2.0 * (math.log(alpha_bar_hat) + n * beta0) / (n * (n - 1))
        raw = beta0 + x * np.arange(n)
    if not clamp:
        return raw
    return clamp_betas(raw)[0]


def solve_fibonacci(alpha_bar_hat: float, n: int, beta0: float, clamp: bool = True) -> np.ndarray:
    """Fibonacci-recurrence betas via the golden-ratio closed form.

    For n >= 3, beta_i = A*phi**i + B*phi'**i with phi, phi' the roots of
    x^2 - x - 1, where (A, B) solve {A + B = beta0; sum beta_i =
    -log(alpha_bar_hat)} using geometric-series sums. n = 1 is the exact
    single-step schedule; n = 2 pins beta0 and sets beta_1 from the sum.
    """
    _check_solver_args(alpha_bar_hat, n)
    target = -math.log(alpha_bar_hat)
    if n == 1:
        raw = np.array([1.0 - alpha_bar_hat])
    elif n == 2:
        raw = np.array([beta0, target - beta0])
    else:
        geo = lambda r: (r**n - 1.0) / (r - 1.0)
        mat = np.array([[1.0, 1.0], [geo(PHI), geo(PHI_CONJ)]])
        try:
            coeff = np.linalg.solve(mat, np.array([beta0, target]))
        except np.linalg.LinAlgError as exc:  # unreachable for n >= 3
            raise ScheduleError(f"degenerate closed-form system for n={n}") from exc
        i = np.arange(n)
        raw = coeff[0] * PHI**i + coeff[1] * PHI_CONJ**i
    if not clamp:
        return raw
    return clamp_betas(raw)[0]


def update_noise_schedule(alpha_bar_hat: float, n: int, family: ScheduleFamily) -> NoiseSchedule:
    """Re-derive the remaining n-step schedule from an estimated alpha-bar."""
    if family.kind == "linear":
        raw = solve_linear(alpha_bar_hat, n, family.beta0, clamp=False)
    else:
        raw = solve_fibonacci(alpha_bar_hat, n, family.beta0, clamp=False)
    betas, n_clamped = clamp_betas(raw)
    return NoiseSchedule.from_betas(betas, clamped=n_clamped)


def index_for_level(alpha_bar_hat: float, bounds: np.ndarray) -> int:
    """Interval index t >= 1 with sqrt(alpha_bar_hat) in [l_t, l_{t-1}].

    Out-of-range levels clamp to the first/last interval. bounds must be
    strictly decreasing with bounds[0] == 1.
    """
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.size < 2 or bounds[0] != 1.0 or np.any(np.diff(bounds) >= 0):
        raise ScheduleError("boundaries must start at 1 and strictly decrease")
    level = math.sqrt(alpha_bar_hat)
    n = bounds.size - 1
    # bounds is decreasing: find first t with bounds[t] <= level
    t = int(np.searchsorted(-bounds, -level, side="left"))
    return min(max(t, 1), n)
