"""Denoiser and noise-level estimator models.

Both are plain MLPs from the nn kernel. The denoiser consumes the state
vector concatenated with a scalar conditioning signal (the current
sqrt-alpha-bar, or a normalized interval index) plus a 16-dim sinusoidal
embedding of that scalar. The estimator consumes the raw state and emits
one sigmoid-bounded value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Network, init_network

EMBED_DIM = 16

DENOISER_HIDDEN = (128, 128, 128)
ESTIMATOR_HIDDEN = (64, 64)

CONDITIONING_MODES = ("continuous_alpha", "discrete_index")


def sinusoidal_embedding(c: np.ndarray) -> np.ndarray:
    """16-dim sin/cos features of a scalar in [0, 1], geometric frequencies."""
    c = np.asarray(c, dtype=np.float64)
    freqs = np.pi * 2.0 ** np.arange(EMBED_DIM // 2)
    ang = c[..., None] * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=-1)


@dataclass
class Denoiser:
    """Noise-prediction network with scalar conditioning."""

    net: Network
    data_dim: int
    conditioning_mode: str = "continuous_alpha"

    def __post_init__(self):
        if self.conditioning_mode not in CONDITIONING_MODES:
            raise ValueError(f"unknown conditioning mode {self.conditioning_mode!r}")
        expect = self.data_dim + 1 + EMBED_DIM
        if self.net.input_dim != expect or self.net.output_dim != self.data_dim:
            raise ValueError(
                f"denoiser network dims {self.net.input_dim}->{self.net.output_dim} "
                f"do not match data_dim {self.data_dim}"
            )

    def conditioned_input(self, y: np.ndarray, cond: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        cond = np.broadcast_to(np.asarray(cond, dtype=np.float64), (y.shape[0],))
        emb = sinusoidal_embedding(cond)
        return np.concatenate([y, cond[:, None], emb], axis=1)

    def predict(self, y: np.ndarray, cond) -> np.ndarray:
        """Predicted injected noise for state(s) y at conditioning value cond."""
        single = np.asarray(y).ndim == 1
        out = self.net.forward(self.conditioned_input(y, cond))
        return out[0] if single else out


@dataclass
class Estimator:
    """Predicts the cumulative signal retention (alpha-bar) of a noisy state."""

    net: Network
    data_dim: int

    def __post_init__(self):
        if self.net.input_dim != self.data_dim or self.net.output_dim != 1:
            raise ValueError("estimator network dims do not match data_dim -> 1")
        if self.net.layers[-1].activation != "sigmoid":
            raise ValueError("estimator output must be sigmoid-bounded")

    def predict(self, y: np.ndarray) -> np.ndarray | float:
        y = np.asarray(y, dtype=np.float64)
        if y.ndim == 1:
            return float(self.net.forward(y)[0])
        return self.net.forward(y)[:, 0]


def make_denoiser(data_dim: int, seed: int, conditioning_mode: str = "continuous_alpha") -> Denoiser:
    dims = [data_dim + 1 + EMBED_DIM, *DENOISER_HIDDEN, data_dim]
    acts = ["relu"] * len(DENOISER_HIDDEN) + ["identity"]
    return Denoiser(init_network(dims, acts, seed), data_dim, conditioning_mode)


def make_estimator(data_dim: int, seed: int) -> Estimator:
    dims = [data_dim, *ESTIMATOR_HIDDEN, 1]
    acts = ["relu"] * len(ESTIMATOR_HIDDEN) + ["sigmoid"]
    return Estimator(init_network(dims, acts, seed), data_dim)
