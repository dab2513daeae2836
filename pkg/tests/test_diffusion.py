import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adadiffuse.datasets import DatasetSpec, generate
from adadiffuse.diffusion import (
    TrainConfig,
    denoiser_train_step,
    estimator_loss,
    estimator_train_step,
    forward_diffuse,
    make_noisy_batch,
    sample_noise_level,
    sample_noise_levels,
    train_denoiser,
    train_estimator,
    training_schedule,
)
from adadiffuse.errors import ShapeError
from adadiffuse.models import make_denoiser, make_estimator
from adadiffuse.nn import AdamState
from adadiffuse.schedule import NoiseSchedule, boundaries


def test_forward_diffuse_extremes():
    y0 = np.array([1.0, -2.0])
    eps = np.array([0.5, 0.5])
    np.testing.assert_array_equal(forward_diffuse(y0, 1.0, eps), y0)
    np.testing.assert_array_equal(forward_diffuse(y0, 0.0, eps), eps)


def test_forward_diffuse_quarter_retention():
    got = forward_diffuse(np.array([2.0]), 0.25, np.array([4.0]))
    assert got[0] == pytest.approx(0.5 * 2.0 + math.sqrt(0.75) * 4.0, abs=1e-15)


def test_forward_diffuse_rejects_mismatch():
    with pytest.raises(ShapeError):
        forward_diffuse(np.zeros(3), 0.5, np.zeros(2))
    with pytest.raises(ValueError):
        forward_diffuse(np.zeros(2), 1.5, np.zeros(2))


def test_sample_noise_level_single_interval():
    l = np.array([1.0, 0.5])
    rng = np.random.default_rng(0)
    for _ in range(200):
        s, a = sample_noise_level(rng, l, 1)
        assert s == 1
        assert 0.5 <= a <= 1.0


def test_sample_noise_level_deterministic_under_seed():
    l = boundaries(np.linspace(1e-4, 2e-2, 50))
    draws1 = [sample_noise_level(np.random.default_rng(42), l, 50) for _ in range(5)]
    draws2 = [sample_noise_level(np.random.default_rng(42), l, 50) for _ in range(5)]
    assert draws1 == draws2


def test_sample_noise_level_interval_frequencies():
    # chi-square against the uniform multinomial, df = 9, 3 sigma ~ 21.7
    l = boundaries(np.linspace(1e-4, 2e-2, 10))
    rng = np.random.default_rng(123)
    s, a = sample_noise_levels(rng, l, 10, 100_000)
    counts = np.bincount(s, minlength=11)[1:]
    chi2 = (((counts - 10_000.0) ** 2) / 10_000.0).sum()
    assert chi2 < 9 + 3 * math.sqrt(18)
    assert np.all(a <= l[s - 1]) and np.all(a >= l[s])


def test_noisy_batch_identity_holds_exactly():
    data = generate(DatasetSpec(size=256, seed=3))
    sched = training_schedule(100)
    batch = make_noisy_batch(data, sched, np.random.default_rng(9))
    recon = batch.sqrt_alpha_bar[:, None] * batch.y0 + np.sqrt(
        1.0 - batch.sqrt_alpha_bar[:, None] ** 2
    ) * batch.epsilon
    np.testing.assert_array_equal(batch.y_s, recon)


class _EchoNoiseDenoiser:
    """Test double: reproduces the injected noise it will be asked about."""


def test_denoiser_step_zero_loss_when_prediction_exact(monkeypatch):
    data = generate(DatasetSpec(size=64, seed=1))
    den = make_denoiser(2, seed=0)
    sched = training_schedule(50)
    opt = AdamState.for_network(den.net)
    rng = np.random.default_rng(7)

    batch = make_noisy_batch(data[:16], sched, np.random.default_rng(7))
    monkeypatch.setattr(
        den.net, "forward", lambda x: batch.epsilon.copy()
    )
    monkeypatch.setattr(den.net, "backward", lambda g: [
        (np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in den.net.layers
    ])
    before = [p.copy() for p in den.net.parameters()]
    loss = denoiser_train_step(den, opt, data[:16], rng, sched)
    assert loss == 0.0
    for b, p in zip(before, den.net.parameters()):
        assert np.array_equal(b, p)


def test_denoiser_training_deterministic():
    data = generate(DatasetSpec(size=128, seed=4))
    cfg = TrainConfig(batch_size=16, total_steps=5, seed=11, stage_count=50)
    den1 = make_denoiser(2, seed=2)
    den2 = make_denoiser(2, seed=2)
    l1 = train_denoiser(den1, data, cfg)
    l2 = train_denoiser(den2, data, cfg)
    assert l1 == l2
    for p1, p2 in zip(den1.net.parameters(), den2.net.parameters()):
        assert np.array_equal(p1, p2)


def test_denoiser_training_reduces_loss():
    # training-progress oracle: late-window mean undercuts the untrained
    # early-window mean
    data = generate(DatasetSpec(size=512, seed=5))
    cfg = TrainConfig(batch_size=64, total_steps=400, seed=1, stage_count=200)
    den = make_denoiser(2, seed=6)
    losses = train_denoiser(den, data, cfg)
    assert np.mean(losses[-40:]) < np.mean(losses[:40])


def test_estimator_loss_values():
    assert estimator_loss(0.7, 0.7) == 0.0
    assert estimator_loss(0.9, 0.99) == pytest.approx(math.log(10), rel=1e-12)


def test_estimator_loss_is_rms_over_batch():
    rng = np.random.default_rng(2)
    t = rng.uniform(0.01, 0.99, size=50)
    h = rng.uniform(0.01, 0.99, size=50)
    gaps = np.log(1 - t) - np.log(1 - h)
    assert estimator_loss(t, h) == pytest.approx(np.sqrt(np.mean(gaps**2)), rel=1e-12)


def test_estimator_loss_symmetric_and_zero_iff_equal():
    assert estimator_loss(0.3, 0.8) == pytest.approx(estimator_loss(0.8, 0.3), rel=1e-12)
    assert estimator_loss(0.3, 0.8) > 0


def test_estimator_loss_penalizes_near_one_errors_more():
    delta = 1e-3
    assert estimator_loss(0.999, 0.999 - delta) > estimator_loss(0.5, 0.5 - delta)


def test_estimator_training_deterministic():
    data = generate(DatasetSpec(size=128, seed=4))
    cfg = TrainConfig(batch_size=16, total_steps=5, seed=3, stage_count=50)
    e1, e2 = make_estimator(2, seed=8), make_estimator(2, seed=8)
    assert train_estimator(e1, data, cfg) == train_estimator(e2, data, cfg)


def test_estimator_training_reduces_loss():
    # per-step losses are noisy (batch-dependent noise-level draws), so the
    # progress oracle compares windowed means
    data = generate(DatasetSpec(size=512, seed=6))
    cfg = TrainConfig(batch_size=64, total_steps=800, seed=2, stage_count=200)
    est = make_estimator(2, seed=7)
    losses = train_estimator(est, data, cfg)
    assert np.mean(losses[-40:]) < np.mean(losses[:40])


def test_estimator_step_zero_loss_perfect_prediction(monkeypatch):
    data = generate(DatasetSpec(size=32, seed=9))
    est = make_estimator(2, seed=0)
    sched = training_schedule(50)
    opt = AdamState.for_network(est.net)
    batch = make_noisy_batch(data, sched, np.random.default_rng(5))
    monkeypatch.setattr(est.net, "forward", lambda x: (batch.sqrt_alpha_bar**2)[:, None])
    monkeypatch.setattr(est.net, "backward", lambda g: [
        (np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in est.net.layers
    ])
    loss = estimator_train_step(est, opt, data, np.random.default_rng(5), sched)
    assert loss == 0.0


@settings(max_examples=30, deadline=None)
@given(
    ab=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=1000),
)
def test_forward_diffuse_identity_property(ab, seed):
    rng = np.random.default_rng(seed)
    y0 = rng.standard_normal((4, 3))
    eps = rng.standard_normal((4, 3))
    ys = forward_diffuse(y0, ab, eps)
    np.testing.assert_allclose(
        ys, math.sqrt(ab) * y0 + math.sqrt(1 - ab) * eps, atol=1e-15
    )


def test_training_schedule_is_valid():
    sched = training_schedule(1000)
    assert isinstance(sched, NoiseSchedule)
    assert len(sched) == 1000
    assert sched.betas[0] == pytest.approx(1e-4)
    assert sched.betas[-1] == pytest.approx(2e-2)
