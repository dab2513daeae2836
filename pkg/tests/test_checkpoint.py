import struct

import numpy as np
import pytest

from adadiffuse.checkpoint import (
    MAGIC,
    VERSION,
    load_checkpoint,
    read_tensors,
    save_checkpoint,
    write_tensors,
)
from adadiffuse.errors import CheckpointError
from adadiffuse.models import make_denoiser, make_estimator
from adadiffuse.schedule import NoiseSchedule


def test_tensor_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a/weight": rng.standard_normal((3, 5)),
        "b/values": rng.standard_normal(7),
        "c/scalarish": np.array([1.5]),
    }
    path = tmp_path / "t.nesd"
    write_tensors(path, tensors)
    back = read_tensors(path)
    assert set(back) == set(tensors)
    for name in tensors:
        assert back[name].dtype == np.float64
        assert back[name].shape == tensors[name].shape
        assert np.array_equal(back[name], tensors[name])
        assert back[name].tobytes() == tensors[name].tobytes()


def test_model_checkpoint_round_trip(tmp_path):
    den = make_denoiser(2, seed=1)
    est = make_estimator(2, seed=2)
    sched = NoiseSchedule.from_betas(np.linspace(1e-4, 2e-2, 100))
    path = tmp_path / "models.nesd"
    save_checkpoint({"denoiser": den, "estimator": est}, sched, path)
    models, sched2 = load_checkpoint(path)

    assert models["denoiser"].data_dim == 2
    assert models["denoiser"].conditioning_mode == "continuous_alpha"
    for l1, l2 in zip(den.net.layers, models["denoiser"].net.layers):
        assert np.array_equal(l1.weight, l2.weight)
        assert np.array_equal(l1.bias, l2.bias)
        assert l1.activation == l2.activation
    for l1, l2 in zip(est.net.layers, models["estimator"].net.layers):
        assert np.array_equal(l1.weight, l2.weight)
    assert np.array_equal(sched2.betas, sched.betas)

    # loaded models produce identical outputs
    x = np.random.default_rng(3).standard_normal((4, 2))
    np.testing.assert_array_equal(
        est.net.forward(x), models["estimator"].net.forward(x)
    )


def test_discrete_mode_survives_round_trip(tmp_path):
    den = make_denoiser(2, seed=1, conditioning_mode="discrete_index")
    path = tmp_path / "d.nesd"
    save_checkpoint({"denoiser": den}, None, path)
    models, sched = load_checkpoint(path)
    assert models["denoiser"].conditioning_mode == "discrete_index"
    assert sched is None


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.nesd"
    path.write_bytes(b"XXXX" + struct.pack("<I", VERSION))
    with pytest.raises(CheckpointError, match="magic"):
        read_tensors(path)


def test_wrong_version_rejected_with_both_numbers(tmp_path):
    path = tmp_path / "v9.nesd"
    path.write_bytes(MAGIC + struct.pack("<I", 9))
    with pytest.raises(CheckpointError) as err:
        read_tensors(path)
    assert "9" in str(err.value) and str(VERSION) in str(err.value)


def test_truncated_file_rejected_without_partial_state(tmp_path):
    path = tmp_path / "full.nesd"
    write_tensors(path, {"x": np.arange(10.0)})
    blob = path.read_bytes()
    for cut in (6, len(blob) // 2, len(blob) - 1):
        trunc = tmp_path / f"cut{cut}.nesd"
        trunc.write_bytes(blob[:cut])
        with pytest.raises(CheckpointError, match="truncated|magic"):
            read_tensors(trunc)


def test_empty_model_dict_round_trips_schedule_only(tmp_path):
    sched = NoiseSchedule.from_betas([0.01, 0.02, 0.03])
    path = tmp_path / "s.nesd"
    save_checkpoint({}, sched, path)
    models, sched2 = load_checkpoint(path)
    assert models == {}
    assert np.array_equal(sched2.betas, sched.betas)
