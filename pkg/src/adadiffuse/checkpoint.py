"""Binary tensor checkpointing.

File layout: magic b"NESD", format version (u32 LE), then per tensor:
name byte-length (u32 LE), UTF-8 name, rank (u32 LE), dims (u32 LE each),
raw little-endian float64 values. Round trips are bit-exact.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .models import Denoiser, Estimator
from .nn import ACTIVATIONS, DenseLayer, Network
from .schedule import NoiseSchedule

MAGIC = b"NESD"
VERSION = 1

_COND_CODES = {"continuous_alpha": 0, "discrete_index": 1}
_COND_NAMES = {v: k for k, v in _COND_CODES.items()}


def write_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
            raw_name = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw_name)))
            fh.write(raw_name)
            fh.write(struct.pack("<I", arr.ndim))
            for d in arr.shape:
                fh.write(struct.pack("<I", d))
            fh.write(arr.astype("<f8").tobytes())


def read_tensors(path) -> dict[str, np.ndarray]:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a tensor checkpoint (bad magic)")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise CheckpointError(
            f"{path}: unsupported format version {version}, expected {VERSION}"
        )
    pos = 8
    tensors: dict[str, np.ndarray] = {}

    def take(nbytes: int, what: str) -> bytes:
        nonlocal pos
        if pos + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated while reading {what}")
        out = blob[pos : pos + nbytes]
        pos += nbytes
        return out

    while pos < len(blob):
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        name = take(name_len, "tensor name").decode("utf-8")
        (rank,) = struct.unpack("<I", take(4, "rank"))
        dims = struct.unpack(f"<{rank}I", take(4 * rank, "dims")) if rank else ()
        count = int(np.prod(dims)) if dims else 1
        data = np.frombuffer(take(8 * count, f"values of {name!r}"), dtype="<f8")
        tensors[name] = data.reshape(dims).astype(np.float64)
    return tensors


def _network_tensors(prefix: str, net: Network) -> dict[str, np.ndarray]:
    out = {}
    for k, layer in enumerate(net.layers):
        out[f"{prefix}/layer{k}/weight"] = layer.weight
        out[f"{prefix}/layer{k}/bias"] = layer.bias
        out[f"{prefix}/layer{k}/activation"] = np.array(
            [float(ACTIVATIONS.index(layer.activation))]
        )
    return out


def _network_from_tensors(prefix: str, tensors: dict[str, np.ndarray]) -> Network:
    layers = []
    k = 0
    while f"{prefix}/layer{k}/weight" in tensors:
        try:
            w = tensors[f"{prefix}/layer{k}/weight"]
            b = tensors[f"{prefix}/layer{k}/bias"]
            act = ACTIVATIONS[int(tensors[f"{prefix}/layer{k}/activation"][0])]
        except (KeyError, IndexError) as exc:
            raise CheckpointError(f"incomplete layer {k} under {prefix!r}") from exc
        layers.append(DenseLayer(w.copy(), b.copy(), act))
        k += 1
    if not layers:
        raise CheckpointError(f"no layers found under {prefix!r}")
    return Network(layers)


def save_checkpoint(models: dict, schedule: NoiseSchedule | None, path) -> None:
    """Persist denoiser/estimator models and optionally a schedule."""
    tensors: dict[str, np.ndarray] = {}
    den = models.get("denoiser")
    if den is not None:
        tensors.update(_network_tensors("denoiser", den.net))
        tensors["denoiser/meta"] = np.array(
            [float(den.data_dim), float(_COND_CODES[den.conditioning_mode])]
        )
    est = models.get("estimator")
    if est is not None:
        tensors.update(_network_tensors("estimator", est.net))
        tensors["estimator/meta"] = np.array([float(est.data_dim)])
    if schedule is not None:
        tensors["schedule/betas"] = schedule.betas
    write_tensors(path, tensors)


def load_checkpoint(path) -> tuple[dict, NoiseSchedule | None]:
    tensors = read_tensors(path)
    models: dict = {}
    if "denoiser/meta" in tensors:
        meta = tensors["denoiser/meta"]
        models["denoiser"] = Denoiser(
            net=_network_from_tensors("denoiser", tensors),
            data_dim=int(meta[0]),
            conditioning_mode=_COND_NAMES[int(meta[1])],
        )
    if "estimator/meta" in tensors:
        models["estimator"] = Estimator(
            net=_network_from_tensors("estimator", tensors),
            data_dim=int(tensors["estimator/meta"][0]),
        )
    schedule = None
    if "schedule/betas" in tensors:
        schedule = NoiseSchedule.from_betas(tensors["schedule/betas"])
    return models, schedule
