"""SKDF checkpoint container.

Layout (all integers little-endian):

    magic   4 bytes  b"SKDF"
    version u32      currently 1
    digest  32 bytes sha256 of the canonical config JSON
    cfg_len u32      length of the config JSON payload
    config  cfg_len  UTF-8 JSON
    count   u32      number of named arrays
    arrays  count *  [u16 name_len | name UTF-8 | u8 rank | rank * u64 dims
                      | float32 little-endian payload]

Arrays round-trip bit-exactly; loading verifies the magic, version and
config digest.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import DataError

MAGIC = b"SKDF"
VERSION = 1


def _canonical(config: dict) -> bytes:
    return json.dumps(config, sort_keys=True, separators=(",", ":")).encode()


def config_digest(config: dict) -> str:
    return hashlib.sha256(_canonical(config)).hexdigest()


def save_arrays(path: str | Path, config: dict, arrays: dict[str, np.ndarray]) -> None:
    payload = _canonical(config)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(hashlib.sha256(payload).digest())
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        fh.write(struct.pack("<I", len(arrays)))
        for name, array in arrays.items():
            arr = np.asarray(array, dtype="<f4")
            if not arr.flags["C_CONTIGUOUS"]:
                arr = np.ascontiguousarray(arr)  # keeps rank-0 arrays rank 0
            encoded = name.encode()
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes())


def load_arrays(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    data = path.read_bytes()
    view = memoryview(data)
    if bytes(view[:4]) != MAGIC:
        raise DataError(f"{path}: bad magic, not a SKDF checkpoint")
    (version,) = struct.unpack_from("<I", view, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    digest = bytes(view[8:40])
    (cfg_len,) = struct.unpack_from("<I", view, 40)
    off = 44
    payload = bytes(view[off:off + cfg_len])
    if hashlib.sha256(payload).digest() != digest:
        raise DataError(f"{path}: config digest mismatch")
    config = json.loads(payload.decode())
    off += cfg_len
    (count,) = struct.unpack_from("<I", view, off)
    off += 4
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", view, off)
        off += 2
        name = bytes(view[off:off + name_len]).decode()
        off += name_len
        (rank,) = struct.unpack_from("<B", view, off)
        off += 1
        dims = struct.unpack_from(f"<{rank}Q", view, off)
        off += 8 * rank
        size = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(view, dtype="<f4", count=size, offset=off).reshape(dims)
        off += 4 * size
        arrays[name] = arr.copy()
    if off != len(data):
        raise DataError(f"{path}: {len(data) - off} trailing bytes")
    return config, arrays


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _module_arrays(module: torch.nn.Module) -> dict[str, np.ndarray]:
    out = {}
    for name, tensor in module.state_dict().items():
        out[name] = tensor.detach().cpu().to(torch.float32).numpy()
    return out


def _load_module_arrays(module: torch.nn.Module, arrays: dict[str, np.ndarray]) -> None:
    state = module.state_dict()
    missing = set(state) - set(arrays)
    extra = set(arrays) - set(state)
    if missing or extra:
        raise DataError(f"checkpoint arrays mismatch (missing={sorted(missing)}, extra={sorted(extra)})")
    converted = {}
    for name, ref in state.items():
        converted[name] = torch.from_numpy(arrays[name]).to(ref.dtype)
    module.load_state_dict(converted)


def save_denoiser(
    path: str | Path,
    model,
    schedule=None,
    stats=None,
    window: int | None = None,
) -> None:
    """Persist a denoiser plus (optionally) its schedule parameters and
    normalization stats so sampling needs only the checkpoint."""
    from .denoiser import Denoiser  # local import to avoid a cycle

    assert isinstance(model, Denoiser)
    config = {"kind": "denoiser", "model": model.config.to_json()}
    arrays = _module_arrays(model)
    if schedule is not None:
        config["diffusion"] = {
            "steps": schedule.t_steps,
            "beta_start": float(schedule.beta[0]),
            "beta_end": float(schedule.beta[-1]),
        }
    if stats is not None:
        arrays["norm.mean"] = stats.mean.astype(np.float32)
        arrays["norm.std"] = stats.std.astype(np.float32)
    if window is not None:
        config["window"] = window
    save_arrays(path, config, arrays)


def load_denoiser(path: str | Path):
    """Load a denoiser checkpoint; returns (model, schedule, stats, config).

    Schedule and stats are None when the checkpoint was saved without them.
    """
    from .denoiser import Denoiser, ModelConfig
    from .diffusion import make_linear_schedule
    from .features import NormalizationStats

    config, arrays = load_arrays(path)
    if config.get("kind") != "denoiser":
        raise DataError(f"{path}: not a denoiser checkpoint")
    model = Denoiser(ModelConfig.from_json(config["model"]))
    stats = None
    if "norm.mean" in arrays:
        stats = NormalizationStats(
            mean=arrays.pop("norm.mean").astype(np.float64),
            std=arrays.pop("norm.std").astype(np.float64),
        )
    _load_module_arrays(model, arrays)
    schedule = None
    if "diffusion" in config:
        d = config["diffusion"]
        schedule = make_linear_schedule(d["steps"], d["beta_start"], d["beta_end"])
    return model, schedule, stats, config


def save_recognizer(path: str | Path, model) -> None:
    from .recognizer import SkeletonRecognizer

    assert isinstance(model, SkeletonRecognizer)
    config = {
        "kind": "recognizer",
        "recognizer": model.config.to_json(),
        "is_trained": bool(model.is_trained),
    }
    save_arrays(path, config, _module_arrays(model))


def load_recognizer(path: str | Path):
    from .recognizer import RecognizerConfig, SkeletonRecognizer
    from .skeleton import default_skeleton

    config, arrays = load_arrays(path)
    if config.get("kind") != "recognizer":
        raise DataError(f"{path}: not a recognizer checkpoint")
    model = SkeletonRecognizer(
        RecognizerConfig.from_json(config["recognizer"]), default_skeleton()
    )
    _load_module_arrays(model, arrays)
    model.is_trained = bool(config.get("is_trained", False))
    model.eval()
    return model, config
