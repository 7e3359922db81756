"""Sectioned key-value configuration.

Files use INI grammar (configparser); keys are addressed as
"section.key". Precedence: built-in defaults < profile file < --config
file < individual CLI flags. The bundled desk profile keeps every
experiment runnable in minutes on a laptop CPU.
"""

import configparser
from importlib import resources
from pathlib import Path

from .errors import ConfigError

DEFAULTS: dict[str, str] = {
    # toy dataset
    "data.classes": "3",
    "data.per_class": "40",
    "data.frames": "64",
    "data.seed": "7",
    # diffusion chain (paper-scale defaults)
    "diffusion.steps": "1000",
    "diffusion.beta_start": "1e-4",
    "diffusion.beta_end": "0.02",
    "loss.lambda_cls": "0.1",
    # denoiser
    "model.d_model": "256",
    "model.layers": "4",
    "model.heads": "4",
    "model.feed_forward": "0",
    "model.max_frames": "48",
    "model.internal_dropout": "0.1",
    # diffusion training
    "train.lr": "1e-4",
    "train.epochs": "600",
    "train.batch_size": "256",
    "train.seed": "0",
    "train.window": "48",
    "train.checkpoint_every": "0",
    # sampling
    "sampling.dropout": "0.2",
    "sampling.tau": "20",
    "sampling.guidance": "0",
    "sampling.frames": "48",
    "sampling.max_rounds": "10",
    "sampling.seed": "0",
    # recognizer
    "recognizer.channels": "32,64,128",
    "recognizer.temporal_kernel": "9",
    "recognizer.window": "48",
    "recognizer.epochs": "40",
    "recognizer.lr": "1e-3",
    "recognizer.batch_size": "32",
    # protocol harness
    "protocol.fractions": "0.75,0.9,0.95,1.0",
    "protocol.policies": "none,synthetic",
    "protocol.seeds": "5",
    "protocol.multiplier": "5",
    "protocol.train_split": "0.8",
    "protocol.split_seed": "123",
}


class Config:
    """Flat dotted-key view over layered configuration sources."""

    def __init__(self, values: dict[str, str] | None = None):
        self.values = dict(DEFAULTS)
        if values:
            self.values.update(values)

    def update_from_file(self, path: str | Path) -> None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            for key, value in parser.items(section):
                self.values[f"{section}.{key}"] = value

    def set(self, key: str, value: str) -> None:
        self.values[key] = str(value)

    def _raw(self, key: str) -> str:
        if key not in self.values:
            raise ConfigError(f"unknown config key {key!r}")
        return self.values[key]

    def get_str(self, key: str) -> str:
        return self._raw(key)

    def get_int(self, key: str) -> int:
        raw = self._raw(key)
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {raw!r} is not an integer") from exc

    def get_float(self, key: str) -> float:
        raw = self._raw(key)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {raw!r} is not a number") from exc

    def get_floats(self, key: str) -> list[float]:
        raw = self._raw(key)
        try:
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {raw!r} is not a number list") from exc

    def get_ints(self, key: str) -> list[int]:
        raw = self._raw(key)
        try:
            return [int(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {raw!r} is not an integer list") from exc

    def get_strs(self, key: str) -> list[str]:
        return [tok.strip() for tok in self._raw(key).split(",") if tok.strip()]

    def snapshot(self) -> dict[str, str]:
        return dict(sorted(self.values.items()))


def load_profile(name_or_path: str) -> Config:
    """Config from a bundled profile name (e.g. "desk") or a file path."""
    config = Config()
    bundled = resources.files("skelforge") / "profiles" / f"{name_or_path}.cfg"
    if bundled.is_file():
        with resources.as_file(bundled) as path:
            config.update_from_file(path)
        return config
    if Path(name_or_path).exists():
        config.update_from_file(name_or_path)
        return config
    raise ConfigError(f"profile {name_or_path!r} is neither bundled nor a file")
