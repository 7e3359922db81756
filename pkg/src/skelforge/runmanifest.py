"""Run manifests: every CLI invocation records what it was asked to do
before side effects begin, and how it ended."""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: list[int] = field(default_factory=list)
    inputs: dict[str, str] = field(default_factory=dict)  # path -> digest
    outputs: list[str] = field(default_factory=list)
    checkpoints: dict[str, str] = field(default_factory=dict)  # path -> digest
    status: str = "running"
    error: str = ""
    started_at: float = field(default_factory=time.time)
    wall_clock_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "checkpoints": self.checkpoints,
            "status": self.status,
            "error": self.error,
            "started_at": self.started_at,
            "wall_clock_s": self.wall_clock_s,
        }


class ManifestWriter:
    """Writes the manifest before work starts and finalizes it on exit;
    a crash leaves a manifest carrying the failure marker."""

    def __init__(self, path: str | Path, manifest: RunManifest):
        self.path = Path(path)
        self.manifest = manifest

    def write(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def __enter__(self) -> RunManifest:
        self.write()
        return self.manifest

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.manifest.wall_clock_s = time.time() - self.manifest.started_at
        if exc_type is None:
            self.manifest.status = "ok"
        else:
            self.manifest.status = "failed"
            self.manifest.error = f"{exc_type.__name__}: {exc}"
        self.write()
        return False
