"""Run manifests: a JSON sidecar describing every CLI invocation.

The manifest pins the command, configuration digest, seed, input file
digests, and produced artifacts, so any output can be traced back to an
exact, re-runnable invocation.
"""

from __future__ import annotations

import hashlib
import json
import time
from datetime import datetime, timezone


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class ManifestWriter:
    """Collects run facts and writes ``<out>.manifest.json``."""

    def __init__(self, command: str, argv: list[str], version: str):
        self.command = command
        self.argv = list(argv)
        self.version = version
        self.started = time.monotonic()
        self.started_utc = datetime.now(timezone.utc).isoformat()
        self.inputs: dict[str, str] = {}
        self.artifacts: list[str] = []
        self.config_digest: str | None = None
        self.seed: int | None = None

    def add_input(self, path: str) -> None:
        self.inputs[path] = file_digest(path)

    def add_artifact(self, path: str) -> None:
        if path not in self.artifacts:
            self.artifacts.append(path)

    def write(self, out_path: str) -> str:
        payload = {
            "command": self.command,
            "argv": self.argv,
            "version": self.version,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "started_utc": self.started_utc,
            "wall_clock_s": round(time.monotonic() - self.started, 3),
        }
        manifest_path = f"{out_path}.manifest.json"
        with open(manifest_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest_path
