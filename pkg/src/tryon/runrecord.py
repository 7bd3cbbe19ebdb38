"""Run records: one JSON sidecar per CLI invocation.

Records the command line, config snapshot, seed, content hashes of inputs
and outputs, and timestamps. Output hashes exclude run records themselves
and timestamps, so identical re-runs produce identical hash sets even
though the records differ in wall-clock fields.
"""

from __future__ import annotations

import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

__all__ = ["content_hash", "hash_tree", "RunRecorder"]

RECORD_NAME = "runrecord.json"


def content_hash(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def hash_tree(target: str | Path) -> dict[str, str]:
    """Relative-path -> sha256 for a file or directory, skipping run records."""
    target = Path(target)
    if target.is_file():
        return {target.name: content_hash(target)}
    hashes = {}
    for path in sorted(target.rglob("*")):
        if path.is_file() and not path.name.endswith(RECORD_NAME):
            hashes[str(path.relative_to(target))] = content_hash(path)
    return hashes


class RunRecorder:
    """Collects run provenance and writes the record next to the outputs."""

    def __init__(self, command: str, seed: int, config_snapshot: dict | None = None):
        self.payload = {
            "command": command,
            "argv": sys.argv,
            "seed": seed,
            "config": config_snapshot or {},
            "started": datetime.now(timezone.utc).isoformat(),
            "inputs": {},
            "outputs": {},
            "output_paths": [],
        }

    def add_input(self, path: str | Path) -> None:
        path = Path(path)
        if path.exists():
            self.payload["inputs"][str(path)] = hash_tree(path)

    def add_output(self, path: str | Path) -> None:
        self.payload["output_paths"].append(str(path))

    def write(self) -> Path:
        self.payload["finished"] = datetime.now(timezone.utc).isoformat()
        for path in self.payload["output_paths"]:
            self.payload["outputs"][path] = hash_tree(path)
        primary = Path(self.payload["output_paths"][0])
        record_path = (
            primary / RECORD_NAME if primary.is_dir() else primary.with_suffix(primary.suffix + ".runrecord.json")
        )
        record_path.write_text(json.dumps(self.payload, indent=2, sort_keys=True))
        return record_path
