"""Checkpoint container: length-prefixed JSON header + named float32 blobs.

Layout::

    [u64 little-endian header length][UTF-8 JSON header][blob bytes...]

The header carries metadata, per-blob (name, shape, offset, nbytes) entries
and a SHA-256 of the payload, so truncation and corruption are detected on
load instead of surfacing as garbage weights.
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from pathlib import Path

import numpy as np

__all__ = [
    "CheckpointError",
    "CheckpointIntegrityError",
    "ConfigHashMismatchWarning",
    "REQUIRED_METADATA",
    "save_checkpoint",
    "load_checkpoint",
    "read_metadata",
    "parameter_count",
]

FORMAT_NAME = "tryon-checkpoint-v1"
REQUIRED_METADATA = ("config_hash", "version", "seed")

_LEN = struct.Struct("<Q")


class CheckpointError(ValueError):
    pass


class CheckpointIntegrityError(CheckpointError):
    """File is truncated or its payload hash does not match the header."""


class ConfigHashMismatchWarning(UserWarning):
    pass


def save_checkpoint(path: str | Path, weights: dict[str, np.ndarray], metadata: dict) -> None:
    missing = [k for k in REQUIRED_METADATA if k not in metadata]
    if missing:
        raise CheckpointError(f"metadata missing required keys: {missing}")
    blobs = []
    payload = bytearray()
    offset = 0
    for name, array in weights.items():
        arr = np.ascontiguousarray(array)
        if arr.dtype != np.float32:
            raise CheckpointError(
                f"weight {name!r} has dtype {arr.dtype}; checkpoints store "
                "little-endian float32 only — convert before saving"
            )
        raw = arr.astype("<f4", copy=False).tobytes()
        blobs.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        payload.extend(raw)
        offset += len(raw)
    header = {
        "format": FORMAT_NAME,
        "metadata": metadata,
        "blobs": blobs,
        "payload_sha256": hashlib.sha256(bytes(payload)).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_LEN.pack(len(header_bytes)))
        fh.write(header_bytes)
        fh.write(bytes(payload))


def _read_header(path: str | Path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    if len(raw) < _LEN.size:
        raise CheckpointIntegrityError(f"{path}: file too short for a header length prefix")
    (header_len,) = _LEN.unpack(raw[: _LEN.size])
    body_start = _LEN.size + header_len
    if len(raw) < body_start:
        raise CheckpointIntegrityError(f"{path}: truncated header")
    try:
        header = json.loads(raw[_LEN.size : body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointIntegrityError(f"{path}: corrupt header ({exc})") from exc
    if header.get("format") != FORMAT_NAME:
        raise CheckpointError(f"{path}: unknown checkpoint format {header.get('format')!r}")
    return header, raw[body_start:]


def load_checkpoint(
    path: str | Path, expected_config_hash: str | None = None
) -> tuple[dict[str, np.ndarray], dict]:
    """Load weights and metadata; integrity failures raise, config-hash
    mismatches only warn."""
    header, payload = _read_header(path)
    total = sum(b["nbytes"] for b in header["blobs"])
    if len(payload) != total:
        raise CheckpointIntegrityError(
            f"{path}: payload is {len(payload)} bytes, header declares {total}"
        )
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header["payload_sha256"]:
        raise CheckpointIntegrityError(f"{path}: payload hash mismatch")
    metadata = header["metadata"]
    if expected_config_hash is not None and metadata.get("config_hash") != expected_config_hash:
        warnings.warn(
            f"{path}: checkpoint config hash {metadata.get('config_hash')!r} does not "
            f"match expected {expected_config_hash!r}; loading anyway",
            ConfigHashMismatchWarning,
            stacklevel=2,
        )
    weights = {}
    for blob in header["blobs"]:
        start, stop = blob["offset"], blob["offset"] + blob["nbytes"]
        arr = np.frombuffer(payload[start:stop], dtype="<f4").reshape(blob["shape"])
        weights[blob["name"]] = arr.copy()
    return weights, metadata


def read_metadata(path: str | Path) -> dict:
    header, _ = _read_header(path)
    return header["metadata"]


def parameter_count(path: str | Path) -> int:
    """Total float32 parameters stored in a checkpoint."""
    header, _ = _read_header(path)
    return sum(int(np.prod(blob["shape"])) for blob in header["blobs"])
