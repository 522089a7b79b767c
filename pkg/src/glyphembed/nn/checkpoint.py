"""Checkpoint persistence.

Wire format: magic "GEMB", u32 format version (little-endian), u64 JSON header
length, the UTF-8 JSON header (model kind, config, metadata, tensor table with
name/shape/byte offset), then raw little-endian float32 blobs in table order.
Roundtrips are bitwise exact; values are stored as float32 only.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import Corrupt, VersionMismatch

MAGIC = b"GEMB"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    model_kind: str
    config: dict
    metadata: dict = field(default_factory=dict)
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @classmethod
    def from_store(cls, model_kind: str, config: dict, store, metadata: dict | None = None):
        tensors = {name: value.astype(np.float32, copy=True) for name, (value, _) in store.items()}
        return cls(model_kind, config, dict(metadata or {}), tensors)


def pack_container(magic: bytes, version: int, tensors: dict[str, np.ndarray], header_extra: dict) -> bytes:
    table = []
    offset = 0
    blobs = []
    for name, arr in tensors.items():
        blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        table.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = dict(header_extra)
    header["tensors"] = table
    hjson = json.dumps(header, sort_keys=True).encode("utf-8")
    return b"".join(
        [magic, struct.pack("<I", version), struct.pack("<Q", len(hjson)), hjson, *blobs]
    )


def unpack_container(raw: bytes, magic: bytes, expect_version: int, path) -> tuple[dict, dict[str, np.ndarray]]:
    fixed = len(magic) + 4 + 8
    if len(raw) < fixed:
        raise Corrupt(f"{path}: file shorter than fixed header")
    if raw[: len(magic)] != magic:
        raise Corrupt(f"{path}: bad magic {raw[:len(magic)]!r}")
    pos = len(magic)
    (version,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    if version != expect_version:
        raise VersionMismatch(f"{path}: format version {version}, reader supports {expect_version}")
    (hlen,) = struct.unpack_from("<Q", raw, pos)
    pos += 8
    if pos + hlen > len(raw):
        raise Corrupt(f"{path}: truncated JSON header")
    try:
        header = json.loads(raw[pos : pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise Corrupt(f"{path}: unreadable header ({exc})") from exc
    pos += hlen
    body = raw[pos:]
    tensors: dict[str, np.ndarray] = {}
    table = header.get("tensors")
    if not isinstance(table, list):
        raise Corrupt(f"{path}: header missing tensor table")
    for entry in table:
        try:
            name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        except (TypeError, KeyError) as exc:
            raise Corrupt(f"{path}: malformed tensor table entry {entry!r}") from exc
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        end = offset + 4 * count
        if offset < 0 or end > len(body):
            raise Corrupt(f"{path}: tensor {name!r} out of bounds (needs {end} of {len(body)} bytes)")
        tensors[name] = np.frombuffer(body, dtype="<f4", count=count, offset=offset).reshape(shape).copy()
    return header, tensors


def save_checkpoint(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    header = {
        "model_kind": ckpt.model_kind,
        "config": ckpt.config,
        "metadata": ckpt.metadata,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(pack_container(MAGIC, ckpt.version, ckpt.tensors, header))
    tmp.replace(path)
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise Corrupt(f"{path}: unreadable ({exc})") from exc
    header, tensors = unpack_container(raw, MAGIC, FORMAT_VERSION, path)
    if "model_kind" not in header or "config" not in header:
        raise Corrupt(f"{path}: header missing model_kind/config")
    return Checkpoint(
        model_kind=header["model_kind"],
        config=header["config"],
        metadata=header.get("metadata", {}),
        tensors=tensors,
        version=FORMAT_VERSION,
    )
