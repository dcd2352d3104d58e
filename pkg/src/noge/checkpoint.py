"""Binary checkpoint format.

Layout (all integers little-endian)::

    8 bytes   magic b"NOGECKPT"
    u32       format version
    u64       header length n
    n bytes   UTF-8 JSON header (sorted keys): metadata plus an ordered
              ``arrays`` list of {"name", "shape"}
    ...       raw float64 ('<f8') C-order data of each array, in header order
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"NOGECKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config_digest: str
    epoch: int
    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray] | None = None
    adam_v: dict[str, np.ndarray] | None = None
    adam_step: int = 0
    meta: dict = field(default_factory=dict)

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        out = [(f"param/{k}", v) for k, v in self.params.items()]
        if self.adam_m is not None:
            out += [(f"adam_m/{k}", v) for k, v in self.adam_m.items()]
            out += [(f"adam_v/{k}", v) for k, v in self.adam_v.items()]
        return out


def to_bytes(ckpt: Checkpoint) -> bytes:
    arrays = ckpt.arrays()
    header = {
        "format_version": VERSION,
        "config_digest": ckpt.config_digest,
        "epoch": ckpt.epoch,
        "adam_step": ckpt.adam_step,
        "meta": ckpt.meta,
        "arrays": [{"name": name, "shape": list(a.shape)} for name, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<IQ", VERSION, len(blob)), blob]
    parts += [np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in arrays]
    return b"".join(parts)


def from_bytes(data: bytes) -> Checkpoint:
    if data[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, n = struct.unpack_from("<IQ", data, 8)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    offset = 8 + struct.calcsize("<IQ")
    header = json.loads(data[offset:offset + n].decode("utf-8"))
    offset += n
    groups: dict[str, dict[str, np.ndarray]] = {"param": {}, "adam_m": {}, "adam_v": {}}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += 8 * count
        group, name = entry["name"].split("/", 1)
        groups[group][name] = arr.astype(np.float64)  # owned, writable copy
    if offset != len(data):
        raise CheckpointError("trailing bytes after checkpoint arrays")
    has_adam = bool(groups["adam_m"])
    return Checkpoint(
        config_digest=header["config_digest"],
        epoch=header["epoch"],
        params=groups["param"],
        adam_m=groups["adam_m"] if has_adam else None,
        adam_v=groups["adam_v"] if has_adam else None,
        adam_step=header["adam_step"],
        meta=header["meta"],
    )


def save(ckpt: Checkpoint, path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(to_bytes(ckpt))
    tmp.replace(path)


def load(path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes())
