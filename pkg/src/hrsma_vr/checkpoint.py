"""Binary checkpoints of named float64 arrays.

File layout (all integers little-endian)::

    8 bytes   magic  b"HRSMACKP"
    uint32    format version
    uint32    n, length of the JSON layout descriptor
    n bytes   UTF-8 JSON: {"arrays": [{"name": str, "shape": [int, ...]}, ...]}
    payload   the arrays in descriptor order, float64 little-endian, C order

A JSON sidecar next to the binary records hyperparameters and seeds.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

__all__ = ["MAGIC", "VERSION", "save_arrays", "load_arrays", "write_sidecar", "read_sidecar"]

MAGIC = b"HRSMACKP"
VERSION = 1
_HEADER = struct.Struct("<II")


def save_arrays(path, arrays: dict) -> None:
    """Write ``{name: array}`` to ``path``; order of the dict is kept."""
    layout, chunks = [], []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        layout.append({"name": str(name), "shape": list(arr.shape)})
        chunks.append(arr.tobytes())
    desc = json.dumps({"arrays": layout}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, len(desc)))
        fh.write(desc)
        for c in chunks:
            fh.write(c)


def load_arrays(path) -> dict:
    path = Path(path)
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    pos = len(MAGIC)
    if len(data) < pos + _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    version, n = _HEADER.unpack_from(data, pos)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos += _HEADER.size
    try:
        layout = json.loads(data[pos : pos + n].decode("utf-8"))["arrays"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise ValueError(f"{path}: corrupt layout descriptor ({exc})") from None
    pos += n
    out = {}
    for entry in layout:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = pos + 8 * count
        if end > len(data):
            raise ValueError(f"{path}: payload shorter than layout for {entry['name']!r}")
        out[entry["name"]] = np.frombuffer(data[pos:end], dtype="<f8").reshape(shape).copy()
        pos = end
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes after payload")
    return out


def write_sidecar(path, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_sidecar(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
