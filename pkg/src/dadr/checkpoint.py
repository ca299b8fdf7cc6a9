"""Single-file checkpoint container.

Layout:
    bytes 0..8    magic b"DADRCKPT"
    bytes 8..12   format version, uint32 little-endian
    bytes 12..20  header length in bytes, uint64 little-endian
    header        UTF-8 JSON with sorted keys:
                    config  -- config echo (arbitrary JSON)
                    step    -- training step count
                    rng     -- hex-encoded RNG states by name
                    tensors -- list of {name, dtype, shape, offset, nbytes}
    payload       raw little-endian tensor bytes, offsets relative to
                  payload start, in header order

Round trips are bit-exact: tensors are written and read as raw bytes.
"""

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DADRCKPT"
VERSION = 1


def save_checkpoint(path: str | Path, tensors: dict[str, np.ndarray], config: dict,
                    step: int, rng_states: dict[str, bytes] | None = None) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        entries.append({
            "name": name,
            "dtype": np.dtype(arr.dtype).newbyteorder("<").str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        blobs.append(raw)
        offset += len(raw)
    header = {
        "config": config,
        "step": int(step),
        "rng": {k: v.hex() for k, v in (rng_states or {}).items()},
        "tensors": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for raw in blobs:
            f.write(raw)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict, int, dict[str, bytes]]:
    """Returns (tensors, config, step, rng_states)."""
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic {magic!r})")
        version = struct.unpack("<I", f.read(4))[0]
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header_len = struct.unpack("<Q", f.read(8))[0]
        header = json.loads(f.read(header_len).decode("utf-8"))
        payload = f.read()
    tensors = {}
    for entry in header["tensors"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(payload[start : start + nbytes], dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    rng = {k: bytes.fromhex(v) for k, v in header.get("rng", {}).items()}
    return tensors, header["config"], header["step"], rng
