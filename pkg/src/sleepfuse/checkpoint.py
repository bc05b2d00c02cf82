"""Parameter checkpoint container.

Layout: magic "SFUS", version u32, then per parameter
(name-length u32, name utf-8, rank u32, dims u64[rank], float32 LE payload).
All integers little-endian. Values are stored as float32, so
write -> read -> write round-trips bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SFUS"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<I", VERSION)
    for name, arr in arrays.items():
        raw = name.encode("utf-8")
        a = np.ascontiguousarray(arr, dtype="<f4")
        buf += struct.pack("<I", len(raw))
        buf += raw
        buf += struct.pack("<I", a.ndim)
        buf += struct.pack(f"<{a.ndim}Q", *a.shape)
        buf += a.tobytes()
    Path(path).write_bytes(bytes(buf))


def load_arrays(path: str | Path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad magic in {path}: {data[:4]!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 8
    out: dict[str, np.ndarray] = {}
    while pos < len(data):
        try:
            (name_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos : pos + name_len].decode("utf-8")
            if len(data[pos : pos + name_len]) != name_len:
                raise struct.error("truncated name")
            pos += name_len
            (rank,) = struct.unpack_from("<I", data, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}Q", data, pos)
            pos += 8 * rank
            count = int(np.prod(dims)) if rank else 1
            payload = data[pos : pos + 4 * count]
            if len(payload) != 4 * count:
                raise struct.error("truncated payload")
            pos += 4 * count
        except struct.error as exc:
            raise CheckpointError(f"truncated checkpoint {path}: {exc}") from exc
        out[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)
    return out


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def state_sha256(arrays: dict[str, np.ndarray]) -> str:
    """Hash of the float32 image of a parameter set (order-sensitive)."""
    h = hashlib.sha256()
    for name, arr in arrays.items():
        h.update(name.encode("utf-8"))
        h.update(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return h.hexdigest()


def save_model(path: str | Path, module, meta: dict) -> None:
    """SFUS parameter file plus a JSON sidecar describing the model."""
    path = Path(path)
    save_arrays(path, module.state_dict())
    sidecar = dict(meta)
    sidecar["sha256"] = file_sha256(path)
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_meta(path: str | Path) -> dict:
    path = Path(path)
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    if not meta_path.exists():
        raise CheckpointError(f"missing checkpoint sidecar {meta_path}")
    return json.loads(meta_path.read_text())


def load_model_state(path: str | Path, verify_encoders: dict[str, str] | None = None) -> tuple[dict, dict]:
    """Return (arrays, meta); optionally verify frozen-encoder hashes in meta."""
    arrays = load_arrays(path)
    meta = load_meta(path)
    if verify_encoders:
        recorded = meta.get("encoder_hashes", {})
        for key, expected in verify_encoders.items():
            if recorded.get(key) != expected:
                raise CheckpointError(
                    f"fusion checkpoint was trained against a different {key} encoder "
                    f"(recorded {recorded.get(key)!r}, got {expected!r})"
                )
    return arrays, meta
