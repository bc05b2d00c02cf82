"""Recording/hypnogram/split file formats and the AASM label mapping.

Recording container: magic "SREC", version u32, header-length u32,
UTF-8 JSON header, float32 LE payload. EDF parsing is out of scope;
`from_external` is the documented converter entry point for any exporter
that can hand over (samples, rate, metadata).
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import SeededRng

MAGIC = b"SREC"
VERSION = 1

STAGE_WAKE, STAGE_LIGHT, STAGE_DEEP, STAGE_REM = 0, 1, 2, 3
STAGE_NAMES = ("Wake", "Light", "Deep", "REM")
N_STAGES = 4

_AASM_TO_4CLASS = {"W": 0, "N1": 1, "N2": 1, "N3": 2, "REM": 3}


class ContainerError(RuntimeError):
    pass


def map_aasm_to_4class(label: str, allow_legacy: bool = False) -> int:
    """W->Wake, N1/N2->Light, N3->Deep, REM->REM. Legacy S4 only by opt-in."""
    if label in _AASM_TO_4CLASS:
        return _AASM_TO_4CLASS[label]
    if allow_legacy and label in ("S3", "S4"):
        return STAGE_DEEP
    raise ValueError(f"unknown AASM label {label!r}")


@dataclass
class RawRecording:
    samples: np.ndarray
    rate_hz: float
    modality: str  # "sceeg" | "ppg"
    subject_id: str
    channel: str = ""
    preprocessed: bool = False
    config_hash: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise ValueError("recording has no samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("recording contains non-finite samples")
        if not self.rate_hz > 0:
            raise ValueError(f"rate must be positive, got {self.rate_hz}")
        if self.modality not in ("sceeg", "ppg"):
            raise ValueError(f"unknown modality {self.modality!r}")


def from_external(samples, rate_hz: float, modality: str, subject_id: str, channel: str = "") -> RawRecording:
    """Converter entry point for external exports (EDF readers etc.)."""
    return RawRecording(np.asarray(samples, dtype=np.float64), rate_hz, modality, subject_id, channel)


def write_recording(path: str | Path, rec: RawRecording) -> None:
    header = {
        "subject_id": rec.subject_id,
        "modality": rec.modality,
        "channel": rec.channel,
        "rate_hz": rec.rate_hz if isinstance(rec.rate_hz, (int, float)) else str(rec.rate_hz),
        "n_samples": int(rec.samples.size),
        "preprocessed": bool(rec.preprocessed),
        "config_hash": rec.config_hash,
    }
    raw_header = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(rec.samples, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(raw_header)))
        fh.write(raw_header)
        fh.write(payload)


_REQUIRED_HEADER_KEYS = {"subject_id", "modality", "rate_hz", "n_samples", "preprocessed"}


def read_recording(path: str | Path) -> RawRecording:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ContainerError(f"bad magic in {path}: {data[:4]!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version} in {path}")
    (hlen,) = struct.unpack_from("<I", data, 8)
    try:
        header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"corrupt header in {path}: {exc}") from exc
    missing = _REQUIRED_HEADER_KEYS - set(header)
    if missing:
        raise ContainerError(f"header of {path} missing keys {sorted(missing)}")
    payload = data[12 + hlen :]
    n = int(header["n_samples"])
    if len(payload) != 4 * n:
        raise ContainerError(f"payload of {path} has {len(payload)} bytes, expected {4 * n}")
    samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    rate = header["rate_hz"]
    if isinstance(rate, str):  # exact rational rate like "1024/30"
        from fractions import Fraction

        rate = Fraction(rate)
    rec = RawRecording(
        samples,
        rate,
        header["modality"],
        header["subject_id"],
        header.get("channel", ""),
        bool(header["preprocessed"]),
        header.get("config_hash", ""),
    )
    return rec


@dataclass
class Hypnogram:
    subject_id: str
    stages: np.ndarray  # int array of 0..3
    source_scheme: str = "fused4"
    aasm_labels: list[str] | None = None

    def __post_init__(self):
        self.stages = np.asarray(self.stages, dtype=np.int64)
        if self.stages.size == 0:
            raise ValueError("empty hypnogram")
        if self.stages.min() < 0 or self.stages.max() >= N_STAGES:
            raise ValueError("hypnogram labels must be in 0..3 after mapping")

    def __len__(self):
        return len(self.stages)


def write_hypnogram(path: str | Path, hyp: Hypnogram) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if hyp.aasm_labels is not None:
            writer.writerow(["epoch_index", "stage_label", "aasm_label"])
            for i, (s, a) in enumerate(zip(hyp.stages, hyp.aasm_labels)):
                writer.writerow([i, int(s), a])
        else:
            writer.writerow(["epoch_index", "stage_label"])
            for i, s in enumerate(hyp.stages):
                writer.writerow([i, int(s)])


def read_hypnogram(path: str | Path, subject_id: str | None = None) -> Hypnogram:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["epoch_index", "stage_label"]:
        raise ContainerError(f"{path} is not a hypnogram CSV")
    stages = []
    aasm: list[str] = []
    for row in rows[1:]:
        stages.append(int(row[1]))
        if len(row) > 2:
            aasm.append(row[2])
    sid = subject_id if subject_id is not None else path.stem.replace("_hypnogram", "")
    return Hypnogram(sid, np.array(stages), aasm_labels=aasm or None)


@dataclass
class SplitManifest:
    train: list[str]
    val: list[str]
    test: list[str]

    def __post_init__(self):
        groups = [set(self.train), set(self.val), set(self.test)]
        for i in range(3):
            for j in range(i + 1, 3):
                overlap = groups[i] & groups[j]
                if overlap:
                    raise ValueError(f"subjects in multiple split partitions: {sorted(overlap)}")

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps({"train": self.train, "val": self.val, "test": self.test}, indent=2) + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        obj = json.loads(Path(path).read_text())
        return cls(obj["train"], obj["val"], obj["test"])


def split_subjects(ids: list[str], fractions: tuple[float, float, float], seed: int) -> SplitManifest:
    """Deterministic subject-level split; never splits one subject across partitions."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    n = len(ids)
    n_parts = sum(1 for f in fractions if f > 0)
    if n < n_parts:
        raise ValueError(f"too few subjects ({n}) for {n_parts} non-empty partitions")
    order = [ids[i] for i in SeededRng(seed).derive(0xD1CE).permutation(n)]
    # largest-remainder allocation; every positive-fraction partition gets >= 1
    counts = [int(n * f) for f in fractions]
    remainders = [n * f - c for f, c in zip(fractions, counts)]
    for _ in range(n - sum(counts)):
        j = int(np.argmax(remainders))
        counts[j] += 1
        remainders[j] = -1.0
    for j, f in enumerate(fractions):
        if f > 0 and counts[j] == 0:
            donor = int(np.argmax(counts))
            counts[donor] -= 1
            counts[j] += 1
    a, b = counts[0], counts[0] + counts[1]
    return SplitManifest(order[:a], order[a:b], order[b:])


# standard dataset-directory layout helpers


def recording_path(root: str | Path, subject_id: str, modality: str) -> Path:
    return Path(root) / f"{subject_id}_{modality}.srec"


def hypnogram_path(root: str | Path, subject_id: str) -> Path:
    return Path(root) / f"{subject_id}_hypnogram.csv"


def list_subjects(root: str | Path) -> list[str]:
    return sorted(p.stem.replace("_hypnogram", "") for p in Path(root).glob("*_hypnogram.csv"))
