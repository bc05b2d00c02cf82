"""Raw recording -> normalized, epoch-aligned sample windows.

scEEG: bandpass (0.3-35 Hz) -> resample to 100 Hz -> z-score -> segment.
PPG:   Chebyshev-II lowpass (8 Hz) -> resample to 1024 samples / 30 s
       -> clip at +/-3 sigma -> z-score -> segment.
The PPG target rate is the exact fraction 1024/30 Hz, not the rounded
34.13 Hz, so epochs never drift.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .container import RawRecording
from .filters import FilterCascade, design_cheby2_lowpass, design_sceeg_bandpass
from .resample import resample

WINDOW_EPOCHS = {"30s": 1, "1min": 2, "3min": 6, "5min": 10, "10min": 20, "30min": 60}


@dataclass(frozen=True)
class PreprocessConfig:
    sceeg_band: tuple[float, float] = (0.3, 35.0)
    sceeg_rate: float = 100.0
    sceeg_epoch_len: int = 3000
    ppg_cutoff: float = 8.0
    ppg_filter_order: int = 8
    ppg_stopband_atten_db: float = 40.0
    ppg_epoch_len: int = 1024
    clip_sigma: float = 3.0
    epoch_seconds: int = 30
    zero_phase: bool = False

    @property
    def ppg_rate(self) -> Fraction:
        return Fraction(self.ppg_epoch_len, self.epoch_seconds)

    def hash(self) -> str:
        blob = json.dumps(self.__dict__, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EpochWindow:
    epochs: np.ndarray  # (T, epoch_len)
    modality: str
    subject_id: str
    start_epoch_index: int

    def __post_init__(self):
        self.epochs = np.asarray(self.epochs, dtype=np.float64)
        if self.epochs.ndim != 2:
            raise ValueError("EpochWindow expects a (T, epoch_len) matrix")

    @property
    def n_epochs(self) -> int:
        return self.epochs.shape[0]


def clip_sd(signal: np.ndarray, k: float = 3.0) -> np.ndarray:
    """Clamp to mean +/- k*std of the input; sigma=0 passes through."""
    x = np.asarray(signal, dtype=np.float64)
    mu = x.mean()
    sd = x.std()  # population std
    if sd == 0.0:
        return x.copy()
    return np.clip(x, mu - k * sd, mu + k * sd)


def zscore(signal: np.ndarray) -> np.ndarray:
    x = np.asarray(signal, dtype=np.float64)
    sd = x.std()
    if sd == 0.0:
        raise ValueError("degenerate recording: zero variance, cannot z-score")
    return (x - x.mean()) / sd


def segment_epochs(signal: np.ndarray, epoch_len: int) -> np.ndarray:
    """(n_epochs, epoch_len); the trailing remainder is dropped."""
    x = np.asarray(signal, dtype=np.float64)
    n = len(x) // epoch_len
    if n < 1:
        raise ValueError(f"signal of {len(x)} samples shorter than one epoch ({epoch_len})")
    return x[: n * epoch_len].reshape(n, epoch_len).copy()


def build_windows(
    epochs: np.ndarray,
    t_epochs: int,
    modality: str,
    subject_id: str,
    stride_epochs: int | None = None,
) -> list[EpochWindow]:
    """Non-overlapping by default (stride == T); trailing epochs are dropped."""
    if t_epochs < 1:
        raise ValueError("window length must be at least one epoch")
    stride = t_epochs if stride_epochs is None else stride_epochs
    n = epochs.shape[0]
    if n < t_epochs:
        raise ValueError(f"recording has {n} epochs, needs at least {t_epochs}")
    out = []
    start = 0
    while start + t_epochs <= n:
        out.append(EpochWindow(epochs[start : start + t_epochs], modality, subject_id, start))
        start += stride
    return out


class Preprocessor:
    """Caches filter designs per input rate; pure per-recording transforms."""

    def __init__(self, config: PreprocessConfig | None = None):
        self.config = config or PreprocessConfig()
        self._filters: dict[tuple[str, float], FilterCascade] = {}

    def _sceeg_filter(self, rate_hz: float) -> FilterCascade:
        key = ("sceeg", float(rate_hz))
        if key not in self._filters:
            lo, hi = self.config.sceeg_band
            self._filters[key] = design_sceeg_bandpass(lo, hi, float(rate_hz))
        return self._filters[key]

    def _ppg_filter(self, rate_hz: float) -> FilterCascade:
        key = ("ppg", float(rate_hz))
        if key not in self._filters:
            self._filters[key] = design_cheby2_lowpass(
                self.config.ppg_filter_order,
                self.config.ppg_cutoff,
                self.config.ppg_stopband_atten_db,
                float(rate_hz),
            )
        return self._filters[key]

    def run(self, rec: RawRecording) -> RawRecording:
        """Filtered, resampled, normalized recording at the modality's target rate."""
        cfg = self.config
        if rec.modality == "sceeg":
            if not rec.rate_hz > 2 * cfg.sceeg_band[1]:
                raise ValueError(f"scEEG rate {rec.rate_hz} too low for band {cfg.sceeg_band}")
            x = self._sceeg_filter(rec.rate_hz).apply(rec.samples, cfg.zero_phase)
            x = resample(x, rec.rate_hz, cfg.sceeg_rate)
            x = zscore(x)
            out_rate: float | Fraction = cfg.sceeg_rate
        elif rec.modality == "ppg":
            x = self._ppg_filter(rec.rate_hz).apply(rec.samples, cfg.zero_phase)
            x = resample(x, rec.rate_hz, cfg.ppg_rate)
            x = clip_sd(x, cfg.clip_sigma)
            x = zscore(x)
            out_rate = cfg.ppg_rate
        else:
            raise ValueError(f"unknown modality {rec.modality!r}")
        return RawRecording(
            x, out_rate, rec.modality, rec.subject_id, rec.channel,
            preprocessed=True, config_hash=cfg.hash(),
        )

    def epoch_len(self, modality: str) -> int:
        return self.config.sceeg_epoch_len if modality == "sceeg" else self.config.ppg_epoch_len

    def epochs(self, rec: RawRecording) -> np.ndarray:
        """Preprocess (if needed) and segment into the modality's epoch grid."""
        prep = rec if rec.preprocessed else self.run(rec)
        return segment_epochs(prep.samples, self.epoch_len(rec.modality))
