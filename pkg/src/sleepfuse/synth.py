"""Stage-conditioned synthetic cohort generator.

Signals are built so the two modalities fail in complementary places,
mirroring the clinical picture: scEEG carries band-power signatures with
Light deliberately blended toward Wake (low-amplitude mixed activity),
while PPG carries a quasi-periodic pulse train whose inter-beat interval
statistics separate Light from Wake cleanly but blur Deep against REM.
Two knobs control how much each modality is degraded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .container import (
    Hypnogram,
    RawRecording,
    hypnogram_path,
    recording_path,
    split_subjects,
    write_hypnogram,
    write_recording,
)
from .rng import SeededRng

# scEEG oscillator bands (Hz) and per-stage base amplitudes.
SCEEG_BANDS = ((0.75, 3.5), (4.0, 7.5), (8.0, 12.0), (15.0, 25.0))
SCEEG_AMPS = {
    0: np.array([0.25, 0.35, 1.15, 0.55]),  # Wake: alpha-dominant
    1: np.array([0.75, 0.75, 0.30, 0.25]),  # Light: mixed low amplitude
    2: np.array([2.40, 0.60, 0.18, 0.12]),  # Deep: heavy slow-wave power
    3: np.array([0.35, 0.95, 0.35, 0.40]),  # REM: theta-leaning mix
}
SCEEG_NOISE = {0: 0.90, 1: 1.00, 2: 0.80, 3: 1.00}

# PPG inter-beat interval mean/jitter in seconds per stage.
PPG_IBI = {
    0: (0.78, 0.060),  # Wake: fast, variable
    1: (0.92, 0.030),  # Light: clearly slower than wake
    2: (1.08, 0.010),  # Deep: slow, metronomic
    3: (1.02, 0.055),  # REM: slow but irregular
}

DEFAULT_TRANSITIONS = (
    (0.90, 0.10, 0.00, 0.00),
    (0.03, 0.87, 0.06, 0.04),
    (0.01, 0.09, 0.90, 0.00),
    (0.02, 0.08, 0.00, 0.90),
)


@dataclass
class SynthConfig:
    n_subjects: int = 48
    epochs_per_subject: int = 240
    seed: int = 0
    sceeg_rate: float = 125.0
    ppg_rate: float = 64.0
    epoch_seconds: int = 30
    transitions: tuple = DEFAULT_TRANSITIONS
    initial_stage: int = 0
    sceeg_light_wake_confusability: float = 0.55
    ppg_deep_rem_confusability: float = 0.60
    sceeg_amp_jitter: float = 0.30  # lognormal sigma on per-epoch band amplitude
    sceeg_noise_scale: float = 1.0
    ppg_noise: float = 0.05
    split_fractions: tuple = (0.6, 0.2, 0.2)

    def validated_transitions(self) -> np.ndarray:
        mat = np.asarray(self.transitions, dtype=np.float64)
        if mat.shape != (4, 4) or (mat < 0).any() or np.abs(mat.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("stage transition matrix must be 4x4 row-stochastic")
        return mat

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["transitions"] = [list(row) for row in self.transitions]
        out["split_fractions"] = list(self.split_fractions)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        kwargs = dict(obj)
        if "transitions" in kwargs:
            kwargs["transitions"] = tuple(tuple(r) for r in kwargs["transitions"])
        if "split_fractions" in kwargs:
            kwargs["split_fractions"] = tuple(kwargs["split_fractions"])
        return cls(**kwargs)


def markov_stages(cfg: SynthConfig, rng: SeededRng) -> np.ndarray:
    mat = cfg.validated_transitions()
    stages = np.empty(cfg.epochs_per_subject, dtype=np.int64)
    state = cfg.initial_stage
    for i in range(cfg.epochs_per_subject):
        stages[i] = state
        state = rng.choice_p(4, mat[state])
    return stages


def _sceeg_stage_amps(cfg: SynthConfig) -> dict[int, np.ndarray]:
    amps = {k: v.copy() for k, v in SCEEG_AMPS.items()}
    c = cfg.sceeg_light_wake_confusability
    amps[1] = (1.0 - c) * amps[1] + c * amps[0]
    return amps


def _ppg_stage_ibi(cfg: SynthConfig) -> dict[int, tuple[float, float]]:
    ibi = dict(PPG_IBI)
    d = 0.5 * cfg.ppg_deep_rem_confusability
    deep, rem = np.array(ibi[2]), np.array(ibi[3])
    ibi[2] = tuple(deep + d * (rem - deep))
    ibi[3] = tuple(rem + d * (deep - rem))
    return ibi


def synth_sceeg(cfg: SynthConfig, stages: np.ndarray, rng: SeededRng) -> np.ndarray:
    """Phase-continuous band oscillators with per-epoch stage amplitudes."""
    fs = cfg.sceeg_rate
    spe = int(round(cfg.epoch_seconds * fs))
    n = spe * len(stages)
    amps = _sceeg_stage_amps(cfg)
    noise_sd = np.array([SCEEG_NOISE[s] for s in stages]) * cfg.sceeg_noise_scale
    signal = rng.normal(0.0, 1.0, n) * np.repeat(noise_sd, spe)
    for b, (lo, hi) in enumerate(SCEEG_BANDS):
        freqs = rng.uniform(lo, hi, len(stages))
        jitter = np.exp(rng.normal(0.0, cfg.sceeg_amp_jitter, len(stages)))
        amp_e = np.array([amps[s][b] for s in stages]) * jitter
        phase = np.cumsum(2.0 * np.pi * np.repeat(freqs, spe) / fs)
        phase += rng.uniform(0.0, 2.0 * np.pi)
        signal += np.repeat(amp_e, spe) * np.sin(phase)
    return signal


def _pulse_shape(u: np.ndarray) -> np.ndarray:
    """Systolic peak plus dicrotic bump over normalized beat phase u in [0,1)."""
    systolic = np.exp(-0.5 * ((u - 0.28) / 0.07) ** 2)
    dicrotic = 0.35 * np.exp(-0.5 * ((u - 0.62) / 0.11) ** 2)
    return systolic + dicrotic


def synth_ppg(cfg: SynthConfig, stages: np.ndarray, rng: SeededRng) -> np.ndarray:
    """Pulse train whose beat-to-beat intervals follow the epoch's stage."""
    fs = cfg.ppg_rate
    duration = cfg.epoch_seconds * len(stages)
    ibi = _ppg_stage_ibi(cfg)
    subject_shift = rng.normal(0.0, 0.015)  # per-subject baseline heart rate

    starts, intervals, amps = [], [], []
    t = float(rng.uniform(0.0, 0.5))
    while t < duration:
        stage = stages[min(int(t // cfg.epoch_seconds), len(stages) - 1)]
        mu, sd = ibi[stage]
        tau = max(0.4, rng.normal(mu + subject_shift, sd))
        starts.append(t)
        intervals.append(tau)
        amps.append(np.exp(rng.normal(0.0, 0.08)))
        t += tau
    starts = np.array(starts)
    intervals = np.array(intervals)
    amps = np.array(amps)

    n = int(round(duration * fs))
    tt = np.arange(n) / fs
    idx = np.clip(np.searchsorted(starts, tt, side="right") - 1, 0, len(starts) - 1)
    u = np.clip((tt - starts[idx]) / intervals[idx], 0.0, 1.0)
    signal = amps[idx] * _pulse_shape(u)

    resp_f = float(rng.uniform(0.18, 0.28))
    signal *= 1.0 + 0.08 * np.sin(2.0 * np.pi * resp_f * tt + rng.uniform(0.0, 2.0 * np.pi))
    signal += 0.20 * np.sin(2.0 * np.pi * 0.07 * tt + rng.uniform(0.0, 2.0 * np.pi))
    signal += rng.normal(0.0, cfg.ppg_noise, n)
    return signal


def generate_subject(cfg: SynthConfig, index: int) -> tuple[RawRecording, RawRecording, Hypnogram]:
    sid = f"synth{index:04d}"
    rng = SeededRng(cfg.seed).derive(index)
    stages = markov_stages(cfg, rng.derive(0))
    sceeg = synth_sceeg(cfg, stages, rng.derive(1))
    ppg = synth_ppg(cfg, stages, rng.derive(2))
    return (
        RawRecording(sceeg, cfg.sceeg_rate, "sceeg", sid, "C4-M1"),
        RawRecording(ppg, cfg.ppg_rate, "ppg", sid, "PPG"),
        Hypnogram(sid, stages),
    )


def generate_cohort(cfg: SynthConfig, out_dir: str | Path) -> list[str]:
    """Write per-subject recordings + hypnograms and a split manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    subject_ids = []
    for i in range(cfg.n_subjects):
        sceeg, ppg, hyp = generate_subject(cfg, i)
        write_recording(recording_path(out, hyp.subject_id, "sceeg"), sceeg)
        write_recording(recording_path(out, hyp.subject_id, "ppg"), ppg)
        write_hypnogram(hypnogram_path(out, hyp.subject_id), hyp)
        subject_ids.append(hyp.subject_id)
    manifest = split_subjects(subject_ids, cfg.split_fractions, cfg.seed)
    manifest.save(out / "splits.json")
    return subject_ids
