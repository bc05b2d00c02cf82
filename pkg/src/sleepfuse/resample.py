"""Rational polyphase resampling with a Kaiser-windowed sinc filter.

The rate change is reduced to an exact up-L / down-M fraction so the
samples-per-epoch contract (3000 scEEG / 1024 PPG per 30 s) holds without
drift. Each polyphase branch is normalized to unit DC gain, so constant
signals pass through exactly.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

KAISER_BETA = 8.6
TAPS_PER_PHASE = 32


class ResampleError(ValueError):
    pass


def as_fraction(rate) -> Fraction:
    """Exact rational rate. Floats are snapped to a bounded denominator,
    which is exact for the integer/half-integer rates the pipelines use."""
    if isinstance(rate, Fraction):
        return rate
    if isinstance(rate, int):
        return Fraction(rate)
    return Fraction(rate).limit_denominator(1_000_000)


def resample_ratio(from_hz, to_hz) -> tuple[int, int]:
    f_from = as_fraction(from_hz)
    f_to = as_fraction(to_hz)
    if f_from <= 0 or f_to <= 0:
        raise ResampleError(f"rates must be positive, got {from_hz} -> {to_hz}")
    ratio = f_to / f_from
    return ratio.numerator, ratio.denominator


def output_length(n_in: int, up: int, down: int) -> int:
    # round(n*up/down), half away from zero, in exact integer arithmetic
    return (2 * n_in * up + down) // (2 * down)


def _design_polyphase(up: int, down: int) -> np.ndarray:
    """(up, TAPS_PER_PHASE+1) filter bank; row q holds taps h[q::up]."""
    half = (TAPS_PER_PHASE // 2) * up
    n_taps = 2 * half + 1
    cutoff = 0.5 / max(up, down)  # cycles per sample on the upsampled grid
    n = np.arange(n_taps) - half
    h = 2.0 * cutoff * np.sinc(2.0 * cutoff * n) * np.kaiser(n_taps, KAISER_BETA) * up
    bank = np.zeros((up, TAPS_PER_PHASE + 1))
    for q in range(up):
        taps = h[q::up]
        bank[q, : len(taps)] = taps / taps.sum()  # unit DC per branch
    return bank


def resample(signal: np.ndarray, from_hz, to_hz) -> np.ndarray:
    """Resample so that len(out) == round(len(signal) * to_hz / from_hz)."""
    x = np.asarray(signal, dtype=np.float64)
    up, down = resample_ratio(from_hz, to_hz)
    n_out = output_length(len(x), up, down)
    if n_out < 1:
        raise ResampleError(f"resampling {len(x)} samples {from_hz}->{to_hz} Hz yields no output")
    if up == 1 and down == 1:
        return x.copy()
    bank = _design_polyphase(up, down)
    half = (TAPS_PER_PHASE // 2) * up
    out = np.empty(n_out)
    # Output n lives at upsampled index n*down + half; its phase and base
    # input index repeat with period `up` over n, so one convolution per phase.
    for r in range(min(up, n_out)):
        m = r * down + half
        q = m % up
        base = (m - q) // up
        conv = np.convolve(x, bank[q])
        count = (n_out - r + up - 1) // up
        idx = base + down * np.arange(count)
        vals = np.zeros(count)
        valid = idx < len(conv)
        vals[valid] = conv[idx[valid]]
        out[r::up] = vals
    return out
