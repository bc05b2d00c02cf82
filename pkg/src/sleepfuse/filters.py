"""IIR filter design (analog prototype -> bilinear -> biquad cascade).

Designs are derived from first principles; application of the resulting
second-order sections is delegated to scipy.signal.sosfilt, which
implements the same direct-form-II-transposed recurrence in C.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import sosfilt


class FilterDesignError(ValueError):
    pass


# ---------------------------------------------------------------------------
# analog prototypes (unit corner frequency)


def butter_prototype(order: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Butterworth: poles equally spaced on the left-half unit circle."""
    k = np.arange(1, order + 1)
    poles = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    return np.array([], dtype=complex), poles, 1.0


def cheby2_prototype(order: int, stopband_atten_db: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Chebyshev type II: equiripple stopband at -stopband_atten_db, flat passband."""
    de = 1.0 / np.sqrt(10.0 ** (0.1 * stopband_atten_db) - 1.0)
    mu = np.arcsinh(1.0 / de) / order
    if order % 2:
        m = np.concatenate((np.arange(-order + 1, 0, 2), np.arange(2, order + 1, 2)))
    else:
        m = np.arange(-order + 1, order, 2)
    zeros = -np.conjugate(1j / np.sin(m * np.pi / (2.0 * order)))
    poles = -np.exp(1j * np.pi * np.arange(-order + 1, order, 2) / (2.0 * order))
    poles = np.sinh(mu) * poles.real + 1j * np.cosh(mu) * poles.imag
    poles = 1.0 / poles
    gain = np.real(np.prod(-poles) / np.prod(-zeros))
    return zeros, poles, gain


# ---------------------------------------------------------------------------
# spectral transforms


def lp_to_lp(zeros, poles, gain, w0):
    degree = len(poles) - len(zeros)
    return zeros * w0, poles * w0, gain * w0**degree


def lp_to_hp(zeros, poles, gain, w0):
    degree = len(poles) - len(zeros)
    z_hp = np.concatenate((w0 / zeros if len(zeros) else np.array([], dtype=complex), np.zeros(degree, dtype=complex)))
    p_hp = w0 / poles
    gain_hp = gain * np.real(np.prod(-zeros) / np.prod(-poles)) if len(zeros) else gain * np.real(1.0 / np.prod(-poles))
    return z_hp, p_hp, gain_hp


def bilinear(zeros, poles, gain, rate_hz):
    """Map s-plane to z-plane; callers must prewarp corner frequencies."""
    fs2 = 2.0 * rate_hz
    degree = len(poles) - len(zeros)
    z_d = (fs2 + zeros) / (fs2 - zeros)
    p_d = (fs2 + poles) / (fs2 - poles)
    z_d = np.concatenate((z_d, -np.ones(degree, dtype=complex)))
    gain_d = gain * np.real(np.prod(fs2 - zeros) / np.prod(fs2 - poles))
    return z_d, p_d, gain_d


def prewarp(freq_hz: float, rate_hz: float) -> float:
    return 2.0 * rate_hz * np.tan(np.pi * freq_hz / rate_hz)


def _conjugate_pairs(roots: np.ndarray) -> list[np.ndarray]:
    """Group roots into conjugate (or real-real) pairs; orders here are even."""
    complex_roots = sorted(
        (r for r in roots if abs(r.imag) > 1e-12 * max(1.0, abs(r))),
        key=lambda r: (round(r.real, 12), abs(r.imag)),
    )
    upper = [r for r in complex_roots if r.imag > 0]
    real_roots = sorted((r.real for r in roots if abs(r.imag) <= 1e-12 * max(1.0, abs(r))))
    pairs = [np.array([r, np.conjugate(r)]) for r in upper]
    for i in range(0, len(real_roots) - 1, 2):
        pairs.append(np.array([real_roots[i] + 0j, real_roots[i + 1] + 0j]))
    if len(real_roots) % 2:
        pairs.append(np.array([real_roots[-1] + 0j, 0j]))  # degenerate: pad with root at 0
    return pairs


def zpk_to_sos(zeros, poles, gain) -> np.ndarray:
    """Cascade of biquads. Pole pairs sorted by radius (highest Q last) and each
    matched with the zero pair nearest in angle; overall gain on the first section."""
    zp = _conjugate_pairs(np.asarray(zeros, dtype=complex))
    pp = _conjugate_pairs(np.asarray(poles, dtype=complex))
    while len(zp) < len(pp):
        zp.append(np.array([0j, 0j]))
    if len(zp) != len(pp):
        raise FilterDesignError("more zeros than poles after pairing")
    pp.sort(key=lambda pr: np.max(np.abs(pr)))
    remaining = list(zp)
    sections = []
    for pr in pp:
        ang = abs(np.angle(pr[0]))
        j = int(np.argmin([abs(abs(np.angle(zr[0])) - ang) for zr in remaining]))
        zr = remaining.pop(j)
        b = np.real(np.poly(zr))
        a = np.real(np.poly(pr))
        sections.append(np.concatenate([b, a]))
    sos = np.array(sections)
    sos[0, :3] *= gain
    return sos


def sos_response(sos: np.ndarray, freqs_hz, rate_hz: float) -> np.ndarray:
    """Complex frequency response of the cascade at the given frequencies."""
    w = np.exp(-2j * np.pi * np.atleast_1d(freqs_hz) / rate_hz)
    h = np.ones_like(w, dtype=complex)
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 * w + b2 * w**2) / (a0 + a1 * w + a2 * w**2)
    return h


class FilterCascade:
    """Causal biquad cascade (direct-form II transposed, single pass)."""

    def __init__(self, sos: np.ndarray, rate_hz: float):
        self.sos = np.asarray(sos, dtype=np.float64)
        self.rate_hz = float(rate_hz)

    def apply(self, signal: np.ndarray, zero_phase: bool = False) -> np.ndarray:
        x = np.asarray(signal, dtype=np.float64)
        y = sosfilt(self.sos, x)
        if zero_phase:
            y = sosfilt(self.sos, y[::-1])[::-1]
        return y

    def response_db(self, freqs_hz, eps: float = 1e-300) -> np.ndarray:
        return 20.0 * np.log10(np.abs(sos_response(self.sos, freqs_hz, self.rate_hz)) + eps)


def design_cheby2_lowpass(
    order: int,
    cutoff_hz: float,
    stopband_atten_db: float,
    rate_hz: float,
    stopband_edge_factor: float = 1.25,
) -> FilterCascade:
    """Chebyshev-II lowpass; the equiripple stopband starts at
    cutoff_hz * stopband_edge_factor and sits at -stopband_atten_db."""
    stop_hz = cutoff_hz * stopband_edge_factor
    if cutoff_hz >= rate_hz / 2 or stop_hz >= rate_hz / 2:
        raise FilterDesignError(
            f"cutoff {cutoff_hz} Hz (stopband edge {stop_hz} Hz) at or above Nyquist ({rate_hz / 2} Hz)"
        )
    z, p, k = cheby2_prototype(order, stopband_atten_db)
    z, p, k = lp_to_lp(z, p, k, prewarp(stop_hz, rate_hz))
    z, p, k = bilinear(z, p, k, rate_hz)
    cascade = FilterCascade(zpk_to_sos(z, p, k), rate_hz)
    cascade.stopband_edge_hz = stop_hz
    return cascade


def design_butter_lowpass(order: int, cutoff_hz: float, rate_hz: float) -> FilterCascade:
    if cutoff_hz >= rate_hz / 2:
        raise FilterDesignError(f"cutoff {cutoff_hz} Hz at or above Nyquist ({rate_hz / 2} Hz)")
    z, p, k = butter_prototype(order)
    z, p, k = lp_to_lp(z, p, k, prewarp(cutoff_hz, rate_hz))
    z, p, k = bilinear(z, p, k, rate_hz)
    return FilterCascade(zpk_to_sos(z, p, k), rate_hz)


def design_butter_highpass(order: int, cutoff_hz: float, rate_hz: float) -> FilterCascade:
    if cutoff_hz <= 0 or cutoff_hz >= rate_hz / 2:
        raise FilterDesignError(f"highpass cutoff {cutoff_hz} Hz invalid for rate {rate_hz} Hz")
    z, p, k = butter_prototype(order)
    z, p, k = lp_to_hp(z, p, k, prewarp(cutoff_hz, rate_hz))
    z, p, k = bilinear(z, p, k, rate_hz)
    return FilterCascade(zpk_to_sos(z, p, k), rate_hz)


def design_sceeg_bandpass(
    low_hz: float, high_hz: float, rate_hz: float, hp_order: int = 4, lp_order: int = 8
) -> FilterCascade:
    """Bandpass as a highpass/lowpass cascade (kills DC, stops line noise)."""
    if rate_hz <= 2 * high_hz:
        raise FilterDesignError(f"rate {rate_hz} Hz too low for a {high_hz} Hz band edge")
    hp = design_butter_highpass(hp_order, low_hz, rate_hz)
    lp = design_butter_lowpass(lp_order, high_hz, rate_hz)
    return FilterCascade(np.vstack([hp.sos, lp.sos]), rate_hz)
