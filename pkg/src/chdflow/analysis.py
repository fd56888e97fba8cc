"""Monitor-point time-series diagnostics: spectra, period, regime labels.

A trace is classified Steady when its post-transient range collapses,
Periodic when one spectral peak and its low harmonics own the signal, and
Chaotic otherwise.  Spectra are computed on a Hann-windowed, cubically
resampled copy of the trace; periods come from the refined spectral peak
with a zero-crossing cross-check.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

MIN_SAMPLES = 64
DEFAULT_TRANSIENT_FRACTION = 0.5
DEFAULT_STEADY_BAND = 1e-6
DEFAULT_PEAK_RATIO = 100.0
HARMONIC_COUNT = 5
HARMONIC_BIN_HALO = 3
HARMONIC_MASS_MIN = 0.90


class Regime(enum.Enum):
    STEADY = "steady"
    PERIODIC = "periodic"
    CHAOTIC = "chaotic"


class AnalysisError(ValueError):
    """Too few samples or a non-periodic series where a period is required."""


class PeriodAmbiguityWarning(UserWarning):
    """Spectral and zero-crossing period estimates disagree beyond 2%."""


@dataclass
class TimeSeries:
    times: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.samples = np.asarray(self.samples, dtype=float)
        if self.times.shape != self.samples.shape or self.times.ndim != 1:
            raise AnalysisError("times and samples must be matching 1D vectors")
        if self.times.size >= 2 and not np.all(np.diff(self.times) > 0.0):
            raise AnalysisError("times must be strictly increasing")

    def tail(self, transient_fraction: float) -> "TimeSeries":
        start = int(self.times.size * transient_fraction)
        start = min(max(start, 0), self.times.size - 1)
        return TimeSeries(self.times[start:], self.samples[start:])


@dataclass
class RegimeVerdict:
    regime: Regime
    fundamental_frequency: Optional[float] = None
    period: Optional[float] = None
    peak_to_floor_ratio: float = 0.0


def _resampled(series: TimeSeries):
    """Uniform resampling by cubic interpolation to the next power of two."""
    t, x = series.times, series.samples
    n = 1 << int(np.ceil(np.log2(t.size)))
    tu = np.linspace(t[0], t[-1], n)
    xu = CubicSpline(t, x)(tu)
    return tu, xu


def spectrum(series: TimeSeries,
             transient_fraction: float = DEFAULT_TRANSIENT_FRACTION
             ) -> tuple[np.ndarray, np.ndarray]:
    """(frequencies, amplitudes) of the post-transient trace.

    Mean-removed, Hann-windowed one-sided magnitude spectrum; amplitudes are
    normalized so a bin-centered unit sinusoid reports 1.
    """
    tail = series.tail(transient_fraction)
    if tail.times.size < MIN_SAMPLES:
        raise AnalysisError(
            f"need at least {MIN_SAMPLES} post-transient samples, "
            f"got {tail.times.size}")
    tu, xu = _resampled(tail)
    xu = xu - np.mean(xu)
    w = np.hanning(xu.size)
    amps = 2.0 * np.abs(np.fft.rfft(xu * w)) / np.sum(w)
    freqs = np.fft.rfftfreq(xu.size, tu[1] - tu[0])
    return freqs, amps


def _refine_peak(freqs: np.ndarray, amps: np.ndarray, k: int) -> float:
    """Parabolic interpolation of log-amplitude across the peak bin."""
    if k <= 0 or k >= amps.size - 1 or amps[k - 1] <= 0 or amps[k + 1] <= 0:
        return freqs[k]
    la, lb, lc = np.log(amps[k - 1]), np.log(amps[k]), np.log(amps[k + 1])
    denom = la - 2.0 * lb + lc
    if denom >= 0.0:
        return freqs[k]
    shift = 0.5 * (la - lc) / denom
    return freqs[k] + shift * (freqs[1] - freqs[0])


def classify_regime(series: TimeSeries,
                    steady_band: float = DEFAULT_STEADY_BAND,
                    peak_ratio_threshold: float = DEFAULT_PEAK_RATIO,
                    transient_fraction: float = DEFAULT_TRANSIENT_FRACTION
                    ) -> RegimeVerdict:
    """Steady / periodic / chaotic label for a monitor trace.

    All thresholds are relative, so the verdict is invariant under positive
    rescaling of the samples.
    """
    tail = series.tail(transient_fraction)
    if tail.times.size < MIN_SAMPLES:
        raise AnalysisError(
            f"need at least {MIN_SAMPLES} post-transient samples, "
            f"got {tail.times.size}")
    span = float(np.max(tail.samples) - np.min(tail.samples))
    scale = abs(float(np.mean(tail.samples))) + 1.0
    if span < steady_band * scale:
        return RegimeVerdict(Regime.STEADY)

    freqs, amps = spectrum(series, transient_fraction)
    body = amps[1:]
    k = 1 + int(np.argmax(body))
    floor = float(np.median(body))
    ratio = float(amps[k] / floor) if floor > 0.0 else np.inf
    ff = _refine_peak(freqs, amps, k)

    energy = body * body
    total = float(np.sum(energy))
    df = freqs[1] - freqs[0]
    mask = np.zeros(body.size, dtype=bool)
    for m in range(1, HARMONIC_COUNT + 2):
        kh = int(round(m * ff / df)) - 1
        lo = max(kh - HARMONIC_BIN_HALO, 0)
        hi = min(kh + HARMONIC_BIN_HALO + 1, body.size)
        if lo < hi:
            mask[lo:hi] = True
    harmonic_mass = float(np.sum(energy[mask])) / total if total > 0.0 else 0.0

    if ratio > peak_ratio_threshold and harmonic_mass > HARMONIC_MASS_MIN:
        return RegimeVerdict(Regime.PERIODIC, fundamental_frequency=float(ff),
                             period=1.0 / float(ff), peak_to_floor_ratio=ratio)
    return RegimeVerdict(Regime.CHAOTIC, peak_to_floor_ratio=ratio)


def _zero_crossing_period(series: TimeSeries) -> Optional[float]:
    t, x = series.times, series.samples - np.mean(series.samples)
    sign = np.signbit(x)
    rising = np.nonzero(~sign[1:] & sign[:-1])[0]
    if rising.size < 2:
        return None
    tc = t[rising] - x[rising] * (t[rising + 1] - t[rising]) / (x[rising + 1] - x[rising])
    return float((tc[-1] - tc[0]) / (tc.size - 1))


def extract_period(series: TimeSeries,
                   transient_fraction: float = DEFAULT_TRANSIENT_FRACTION) -> float:
    """Dominant period of a periodic trace.

    Refined FFT peak, cross-checked against the mean rising-zero-crossing
    spacing; a disagreement beyond 2% emits PeriodAmbiguityWarning.
    """
    verdict = classify_regime(series, transient_fraction=transient_fraction)
    if verdict.regime is not Regime.PERIODIC:
        raise AnalysisError(f"series is {verdict.regime.value}, not periodic")
    period = verdict.period
    zc = _zero_crossing_period(series.tail(transient_fraction))
    if zc is not None:
        if abs(zc - period) / period > 0.02:
            warnings.warn(
                f"period estimates disagree: spectral {period:.6g} vs "
                f"zero-crossing {zc:.6g}", PeriodAmbiguityWarning)
        else:
            period = zc
    return period
