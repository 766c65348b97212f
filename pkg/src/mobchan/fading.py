"""Sum-of-sinusoids Rayleigh fading with path diversity.

Generates unit-mean power envelopes of an L-branch maximum-ratio-combined
Rayleigh channel under the classic uniform-arrival Doppler assumption, and
estimates mean power, variance, path diversity and 50% coherence time from
sampled envelopes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class DopplerParams:
    """Carrier/speed pair with the derived maximum Doppler shift."""

    carrier_frequency_hz: float
    speed_mps: float

    def __post_init__(self):
        if self.carrier_frequency_hz <= 0:
            raise ValueError("carrier_frequency_hz must be positive")
        if self.speed_mps < 0:
            raise ValueError("speed_mps must be non-negative")

    @property
    def max_doppler_hz(self) -> float:
        return self.speed_mps / SPEED_OF_LIGHT * self.carrier_frequency_hz


def max_doppler_hz(carrier_frequency_hz: float, speed_mps: float) -> float:
    return DopplerParams(carrier_frequency_hz, speed_mps).max_doppler_hz


def doppler_shift(params: DopplerParams, arrival_angle_rad: float) -> float:
    """Frequency shift of a single arriving wave, f_max * cos(angle)."""
    return params.max_doppler_hz * math.cos(arrival_angle_rad)


@dataclass(frozen=True)
class GenParams:
    sinusoids_per_path: int
    path_diversity: int
    max_doppler_hz: float
    seed: int


@dataclass(frozen=True)
class FadingProcess:
    """Sampled power envelope plus the parameters that generated it."""

    samples: np.ndarray
    sample_period_s: float
    gen_params: GenParams

    def __post_init__(self):
        if self.sample_period_s <= 0:
            raise ValueError("sample_period_s must be positive")

    @property
    def duration_s(self) -> float:
        return len(self.samples) * self.sample_period_s


@dataclass(frozen=True)
class EnvelopeStats:
    mean_power: float
    variance: float
    estimated_path_diversity: int
    estimated_coherence_time_s: float
    low_quality: bool = False


def default_sample_period(f_max_hz: float) -> float:
    """min(1 ms, 1/(16 f_max)): resolves the autocorrelation main lobe."""
    if f_max_hz <= 0:
        return 1e-3
    return min(1e-3, 1.0 / (16.0 * f_max_hz))


def generate_multipath_envelope(
    path_diversity: int,
    sinusoids_per_path: int,
    f_max_hz: float,
    duration_s: float,
    sample_period_s: float,
    seed: int,
) -> FadingProcess:
    """Power envelope of an L-branch combined sum-of-sinusoids channel.

    Each branch is a superposition of K unit sinusoids whose arrival angles
    and phases are drawn independently and uniformly on [-pi, pi]; branch
    powers are summed and normalized by K*L so the expected mean is 1.

    The sinusoid frequencies f_max*cos(theta) are quantized to the DFT grid
    of the requested length so the series can be synthesized with one
    inverse FFT per branch; the grid spacing 1/(N*T_s) is far below any
    Doppler spread of interest, and the resulting envelope is seamlessly
    periodic which suits look-up-table playback.
    """
    L, K = path_diversity, sinusoids_per_path
    if L < 1:
        raise ValueError("path_diversity must be >= 1")
    if K < 1:
        raise ValueError("sinusoids_per_path must be >= 1")
    if duration_s <= 0 or sample_period_s <= 0:
        raise ValueError("duration and sample period must be positive")
    if f_max_hz < 0:
        raise ValueError("max Doppler must be non-negative")
    n = int(round(duration_s / sample_period_s))
    if n < 2:
        raise ValueError("need at least 2 samples (duration/sample_period >= 2)")
    if f_max_hz > 0 and sample_period_s >= 1.0 / (2.0 * f_max_hz):
        raise ValueError(
            f"sample period {sample_period_s} s violates Nyquist for "
            f"Doppler spread {f_max_hz} Hz"
        )

    rng = np.random.default_rng(seed)
    arrival = rng.uniform(-np.pi, np.pi, size=(L, K))
    phase = rng.uniform(-np.pi, np.pi, size=(L, K))

    freqs = f_max_hz * np.cos(arrival)  # (L, K)
    bins = np.mod(np.rint(freqs * n * sample_period_s).astype(np.int64), n)
    power = np.zeros(n)
    for l in range(L):
        spectrum = np.zeros(n, dtype=np.complex128)
        np.add.at(spectrum, bins[l], np.exp(1j * phase[l]))
        h = np.fft.ifft(spectrum) * n
        power += np.abs(h) ** 2
    power /= K * L
    return FadingProcess(
        samples=power,
        sample_period_s=sample_period_s,
        gen_params=GenParams(K, L, f_max_hz, seed),
    )


def theoretical_autocorrelation(f_max_hz: float, lag_s) -> float:
    """Envelope autocorrelation J0^2(2 pi f_max lag) of the uniform-arrival model."""
    return j0(2.0 * np.pi * f_max_hz * np.asarray(lag_s)) ** 2


def coherence_time_jakes(f_max_hz: float) -> float:
    """50%-correlation coherence time, 9 / (16 pi f_max)."""
    if f_max_hz <= 0:
        raise ValueError("max Doppler must be positive")
    return 9.0 / (16.0 * math.pi * f_max_hz)


def empirical_autocorrelation(samples: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased normalized autocovariance of a power series, lags 0..max_lag."""
    x = np.asarray(samples, dtype=float)
    x = x - x.mean()
    n = len(x)
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1] / n
    if acov[0] <= 0:
        raise ValueError("constant envelope has no defined autocorrelation")
    return acov / acov[0]


def estimate_envelope_stats(process: FadingProcess) -> EnvelopeStats:
    """Mean, variance, path diversity and 50% coherence time of an envelope.

    Path diversity is the nearest integer to 1/variance of the
    mean-normalized envelope (half-up, clamped to >= 1).  Coherence time is
    the first lag at which the normalized autocovariance drops to <= 0.5,
    linearly interpolated between sample lags.
    """
    x = np.asarray(process.samples, dtype=float)
    if len(x) == 0:
        raise ValueError("empty envelope")
    mean = float(x.mean())
    if mean <= 0 or np.ptp(x) == 0:
        raise ValueError("constant or non-positive envelope: diversity undefined")
    norm = x / mean
    var = float(norm.var())
    if var == 0:
        raise ValueError("zero-variance envelope: diversity undefined")
    diversity = max(1, int(math.floor(1.0 / var + 0.5)))

    rho = empirical_autocorrelation(norm, max_lag=len(x) - 1)
    below = np.nonzero(rho <= 0.5)[0]
    if len(below) == 0 or below[0] == 0:
        raise ValueError("autocorrelation never drops to 50%: series too short")
    k = int(below[0])
    frac = (rho[k - 1] - 0.5) / (rho[k - 1] - rho[k])
    tc = (k - 1 + frac) * process.sample_period_s

    f_max = process.gen_params.max_doppler_hz
    low_quality = len(x) < 1000
    if f_max > 0:
        low_quality = low_quality or process.duration_s < 20 * coherence_time_jakes(f_max)
    return EnvelopeStats(
        mean_power=mean,
        variance=var,
        estimated_path_diversity=diversity,
        estimated_coherence_time_s=tc,
        low_quality=low_quality,
    )


def write_envelope_csv(process: FadingProcess, stream) -> None:
    """CSV export with header `t_s,power`, one sample per line."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["t_s", "power"])
    for i, p in enumerate(process.samples):
        w.writerow([repr(i * process.sample_period_s), repr(float(p))])


def read_envelope_csv(stream, gen_params: GenParams | None = None) -> FadingProcess:
    r = csv.reader(stream)
    header = next(r, None)
    if header != ["t_s", "power"]:
        raise ValueError(f"bad envelope header: {header!r}")
    t, p = [], []
    for row in r:
        if not row:
            continue
        t.append(float(row[0]))
        p.append(float(row[1]))
    if len(t) < 2:
        raise ValueError("envelope file needs at least 2 samples")
    period = t[1] - t[0]
    if gen_params is None:
        gen_params = GenParams(0, 1, 0.0, 0)
    return FadingProcess(np.asarray(p), period, gen_params)


def envelope_csv_string(process: FadingProcess) -> str:
    buf = io.StringIO()
    write_envelope_csv(process, buf)
    return buf.getvalue()
