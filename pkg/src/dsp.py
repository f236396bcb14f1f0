"""
Signal synthesis and analysis primitives.

The jamming waveform is built the same way it is on the bench: a white-noise
audio file is FM modulated and the result is inspected with a spectrum scan.
Everything in here is a pure function over immutable buffers.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import signal

logger = logging.getLogger(__name__)

# Configuration
POWER_FLOOR_DB = -300.0
DEFAULT_NOISE_RATE_HZ = 48_000.0
DEFAULT_NOISE_SECONDS = 5.0
DEFAULT_DEVIATION_HZ = 75_000.0
U64_MAX = 2**64 - 1

# scipy window names for the windows we support
WINDOWS = {
    "rectangular": "boxcar",
    "hann": "hann",
}

_LINEAR_FLOOR = 10.0 ** (POWER_FLOOR_DB / 10.0)


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class SampleBuffer:
    """Real audio samples, full scale +/-1.0"""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).ravel()
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio samples must be finite")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError(f"audio samples exceed full scale: peak {np.max(np.abs(samples))}")
        object.__setattr__(self, "samples", _frozen(samples))

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class IQBuffer:
    """Complex baseband samples around center_freq_hz.

    deviation_hz is carried as metadata when the buffer comes out of
    fm_modulate so the demodulator can rescale without being told again.
    """

    samples: np.ndarray
    sample_rate_hz: float
    center_freq_hz: float = 0.0
    deviation_hz: Optional[float] = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.complex128).ravel()
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.center_freq_hz < 0:
            raise ValueError(f"center_freq_hz must be non-negative, got {self.center_freq_hz}")
        if not (np.all(np.isfinite(samples.real)) and np.all(np.isfinite(samples.imag))):
            raise ValueError("IQ samples must be finite")
        object.__setattr__(self, "samples", _frozen(samples))

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Spectrum:
    """Power per bin in dB relative to full scale, bins uniformly spaced by rbw_hz"""

    bin_freqs_hz: np.ndarray
    power_db: np.ndarray
    rbw_hz: float

    def __post_init__(self):
        freqs = np.array(self.bin_freqs_hz, dtype=np.float64).ravel()
        power = np.array(self.power_db, dtype=np.float64).ravel()
        if freqs.size == 0 or freqs.size != power.size:
            raise ValueError("spectrum needs equal, non-zero numbers of bins and levels")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("bin frequencies must be strictly increasing")
        if not self.rbw_hz > 0:
            raise ValueError(f"rbw_hz must be positive, got {self.rbw_hz}")
        if freqs.size > 1 and not np.allclose(np.diff(freqs), self.rbw_hz, rtol=1e-6, atol=0.0):
            raise ValueError(f"bin spacing must be uniform and equal to rbw_hz={self.rbw_hz}")
        object.__setattr__(self, "bin_freqs_hz", _frozen(freqs))
        object.__setattr__(self, "power_db", _frozen(np.maximum(power, POWER_FLOOR_DB)))

    def __len__(self) -> int:
        return self.bin_freqs_hz.size

    @property
    def linear_power(self) -> np.ndarray:
        return 10.0 ** (self.power_db / 10.0)


@dataclass(frozen=True)
class NoiseSpec:
    seed: int
    n_samples: int
    sample_rate_hz: float = DEFAULT_NOISE_RATE_HZ

    def __post_init__(self):
        if not 0 <= self.seed <= U64_MAX:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be at least 1, got {self.n_samples}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")


def _generator(seed) -> np.random.Generator:
    """PCG64 is the documented bit generator for every seeded stream in the package"""
    return np.random.Generator(np.random.PCG64(seed))


def generate_white_noise(spec: NoiseSpec) -> SampleBuffer:
    """Uniform white noise in [-1, 1), bit-identical for identical specs"""
    samples = _generator(spec.seed).uniform(-1.0, 1.0, spec.n_samples)
    logger.debug("generated %d noise samples (seed=%d)", spec.n_samples, spec.seed)
    return SampleBuffer(samples, spec.sample_rate_hz)


def tone(freq_hz: float, sample_rate_hz: float, n_samples: int, amplitude: float = 1.0) -> SampleBuffer:
    """Sine test tone"""
    t = np.arange(n_samples) / sample_rate_hz
    return SampleBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t), sample_rate_hz)


def fm_modulate(audio: SampleBuffer, deviation_hz: float, center_freq_hz: float = 0.0) -> IQBuffer:
    """FM modulate audio with a phase accumulator.

    phi[k] = phi[k-1] + 2*pi*deviation*x[k]/fs, phi[-1] = 0, output exp(j*phi).
    """
    nyquist = audio.sample_rate_hz / 2
    if not 0 < deviation_hz < nyquist:
        raise ValueError(
            f"deviation {deviation_hz} Hz must be positive and below Nyquist ({nyquist} Hz)"
        )
    increments = 2 * np.pi * deviation_hz * audio.samples / audio.sample_rate_hz
    phase = np.cumsum(increments)
    return IQBuffer(
        np.exp(1j * phase),
        audio.sample_rate_hz,
        center_freq_hz=center_freq_hz,
        deviation_hz=deviation_hz,
    )


def fm_demodulate(iq: IQBuffer, deviation_hz: Optional[float] = None) -> SampleBuffer:
    """Quadrature discriminator, scaled so deviation_hz maps to full scale"""
    if len(iq) == 0:
        raise ValueError("cannot demodulate an empty IQ buffer")
    deviation = deviation_hz if deviation_hz is not None else iq.deviation_hz
    if deviation is None or not deviation > 0:
        raise ValueError("FM demodulation needs the modulation deviation")

    s = iq.samples
    if s.size == 1:
        return SampleBuffer(np.zeros(1), iq.sample_rate_hz)

    diff = np.angle(s[1:] * np.conj(s[:-1]))
    # sample 0 has no predecessor, repeat the first discriminator output
    diff = np.concatenate((diff[:1], diff))
    # anything beyond the deviation is clipped to full scale
    audio = np.clip(diff * iq.sample_rate_hz / (2 * np.pi * deviation), -1.0, 1.0)
    return SampleBuffer(audio, iq.sample_rate_hz)


def _is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 2 and (n & (n - 1)) == 0


def power_spectrum(
    buffer: Union[SampleBuffer, IQBuffer],
    n_fft: int,
    window: str = "hann",
) -> Spectrum:
    """Welch power spectrum with 50% overlap, two-sided and FFT-shifted.

    Bin power is |X|^2 / (sum w)^2 averaged over segments, so with the
    rectangular window a single segment sums exactly to the mean square.
    """
    if not _is_power_of_two(n_fft):
        raise ValueError(f"n_fft must be a power of two >= 2, got {n_fft}")
    if window not in WINDOWS:
        raise ValueError(f"unknown window {window!r}, expected one of {sorted(WINDOWS)}")
    if len(buffer) < n_fft:
        raise ValueError(f"buffer has {len(buffer)} samples, fewer than n_fft={n_fft}")

    fs = buffer.sample_rate_hz
    _, pxx = signal.welch(
        buffer.samples,
        fs=fs,
        window=WINDOWS[window],
        nperseg=n_fft,
        noverlap=n_fft // 2,
        detrend=False,
        return_onesided=False,
        scaling="spectrum",
        average="mean",
    )
    pxx = np.fft.fftshift(pxx)

    rbw = fs / n_fft
    center = buffer.center_freq_hz if isinstance(buffer, IQBuffer) else 0.0
    freqs = center + (np.arange(n_fft) - n_fft // 2) * rbw
    power_db = 10.0 * np.log10(np.maximum(pxx, _LINEAR_FLOOR))
    return Spectrum(freqs, power_db, rbw)


def band_power(spectrum: Spectrum, f_lo_hz: float, f_hi_hz: float) -> float:
    """Total power in dB of the bins in [f_lo, f_hi], edges inclusive"""
    if not f_lo_hz < f_hi_hz:
        raise ValueError(f"band is empty: {f_lo_hz} >= {f_hi_hz}")
    half_bin = spectrum.rbw_hz / 2
    span_lo = spectrum.bin_freqs_hz[0] - half_bin
    span_hi = spectrum.bin_freqs_hz[-1] + half_bin
    if f_lo_hz < span_lo or f_hi_hz > span_hi:
        raise ValueError(
            f"band [{f_lo_hz}, {f_hi_hz}] Hz is outside the spectrum span [{span_lo}, {span_hi}] Hz"
        )

    mask = (spectrum.bin_freqs_hz >= f_lo_hz) & (spectrum.bin_freqs_hz <= f_hi_hz)
    if not np.any(mask):
        raise ValueError(f"no bins inside [{f_lo_hz}, {f_hi_hz}] Hz")
    total = float(np.sum(spectrum.linear_power[mask]))
    return 10.0 * math.log10(max(total, _LINEAR_FLOOR))


def find_peak(spectrum: Spectrum) -> float:
    """Frequency of the strongest bin; ties go to the lowest frequency"""
    return float(spectrum.bin_freqs_hz[int(np.argmax(spectrum.power_db))])


def occupied_bandwidth(spectrum: Spectrum, fraction: float = 0.99) -> float:
    """Width holding `fraction` of the power, trimming equal tails from each edge"""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    power = spectrum.linear_power
    cumulative = np.cumsum(power)
    total = cumulative[-1]
    tail = (1.0 - fraction) / 2 * total
    lo = int(np.searchsorted(cumulative, tail, side="right"))
    hi = int(np.searchsorted(cumulative, total - tail, side="left"))
    hi = min(max(hi, lo), power.size - 1)
    return (hi - lo + 1) * spectrum.rbw_hz


def carson_bandwidth(deviation_hz: float, audio_bw_hz: float) -> float:
    """Carson's rule: 2 * (deviation + audio bandwidth)"""
    return 2.0 * (deviation_hz + audio_bw_hz)


def simulate_capture(
    center_freq_hz: float,
    carrier_freq_hz: float,
    sample_rate_hz: float,
    n_samples: int,
    seed: int,
    deviation_hz: float = 25_000.0,
    noise_floor_db: float = -60.0,
) -> IQBuffer:
    """Synthetic SDR capture: one noise-modulated FM carrier over a complex noise floor.

    Stands in for the receiver-side scan used to find the microphone's
    handshake channel before planning an attack.
    """
    offset = carrier_freq_hz - center_freq_hz
    if abs(offset) >= sample_rate_hz / 2:
        raise ValueError(
            f"carrier {carrier_freq_hz} Hz is outside the captured span around {center_freq_hz} Hz"
        )
    audio = generate_white_noise(NoiseSpec(seed, n_samples, sample_rate_hz))
    carrier = fm_modulate(audio, deviation_hz).samples
    n = np.arange(n_samples)
    carrier = carrier * np.exp(2j * np.pi * offset * n / sample_rate_hz)

    floor_rng = _generator([seed, 1])
    sigma = math.sqrt(10.0 ** (noise_floor_db / 10.0) / 2)
    noise = floor_rng.normal(0.0, sigma, n_samples) + 1j * floor_rng.normal(0.0, sigma, n_samples)
    return IQBuffer(carrier + noise, sample_rate_hz, center_freq_hz=center_freq_hz)
