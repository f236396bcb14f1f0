"""
Unfiltered square-wave transmitter model.

The GPIO clock is a square wave, so besides the fundamental it radiates every
integer harmonic with decreasing power. A bandpass filter and an attenuator
are the two hardware mitigations modelled here.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

# Configuration
POWER_FLOOR_DB = -300.0
DEFAULT_MAX_CARRIER_HZ = 500e6
DEFAULT_DUTY = 0.45

# ratios below this are a numerical zero of sin(n*pi*d)
_NULL_RATIO = 10.0 ** (POWER_FLOOR_DB / 20.0)


class BandpassFilter(BaseModel):
    """Brick-wall bandpass: no passband loss, flat stopband attenuation"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    center_hz: float = Field(gt=0)
    passband_width_hz: float = Field(gt=0)
    stopband_atten_db: float = Field(gt=0)


class EmitterModel(BaseModel):
    """Fundamental carrier, harmonic rolloff and the optional filter/attenuator"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    fundamental_freq_hz: float = Field(gt=0)
    tx_power_dbm: float = 10.0
    max_carrier_hz: float = Field(default=DEFAULT_MAX_CARRIER_HZ, gt=0)
    rolloff: Literal["envelope", "rect_pulse"] = "envelope"
    duty: float = Field(default=DEFAULT_DUTY, gt=0, lt=1)
    attenuation_db: float = Field(default=0.0, ge=0)
    filter: Optional[BandpassFilter] = None
    bandwidth_model: Literal["carson_scaled", "constant"] = "carson_scaled"

    def tuned_to(self, carrier_hz: float) -> "EmitterModel":
        """Same hardware retuned to another carrier"""
        return self.model_copy(update={"fundamental_freq_hz": float(carrier_hz)})


@dataclass(frozen=True)
class HarmonicLine:
    order: int
    freq_hz: float
    power_dbm: float
    occupied_bw_hz: float

    @property
    def band(self):
        half = self.occupied_bw_hz / 2
        return self.freq_hz - half, self.freq_hz + half

    def covers(self, freq_hz: float) -> bool:
        return abs(freq_hz - self.freq_hz) <= self.occupied_bw_hz / 2


def _check_order(n: int) -> None:
    if n < 1:
        raise ValueError(f"harmonic order must be >= 1, got {n}")


def harmonic_frequency(model: EmitterModel, n: int) -> float:
    """f_n = n * f.

    The textbook form 2*pi*f*n is the angular frequency of the same line;
    everything in this package works in Hz.
    """
    _check_order(n)
    return n * model.fundamental_freq_hz


def harmonic_level_dbc(model: EmitterModel, n: int) -> float:
    """Level of harmonic n relative to the fundamental"""
    _check_order(n)
    if model.rolloff == "envelope":
        return -20.0 * math.log10(n)

    d = model.duty
    ratio = (abs(math.sin(n * math.pi * d)) / n) / abs(math.sin(math.pi * d))
    if ratio <= _NULL_RATIO:
        return POWER_FLOOR_DB
    return max(20.0 * math.log10(ratio), POWER_FLOOR_DB)


def filter_rejection(filter: Optional[BandpassFilter], freq_hz: float) -> float:
    """Attenuation in dB the filter applies at freq_hz (passband edges inclusive)"""
    if filter is None:
        return 0.0
    if abs(freq_hz - filter.center_hz) <= filter.passband_width_hz / 2:
        return 0.0
    return filter.stopband_atten_db


def occupied_bandwidth_hz(model: EmitterModel, n: int, deviation_hz: float, audio_bw_hz: float) -> float:
    """Carson bandwidth of harmonic n; multiplying the carrier multiplies the deviation"""
    scale = n if model.bandwidth_model == "carson_scaled" else 1
    return 2.0 * (scale * deviation_hz + audio_bw_hz)


def emitted_lines(
    model: EmitterModel,
    deviation_hz: float,
    audio_bw_hz: float,
    n_max: int,
) -> List[HarmonicLine]:
    """Every harmonic 1..n_max that survives rolloff, attenuation and filtering"""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")

    lines = []
    for n in range(1, n_max + 1):
        freq = harmonic_frequency(model, n)
        power = (
            model.tx_power_dbm
            + harmonic_level_dbc(model, n)
            - model.attenuation_db
            - filter_rejection(model.filter, freq)
        )
        if power < POWER_FLOOR_DB:
            continue
        lines.append(
            HarmonicLine(
                order=n,
                freq_hz=freq,
                power_dbm=power,
                occupied_bw_hz=occupied_bandwidth_hz(model, n, deviation_hz, audio_bw_hz),
            )
        )

    logger.debug(
        "emitter at %.6g Hz: %d of %d harmonics above floor",
        model.fundamental_freq_hz,
        len(lines),
        n_max,
    )
    return lines


def line_for_order(lines: Sequence[HarmonicLine], n: int) -> Optional[HarmonicLine]:
    return next((line for line in lines if line.order == n), None)


def lines_in_band(lines: Sequence[HarmonicLine], band_lo_hz: float, band_hi_hz: float) -> List[HarmonicLine]:
    """Lines whose occupied band overlaps [band_lo, band_hi]"""
    return [line for line in lines if line.band[1] >= band_lo_hz and line.band[0] <= band_hi_hz]
