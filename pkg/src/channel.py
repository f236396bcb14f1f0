"""Free-space link budget between a transmitter and the receiver."""

import math

from pydantic import BaseModel, ConfigDict, Field

# Configuration
SPEED_OF_LIGHT_M_S = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0

_FOUR_PI = 4.0 * math.pi


class ChannelModel(BaseModel):
    """Single deterministic line-of-sight path with unity-gain antennas"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    distance_m: float = Field(gt=0)
    extra_loss_db: float = Field(default=0.0, ge=0)
    noise_floor_dbm_hz: float = THERMAL_NOISE_DBM_HZ


def fspl_db(freq_hz: float, distance_m: float) -> float:
    """Free-space path loss in dB: 20 log10(4 pi d f / c)"""
    if freq_hz <= 0 or distance_m <= 0:
        raise ValueError(
            f"frequency and distance must be positive, got {freq_hz} Hz and {distance_m} m"
        )
    return 20.0 * math.log10(_FOUR_PI * distance_m * freq_hz / SPEED_OF_LIGHT_M_S)


def distance_for_loss_m(loss_db: float, freq_hz: float) -> float:
    """Invert FSPL: d = (c / (4 pi f)) * 10^(L/20)"""
    if freq_hz <= 0:
        raise ValueError(f"frequency must be positive, got {freq_hz} Hz")
    return (SPEED_OF_LIGHT_M_S / (_FOUR_PI * freq_hz)) * 10.0 ** (loss_db / 20.0)


def received_power_dbm(tx_power_dbm: float, freq_hz: float, channel: ChannelModel) -> float:
    return tx_power_dbm - fspl_db(freq_hz, channel.distance_m) - channel.extra_loss_db


def noise_power_dbm(channel: ChannelModel, bandwidth_hz: float) -> float:
    """Thermal noise in bandwidth_hz at the receiver"""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz} Hz")
    return channel.noise_floor_dbm_hz + 10.0 * math.log10(bandwidth_hz)
