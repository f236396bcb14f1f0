"""
Microphone <-> receiver link state machine.

The link comes up with a handshake on a fixed channel and then hops over a
seeded permutation of the band. Jamming the handshake channel keeps the
microphone from ever linking; once hopping has started, a jammer parked on
one channel does nothing. A wired handshake (charging-dock pins) skips the
air interface entirely.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .channel import ChannelModel, received_power_dbm
from .emitter import POWER_FLOOR_DB, EmitterModel, HarmonicLine, emitted_lines

logger = logging.getLogger(__name__)

# Configuration
DEFAULT_BAND_LO_HZ = 606e6
DEFAULT_BAND_HI_HZ = 670e6
DEFAULT_HANDSHAKE_HZ = 614e6
HARMONICS_SIMULATED = 10
U64_MAX = 2**64 - 1


class MissingFrequencyError(KeyError):
    """A Tick has no J/S entry for a frequency the state machine needs"""


class LinkConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    band_lo_hz: float = DEFAULT_BAND_LO_HZ
    band_hi_hz: float = DEFAULT_BAND_HI_HZ
    handshake_freq_hz: float = DEFAULT_HANDSHAKE_HZ
    n_hop_channels: int = Field(default=16, ge=1)
    hop_seed: int = Field(default=42, ge=0, le=U64_MAX)
    handshake_windows: int = Field(default=3, ge=1)
    jam_threshold_js_db: float = 0.0
    jam_break_fraction: float = Field(default=0.5, gt=0, le=1)
    wired_handshake: bool = False

    @model_validator(mode="after")
    def _handshake_inside_band(self):
        if not self.band_lo_hz < self.handshake_freq_hz < self.band_hi_hz:
            raise ValueError(
                f"handshake frequency {self.handshake_freq_hz} Hz must lie strictly inside "
                f"the band ({self.band_lo_hz}, {self.band_hi_hz}) Hz"
            )
        return self


# ---- states ----

@dataclass(frozen=True)
class Unlinked:
    label = "Unlinked"


@dataclass(frozen=True)
class Handshaking:
    window: int = 0
    label = "Handshaking"


@dataclass(frozen=True)
class Linked:
    hop_sequence: Tuple[float, ...]
    hop_index: int = 0
    label = "Linked"

    def __post_init__(self):
        if not 0 <= self.hop_index < len(self.hop_sequence):
            raise ValueError(f"hop_index {self.hop_index} outside a {len(self.hop_sequence)}-channel sequence")

    @property
    def channel_hz(self) -> float:
        return self.hop_sequence[self.hop_index]


@dataclass(frozen=True)
class Blocked:
    label = "Blocked"


LinkState = Union[Unlinked, Handshaking, Linked, Blocked]


# ---- events ----

@dataclass(frozen=True)
class PowerOn:
    pass


@dataclass(frozen=True)
class PowerOff:
    pass


@dataclass(frozen=True)
class BatteryPull:
    pass


@dataclass(frozen=True)
class Tick:
    js_by_freq: Mapping[float, float]


LinkEvent = Union[PowerOn, PowerOff, BatteryPull, Tick]

POWER_EVENTS = {
    "power_on": PowerOn,
    "power_off": PowerOff,
    "battery_pull": BatteryPull,
}


def hop_channels(config: LinkConfig) -> Tuple[float, ...]:
    """Channel grid: n centres spaced uniformly across the band"""
    spacing = (config.band_hi_hz - config.band_lo_hz) / config.n_hop_channels
    return tuple(config.band_lo_hz + (i + 0.5) * spacing for i in range(config.n_hop_channels))


def hop_sequence(config: LinkConfig) -> Tuple[float, ...]:
    """Seeded permutation of the channel grid"""
    grid = hop_channels(config)
    order = np.random.Generator(np.random.PCG64(config.hop_seed)).permutation(len(grid))
    return tuple(grid[int(i)] for i in order)


def _js(event: Tick, freq_hz: float) -> float:
    try:
        return event.js_by_freq[freq_hz]
    except KeyError:
        raise MissingFrequencyError(f"tick has no J/S entry for {freq_hz} Hz") from None


def _handshake_clear(event: Tick, config: LinkConfig) -> bool:
    if config.wired_handshake:
        return True
    return _js(event, config.handshake_freq_hz) < config.jam_threshold_js_db


def jammed_fraction(event: Tick, channels: Sequence[float], config: LinkConfig) -> float:
    jammed = sum(1 for f in channels if _js(event, f) >= config.jam_threshold_js_db)
    return jammed / len(channels)


def step(state: LinkState, event: LinkEvent, config: LinkConfig) -> LinkState:
    """Pure transition function of the link"""
    if isinstance(event, (PowerOff, BatteryPull)):
        return Unlinked()
    if isinstance(event, PowerOn):
        return Handshaking(0) if isinstance(state, Unlinked) else state
    if not isinstance(event, Tick):
        raise TypeError(f"unknown link event {event!r}")

    if isinstance(state, Unlinked):
        return state

    if isinstance(state, (Handshaking, Blocked)):
        if _handshake_clear(event, config):
            return Linked(hop_sequence(config), 0)
        if isinstance(state, Blocked):
            # keeps retrying every tick for as long as the jammer is on
            return state
        window = state.window + 1
        if window >= config.handshake_windows:
            logger.debug("handshake failed %d times, link blocked", window)
            return Blocked()
        return Handshaking(window)

    if isinstance(state, Linked):
        if jammed_fraction(event, state.hop_sequence, config) >= config.jam_break_fraction:
            return Unlinked()
        return Linked(state.hop_sequence, (state.hop_index + 1) % len(state.hop_sequence))

    raise TypeError(f"unknown link state {state!r}")


# ---- scenario runner ----

@dataclass(frozen=True)
class TranscriptRow:
    tick: int
    state: str
    handshake_js_db: float
    jammed_fraction: float


def jam_power_dbm(lines: Sequence[HarmonicLine], freq_hz: float, channel: ChannelModel) -> float:
    """Received jammer power at freq_hz: sum of every line whose band covers it"""
    covering = [
        10.0 ** (received_power_dbm(line.power_dbm, line.freq_hz, channel) / 10.0)
        for line in lines
        if line.covers(freq_hz)
    ]
    if not covering:
        return POWER_FLOOR_DB
    return max(10.0 * math.log10(sum(covering)), POWER_FLOOR_DB)


def js_map(
    frequencies: Sequence[float],
    lines: Sequence[HarmonicLine],
    channel: ChannelModel,
    mic_channel: ChannelModel,
    mic_tx_power_dbm: float,
) -> Dict[float, float]:
    return {
        f: jam_power_dbm(lines, f, channel) - received_power_dbm(mic_tx_power_dbm, f, mic_channel)
        for f in frequencies
    }


def _check_ticks(name: str, ticks: Sequence[int], duration_ticks: int) -> None:
    for t in ticks:
        if not 0 <= t < duration_ticks:
            raise ValueError(f"{name} time {t} is outside the run [0, {duration_ticks})")


def run_scenario(
    config: LinkConfig,
    jam_schedule: Sequence[Tuple[int, bool]],
    emitter: EmitterModel,
    channel: ChannelModel,
    duration_ticks: int,
    *,
    mic_channel: ChannelModel,
    mic_tx_power_dbm: float,
    deviation_hz: float,
    audio_bw_hz: float,
    power_events: Optional[Sequence[Tuple[int, str]]] = None,
    n_harmonics: int = HARMONICS_SIMULATED,
) -> List[TranscriptRow]:
    """Drive the link tick by tick under a jam schedule.

    jam_schedule toggles the jammer at the given ticks (off before the first
    entry). power_events defaults to switching the microphone on at tick 0;
    a tick with a power event delivers it instead of a Tick.
    """
    if duration_ticks < 1:
        raise ValueError(f"duration must be at least one tick, got {duration_ticks}")
    power_events = [(0, "power_on")] if power_events is None else list(power_events)
    _check_ticks("jam schedule", [t for t, _ in jam_schedule], duration_ticks)
    _check_ticks("power event", [t for t, _ in power_events], duration_ticks)
    unknown = {kind for _, kind in power_events} - set(POWER_EVENTS)
    if unknown:
        raise ValueError(f"unknown power events {sorted(unknown)}, expected {sorted(POWER_EVENTS)}")

    channels = hop_channels(config)
    frequencies = (config.handshake_freq_hz,) + channels
    lines = emitted_lines(emitter, deviation_hz, audio_bw_hz, n_harmonics)
    js_jammed = js_map(frequencies, lines, channel, mic_channel, mic_tx_power_dbm)
    js_clear = js_map(frequencies, [], channel, mic_channel, mic_tx_power_dbm)

    toggles: Dict[int, bool] = {}
    for t, active in jam_schedule:
        toggles[t] = active
    events: Dict[int, LinkEvent] = {}
    for t, kind in power_events:
        events[t] = POWER_EVENTS[kind]()

    state: LinkState = Unlinked()
    jamming = False
    transcript = []
    for t in range(duration_ticks):
        jamming = toggles.get(t, jamming)
        tick = Tick(js_jammed if jamming else js_clear)
        state = step(state, events.get(t, tick), config)
        transcript.append(
            TranscriptRow(
                tick=t,
                state=state.label,
                handshake_js_db=tick.js_by_freq[config.handshake_freq_hz],
                jammed_fraction=jammed_fraction(tick, channels, config),
            )
        )

    logger.info("scenario finished after %d ticks in state %s", duration_ticks, state.label)
    return transcript


def final_state(transcript: Sequence[TranscriptRow]) -> str:
    return transcript[-1].state


def ever_linked(transcript: Sequence[TranscriptRow]) -> bool:
    return any(row.state == Linked.label for row in transcript)


def transcript_to_frame(transcript: Sequence[TranscriptRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.tick, r.state, r.handshake_js_db, r.jammed_fraction) for r in transcript],
        columns=["tick", "state", "handshake_js_db", "jammed_fraction"],
    )
