"""
Sub-harmonic jam planning.

A carrier above the transmitter's ceiling is reached by tuning to target/n
and letting the unfiltered n-th harmonic land on the target. For each
feasible order the planner predicts the jam power at the receiver, the J/S
against the microphone and whether the handshake would be denied, and can
replay the plan through the link simulator to check the prediction.
"""

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .channel import ChannelModel, distance_for_loss_m, received_power_dbm
from .emitter import POWER_FLOOR_DB, EmitterModel, emitted_lines, line_for_order
from .link import LinkConfig, TranscriptRow, ever_linked, run_scenario

logger = logging.getLogger(__name__)

# Configuration
DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "data")
DEFAULT_SCENARIO_PATH = os.path.join(DATA_DIR, "default_scenario.json")
DEFAULT_TARGET_HZ = 614_000_000
DEFAULT_N_ORDERS_MAX = 8
VERIFY_WORKERS = 4

Number = Union[int, float, Fraction]


class ScenarioError(ValueError):
    """Scenario file is missing, malformed or fails validation"""


class InfeasibleOrderError(ValueError):
    """No harmonic order can reach the target under the carrier ceiling"""


class Verdict(str, Enum):
    SUCCESS = "Success"
    FAIL = "Fail"

    @property
    def ascii(self) -> str:
        return "OK" if self is Verdict.SUCCESS else "FAIL"

    @property
    def mark(self) -> str:
        return "✓" if self is Verdict.SUCCESS else "✗"


class ScenarioConfig(BaseModel):
    """A full experiment: jammer, both radio paths, the link and the jam waveform"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(default=7, ge=0, le=2**64 - 1)
    target_freq_hz: float = Field(default=DEFAULT_TARGET_HZ, gt=0)
    deviation_hz: float = Field(default=75_000, gt=0)
    audio_bw_hz: float = Field(default=24_000, gt=0)
    n_orders_max: int = Field(default=DEFAULT_N_ORDERS_MAX, ge=1)
    duration_ticks: int = Field(default=100, ge=1)
    mic_tx_power_dbm: float = 10.0
    emitter: EmitterModel
    channel_jam: ChannelModel
    channel_mic: ChannelModel
    link: LinkConfig


@dataclass(frozen=True)
class JamPlan:
    target_freq_hz: float
    harmonic_order: int
    carrier_freq_hz: Fraction
    predicted_jam_power_dbm: float
    predicted_js_db: float
    verdict: Verdict

    def inverted(self) -> "JamPlan":
        flipped = Verdict.FAIL if self.verdict is Verdict.SUCCESS else Verdict.SUCCESS
        return replace(self, verdict=flipped)


def load_scenario(path: str = DEFAULT_SCENARIO_PATH) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario {path} is not valid JSON: {e}") from e

    try:
        scenario = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"scenario {path} is invalid:\n{e}") from e
    logger.debug("loaded scenario %s", path)
    return scenario


def dump_scenario(scenario: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(scenario.model_dump(mode="json"), f, indent=2)
        f.write("\n")


def carrier_for_harmonic(target_freq_hz: Number, n: int) -> Fraction:
    """Exact target / n"""
    if n < 1:
        raise ValueError(f"harmonic order must be >= 1, got {n}")
    return Fraction(target_freq_hz) / n


def min_order(target_freq_hz: Number, max_carrier_hz: Number) -> int:
    return max(1, math.ceil(Fraction(target_freq_hz) / Fraction(max_carrier_hz)))


def signal_power_dbm(scenario: ScenarioConfig, freq_hz: float) -> float:
    """Microphone power at the receiver"""
    return received_power_dbm(scenario.mic_tx_power_dbm, freq_hz, scenario.channel_mic)


def _harmonic_tx_dbm(scenario: ScenarioConfig, carrier: Fraction, n: int) -> float:
    emitter = scenario.emitter.tuned_to(carrier)
    lines = emitted_lines(emitter, scenario.deviation_hz, scenario.audio_bw_hz, n)
    line = line_for_order(lines, n)
    return POWER_FLOOR_DB if line is None else line.power_dbm


def plan_for_order(scenario: ScenarioConfig, target_freq_hz: Number, n: int) -> JamPlan:
    """Predict one harmonic order against the target"""
    carrier = carrier_for_harmonic(target_freq_hz, n)
    if carrier > Fraction(scenario.emitter.max_carrier_hz):
        raise InfeasibleOrderError(
            f"order {n} needs a {float(carrier) / 1e6:.6g} MHz carrier, above the "
            f"{scenario.emitter.max_carrier_hz / 1e6:.6g} MHz ceiling"
        )

    target = float(target_freq_hz)
    jam = received_power_dbm(_harmonic_tx_dbm(scenario, carrier, n), target, scenario.channel_jam)
    js = jam - signal_power_dbm(scenario, target)
    denied = js >= scenario.link.jam_threshold_js_db and not scenario.link.wired_handshake
    return JamPlan(
        target_freq_hz=target,
        harmonic_order=n,
        carrier_freq_hz=carrier,
        predicted_jam_power_dbm=jam,
        predicted_js_db=js,
        verdict=Verdict.SUCCESS if denied else Verdict.FAIL,
    )


def plan(scenario: ScenarioConfig, target_freq_hz: Number) -> List[JamPlan]:
    """One plan per feasible harmonic order, ascending"""
    max_carrier = scenario.emitter.max_carrier_hz
    if Fraction(target_freq_hz) <= Fraction(max_carrier):
        return [plan_for_order(scenario, target_freq_hz, 1)]

    n_min = min_order(target_freq_hz, max_carrier)
    if n_min > scenario.n_orders_max:
        raise InfeasibleOrderError(
            f"reaching {float(target_freq_hz) / 1e6:.6g} MHz needs order {n_min}, "
            f"beyond n_orders_max={scenario.n_orders_max}"
        )
    plans = [plan_for_order(scenario, target_freq_hz, n) for n in range(n_min, scenario.n_orders_max + 1)]
    logger.info(
        "planned %d orders for %.6g MHz: %s",
        len(plans),
        float(target_freq_hz) / 1e6,
        ", ".join(f"{p.harmonic_order}={p.verdict.ascii}" for p in plans),
    )
    return plans


def simulate_plan(
    jam_plan: JamPlan,
    scenario: ScenarioConfig,
    duration_ticks: Optional[int] = None,
    jam_start_tick: int = 0,
) -> List[TranscriptRow]:
    """Transcript of the link with this plan's jammer switched on at jam_start_tick"""
    duration = scenario.duration_ticks if duration_ticks is None else duration_ticks
    schedule = [(jam_start_tick, True)]
    return run_scenario(
        scenario.link,
        schedule,
        scenario.emitter.tuned_to(jam_plan.carrier_freq_hz),
        scenario.channel_jam,
        duration,
        mic_channel=scenario.channel_mic,
        mic_tx_power_dbm=scenario.mic_tx_power_dbm,
        deviation_hz=scenario.deviation_hz,
        audio_bw_hz=scenario.audio_bw_hz,
    )


def verify_plan(jam_plan: JamPlan, scenario: ScenarioConfig) -> bool:
    """True iff the simulator agrees: Success <=> the link never comes up"""
    transcript = simulate_plan(jam_plan, scenario)
    never_linked = not ever_linked(transcript)
    agrees = (jam_plan.verdict is Verdict.SUCCESS) == never_linked
    if not agrees:
        logger.warning(
            "order %d: planner says %s but the link %s",
            jam_plan.harmonic_order,
            jam_plan.verdict.value,
            "never linked" if never_linked else "linked",
        )
    return agrees


def verify_plans(plans: Sequence[JamPlan], scenario: ScenarioConfig) -> List[bool]:
    """verify_plan over independent runs, results in the order given"""
    with ThreadPoolExecutor(max_workers=VERIFY_WORKERS) as pool:
        return list(pool.map(lambda p: verify_plan(p, scenario), plans))


def jam_range_m(jam_plan: JamPlan, scenario: ScenarioConfig) -> float:
    """Furthest jammer-to-receiver distance at which this order still denies the handshake"""
    tx = _harmonic_tx_dbm(scenario, jam_plan.carrier_freq_hz, jam_plan.harmonic_order)
    if tx <= POWER_FLOOR_DB:
        return 0.0
    needed = signal_power_dbm(scenario, jam_plan.target_freq_hz) + scenario.link.jam_threshold_js_db
    allowed_loss = tx - scenario.channel_jam.extra_loss_db - needed
    return distance_for_loss_m(allowed_loss, jam_plan.target_freq_hz)


def plans_to_frame(plans: Sequence[JamPlan]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (p.harmonic_order, float(p.carrier_freq_hz), p.predicted_jam_power_dbm, p.predicted_js_db, p.verdict.ascii)
            for p in plans
        ],
        columns=["order", "carrier_hz", "jam_power_dbm", "js_db", "verdict"],
    )
