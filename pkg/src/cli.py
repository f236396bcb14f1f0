#!/usr/bin/env python3
"""
Command-line front end for the harmonic jamming simulator.

Usage:
    harmonic-jam plan --target-hz 614000000
    harmonic-jam simulate --order 2 --jam-start 0
    harmonic-jam table1
    harmonic-jam spectrum sample.wav --deviation-hz 75000
    harmonic-jam noise --seed 7 --out out/noise
    harmonic-jam emission --order 3
    harmonic-jam scan
    harmonic-jam replay out/manifest.json

Every command that writes files also writes manifest.json into its output
directory; `replay` re-runs the recorded command byte for byte.

Exit codes: 0 success, 2 bad configuration or input, 3 infeasible request,
4 planner and simulator disagree.
"""

import argparse
import logging
import os
import sys
from fractions import Fraction
from typing import List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from scipy import signal

from . import __version__
from .channel import noise_power_dbm, received_power_dbm
from .dsp import (
    DEFAULT_DEVIATION_HZ,
    DEFAULT_NOISE_RATE_HZ,
    DEFAULT_NOISE_SECONDS,
    WINDOWS,
    NoiseSpec,
    SampleBuffer,
    carson_bandwidth,
    find_peak,
    fm_modulate,
    generate_white_noise,
    occupied_bandwidth,
    power_spectrum,
    simulate_capture,
)
from .emitter import emitted_lines, lines_in_band
from .formats import (
    FormatError,
    RunManifest,
    read_manifest,
    read_wav,
    write_csv,
    write_iq,
    write_json,
    write_manifest,
    write_wav,
)
from .link import final_state, transcript_to_frame
from .planner import (
    DEFAULT_SCENARIO_PATH,
    InfeasibleOrderError,
    ScenarioConfig,
    ScenarioError,
    load_scenario,
    plan,
    plan_for_order,
    plans_to_frame,
    simulate_plan,
    verify_plans,
)

logger = logging.getLogger(__name__)

# Configuration
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_DISAGREE = 4

TABLE1_ORDERS = (2, 3, 4, 5)
DEFAULT_FFT = 4096
DEFAULT_IQ_RATE_HZ = 400_000
SCAN_RATE_HZ = 80_000_000
SCAN_SAMPLES = 2**16
RX_CHANNEL_BW_HZ = 200_000


def configure_logging(verbose: bool = False) -> None:
    level = "DEBUG" if verbose else os.getenv("JAMSIM_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(
        level=level,
        format="[%(asctime)s] [%(levelname)s] %(name)s: %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
    )


def format_mhz(freq_hz: float) -> str:
    """307000000 -> '307.0 MHz', 204666666.7 -> '204.67 MHz'"""
    text = f"{freq_hz / 1e6:.2f}".rstrip("0")
    if text.endswith("."):
        text += "0"
    return f"{text} MHz"


def ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def scenario_path(args: argparse.Namespace) -> str:
    return args.scenario or os.getenv("JAMSIM_SCENARIO") or DEFAULT_SCENARIO_PATH


def out_dir(args: argparse.Namespace) -> str:
    path = args.out or os.getenv("JAMSIM_OUT_DIR", "out")
    os.makedirs(path, exist_ok=True)
    return path


def load(args: argparse.Namespace) -> ScenarioConfig:
    """Scenario for this run, with --seed replacing both the scenario and hop seeds"""
    scenario = load_scenario(scenario_path(args))
    if args.seed is None:
        return scenario
    link = scenario.link.model_copy(update={"hop_seed": args.seed})
    return scenario.model_copy(update={"seed": args.seed, "link": link})


def record(args: argparse.Namespace, seed: Optional[int] = None, with_scenario: bool = True) -> None:
    write_manifest(
        RunManifest(
            command=args.command,
            argv=list(args.argv),
            scenario=scenario_path(args) if with_scenario else None,
            seed=seed,
            out_dir=out_dir(args),
        )
    )


def print_rule(width: int = 60) -> None:
    print("=" * width)


# ---- plan ----

def cmd_plan(args: argparse.Namespace) -> int:
    scenario = load(args)
    target = args.target_hz if args.target_hz is not None else scenario.target_freq_hz
    plans = plan(scenario, target)

    out = out_dir(args)
    frame = plans_to_frame(plans)
    write_csv(frame, os.path.join(out, "plans.csv"))
    write_json(frame.to_dict(orient="records"), os.path.join(out, "plans.json"))
    record(args, seed=scenario.seed)

    print_rule()
    print(f"🎯 Jam plans for {format_mhz(target)}")
    print_rule()
    print(f"{'Order':<7}{'Carrier':<15}{'Jam (dBm)':>11}{'J/S (dB)':>10}  Verdict")
    for p in plans:
        print(
            f"{ordinal(p.harmonic_order):<7}{format_mhz(float(p.carrier_freq_hz)):<15}"
            f"{p.predicted_jam_power_dbm:>11.2f}{p.predicted_js_db:>10.2f}  {p.verdict.mark}"
        )
    return EXIT_OK


# ---- simulate ----

def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load(args)
    target = args.target_hz if args.target_hz is not None else scenario.target_freq_hz
    jam_plan = plan_for_order(scenario, target, args.order)
    transcript = simulate_plan(jam_plan, scenario, duration_ticks=args.duration, jam_start_tick=args.jam_start)

    out = out_dir(args)
    write_csv(transcript_to_frame(transcript), os.path.join(out, "transcript.csv"))
    record(args, seed=scenario.seed)

    linked_at = next((row.tick for row in transcript if row.state == "Linked"), None)
    print(
        f"📡 Order {args.order} at {format_mhz(float(jam_plan.carrier_freq_hz))}, "
        f"jammer on from tick {args.jam_start}"
    )
    print(f"Final state: {final_state(transcript)}")
    if linked_at is None:
        print("The microphone never linked.")
    else:
        print(f"First linked at tick {linked_at}.")
    return EXIT_OK


# ---- table1 ----

def cmd_table1(args: argparse.Namespace) -> int:
    scenario = load(args)
    plans = [plan_for_order(scenario, scenario.target_freq_hz, n) for n in TABLE1_ORDERS]
    agreements = verify_plans(plans, scenario)

    out = out_dir(args)
    frame = pd.DataFrame(
        [
            (float(p.carrier_freq_hz), p.harmonic_order, p.predicted_js_db, p.verdict.ascii, ok)
            for p, ok in zip(plans, agreements)
        ],
        columns=["frequency_hz", "harmonic", "js_db", "result", "simulator_agrees"],
    )
    write_csv(frame, os.path.join(out, "table1.csv"))
    write_json(frame.to_dict(orient="records"), os.path.join(out, "table1.json"))
    record(args, seed=scenario.seed)

    print(f"{'Frequency':<14}{'Harmonic':<10}Result")
    for p in plans:
        print(f"{format_mhz(float(p.carrier_freq_hz)):<14}{ordinal(p.harmonic_order):<10}{p.verdict.mark}")

    if not all(agreements):
        bad = [p.harmonic_order for p, ok in zip(plans, agreements) if not ok]
        print(f"⚠️  planner and simulator disagree on orders {bad}", file=sys.stderr)
        return EXIT_DISAGREE
    return EXIT_OK


# ---- spectrum ----

def resample_audio(audio: SampleBuffer, rate_hz: float) -> SampleBuffer:
    """Polyphase resample to rate_hz, clipped back to full scale"""
    ratio = Fraction(int(round(rate_hz)), int(round(audio.sample_rate_hz)))
    if ratio == 1:
        return audio
    samples = signal.resample_poly(audio.samples, ratio.numerator, ratio.denominator)
    return SampleBuffer(np.clip(samples, -1.0, 1.0), audio.sample_rate_hz * ratio.numerator / ratio.denominator)


def cmd_spectrum(args: argparse.Namespace) -> int:
    audio = read_wav(args.wav)
    audio_bw = audio.sample_rate_hz / 2
    iq = fm_modulate(resample_audio(audio, args.iq_rate), args.deviation_hz, center_freq_hz=args.center_hz)
    spectrum = power_spectrum(iq, args.fft, args.window)
    peak = find_peak(spectrum)
    occupied = occupied_bandwidth(spectrum, 0.99)
    carson = carson_bandwidth(args.deviation_hz, audio_bw)

    out = out_dir(args)
    write_csv(
        pd.DataFrame({"freq_hz": spectrum.bin_freqs_hz, "power_db": spectrum.power_db}),
        os.path.join(out, "spectrum.csv"),
    )
    write_iq(os.path.join(out, "fm.iq"), iq)
    write_json(
        {
            "peak_hz": peak,
            "occupied_bw_hz": occupied,
            "carson_bw_hz": carson,
            "rbw_hz": spectrum.rbw_hz,
        },
        os.path.join(out, "spectrum.json"),
    )
    record(args, with_scenario=False)

    print(f"📈 Peak at {peak:.1f} Hz (RBW {spectrum.rbw_hz:.1f} Hz)")
    print(f"99% occupied bandwidth {occupied / 1e3:.1f} kHz, Carson estimate {carson / 1e3:.1f} kHz")
    return EXIT_OK


# ---- noise ----

def cmd_noise(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else load(args).seed
    spec = NoiseSpec(seed, int(round(args.seconds * args.rate)), float(args.rate))
    out = out_dir(args)
    write_wav(os.path.join(out, "noise.wav"), generate_white_noise(spec))
    record(args, seed=seed)
    print(f"🔊 Wrote {spec.n_samples} samples of white noise (seed {seed}) to {out}/noise.wav")
    return EXIT_OK


# ---- emission ----

def cmd_emission(args: argparse.Namespace) -> int:
    scenario = load(args)
    target = args.target_hz if args.target_hz is not None else scenario.target_freq_hz
    jam_plan = plan_for_order(scenario, target, args.order)
    emitter = scenario.emitter.tuned_to(jam_plan.carrier_freq_hz)
    lines = emitted_lines(
        emitter, scenario.deviation_hz, scenario.audio_bw_hz, max(scenario.n_orders_max, args.order)
    )
    in_band = {line.order for line in lines_in_band(lines, scenario.link.band_lo_hz, scenario.link.band_hi_hz)}
    noise = noise_power_dbm(scenario.channel_jam, RX_CHANNEL_BW_HZ)

    rows = []
    for line in lines:
        rx = received_power_dbm(line.power_dbm, line.freq_hz, scenario.channel_jam)
        rows.append((line.order, line.freq_hz, line.power_dbm, line.occupied_bw_hz, rx, rx - noise, line.order in in_band))
    frame = pd.DataFrame(
        rows,
        columns=["order", "freq_hz", "power_dbm", "occupied_bw_hz", "rx_power_dbm", "margin_over_noise_db", "in_band"],
    )
    out = out_dir(args)
    write_csv(frame, os.path.join(out, "emission.csv"))
    record(args, seed=scenario.seed)

    print(f"📻 Carrier {format_mhz(emitter.fundamental_freq_hz)}, harmonics at the receiver:")
    for order, freq, power, _, rx, margin, hit in rows:
        flag = "  <- in band" if hit else ""
        print(f"{ordinal(order):<6}{format_mhz(freq):<15}{power:>9.2f} dBm  rx {rx:>8.2f} dBm  {margin:+.1f} dB{flag}")
    return EXIT_OK


# ---- scan ----

def cmd_scan(args: argparse.Namespace) -> int:
    scenario = load(args)
    seed = args.seed if args.seed is not None else scenario.seed
    link = scenario.link
    center = (link.band_lo_hz + link.band_hi_hz) / 2
    capture = simulate_capture(center, link.handshake_freq_hz, SCAN_RATE_HZ, SCAN_SAMPLES, seed)
    spectrum = power_spectrum(capture, args.fft, "hann")
    peak = find_peak(spectrum)

    out = out_dir(args)
    write_csv(
        pd.DataFrame({"freq_hz": spectrum.bin_freqs_hz, "power_db": spectrum.power_db}),
        os.path.join(out, "scan.csv"),
    )
    write_json({"peak_hz": peak, "rbw_hz": spectrum.rbw_hz}, os.path.join(out, "scan.json"))
    record(args, seed=seed)

    print(f"🔍 Strongest carrier at {peak / 1e6:.3f} MHz")
    return EXIT_OK


# ---- replay ----

def cmd_replay(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest)
    if manifest.command == "replay" or not manifest.argv:
        raise FormatError(f"manifest {args.manifest} does not describe a replayable command")
    argv = list(manifest.argv)
    if "--out" not in argv:
        argv += ["--out", manifest.out_dir]
    logger.info("replaying %s", " ".join(argv))
    return main(argv)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file (default: shipped calibrated scenario)")
    common.add_argument("--out", help="output directory (default: $JAMSIM_OUT_DIR or ./out)")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="harmonic-jam",
        description="Sub-harmonic jamming simulator for frequency-hopping wireless microphones",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="enumerate sub-harmonic carriers for a target")
    p.add_argument("--target-hz", type=int)
    p.set_defaults(handler=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="run the link under one jam plan")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--jam-start", type=int, default=0)
    p.add_argument("--duration", type=int)
    p.add_argument("--target-hz", type=int)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("table1", parents=[common], help="sweep harmonic orders 2 to 5 through planner and simulator")
    p.set_defaults(handler=cmd_table1)

    p = sub.add_parser("spectrum", parents=[common], help="FM modulate a WAV and scan its spectrum")
    p.add_argument("wav")
    p.add_argument("--deviation-hz", type=int, default=int(DEFAULT_DEVIATION_HZ))
    p.add_argument("--fft", type=int, default=DEFAULT_FFT)
    p.add_argument("--iq-rate", type=int, default=DEFAULT_IQ_RATE_HZ)
    p.add_argument("--center-hz", type=int, default=0)
    p.add_argument("--window", choices=sorted(WINDOWS), default="hann")
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("noise", parents=[common], help="write a white-noise PCM16 WAV")
    p.add_argument("--seconds", type=float, default=DEFAULT_NOISE_SECONDS)
    p.add_argument("--rate", type=int, default=int(DEFAULT_NOISE_RATE_HZ))
    p.set_defaults(handler=cmd_noise)

    p = sub.add_parser("emission", parents=[common], help="list the harmonics of an order's carrier")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--target-hz", type=int)
    p.set_defaults(handler=cmd_emission)

    p = sub.add_parser("scan", parents=[common], help="locate the handshake carrier in a simulated band scan")
    p.add_argument("--fft", type=int, default=DEFAULT_FFT)
    p.set_defaults(handler=cmd_scan)

    p = sub.add_parser("replay", parents=[common], help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(handler=cmd_replay)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    configure_logging(args.verbose)

    try:
        return args.handler(args)
    except InfeasibleOrderError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ScenarioError, FormatError, ValueError, OSError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
