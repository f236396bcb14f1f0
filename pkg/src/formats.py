"""
File formats: PCM16 WAV in/out, raw float32 IQ dumps with a text sidecar,
byte-stable CSV/JSON writers and the per-run manifest.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, List, Optional

import numpy as np
import pandas as pd
from scipy.io import wavfile

from . import __version__
from .dsp import IQBuffer, SampleBuffer

logger = logging.getLogger(__name__)

# Configuration
FLOAT_FORMAT = "%.6g"
SIGNIFICANT_DIGITS = 6
PCM16_FULL_SCALE = 32768.0
MANIFEST_NAME = "manifest.json"


class FormatError(ValueError):
    """Malformed or unreadable input file"""


# ---- WAV ----

def read_wav(path: str) -> SampleBuffer:
    """Load a PCM16 mono WAV normalised to +/-1.0"""
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as e:
        raise FormatError(f"cannot read WAV {path}: {e}") from e

    if data.dtype != np.int16:
        raise FormatError(f"{path}: expected 16-bit PCM, got {data.dtype}")
    if data.ndim != 1:
        raise FormatError(f"{path}: expected mono, got {data.shape[1]} channels")
    if data.size == 0:
        raise FormatError(f"{path}: no samples")
    return SampleBuffer(data.astype(np.float64) / PCM16_FULL_SCALE, float(rate))


def write_wav(path: str, audio: SampleBuffer) -> None:
    pcm = np.clip(np.round(audio.samples * (PCM16_FULL_SCALE - 1)), -32768, 32767).astype("<i2")
    wavfile.write(path, int(round(audio.sample_rate_hz)), pcm)


# ---- IQ dump ----

def sidecar_path(path: str) -> str:
    return path + ".txt"


def write_iq(path: str, iq: IQBuffer) -> None:
    """Interleaved little-endian float32 I then Q, no header, plus a key=value sidecar"""
    interleaved = np.empty(2 * len(iq), dtype="<f4")
    interleaved[0::2] = iq.samples.real
    interleaved[1::2] = iq.samples.imag
    interleaved.tofile(path)

    with open(sidecar_path(path), "w", encoding="utf-8", newline="\n") as f:
        f.write(f"sample_rate_hz={iq.sample_rate_hz!r}\n")
        f.write(f"center_freq_hz={iq.center_freq_hz!r}\n")
        if iq.deviation_hz is not None:
            f.write(f"deviation_hz={iq.deviation_hz!r}\n")


def read_iq(path: str) -> IQBuffer:
    try:
        with open(sidecar_path(path), "r", encoding="utf-8") as f:
            meta = dict(line.strip().split("=", 1) for line in f if line.strip())
        raw = np.fromfile(path, dtype="<f4")
    except (OSError, ValueError) as e:
        raise FormatError(f"cannot read IQ dump {path}: {e}") from e

    if raw.size % 2:
        raise FormatError(f"{path}: odd number of float32 values")
    try:
        return IQBuffer(
            raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64),
            float(meta["sample_rate_hz"]),
            center_freq_hz=float(meta.get("center_freq_hz", 0.0)),
            deviation_hz=float(meta["deviation_hz"]) if "deviation_hz" in meta else None,
        )
    except (KeyError, ValueError) as e:
        raise FormatError(f"{path}: bad sidecar: {e}") from e


# ---- tables ----

def round_sig(value: Any, digits: int = SIGNIFICANT_DIGITS) -> Any:
    """Round floats (recursively) to a fixed number of significant digits"""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: round_sig(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_sig(v, digits) for v in value]
    return value


def write_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_json(payload: Any, path: str) -> None:
    text = json.dumps(round_sig(payload), indent=2, sort_keys=True, ensure_ascii=False)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text + "\n")


# ---- manifest ----

@dataclass
class RunManifest:
    """Everything needed to re-run a command. No timestamps."""

    command: str
    argv: List[str]
    scenario: Optional[str] = None
    seed: Optional[int] = None
    out_dir: str = "out"
    version: str = __version__


def write_manifest(manifest: RunManifest) -> str:
    os.makedirs(manifest.out_dir, exist_ok=True)
    path = os.path.join(manifest.out_dir, MANIFEST_NAME)
    write_json(asdict(manifest), path)
    logger.debug("wrote manifest %s", path)
    return path


def read_manifest(path: str) -> RunManifest:
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return RunManifest(**data)
    except (OSError, ValueError, TypeError) as e:
        raise FormatError(f"cannot read manifest {path}: {e}") from e
