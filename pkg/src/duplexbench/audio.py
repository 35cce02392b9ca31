"""PCM audio buffers, the frame clock, signal generation and WAV I/O.

Everything downstream runs on 16-bit mono PCM chopped into fixed-size
frames (80 ms at the default 12.5 Hz frame rate / 24 kHz sample rate).
"""

from __future__ import annotations

import math
import wave
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

DEFAULT_SAMPLE_RATE = 24000
DEFAULT_FRAME_RATE = 12.5
FULL_SCALE = 32768.0

# Relative slack when deciding whether a duration is an exact frame multiple.
_FRAME_SNAP = 1e-9


def _as_int16(samples) -> np.ndarray:
    arr = np.asarray(samples)
    if arr.dtype != np.int16:
        if arr.size and (arr.min() < -32768 or arr.max() > 32767):
            raise InvalidArgument("samples out of int16 range")
        arr = arr.astype(np.int16)
    return arr


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable mono PCM buffer (signed 16-bit)."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InvalidArgument(f"sample_rate must be positive, got {self.sample_rate}")
        arr = _as_int16(self.samples)
        if arr.ndim != 1:
            raise InvalidArgument("AudioBuffer is mono: samples must be 1-D")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AudioBuffer)
            and self.sample_rate == other.sample_rate
            and np.array_equal(self.samples, other.samples)
        )

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self.samples) / self.sample_rate

    def rms(self) -> float:
        """Root-mean-square level as a fraction of full scale."""
        if len(self.samples) == 0:
            return 0.0
        x = self.samples.astype(np.float64) / FULL_SCALE
        return float(np.sqrt(np.mean(x * x)))

    def level_dbfs(self) -> float:
        """RMS level in dBFS; -inf for silence."""
        r = self.rms()
        return 20.0 * math.log10(r) if r > 0 else -math.inf

    def cut(self, start: int, end: int) -> "AudioBuffer":
        """Slice by sample index."""
        return AudioBuffer(self.samples[start:end], self.sample_rate)

    @staticmethod
    def silence(n_samples: int, sample_rate: int = DEFAULT_SAMPLE_RATE) -> "AudioBuffer":
        return AudioBuffer(np.zeros(n_samples, dtype=np.int16), sample_rate)

    @staticmethod
    def concat(buffers: list["AudioBuffer"]) -> "AudioBuffer":
        if not buffers:
            raise InvalidArgument("cannot concat an empty list of buffers")
        rate = buffers[0].sample_rate
        if any(b.sample_rate != rate for b in buffers):
            raise InvalidArgument("cannot concat buffers with mixed sample rates")
        return AudioBuffer(np.concatenate([b.samples for b in buffers]), rate)


@dataclass(frozen=True)
class FrameClock:
    """Ties the sample rate to the frame rate of the token streams.

    The sample rate must be an exact integer multiple of the frame rate;
    the defaults give 1920 samples per 80 ms frame.
    """

    frame_rate: float = DEFAULT_FRAME_RATE
    sample_rate: int = DEFAULT_SAMPLE_RATE
    samples_per_frame: int = field(init=False)

    def __post_init__(self):
        if self.frame_rate <= 0 or self.sample_rate <= 0:
            raise InvalidArgument("frame_rate and sample_rate must be positive")
        spf = self.sample_rate / self.frame_rate
        if spf != int(spf):
            raise InvalidArgument(
                f"frame_rate {self.frame_rate} does not divide sample_rate {self.sample_rate}"
            )
        object.__setattr__(self, "samples_per_frame", int(spf))
        if self.samples_per_frame * self.frame_rate != self.sample_rate:
            raise InvalidArgument("frame clock arithmetic is not exact")

    def frames_in(self, buf: AudioBuffer) -> int:
        """Whole frames in ``buf``; rejects partial trailing frames."""
        n, rem = divmod(len(buf), self.samples_per_frame)
        if rem:
            raise InvalidArgument(
                f"buffer of {len(buf)} samples is not a whole number of "
                f"{self.samples_per_frame}-sample frames"
            )
        return n

    def frame_time(self, frame_index: int) -> float:
        return frame_index / self.frame_rate


def frames_for_duration(seconds: float, clock: FrameClock) -> int:
    """Number of frames covering ``seconds``: ceil, exact on frame multiples."""
    if seconds < 0:
        raise InvalidArgument(f"duration must be non-negative, got {seconds}")
    x = seconds * clock.frame_rate
    nearest = round(x)
    if abs(x - nearest) <= _FRAME_SNAP * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def gen_sine(
    freq: float,
    duration: float,
    amplitude: float = 0.5,
    clock: FrameClock | None = None,
) -> AudioBuffer:
    """Sine tone at ``freq`` Hz, rounded up to a whole number of frames.

    ``amplitude`` is a fraction of full scale; 0 yields a silent buffer of
    the same length.
    """
    clock = clock or FrameClock()
    if not 0 < freq < clock.sample_rate / 2:
        raise InvalidArgument(
            f"freq {freq} Hz outside (0, Nyquist={clock.sample_rate / 2}) Hz"
        )
    if not 0 <= amplitude <= 1:
        raise InvalidArgument(f"amplitude must be in [0, 1], got {amplitude}")
    n = frames_for_duration(duration, clock) * clock.samples_per_frame
    t = np.arange(n, dtype=np.float64)
    x = amplitude * 32767.0 * np.sin(2.0 * np.pi * freq * t / clock.sample_rate)
    return AudioBuffer(np.rint(x).astype(np.int16), clock.sample_rate)


def pad_to_frame(buf: AudioBuffer, clock: FrameClock) -> AudioBuffer:
    """Zero-pad so the buffer ends on a frame boundary."""
    rem = len(buf) % clock.samples_per_frame
    if rem == 0:
        return buf
    pad = np.zeros(clock.samples_per_frame - rem, dtype=np.int16)
    return AudioBuffer(np.concatenate([buf.samples, pad]), buf.sample_rate)


def read_wav(path) -> AudioBuffer:
    """Read a mono 16-bit PCM RIFF file."""
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise InvalidArgument(f"{path}: expected mono, got {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise InvalidArgument(f"{path}: expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
        raw = w.readframes(w.getnframes())
        rate = w.getframerate()
    return AudioBuffer(np.frombuffer(raw, dtype="<i2"), rate)


def write_wav(path, buf: AudioBuffer) -> None:
    """Write a mono 16-bit PCM RIFF file."""
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate)
        w.writeframes(buf.samples.astype("<i2").tobytes())


def speech_like(
    duration: float,
    clock: FrameClock | None = None,
    seed: int = 0,
    level_dbfs: float = -12.0,
    pitch_scale: float = 1.0,
) -> AudioBuffer:
    """Deterministic speech-shaped test signal.

    A harmonic stack with a wandering pitch and a syllabic amplitude
    envelope -- enough structure for VAD, the toy codec and the reference
    embedder without any TTS dependency. ``pitch_scale`` shifts the pitch
    while keeping the rest of the voice fixed (same seed).
    """
    clock = clock or FrameClock()
    if duration <= 0:
        raise InvalidArgument("duration must be positive")
    if pitch_scale <= 0:
        raise InvalidArgument("pitch_scale must be positive")
    rng = np.random.default_rng(seed)
    n = frames_for_duration(duration, clock) * clock.samples_per_frame
    t = np.arange(n, dtype=np.float64) / clock.sample_rate

    f0 = rng.uniform(110.0, 220.0) * pitch_scale
    vibrato = 1.0 + 0.03 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t)
    x = np.zeros(n)
    for h in range(1, 13):
        f = f0 * h
        if f >= clock.sample_rate / 2:
            break
        x += np.sin(2 * np.pi * f * vibrato * t + rng.uniform(0, 2 * np.pi)) / h
    # syllable-rate AM keeps every frame above the VAD floor
    syllable = 0.55 + 0.45 * np.sin(2 * np.pi * rng.uniform(2.5, 4.0) * t)
    x *= syllable
    x -= x.mean()
    target = 10.0 ** (level_dbfs / 20.0)
    x *= target / np.sqrt(np.mean(x * x))
    return AudioBuffer(np.rint(np.clip(x, -1, 1) * 32767.0).astype(np.int16), clock.sample_rate)


def speech_for_text(text: str, clock: FrameClock | None = None) -> AudioBuffer:
    """Deterministic utterance audio derived from ``text`` alone.

    Stands in for pre-rendered question WAVs: the same text always yields
    the same waveform, with duration scaling in the word count.
    """
    clock = clock or FrameClock()
    words = max(1, len(text.split()))
    duration = min(12.0, 0.6 + 0.3 * words)
    seed = zlib.crc32(text.encode("utf-8"))
    return speech_like(duration, clock, seed=seed)
