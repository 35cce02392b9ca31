"""Energy-based voice activity detection and turn-taking event extraction.

A frame is active when its RMS level in dBFS meets the threshold.
Post-processing bridges short inactive gaps first (hangover), then drops
active runs shorter than the minimum duration, so one-frame dips inside
speech never split or delete a segment.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, FrameClock, FULL_SCALE
from .errors import InvalidArgument
from .stitching import Speaker, StitchedDialog

DEFAULT_THRESHOLD_DBFS = -40.0
DEFAULT_HANGOVER_FRAMES = 2
DEFAULT_MIN_SPEECH_FRAMES = 2
DEFAULT_BACKCHANNEL_MAX_S = 1.0
DEFAULT_EVAL_WINDOW_S = 3.0

_SILENCE_DB = -200.0  # stand-in level for all-zero frames


class Category(enum.Enum):
    PAUSE = "pause"
    BACKCHANNEL = "backchannel"
    TURN_TAKING = "turn_taking"
    INTERRUPTION = "interruption"


@dataclass(frozen=True)
class VadParams:
    threshold_dbfs: float = DEFAULT_THRESHOLD_DBFS
    hangover_frames: int = DEFAULT_HANGOVER_FRAMES
    min_speech_frames: int = DEFAULT_MIN_SPEECH_FRAMES
    backchannel_max_s: float = DEFAULT_BACKCHANNEL_MAX_S
    eval_window_s: float = DEFAULT_EVAL_WINDOW_S

    def __post_init__(self):
        if self.hangover_frames < 0 or self.min_speech_frames < 0:
            raise InvalidArgument("hangover and min_speech must be non-negative")
        if self.eval_window_s <= 0:
            raise InvalidArgument("eval window must be positive")


@dataclass(frozen=True)
class SpeechSegment:
    start: float
    end: float
    channel: Speaker
    mean_level: float

    def __post_init__(self):
        if self.end <= self.start:
            raise InvalidArgument("segment end must follow its start")

    @property
    def duration(self) -> float:
        return self.end - self.start


def frame_levels(audio: AudioBuffer, clock: FrameClock) -> np.ndarray:
    """Per-frame RMS level in dBFS; all-zero frames report -200."""
    n_frames = clock.frames_in(audio)
    if n_frames == 0:
        return np.zeros(0)
    x = audio.samples.astype(np.float64).reshape(n_frames, clock.samples_per_frame)
    rms = np.sqrt(np.mean(x * x, axis=1))
    out = np.full(n_frames, _SILENCE_DB)
    nz = rms > 0
    out[nz] = 20.0 * np.log10(rms[nz] / FULL_SCALE)
    return out


def _active_mask(levels: np.ndarray, params: VadParams) -> np.ndarray:
    active = levels >= params.threshold_dbfs
    # Bridge inactive gaps shorter than the hangover.
    if params.hangover_frames > 1:
        runs = _runs(~active)
        for s, e in runs:
            interior = s > 0 and e < len(active)
            if interior and (e - s) < params.hangover_frames:
                active[s:e] = True
    # Drop active runs shorter than the minimum.
    for s, e in _runs(active):
        if (e - s) < params.min_speech_frames:
            active[s:e] = False
    return active


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) index ranges of True runs."""
    if len(mask) == 0:
        return []
    padded = np.concatenate([[False], mask, [False]])
    diff = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def vad(
    audio: AudioBuffer,
    clock: FrameClock | None = None,
    params: VadParams | None = None,
    channel: Speaker = Speaker.AGENT,
) -> list[SpeechSegment]:
    """Detect speech segments on one channel."""
    clock = clock or FrameClock()
    params = params or VadParams()
    levels = frame_levels(audio, clock)
    if len(levels) == 0:
        return []
    active = _active_mask(levels, params)
    dt = 1.0 / clock.frame_rate
    segments = []
    for s, e in _runs(active):
        segments.append(
            SpeechSegment(s * dt, e * dt, channel, float(np.mean(levels[s:e])))
        )
    return segments


@dataclass(frozen=True)
class TrialMeta:
    """Per-trial event-extraction metadata (the trial's sidecar)."""

    category: Category
    anchor_time: float
    eval_window_s: float | None = None  # None: category default
    vad_overrides: dict = field(default_factory=dict)

    def resolved_params(self, base: VadParams | None = None) -> VadParams:
        base = base or VadParams()
        if self.vad_overrides:
            try:
                base = replace(base, **self.vad_overrides)
            except TypeError as e:
                raise InvalidArgument(f"unknown vad override: {e}") from e
        if self.eval_window_s is not None:
            base = replace(base, eval_window_s=self.eval_window_s)
        return base

    def save(self, path) -> None:
        doc = {
            "category": self.category.value,
            "anchor_time": self.anchor_time,
        }
        if self.eval_window_s is not None:
            doc["eval_window_s"] = self.eval_window_s
        if self.vad_overrides:
            doc["vad"] = self.vad_overrides
        Path(path).write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, path) -> "TrialMeta":
        doc = json.loads(Path(path).read_text())
        try:
            category = Category(doc["category"])
            anchor = float(doc["anchor_time"])
        except (KeyError, ValueError) as e:
            raise InvalidArgument(f"{path}: missing or bad anchor metadata") from e
        return cls(
            category,
            anchor,
            doc.get("eval_window_s"),
            doc.get("vad", {}),
        )


@dataclass
class TrialEvents:
    category: Category
    anchor_time: float
    eval_window_s: float
    agent_onsets: list[float]
    agent_segments: list[SpeechSegment]
    user_segments: list[SpeechSegment]
    backchannels: list[SpeechSegment] = field(default_factory=list)

    @property
    def took_over(self) -> bool:
        return len(self.agent_onsets) > 0

    @property
    def first_onset_delay(self) -> float | None:
        if not self.agent_onsets:
            return None
        return min(self.agent_onsets) - self.anchor_time


def extract_events(
    trial: StitchedDialog,
    meta: TrialMeta,
    clock: FrameClock | None = None,
    params: VadParams | None = None,
) -> TrialEvents:
    """Run VAD on both channels and collect events around the anchor.

    An agent segment contributes an onset when it begins inside
    [anchor, anchor + window]; a segment already running at the anchor
    counts as an onset at the anchor itself (the agent holds the floor
    through the window).
    """
    clock = clock or FrameClock()
    params = meta.resolved_params(params)
    if meta.anchor_time < 0 or meta.anchor_time > trial.duration:
        raise InvalidArgument(
            f"anchor {meta.anchor_time} outside trial of {trial.duration:.2f} s"
        )
    agent_segments = vad(trial.agent_channel, clock, params, Speaker.AGENT)
    user_segments = vad(trial.user_channel, clock, params, Speaker.USER)

    lo = meta.anchor_time
    hi = meta.anchor_time + params.eval_window_s
    onsets = []
    for seg in agent_segments:
        if lo <= seg.start <= hi:
            onsets.append(seg.start)
        elif seg.start < lo < seg.end:
            onsets.append(lo)

    backchannels = []
    for seg in agent_segments:
        if seg.duration > params.backchannel_max_s:
            continue
        inside_user = any(
            u.start <= seg.start < u.end for u in user_segments
        )
        if inside_user:
            backchannels.append(seg)

    return TrialEvents(
        meta.category,
        meta.anchor_time,
        params.eval_window_s,
        sorted(onsets),
        agent_segments,
        user_segments,
        backchannels,
    )
