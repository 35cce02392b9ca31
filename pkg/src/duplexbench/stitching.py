"""Turn-level dialog stitching onto two aligned mono channels.

Turns are laid out sequentially: turn k+1 starts at end(turn k) plus
pad_after(k). A negative pad slides the next turn backward, producing a
temporal overlap (barge-in). Channels are never mixed; each turn's audio
is copied onto its own speaker's channel.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, FrameClock, pad_to_frame, read_wav
from .errors import InvalidArgument, StitchError

DEFAULT_PAD_AFTER = 0.2  # natural inter-turn gap, seconds


class Speaker(enum.Enum):
    USER = "user"
    AGENT = "agent"


@dataclass
class Turn:
    speaker: Speaker
    audio: AudioBuffer
    transcript: str = ""
    pad_after: float = DEFAULT_PAD_AFTER

    def __post_init__(self):
        if len(self.audio) == 0:
            raise InvalidArgument("turn audio must be non-empty")

    @property
    def duration(self) -> float:
        return self.audio.duration


@dataclass
class StitchedDialog:
    user_channel: AudioBuffer
    agent_channel: AudioBuffer
    alignment: list[tuple[Speaker, float, float]]
    overlaps: list[tuple[float, float]] = field(default_factory=list)

    @property
    def duration(self) -> float:
        return self.user_channel.duration

    def channel(self, speaker: Speaker) -> AudioBuffer:
        return self.user_channel if speaker is Speaker.USER else self.agent_channel

    def save(self, out_dir, stem: str = "dialog") -> dict:
        """Write both channels as WAVs plus a JSON alignment sidecar."""
        from .audio import write_wav

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        user_path = out_dir / f"{stem}.user.wav"
        agent_path = out_dir / f"{stem}.agent.wav"
        write_wav(user_path, self.user_channel)
        write_wav(agent_path, self.agent_channel)
        sidecar = {
            "user_wav": user_path.name,
            "agent_wav": agent_path.name,
            "alignment": [
                {"speaker": s.value, "start": a, "end": b} for s, a, b in self.alignment
            ],
            "overlaps": [{"start": a, "end": b} for a, b in self.overlaps],
        }
        sidecar_path = out_dir / f"{stem}.alignment.json"
        sidecar_path.write_text(json.dumps(sidecar, indent=1))
        return sidecar


def stitch(turns: list[Turn], clock: FrameClock | None = None) -> StitchedDialog:
    """Lay out turns on a shared timeline and render both channels."""
    clock = clock or FrameClock()
    if not turns:
        raise InvalidArgument("turn list must be non-empty")
    rate = clock.sample_rate
    for t in turns:
        if t.audio.sample_rate != rate:
            raise InvalidArgument("all turns must match the clock sample rate")

    for i in range(len(turns) - 1):
        pad = turns[i].pad_after
        if pad < 0 and -pad >= turns[i + 1].duration:
            raise InvalidArgument(
                f"turn {i} pad_after {pad} swallows the whole next turn "
                f"({turns[i + 1].duration:.3f} s)"
            )

    # Plan in integer samples to keep placement exact.
    starts: list[int] = []
    ends: list[int] = []
    cursor = 0
    for i, t in enumerate(turns):
        if i > 0:
            cursor = ends[i - 1] + round(turns[i - 1].pad_after * rate)
        if cursor < 0:
            raise StitchError(f"turn {i} would start at a negative time")
        starts.append(cursor)
        ends.append(cursor + len(t.audio))

    # Same-speaker turns may never co-occupy the timeline.
    last_end: dict[Speaker, int] = {}
    for i, t in enumerate(turns):
        prev = last_end.get(t.speaker, -1)
        if starts[i] < prev:
            raise StitchError(
                f"turn {i} overlaps an earlier {t.speaker.value} turn by "
                f"{(prev - starts[i]) / rate:.3f} s"
            )
        last_end[t.speaker] = max(prev, ends[i])

    total = max(ends)
    user = np.zeros(total, dtype=np.int16)
    agent = np.zeros(total, dtype=np.int16)
    for i, t in enumerate(turns):
        lane = user if t.speaker is Speaker.USER else agent
        lane[starts[i] : ends[i]] = t.audio.samples

    # Overlaps are cross-channel co-activity windows created by negative pads.
    overlaps: list[tuple[float, float]] = []
    for i in range(1, len(turns)):
        if turns[i].speaker is turns[i - 1].speaker:
            continue
        lo = max(starts[i], starts[i - 1])
        hi = min(ends[i], ends[i - 1])
        if hi > lo:
            overlaps.append((lo / rate, hi / rate))

    user_buf = pad_to_frame(AudioBuffer(user, rate), clock)
    agent_buf = pad_to_frame(AudioBuffer(agent, rate), clock)
    alignment = [
        (t.speaker, starts[i] / rate, ends[i] / rate) for i, t in enumerate(turns)
    ]
    return StitchedDialog(user_buf, agent_buf, alignment, overlaps)


def load_script(path, clock: FrameClock | None = None) -> list[Turn]:
    """Read a TOML dialog script into a turn list.

    Expected shape::

        [[turns]]
        speaker = "user"        # or "agent"
        wav = "q1.wav"           # path relative to the script, or
        text = "hello there"     # synthesize placeholder speech instead
        transcript = "hello"     # optional, defaults to text
        pad_after = 0.2          # optional, seconds, may be negative
    """
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:  # pragma: no cover - py310 fallback
        import tomli as tomllib

    clock = clock or FrameClock()
    path = Path(path)
    with open(path, "rb") as f:
        doc = tomllib.load(f)
    raw_turns = doc.get("turns")
    if not raw_turns:
        raise InvalidArgument(f"{path}: script has no [[turns]] entries")

    turns = []
    for i, item in enumerate(raw_turns):
        try:
            speaker = Speaker(item["speaker"])
        except (KeyError, ValueError) as e:
            raise InvalidArgument(f"{path}: turn {i}: bad or missing speaker") from e
        if "wav" in item:
            audio = read_wav(path.parent / item["wav"])
        elif "text" in item:
            from .audio import speech_for_text

            audio = speech_for_text(item["text"], clock)
        else:
            raise InvalidArgument(f"{path}: turn {i}: needs either 'wav' or 'text'")
        turns.append(
            Turn(
                speaker,
                audio,
                transcript=item.get("transcript", item.get("text", "")),
                pad_after=float(item.get("pad_after", DEFAULT_PAD_AFTER)),
            )
        )
    return turns
