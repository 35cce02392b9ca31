"""The duplex agent contract plus reference and oracle agents.

An agent consumes one user audio frame per step and must return exactly
one agent frame (audio plus an optional text token). Sessions are
strictly sequential: the prompt is delivered once, then frames arrive in
index order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, FrameClock, FULL_SCALE
from .errors import InvalidArgument, ProtocolError
from .prompts import HybridPrompt
from .streams import Vocabulary

DEFAULT_REALTIME_BUDGET_S = None  # unlimited unless configured


@dataclass(frozen=True)
class AgentFrameIn:
    frame_index: int
    samples: np.ndarray  # int16, samples_per_frame values

    def __post_init__(self):
        object.__setattr__(
            self, "samples", np.ascontiguousarray(self.samples, dtype=np.int16)
        )


@dataclass(frozen=True)
class AgentFrameOut:
    samples: np.ndarray  # int16, samples_per_frame values
    text_token: int | None = None  # None: PAD (no text this frame)

    def __post_init__(self):
        object.__setattr__(
            self, "samples", np.ascontiguousarray(self.samples, dtype=np.int16)
        )


class Agent:
    """Base class for in-process agents. Subclasses override step()."""

    def start(self, prompt: HybridPrompt | None, clock: FrameClock) -> None:
        """Called once before frame 0. Default: remember the clock."""
        self.clock = clock

    def step(self, frame: AgentFrameIn) -> AgentFrameOut:
        raise NotImplementedError

    def finish(self) -> None:
        """Called after the last frame. Default: nothing."""

    def vocabulary(self) -> Vocabulary | None:
        """Token table for this agent's text lane, when it emits one."""
        return None


class AgentSession:
    """Sequencing wrapper enforcing the session contract.

    Checks frame ordering, guards against use after close, and records
    wall-clock budget violations without failing the session.
    """

    def __init__(
        self,
        agent: Agent,
        clock: FrameClock | None = None,
        prompt: HybridPrompt | None = None,
        realtime_budget: float | None = DEFAULT_REALTIME_BUDGET_S,
    ):
        self.clock = clock or FrameClock()
        self.agent = agent
        self.realtime_budget = realtime_budget
        self.budget_violations: list[int] = []
        self._next_index = 0
        self._closed = False
        agent.start(prompt, self.clock)

    def step(self, frame: AgentFrameIn) -> AgentFrameOut:
        if self._closed:
            raise ProtocolError("session is closed")
        if frame.frame_index != self._next_index:
            raise ProtocolError(
                f"out-of-order frame: expected {self._next_index}, got {frame.frame_index}"
            )
        if len(frame.samples) != self.clock.samples_per_frame:
            raise ProtocolError(
                f"frame size mismatch: expected {self.clock.samples_per_frame}, "
                f"got {len(frame.samples)}"
            )
        t0 = time.monotonic()
        out = self.agent.step(frame)
        if self.realtime_budget is not None:
            if time.monotonic() - t0 > self.realtime_budget:
                self.budget_violations.append(frame.frame_index)
        if len(out.samples) != self.clock.samples_per_frame:
            raise ProtocolError("agent returned a wrong-size frame")
        self._next_index += 1
        return out

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self.agent.finish()

    @property
    def frames_processed(self) -> int:
        return self._next_index


class SilentAgent(Agent):
    """Never speaks, never emits text."""

    def step(self, frame: AgentFrameIn) -> AgentFrameOut:
        return AgentFrameOut(np.zeros(self.clock.samples_per_frame, dtype=np.int16))


class EchoAgent(Agent):
    """Replays the user frame from ``delay_frames`` steps earlier."""

    def __init__(self, delay_frames: int = 0):
        if delay_frames < 0:
            raise InvalidArgument("delay must be non-negative")
        self.delay_frames = delay_frames

    def start(self, prompt, clock):
        super().start(prompt, clock)
        self._history: list[np.ndarray] = []

    def step(self, frame: AgentFrameIn) -> AgentFrameOut:
        self._history.append(frame.samples)
        j = frame.frame_index - self.delay_frames
        if j < 0:
            return AgentFrameOut(np.zeros(self.clock.samples_per_frame, dtype=np.int16))
        return AgentFrameOut(self._history[j])


class ToneAgent(Agent):
    """Speaks continuously: a phase-continuous sine at a fixed level."""

    def __init__(self, freq: float = 220.0, amplitude: float = 0.3):
        self.freq = freq
        self.amplitude = amplitude

    def step(self, frame: AgentFrameIn) -> AgentFrameOut:
        spf = self.clock.samples_per_frame
        n = frame.frame_index * spf + np.arange(spf)
        x = self.amplitude * 32767.0 * np.sin(
            2.0 * np.pi * self.freq * n / self.clock.sample_rate
        )
        return AgentFrameOut(np.rint(x).astype(np.int16))


@dataclass
class _ScriptedState:
    active_run: int = 0
    play_pos: int | None = None  # frame offset into the response, when playing
    start_at: int | None = None  # absolute frame index of the scheduled response
    responses_started: int = 0


class ScriptedAgent(Agent):
    """Oracle agent: waits for the user turn to end, then replies.

    Turn end is declared on the first silent input frame after at least
    ``min_turn_frames`` active ones; the response begins exactly
    ``round(latency * frame_rate)`` frames later. With frame-multiple
    latencies the measured onset delay equals the configured latency,
    which is what the latency acceptance check leans on.
    """

    def __init__(
        self,
        latency_s: float = 0.4,
        response: AudioBuffer | None = None,
        transcript: str = "",
        vocab: Vocabulary | None = None,
        threshold_dbfs: float = -40.0,
        min_turn_frames: int = 2,
        max_responses: int | None = None,
    ):
        if latency_s < 0:
            raise InvalidArgument("latency must be non-negative")
        self.latency_s = latency_s
        self.response = response
        self.transcript = transcript
        self.vocab = vocab
        self.threshold_dbfs = threshold_dbfs
        self.min_turn_frames = min_turn_frames
        self.max_responses = max_responses

    def start(self, prompt, clock):
        super().start(prompt, clock)
        if self.response is None:
            from .audio import speech_like

            self.response = speech_like(1.6, clock, seed=7)
        if self.response.sample_rate != clock.sample_rate:
            raise InvalidArgument("response sample rate does not match the clock")
        spf = clock.samples_per_frame
        from .audio import pad_to_frame

        resp = pad_to_frame(self.response, clock)
        self._resp_frames = resp.samples.reshape(-1, spf)
        self._latency_frames = round(self.latency_s * clock.frame_rate)
        self._text_tokens: list[int] = []
        if self.transcript:
            self.vocab = self.vocab or Vocabulary()
            self._text_tokens = self.vocab.encode(self.transcript)
        self._st = _ScriptedState()

    def _frame_active(self, samples: np.ndarray) -> bool:
        x = samples.astype(np.float64)
        rms = float(np.sqrt(np.mean(x * x)))
        if rms <= 0:
            return False
        return 20.0 * np.log10(rms / FULL_SCALE) >= self.threshold_dbfs

    def step(self, frame: AgentFrameIn) -> AgentFrameOut:
        st = self._st
        spf = self.clock.samples_per_frame

        if self._frame_active(frame.samples):
            st.active_run += 1
        else:
            ended = st.active_run >= self.min_turn_frames
            st.active_run = 0
            idle = st.play_pos is None and st.start_at is None
            allowed = (
                self.max_responses is None or st.responses_started < self.max_responses
            )
            if ended and idle and allowed:
                st.start_at = frame.frame_index + self._latency_frames

        if st.start_at is not None and frame.frame_index >= st.start_at:
            st.play_pos = 0
            st.start_at = None
            st.responses_started += 1

        out = np.zeros(spf, dtype=np.int16)
        token: int | None = None
        if st.play_pos is not None:
            out = self._resp_frames[st.play_pos]
            if st.play_pos < len(self._text_tokens):
                token = self._text_tokens[st.play_pos]
            st.play_pos += 1
            if st.play_pos >= len(self._resp_frames):
                st.play_pos = None
        return AgentFrameOut(out, token)

    def vocabulary(self) -> Vocabulary | None:
        return self.vocab

    def decode_text(self, tokens: list[int]) -> str:
        if self.vocab is None:
            return ""
        return self.vocab.decode(tokens)


@dataclass
class SessionCapture:
    """Everything an agent produced over one streamed dialog."""

    agent_audio: AudioBuffer
    text_tokens: list[int]
    frames: int
    budget_violations: list[int] = field(default_factory=list)


def stream_audio(
    agent: Agent,
    user_audio: AudioBuffer,
    clock: FrameClock | None = None,
    prompt: HybridPrompt | None = None,
    realtime_budget: float | None = None,
) -> SessionCapture:
    """Feed a user channel through an agent frame-by-frame."""
    clock = clock or FrameClock()
    n_frames = clock.frames_in(user_audio)
    spf = clock.samples_per_frame
    session = AgentSession(agent, clock, prompt, realtime_budget)
    out = np.zeros(len(user_audio), dtype=np.int16)
    tokens: list[int] = []
    for i in range(n_frames):
        frame = AgentFrameIn(i, user_audio.samples[i * spf : (i + 1) * spf])
        reply = session.step(frame)
        out[i * spf : (i + 1) * spf] = reply.samples
        tokens.append(-1 if reply.text_token is None else reply.text_token)
    session.close()
    return SessionCapture(
        AudioBuffer(out, clock.sample_rate),
        tokens,
        n_frames,
        session.budget_violations,
    )
