"""Hybrid system-prompt assembly and the training loss-weight mask.

A hybrid prompt is a StreamSet prefix made of two concatenated segments
plus one delimiter frame:

* voice segment: the agent voice example, tokenized with the toy codec,
  with the text lane padded;
* text segment: the role description at one token per frame, with the
  audio lane silent.

The user lane across the whole prompt is a 440 Hz sine. All prompt
frames carry zero loss weight.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, FrameClock, gen_sine
from .codec import AUDIO_VOCAB, ToyCodec
from .errors import InvalidArgument
from .streams import TEXT_PAD, StreamSet, TokenFrame

USER_SINE_HZ = 440.0
WEIGHT_PROMPT = 0.0
WEIGHT_TEXT_PAD = 0.3
WEIGHT_TEXT_REAL = 1.0
WEIGHT_AUDIO_SEMANTIC = 1.0
WEIGHT_AUDIO_OTHER = 0.02

VOICE_FIRST = "voice-first"
TEXT_FIRST = "text-first"


@dataclass(frozen=True)
class HybridPromptSpec:
    """Inputs for one hybrid prompt."""

    voice_sample: AudioBuffer
    role_text: tuple[int, ...] = ()
    order: str = VOICE_FIRST
    delimiter_text_id: int = -1  # -1: auto, one past the largest role token
    delimiter_audio_id: int = AUDIO_VOCAB

    def __post_init__(self):
        if self.order not in (VOICE_FIRST, TEXT_FIRST):
            raise InvalidArgument(f"order must be {VOICE_FIRST!r} or {TEXT_FIRST!r}")
        object.__setattr__(self, "role_text", tuple(int(t) for t in self.role_text))

    def resolved_text_delimiter(self) -> int:
        if self.delimiter_text_id >= 0:
            return self.delimiter_text_id
        return (max(self.role_text) if self.role_text else TEXT_PAD) + 1


@dataclass
class HybridPrompt:
    """A built prompt: the stream prefix plus its span bookkeeping."""

    stream: StreamSet
    voice_span: tuple[int, int]
    text_span: tuple[int, int]
    delimiter_frame: int
    prefill_boundary: int

    @property
    def num_frames(self) -> int:
        return self.stream.num_frames

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HybridPrompt)
            and self.stream == other.stream
            and self.voice_span == other.voice_span
            and self.text_span == other.text_span
            and self.delimiter_frame == other.delimiter_frame
            and self.prefill_boundary == other.prefill_boundary
        )

    def save(self, path) -> None:
        save_prompt_bundle(self, path)

    @classmethod
    def load(cls, path) -> "HybridPrompt":
        return load_prompt_bundle(path)


def build_hybrid_prompt(
    spec: HybridPromptSpec,
    clock: FrameClock | None = None,
    codec: ToyCodec | None = None,
) -> HybridPrompt:
    """Assemble the prompt stream from a voice sample and role tokens.

    Prompt length is always voice frames + text tokens + 1 delimiter
    frame, for either segment order.
    """
    clock = clock or FrameClock()
    codec = codec or ToyCodec(clock)
    if len(spec.voice_sample) == 0:
        raise InvalidArgument("voice sample must be at least one frame long")
    if spec.voice_sample.sample_rate != clock.sample_rate:
        raise InvalidArgument("voice sample rate does not match the clock")
    voice_frames = clock.frames_in(spec.voice_sample)  # raises if not frame-aligned

    text_delim = spec.resolved_text_delimiter()
    audio_delim = spec.delimiter_audio_id
    if audio_delim < AUDIO_VOCAB:
        raise InvalidArgument("audio delimiter id must sit outside the codec vocabulary")
    for t in spec.role_text:
        if t in (text_delim,):
            raise InvalidArgument(f"role text contains reserved delimiter id {t}")
        if t < 0:
            raise InvalidArgument(f"role text contains negative token id {t}")

    spf = clock.samples_per_frame
    k = codec.codebooks
    voice_tokens = codec.encode(spec.voice_sample)
    silence_row = codec.silence_tokens
    zero_w = np.zeros(k)

    voice_seg = [
        TokenFrame(TEXT_PAD, voice_tokens[i], WEIGHT_PROMPT, zero_w)
        for i in range(voice_frames)
    ]
    text_seg = [
        TokenFrame(t, silence_row, WEIGHT_PROMPT, zero_w) for t in spec.role_text
    ]
    delim = TokenFrame(text_delim, np.full(k, audio_delim), WEIGHT_PROMPT, zero_w)

    n_text = len(spec.role_text)
    silence_pcm = AudioBuffer.silence((n_text + 1) * spf, clock.sample_rate)
    if spec.order == VOICE_FIRST:
        frames = voice_seg + text_seg + [delim]
        agent_pcm = AudioBuffer.concat([spec.voice_sample, silence_pcm])
        voice_span = (0, voice_frames)
        text_span = (voice_frames, voice_frames + n_text)
        prefill_boundary = voice_frames
    else:
        frames = text_seg + voice_seg + [delim]
        text_silence = AudioBuffer.silence(n_text * spf, clock.sample_rate)
        tail_silence = AudioBuffer.silence(spf, clock.sample_rate)
        agent_pcm = AudioBuffer.concat([text_silence, spec.voice_sample, tail_silence])
        text_span = (0, n_text)
        voice_span = (n_text, n_text + voice_frames)
        prefill_boundary = n_text

    total = len(frames)
    user_pcm = gen_sine(USER_SINE_HZ, total / clock.frame_rate, clock=clock)
    stream = StreamSet(user_pcm, agent_pcm, frames, clock)
    return HybridPrompt(stream, voice_span, text_span, total - 1, prefill_boundary)


@dataclass
class LossWeights:
    """Per-frame training weights: text (F,) and audio (F, K)."""

    text: np.ndarray
    audio: np.ndarray

    def distinct_values(self) -> set[float]:
        return set(np.unique(self.text)) | set(np.unique(self.audio))


def loss_weight_mask(stream: StreamSet, prompt: HybridPrompt) -> LossWeights:
    """Weights for every frame of ``stream`` given its prompt prefix.

    Prompt frames get all-zero weights. Dialogue frames get text weight
    0.3 when padded and 1.0 otherwise; the first audio codebook gets
    1.0 and the remaining codebooks 0.02.
    """
    p = prompt.stream
    n_p = p.num_frames
    if stream.num_frames < n_p:
        raise InvalidArgument("stream is shorter than its claimed prompt prefix")
    if stream.clock != p.clock:
        raise InvalidArgument("stream and prompt use different frame clocks")
    spf = stream.clock.samples_per_frame
    if stream.agent_frames[:n_p] != p.agent_frames or not np.array_equal(
        stream.user_audio.samples[: n_p * spf], p.user_audio.samples
    ):
        raise InvalidArgument("prompt is not a prefix of the stream")

    n = stream.num_frames
    k = stream.codebooks
    text_w = np.empty(n)
    audio_w = np.empty((n, k))
    text_w[:n_p] = WEIGHT_PROMPT
    audio_w[:n_p] = WEIGHT_PROMPT
    for i in range(n_p, n):
        f = stream.agent_frames[i]
        text_w[i] = WEIGHT_TEXT_PAD if f.text_token == TEXT_PAD else WEIGHT_TEXT_REAL
        audio_w[i, 0] = WEIGHT_AUDIO_SEMANTIC
        audio_w[i, 1:] = WEIGHT_AUDIO_OTHER
    return LossWeights(text_w, audio_w)


def _wav_bytes(buf: AudioBuffer) -> bytes:
    import wave

    bio = io.BytesIO()
    with wave.open(bio, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate)
        w.writeframes(buf.samples.tobytes())
    return bio.getvalue()


def _wav_from_bytes(data: bytes) -> AudioBuffer:
    import wave

    with wave.open(io.BytesIO(data), "rb") as w:
        rate = w.getframerate()
        pcm = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
    return AudioBuffer(pcm.astype(np.int16), rate)


def save_prompt_bundle(prompt: HybridPrompt, path) -> None:
    """Write a prompt as a zip of the two WAV lanes plus a JSON sidecar."""
    s = prompt.stream
    sidecar = {
        "voice_span": list(prompt.voice_span),
        "text_span": list(prompt.text_span),
        "delimiter_frame": prompt.delimiter_frame,
        "prefill_boundary": prompt.prefill_boundary,
        "frame_rate": s.clock.frame_rate,
        "sample_rate": s.clock.sample_rate,
        "tokens": {
            "text": [int(t) for t in s.text_tokens()],
            "audio": s.audio_tokens().tolist(),
        },
        "weights": {
            "text": [f.loss_weight_text for f in s.agent_frames],
            "audio": [f.loss_weight_audio.tolist() for f in s.agent_frames],
        },
    }
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as z:
        z.writestr("user.wav", _wav_bytes(s.user_audio))
        z.writestr("agent.wav", _wav_bytes(s.agent_audio))
        z.writestr("sidecar.json", json.dumps(sidecar, indent=1, sort_keys=True))


def load_prompt_bundle(path) -> HybridPrompt:
    """Rebuild a prompt bundle written by :func:`save_prompt_bundle`."""
    with zipfile.ZipFile(path) as z:
        user = _wav_from_bytes(z.read("user.wav"))
        agent = _wav_from_bytes(z.read("agent.wav"))
        sidecar = json.loads(z.read("sidecar.json"))
    clock = FrameClock(sidecar["frame_rate"], sidecar["sample_rate"])
    frames = [
        TokenFrame(t, np.asarray(a, dtype=np.int64), wt, np.asarray(wa))
        for t, a, wt, wa in zip(
            sidecar["tokens"]["text"],
            sidecar["tokens"]["audio"],
            sidecar["weights"]["text"],
            sidecar["weights"]["audio"],
        )
    ]
    stream = StreamSet(user, agent, frames, clock)
    return HybridPrompt(
        stream,
        tuple(sidecar["voice_span"]),
        tuple(sidecar["text_span"]),
        sidecar["delimiter_frame"],
        sidecar["prefill_boundary"],
    )
