"""Frame-aligned multi-stream container and the token vocabulary.

A :class:`StreamSet` keeps three lanes in lockstep: user audio, agent
audio, and per-frame agent tokens (one text token plus K audio tokens,
each with a loss weight).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, FrameClock
from .errors import InvalidArgument

TEXT_PAD = 0  # reserved text token id for "no text this frame"


@dataclass
class TokenFrame:
    """Agent-lane tokens and loss weights for one frame."""

    text_token: int
    audio_tokens: np.ndarray
    loss_weight_text: float = 0.0
    loss_weight_audio: np.ndarray | None = None

    def __post_init__(self):
        self.audio_tokens = np.asarray(self.audio_tokens, dtype=np.int64)
        if self.audio_tokens.ndim != 1 or len(self.audio_tokens) < 1:
            raise InvalidArgument("audio_tokens must be a 1-D vector with K >= 1")
        if self.loss_weight_audio is None:
            self.loss_weight_audio = np.zeros(len(self.audio_tokens))
        self.loss_weight_audio = np.asarray(self.loss_weight_audio, dtype=np.float64)
        if self.loss_weight_audio.shape != self.audio_tokens.shape:
            raise InvalidArgument("loss_weight_audio must have one weight per codebook")
        if self.loss_weight_text < 0 or np.any(self.loss_weight_audio < 0):
            raise InvalidArgument("loss weights must be non-negative")

    @property
    def codebooks(self) -> int:
        return len(self.audio_tokens)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TokenFrame)
            and self.text_token == other.text_token
            and np.array_equal(self.audio_tokens, other.audio_tokens)
            and self.loss_weight_text == other.loss_weight_text
            and np.array_equal(self.loss_weight_audio, other.loss_weight_audio)
        )


@dataclass
class StreamSet:
    """Equal-length user-audio / agent-audio / agent-token lanes."""

    user_audio: AudioBuffer
    agent_audio: AudioBuffer
    agent_frames: list[TokenFrame]
    clock: FrameClock = field(default_factory=FrameClock)

    def __post_init__(self):
        self._validate()

    def _validate(self):
        if self.user_audio.sample_rate != self.agent_audio.sample_rate:
            raise InvalidArgument("audio lanes must share a sample rate")
        if self.user_audio.sample_rate != self.clock.sample_rate:
            raise InvalidArgument("audio lanes must match the clock sample rate")
        if len(self.user_audio) != len(self.agent_audio):
            raise InvalidArgument(
                f"lane length mismatch: user {len(self.user_audio)} vs "
                f"agent {len(self.agent_audio)} samples"
            )
        n_frames = self.clock.frames_in(self.user_audio)
        if n_frames != len(self.agent_frames):
            raise InvalidArgument(
                f"lane length mismatch: {n_frames} audio frames vs "
                f"{len(self.agent_frames)} token frames"
            )
        ks = {f.codebooks for f in self.agent_frames}
        if len(ks) > 1:
            raise InvalidArgument(f"inconsistent codebook counts across frames: {sorted(ks)}")

    @property
    def num_frames(self) -> int:
        return len(self.agent_frames)

    @property
    def codebooks(self) -> int:
        if not self.agent_frames:
            raise InvalidArgument("empty stream has no codebook count")
        return self.agent_frames[0].codebooks

    def text_tokens(self) -> np.ndarray:
        return np.array([f.text_token for f in self.agent_frames], dtype=np.int64)

    def audio_tokens(self) -> np.ndarray:
        if not self.agent_frames:
            return np.zeros((0, 0), dtype=np.int64)
        return np.stack([f.audio_tokens for f in self.agent_frames])

    def append(self, user_samples: np.ndarray, agent_samples: np.ndarray, frame: TokenFrame) -> None:
        """Append one frame to all three lanes atomically."""
        spf = self.clock.samples_per_frame
        if len(user_samples) != spf or len(agent_samples) != spf:
            raise InvalidArgument(f"append expects exactly {spf} samples per lane")
        if self.agent_frames and frame.codebooks != self.codebooks:
            raise InvalidArgument("appended frame has a different codebook count")
        self.user_audio = AudioBuffer(
            np.concatenate([self.user_audio.samples, np.asarray(user_samples, dtype=np.int16)]),
            self.clock.sample_rate,
        )
        self.agent_audio = AudioBuffer(
            np.concatenate([self.agent_audio.samples, np.asarray(agent_samples, dtype=np.int16)]),
            self.clock.sample_rate,
        )
        self.agent_frames.append(frame)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StreamSet)
            and self.clock == other.clock
            and self.user_audio == other.user_audio
            and self.agent_audio == other.agent_audio
            and self.agent_frames == other.agent_frames
        )

    @staticmethod
    def empty(clock: FrameClock | None = None) -> "StreamSet":
        clock = clock or FrameClock()
        return StreamSet(
            AudioBuffer.silence(0, clock.sample_rate),
            AudioBuffer.silence(0, clock.sample_rate),
            [],
            clock,
        )


class Vocabulary:
    """Token id <-> string table for the agent text lane.

    Id 0 is always the PAD entry. Serialized as tab-separated
    ``id<TAB>string`` lines so judges can read transcripts without ASR.
    """

    PAD_STRING = "<pad>"

    def __init__(self, words: list[str] | None = None):
        self._id_to_word: dict[int, str] = {TEXT_PAD: self.PAD_STRING}
        self._word_to_id: dict[str, int] = {self.PAD_STRING: TEXT_PAD}
        for w in words or []:
            self.add(w)

    def add(self, word: str) -> int:
        if word in self._word_to_id:
            return self._word_to_id[word]
        idx = len(self._id_to_word)
        self._id_to_word[idx] = word
        self._word_to_id[word] = idx
        return idx

    def __len__(self) -> int:
        return len(self._id_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self._word_to_id

    def encode(self, text: str) -> list[int]:
        """Whitespace-tokenize, growing the table as needed."""
        return [self.add(w) for w in text.split()]

    def decode(self, ids) -> str:
        words = []
        for i in ids:
            i = int(i)
            if i == TEXT_PAD:
                continue
            if i not in self._id_to_word:
                raise InvalidArgument(f"unknown text token id {i}")
            words.append(self._id_to_word[i])
        return " ".join(words)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for idx in sorted(self._id_to_word):
                f.write(f"{idx}\t{self._id_to_word[idx]}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        vocab = cls()
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                idx_s, word = line.split("\t", 1)
                idx = int(idx_s)
                if idx == TEXT_PAD:
                    continue
                vocab._id_to_word[idx] = word
                vocab._word_to_id[word] = idx
        return vocab
