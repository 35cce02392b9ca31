"""Deterministic toy audio codec.

Stands in for a neural codec so token streams can be built and tested
without model weights. Codebook 1 quantizes the per-frame log energy (the
"semantic" stand-in); codebooks 2..K quantize spectral band levels
relative to the frame total. Quantization is idempotent: re-encoding a
decoded frame reproduces the tokens exactly.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioBuffer, FrameClock
from .errors import DecodeError, InvalidArgument

DEFAULT_CODEBOOKS = 8
AUDIO_VOCAB = 64  # token ids are always < AUDIO_VOCAB; delimiters live above

_ENERGY_BINS = 64       # bin 0 = silence
_BAND_BINS = 16         # bin 0 = band off
_ENERGY_LO = -48.0      # dBFS floor; quieter frames collapse to silence
_BAND_LO = -24.0        # dB relative to frame total
_BAND_OFF = -30.0       # below this relative level a band reads as off


class ToyCodec:
    """Frame-wise energy/band quantizer with an exact decode/encode loop."""

    def __init__(self, clock: FrameClock | None = None, codebooks: int = DEFAULT_CODEBOOKS):
        if codebooks < 1:
            raise InvalidArgument(f"need at least 1 codebook, got {codebooks}")
        self.clock = clock or FrameClock()
        self.codebooks = codebooks
        n = self.clock.samples_per_frame
        # bands partition rFFT bins 1..n/2 (DC dropped, Nyquist kept)
        usable = np.arange(1, n // 2 + 1)
        n_bands = max(codebooks - 1, 1)
        self._bands = np.array_split(usable, n_bands)
        self._centers = np.array([band[len(band) // 2] for band in self._bands])
        # decode must keep the worst-case multi-band peak inside full scale
        headroom_db = 20.0 * np.log10(np.sqrt(2.0 * n_bands)) + 1.0
        self._energy_hi = -headroom_db
        self._energy_step = (self._energy_hi - _ENERGY_LO) / (_ENERGY_BINS - 1)
        self._band_step = (0.0 - _BAND_LO) / (_BAND_BINS - 1)

    @property
    def silence_tokens(self) -> np.ndarray:
        """Token vector every silent frame encodes to."""
        return np.zeros(self.codebooks, dtype=np.int64)

    # -- per-frame analysis ------------------------------------------------

    def _band_power(self, frame: np.ndarray) -> np.ndarray:
        x = frame.astype(np.float64) / 32768.0
        x = x - x.mean()
        spec = np.abs(np.fft.rfft(x)) ** 2
        n = len(frame)
        p = 2.0 * spec / (n * n)
        return np.array([p[band].sum() for band in self._bands])

    def _q_energy(self, total_db: float) -> int:
        if not np.isfinite(total_db) or total_db < _ENERGY_LO:
            return 0
        i = int((total_db - _ENERGY_LO) / self._energy_step)
        return min(max(i, 0), _ENERGY_BINS - 2) + 1

    def energy_center(self, token: int) -> float:
        """Linear amplitude at the center of an energy bin, in dBFS."""
        return _ENERGY_LO + (token - 0.5) * self._energy_step

    def _q_band(self, rel_db: float) -> int:
        if not np.isfinite(rel_db) or rel_db < _BAND_OFF:
            return 0
        i = int((rel_db - _BAND_LO) / self._band_step)
        return min(max(i, 0), _BAND_BINS - 2) + 1

    def _band_center(self, token: int) -> float:
        return _BAND_LO + (token - 0.5) * self._band_step

    # -- public API --------------------------------------------------------

    def encode(self, audio: AudioBuffer) -> np.ndarray:
        """Tokenize frame-aligned audio; shape (frames, K)."""
        if audio.sample_rate != self.clock.sample_rate:
            raise InvalidArgument(
                f"audio at {audio.sample_rate} Hz does not match clock "
                f"{self.clock.sample_rate} Hz"
            )
        n_frames = self.clock.frames_in(audio)
        spf = self.clock.samples_per_frame
        out = np.zeros((n_frames, self.codebooks), dtype=np.int64)
        for i in range(n_frames):
            frame = audio.samples[i * spf : (i + 1) * spf]
            power = self._band_power(frame)
            total = power.sum()
            if total <= 0:
                continue
            tok = self._q_energy(10.0 * np.log10(total))
            if tok == 0:
                continue
            out[i, 0] = tok
            if self.codebooks > 1:
                with np.errstate(divide="ignore"):
                    rel = 10.0 * np.log10(power / total)
                out[i, 1:] = [self._q_band(r) for r in rel]
        return out

    def decode(self, tokens: np.ndarray) -> AudioBuffer:
        """Synthesize audio whose re-encoding reproduces ``tokens``."""
        tokens = np.asarray(tokens)
        if tokens.ndim != 2 or tokens.shape[1] != self.codebooks:
            raise DecodeError(
                f"expected token shape (frames, {self.codebooks}), got {tokens.shape}"
            )
        if tokens.size and (tokens.min() < 0 or tokens[:, 0].max() >= _ENERGY_BINS):
            raise DecodeError("token id outside codebook range")
        if self.codebooks > 1 and tokens.size and tokens[:, 1:].max() >= _BAND_BINS:
            raise DecodeError("band token id outside codebook range")

        spf = self.clock.samples_per_frame
        n = np.arange(spf, dtype=np.float64)
        frames = []
        for row in tokens:
            if row[0] == 0:
                frames.append(np.zeros(spf))
                continue
            if self.codebooks > 1:
                amps = np.where(row[1:] > 0, 10.0 ** (np.array(
                    [self._band_center(t) for t in row[1:]]) / 20.0), 0.0)
            else:
                amps = np.array([1.0])
            x = np.zeros(spf)
            for center_bin, amp in zip(self._centers, amps):
                if amp > 0:
                    x += amp * np.sin(2.0 * np.pi * center_bin * n / spf)
            ms = (self._band_power_float(x)).sum()
            if ms > 0:
                target = 10.0 ** (self.energy_center(int(row[0])) / 20.0)
                x *= target / np.sqrt(ms)
            frames.append(x)
        pcm = np.concatenate(frames) if frames else np.zeros(0)
        pcm = np.clip(np.rint(pcm * 32768.0), -32768, 32767).astype(np.int16)
        return AudioBuffer(pcm, self.clock.sample_rate)

    def _band_power_float(self, x: np.ndarray) -> np.ndarray:
        x = x - x.mean()
        spec = np.abs(np.fft.rfft(x)) ** 2
        n = len(x)
        p = 2.0 * spec / (n * n)
        return np.array([p[band].sum() for band in self._bands])


def toy_encode(audio: AudioBuffer, clock: FrameClock, codebooks: int = DEFAULT_CODEBOOKS) -> np.ndarray:
    return ToyCodec(clock, codebooks).encode(audio)


def toy_decode(tokens: np.ndarray, clock: FrameClock, codebooks: int = DEFAULT_CODEBOOKS) -> AudioBuffer:
    return ToyCodec(clock, codebooks).decode(tokens)
