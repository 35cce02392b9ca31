"""Turn-taking metrics and the reference speaker-similarity embedder.

All metrics are pure functions of extracted trial events or raw audio.
The Jensen-Shannon divergence uses base-2 logarithms so its range is
exactly [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, FULL_SCALE
from .errors import InvalidArgument, UndefinedMetric
from .vad import Category, TrialEvents

BACKCHANNEL_HIST_BINS = 10


@dataclass
class CategoryMetrics:
    """Aggregated per-category numbers, one row of the report table."""

    category: Category
    tor: float
    latency_mean: float | None
    backchannel_freq: float | None
    jsd: float | None
    n_trials: int


@dataclass(frozen=True)
class SpeakerSim:
    similarity: float
    embedder_id: str


def tor(trials: list[TrialEvents]) -> float:
    """Fraction of trials where the agent started speaking in the window."""
    if not trials:
        raise InvalidArgument("tor needs at least one trial")
    cats = {t.category for t in trials}
    if len(cats) > 1:
        raise InvalidArgument(f"tor expects a single category, got {sorted(c.value for c in cats)}")
    return sum(t.took_over for t in trials) / len(trials)


def latency(trials: list[TrialEvents]) -> float:
    """Mean (first onset - anchor) over trials that have an onset."""
    if not trials:
        raise InvalidArgument("latency needs at least one trial")
    delays = [t.first_onset_delay for t in trials if t.took_over]
    if not delays:
        raise UndefinedMetric("no trial produced an agent onset")
    return float(np.mean(delays))


def backchannel_stats(
    trials: list[TrialEvents], bins: int = BACKCHANNEL_HIST_BINS
) -> tuple[float, np.ndarray]:
    """Backchannel rate per user-speech second plus an onset histogram.

    Onset positions are normalized to [0, 1] within the user utterance
    the backchannel lands in; the histogram sums to 1 unless there are
    no backchannels at all, in which case it is all-zero.
    """
    if not trials:
        raise InvalidArgument("backchannel_stats needs at least one trial")
    user_seconds = sum(
        seg.duration for t in trials for seg in t.user_segments
    )
    if user_seconds <= 0:
        raise UndefinedMetric("no user speech time to normalize against")

    hist = np.zeros(bins)
    count = 0
    for t in trials:
        for bc in t.backchannels:
            host = next(
                (u for u in t.user_segments if u.start <= bc.start < u.end), None
            )
            if host is None:
                continue
            rel = (bc.start - host.start) / host.duration
            idx = min(int(rel * bins), bins - 1)
            hist[idx] += 1
            count += 1
    if count:
        hist /= count
    return count / user_seconds, hist


def jsd(p, q) -> float:
    """Base-2 Jensen-Shannon divergence between two histograms."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidArgument("histograms must be 1-D and the same length")
    if np.any(p < 0) or np.any(q < 0):
        raise InvalidArgument("histograms cannot carry negative mass")
    ps, qs = p.sum(), q.sum()
    if ps == 0 and qs == 0:
        return 0.0
    if ps == 0 or qs == 0:
        raise InvalidArgument("one histogram is all-zero and the other is not")
    p = p / ps
    q = q / qs
    m = 0.5 * (p + q)

    def _kl(a, b):
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(a[nz] / b[nz])))

    return 0.5 * _kl(p, m) + 0.5 * _kl(q, m)


class LogMelEmbedder:
    """Log-mel summary embedding: per-band mean and std over time.

    Not a speaker-verification model; a deterministic stand-in with the
    right interface, level-invariant by mean log-energy subtraction.
    """

    name = "logmel-meanstd-v1"

    def __init__(self, n_mels: int = 40, win: int = 600, hop: int = 240):
        self.n_mels = n_mels
        self.win = win
        self.hop = hop

    @property
    def dim(self) -> int:
        return 2 * self.n_mels

    def _mel_filterbank(self, sample_rate: int, n_fft: int) -> np.ndarray:
        def hz_to_mel(f):
            return 2595.0 * np.log10(1.0 + f / 700.0)

        def mel_to_hz(m):
            return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

        n_bins = n_fft // 2 + 1
        mel_pts = np.linspace(
            hz_to_mel(0.0), hz_to_mel(sample_rate / 2), self.n_mels + 2
        )
        hz_pts = mel_to_hz(mel_pts)
        bin_pts = hz_pts / (sample_rate / 2) * (n_bins - 1)
        fb = np.zeros((self.n_mels, n_bins))
        for i in range(self.n_mels):
            lo, mid, hi = bin_pts[i], bin_pts[i + 1], bin_pts[i + 2]
            bins = np.arange(n_bins)
            up = (bins - lo) / max(mid - lo, 1e-9)
            down = (hi - bins) / max(hi - mid, 1e-9)
            fb[i] = np.clip(np.minimum(up, down), 0.0, None)
        return fb

    def embed(self, audio: AudioBuffer) -> np.ndarray:
        if audio.duration < 1.0:
            raise InvalidArgument("embedder needs at least 1 s of audio")
        x = audio.samples.astype(np.float64) / FULL_SCALE
        n = (len(x) - self.win) // self.hop + 1
        window = np.hanning(self.win)
        idx = np.arange(self.win)[None, :] + self.hop * np.arange(n)[:, None]
        frames = x[idx] * window
        spec = np.abs(np.fft.rfft(frames, axis=1)) ** 2
        fb = self._mel_filterbank(audio.sample_rate, self.win)
        mel = spec @ fb.T
        peak = mel.max()
        if peak <= 0:
            return np.zeros(self.dim)
        logmel = np.log10(np.maximum(mel, 1e-10 * peak))
        logmel = logmel - logmel.mean()  # level invariance
        return np.concatenate([logmel.mean(axis=0), logmel.std(axis=0)])


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise UndefinedMetric("cosine of a zero-norm embedding is undefined")
    return float(np.dot(a, b) / (na * nb))


def speaker_similarity(
    prompt_voice: AudioBuffer, agent_speech: AudioBuffer, embedder=None
) -> SpeakerSim:
    """Cosine similarity between voice-prompt and agent-speech embeddings."""
    embedder = embedder or LogMelEmbedder()
    sim = cosine(embedder.embed(prompt_voice), embedder.embed(agent_speech))
    return SpeakerSim(sim, getattr(embedder, "name", type(embedder).__name__))


def category_metrics(
    category: Category,
    trials: list[TrialEvents],
    reference_hist: np.ndarray | None = None,
) -> CategoryMetrics:
    """Fold one category's trials into a report row.

    Latency is None when no trial produced an onset; backchannel fields
    are only filled for the BACKCHANNEL category, with JSD computed
    against the supplied reference histogram when one is given.
    """
    t = tor(trials)
    try:
        lat = latency(trials)
    except UndefinedMetric:
        lat = None
    freq = None
    div = None
    if category is Category.BACKCHANNEL:
        try:
            freq, hist = backchannel_stats(trials)
        except UndefinedMetric:
            freq, hist = None, None
        if hist is not None and reference_hist is not None:
            div = jsd(hist, reference_hist)
    return CategoryMetrics(category, t, lat, freq, div, len(trials))


def save_embeddings(path, vectors: dict[str, np.ndarray]) -> None:
    """Write embeddings as ``utt_id v1 v2 ...`` lines."""
    with open(path, "w", encoding="utf-8") as f:
        for utt_id in sorted(vectors):
            vals = " ".join(repr(float(v)) for v in vectors[utt_id])
            f.write(f"{utt_id} {vals}\n")


def load_embeddings(path) -> dict[str, np.ndarray]:
    """Read embeddings written by :func:`save_embeddings` (or externally)."""
    out: dict[str, np.ndarray] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        parts = line.split()
        out[parts[0]] = np.array([float(v) for v in parts[1:]])
    return out
