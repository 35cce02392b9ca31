"""Trial execution, judging, and report emission.

A trial streams one question at an agent under a scenario-derived
hybrid prompt and captures the agent lanes until the agent has been
silent for a grace period (or a hard cap). Judging reads the agent text
lane; an HTTP chat-completions judge and a deterministic offline
keyword rubric are both provided.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import Agent, AgentFrameIn, AgentSession
from .audio import AudioBuffer, FrameClock, speech_for_text, speech_like
from .errors import (
    InvalidArgument,
    JudgeParseError,
    JudgeUnavailable,
    ProtocolError,
    TransportError,
)
from .prompts import HybridPromptSpec, build_hybrid_prompt
from .scenarios import Question, Scenario, TAG_LAYOUT
from .streams import Vocabulary
from .vad import Category, TrialEvents, TrialMeta, VadParams, extract_events
from .stitching import Speaker, StitchedDialog

TRIAL_CAP_S = 30.0
END_OF_SPEECH_GRACE_S = 2.0
RUBRIC_VERSION = "keyword-rubric-v1"
JUDGE_RETRIES = 3


@dataclass
class RunConfig:
    sample_rate: int = 24000
    frame_rate: float = 12.5
    codebooks: int = 8
    vad: VadParams = field(default_factory=VadParams)
    trial_cap_s: float = TRIAL_CAP_S
    grace_s: float = END_OF_SPEECH_GRACE_S
    jobs: int = 1
    judge_endpoint: str | None = None
    judge_api_key: str | None = None
    judge_model: str = "judge"
    out_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        self.clock = FrameClock(self.frame_rate, self.sample_rate)  # validates divisibility
        if self.jobs < 1:
            raise InvalidArgument("jobs must be >= 1")
        if self.codebooks < 1:
            raise InvalidArgument("codebooks must be >= 1")


@dataclass
class TrialResult:
    scenario_id: str
    question_id: str
    tag: str
    transcript: str
    text_tokens: list[int]
    events: TrialEvents | None
    agent_audio: AudioBuffer | None = None
    audio_ref: str | None = None
    judge_score: int | None = None
    frame_time_mean: float = 0.0
    frame_time_max: float = 0.0
    truncated: bool = False
    failed: bool = False
    error: str | None = None

    def __post_init__(self):
        if self.judge_score is not None and not 1 <= self.judge_score <= 5:
            raise InvalidArgument("judge score must be in [1, 5]")


def _frame_active(samples: np.ndarray, threshold_dbfs: float) -> bool:
    x = samples.astype(np.float64)
    rms = float(np.sqrt(np.mean(x * x)))
    return rms > 0 and 20.0 * np.log10(rms / 32768.0) >= threshold_dbfs


def question_audio(question: Question, clock: FrameClock, base_dir=None) -> AudioBuffer:
    """The question WAV when present, synthesized placeholder speech otherwise."""
    if question.utterance_wav:
        from .audio import read_wav

        path = Path(question.utterance_wav)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return read_wav(path)
    return speech_for_text(question.utterance_text, clock)


def scenario_prompt_spec(
    scenario: Scenario, vocab: Vocabulary, clock: FrameClock
) -> HybridPromptSpec:
    """Deterministic per-scenario voice sample + tokenized context."""
    seed = sum(scenario.scenario_id.encode()) % 100000
    voice = speech_like(2.0, clock, seed=seed)
    return HybridPromptSpec(voice, tuple(vocab.encode(scenario.context)))


def run_trial(
    scenario: Scenario,
    question: Question,
    agent: Agent,
    prompt_spec: HybridPromptSpec | None = None,
    config: RunConfig | None = None,
    vocab: Vocabulary | None = None,
    scenario_dir=None,
) -> TrialResult:
    """Stream one question at the agent and extract events.

    The user lane carries the question audio then silence. Capture stops
    once the agent has spoken and then stayed silent for the grace
    period, or at the cap (sets ``truncated``), or, if the agent never
    speaks, at question end + evaluation window + grace.
    """
    config = config or RunConfig()
    clock = config.clock
    vocab = vocab or Vocabulary()
    if prompt_spec is None:
        prompt_spec = scenario_prompt_spec(scenario, vocab, clock)
    prompt = build_hybrid_prompt(prompt_spec, clock)

    q_audio = question_audio(question, clock, scenario_dir)
    spf = clock.samples_per_frame
    q_frames = (len(q_audio) + spf - 1) // spf
    user_end_s = len(q_audio) / clock.sample_rate

    cap_frames = int(config.trial_cap_s * clock.frame_rate)
    grace_frames = int(round(config.grace_s * clock.frame_rate))
    no_speech_deadline = q_frames + int(
        round((config.vad.eval_window_s + config.grace_s) * clock.frame_rate)
    )

    session = AgentSession(agent, clock, prompt)
    out_frames: list[np.ndarray] = []
    tokens: list[int] = []
    step_times: list[float] = []
    agent_spoke = False
    silent_run = 0
    truncated = False
    failed = False
    error = None

    i = 0
    try:
        while i < cap_frames:
            if i < q_frames:
                chunk = np.zeros(spf, dtype=np.int16)
                take = q_audio.samples[i * spf : (i + 1) * spf]
                chunk[: len(take)] = take
            else:
                chunk = np.zeros(spf, dtype=np.int16)
            t0 = time.monotonic()
            reply = session.step(AgentFrameIn(i, chunk))
            step_times.append(time.monotonic() - t0)
            out_frames.append(reply.samples)
            tokens.append(-1 if reply.text_token is None else reply.text_token)

            if _frame_active(reply.samples, config.vad.threshold_dbfs):
                agent_spoke = True
                silent_run = 0
            else:
                silent_run += 1
            i += 1
            if agent_spoke and i > q_frames and silent_run >= grace_frames:
                break
            if not agent_spoke and i >= no_speech_deadline:
                break
        else:
            truncated = True
    except (TransportError, ProtocolError) as e:
        failed = True
        error = str(e)
    finally:
        try:
            session.close()
        except (TransportError, ProtocolError):
            failed = True

    n = len(out_frames)
    agent_audio = AudioBuffer(
        np.concatenate(out_frames) if out_frames else np.zeros(0, dtype=np.int16),
        clock.sample_rate,
    )
    user_pcm = np.zeros(n * spf, dtype=np.int16)
    take = min(len(q_audio), len(user_pcm))
    user_pcm[:take] = q_audio.samples[:take]
    user_audio = AudioBuffer(user_pcm, clock.sample_rate)

    events = None
    if n:
        dialog = StitchedDialog(
            user_audio,
            agent_audio,
            [(Speaker.USER, 0.0, user_end_s)],
        )
        meta = TrialMeta(Category.TURN_TAKING, anchor_time=min(user_end_s, dialog.duration))
        events = extract_events(dialog, meta, clock, config.vad)

    transcript = ""
    real = [t for t in tokens if t >= 0]
    if real:
        # The agent's own token table wins; text ids are the agent's.
        decode_vocab = agent.vocabulary() or vocab
        try:
            transcript = decode_vocab.decode(real)
        except InvalidArgument:
            transcript = " ".join(f"<{t}>" for t in real)

    return TrialResult(
        scenario.scenario_id,
        question.qid,
        question.tag,
        transcript,
        tokens,
        events,
        agent_audio=agent_audio,
        frame_time_mean=float(np.mean(step_times)) if step_times else 0.0,
        frame_time_max=float(np.max(step_times)) if step_times else 0.0,
        truncated=truncated,
        failed=failed,
        error=error,
    )


def run_scenarios(
    scenarios: list[Scenario],
    agent_factory,
    config: RunConfig | None = None,
    scenario_dir=None,
) -> list[TrialResult]:
    """Every question of every scenario; one agent instance per trial."""
    config = config or RunConfig()
    vocab = Vocabulary()
    results = []
    for sc in scenarios:
        spec = scenario_prompt_spec(sc, vocab, config.clock)
        for q in sc.questions:
            results.append(
                run_trial(sc, q, agent_factory(), spec, config, vocab, scenario_dir)
            )
    return results


# Offline judge: a deterministic keyword rubric per question tag. It
# exists so harness tests can score scripted transcripts without a
# network; it makes no claim of matching any model judge.

_REFUSAL = ("cannot", "can't", "unable", "not able", "unfortunately", "requires")
_POLITE = ("understand", "sorry", "apologize", "appreciate", "happy to help")
_DECLINE = ("don't have", "do not have", "not sure", "don't offer", "do not offer", "only")


def _contains(transcript: str, phrase: str) -> bool:
    return phrase.lower() in transcript.lower()


def offline_judge(result: TrialResult, scenario: Scenario) -> int:
    """Score 1-5 from transcript keywords; empty transcript floors at 1."""
    text = result.transcript.strip()
    if not text:
        return 1
    tag = result.tag
    slots = scenario.slots
    if tag == "Proper Noun":
        return 5 if _contains(text, slots["company"]) else 2
    if tag == "Context details":
        fact = slots["verification_fact"]
        plans = [p.strip() for p in re.findall(r"([A-Za-z]+) \(", slots["plan_facts"])]
        if result.question_id == "Q1":
            if any(_contains(text, w) for w in ("not match", "doesn't match", "incorrect", "different")):
                return 5
            return 4 if _contains(text, fact) else 2
        hits = sum(_contains(text, p) for p in plans)
        if plans and hits == len(plans):
            return 5
        return 3 if hits else 2
    if tag == "Unfulfillable Request":
        return 5 if any(_contains(text, w) for w in _REFUSAL) else 2
    if tag == "Customer Rudeness":
        return 5 if any(_contains(text, w) for w in _POLITE) else 2
    if tag in ("Unspecified", "Unrelated"):
        return 5 if any(_contains(text, w) for w in _DECLINE + _REFUSAL) else 2
    return 2


_JUDGE_TEMPLATE = """You are grading a customer-service voice agent.

Scenario context:
{context}

Customer question (tag: {tag}):
{question}

Agent transcript:
{transcript}

Score the agent's handling of this question from 1 (very poor) to 5
(excellent), considering correctness against the context, appropriate
refusals, and tone. Reply with a single integer between 1 and 5."""


def judge_prompt(result: TrialResult, scenario: Scenario, question: Question) -> str:
    return _JUDGE_TEMPLATE.format(
        context=scenario.context,
        tag=question.tag,
        question=question.utterance_text,
        transcript=result.transcript or "(the agent said nothing)",
    )


def remote_judge(
    result: TrialResult,
    scenario: Scenario,
    question: Question,
    endpoint: str,
    api_key: str | None = None,
    model: str = "judge",
    retries: int = JUDGE_RETRIES,
    timeout: float = 30.0,
) -> int:
    """Chat-completions judge call; parses one integer 1-5 from the reply."""
    import requests

    if not result.transcript.strip():
        return 1
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": model,
        "messages": [
            {"role": "system", "content": "You are a strict evaluation judge."},
            {"role": "user", "content": judge_prompt(result, scenario, question)},
        ],
        "temperature": 0,
    }
    last = None
    for attempt in range(retries):
        try:
            resp = requests.post(endpoint, json=body, headers=headers, timeout=timeout)
            resp.raise_for_status()
            content = resp.json()["choices"][0]["message"]["content"]
            break
        except (requests.RequestException, KeyError, IndexError, ValueError) as e:
            last = e
            time.sleep(min(2.0**attempt * 0.1, 2.0))
    else:
        raise JudgeUnavailable(f"judge endpoint failed after {retries} tries: {last}")
    m = re.search(r"[1-5]", str(content))
    if not m:
        raise JudgeParseError(f"no integer 1-5 in judge reply: {content!r}")
    return int(m.group())


def judge(
    result: TrialResult,
    scenario: Scenario,
    question: Question | None = None,
    config: RunConfig | None = None,
) -> int:
    """Dispatch to the remote judge when configured, else the offline rubric."""
    config = config or RunConfig()
    endpoint = config.judge_endpoint or os.environ.get("JUDGE_ENDPOINT")
    if endpoint:
        key = config.judge_api_key or os.environ.get("JUDGE_API_KEY")
        q = question or next(
            q for q in scenario.questions if q.qid == result.question_id
        )
        return remote_judge(result, scenario, q, endpoint, key, config.judge_model)
    return offline_judge(result, scenario)


def score_results(
    results: list[TrialResult], scenarios: list[Scenario], config: RunConfig | None = None
) -> None:
    """Fill judge_score in place; judge failures leave the score absent."""
    by_id = {s.scenario_id: s for s in scenarios}
    for r in results:
        sc = by_id[r.scenario_id]
        try:
            r.judge_score = judge(r, sc, config=config)
        except (JudgeUnavailable, JudgeParseError):
            r.judge_score = None


def report(results: list[TrialResult], out_dir) -> dict:
    """Write scores.csv plus a JSON summary; returns the summary dict.

    CSV: one row per scenario (sorted), columns Q0..Q6 plus the row
    mean; a final means row. Per-tag and overall means land in the
    summary JSON alongside rubric/version metadata.
    """
    if not results:
        raise InvalidArgument("report needs at least one result")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    qids = [f"Q{i}" for i in range(len(TAG_LAYOUT))]
    by_scenario: dict[str, dict[str, TrialResult]] = {}
    for r in results:
        by_scenario.setdefault(r.scenario_id, {})[r.question_id] = r

    def fmt(score):
        return "" if score is None else str(score)

    rows = []
    for sid in sorted(by_scenario):
        cells = [by_scenario[sid].get(q) for q in qids]
        scores = [c.judge_score for c in cells if c and c.judge_score is not None]
        mean = sum(scores) / len(scores) if scores else None
        rows.append(
            [sid]
            + [fmt(c.judge_score if c else None) for c in cells]
            + [f"{mean:.3f}" if mean is not None else ""]
        )

    per_q_means = {}
    for q in qids:
        vals = [
            by_scenario[sid][q].judge_score
            for sid in by_scenario
            if q in by_scenario[sid] and by_scenario[sid][q].judge_score is not None
        ]
        per_q_means[q] = sum(vals) / len(vals) if vals else None

    valid_q = [v for v in per_q_means.values() if v is not None]
    overall = sum(valid_q) / len(valid_q) if valid_q else None

    csv_path = out_dir / "scores.csv"
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write("scenario," + ",".join(qids) + ",mean\n")
        for row in rows:
            f.write(",".join(row) + "\n")
        f.write(
            "mean,"
            + ",".join(
                f"{per_q_means[q]:.3f}" if per_q_means[q] is not None else ""
                for q in qids
            )
            + ","
            + (f"{overall:.3f}" if overall is not None else "")
            + "\n"
        )

    tag_means = {}
    for i, tag in enumerate(TAG_LAYOUT):
        bucket = tag_means.setdefault(tag, [])
        if per_q_means[qids[i]] is not None:
            bucket.append(per_q_means[qids[i]])
    summary = {
        "rubric_version": RUBRIC_VERSION,
        "n_results": len(results),
        "n_scenarios": len(by_scenario),
        "per_question_mean": per_q_means,
        "per_tag_mean": {
            t: (sum(v) / len(v) if v else None) for t, v in sorted(tag_means.items())
        },
        "overall_mean": overall,
        "n_failed": sum(r.failed for r in results),
        "n_truncated": sum(r.truncated for r in results),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary
