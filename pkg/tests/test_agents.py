import numpy as np
import pytest

from duplexbench import (
    AgentFrameIn,
    AgentSession,
    AudioBuffer,
    EchoAgent,
    FrameClock,
    InvalidArgument,
    ProtocolError,
    ScriptedAgent,
    SilentAgent,
    ToneAgent,
    Vocabulary,
    extract_events,
    gen_sine,
    stream_audio,
    vad,
)
from duplexbench.vad import Category, TrialMeta
from duplexbench.stitching import StitchedDialog

CLOCK = FrameClock()
SPF = CLOCK.samples_per_frame


def user_input(seconds=2.0):
    return gen_sine(300.0, seconds, 0.4, CLOCK)


def test_silent_agent_outputs_silence_and_pad():
    cap = stream_audio(SilentAgent(), user_input(), CLOCK)
    assert not cap.agent_audio.samples.any()
    assert all(t == -1 for t in cap.text_tokens)
    assert cap.frames == CLOCK.frames_in(user_input())


def test_echo_agent_zero_delay_is_identity():
    user = user_input(1.2)
    cap = stream_audio(EchoAgent(0), user, CLOCK)
    np.testing.assert_array_equal(cap.agent_audio.samples, user.samples)


def test_echo_agent_delay_shifts_frames():
    user = user_input(1.2)
    cap = stream_audio(EchoAgent(3), user, CLOCK)
    lead = cap.agent_audio.samples[: 3 * SPF]
    assert not lead.any()
    np.testing.assert_array_equal(
        cap.agent_audio.samples[3 * SPF :], user.samples[: -3 * SPF]
    )


def test_echo_agent_negative_delay_rejected():
    with pytest.raises(InvalidArgument):
        EchoAgent(-1)


def test_tone_agent_is_phase_continuous():
    user = user_input(1.0)
    cap = stream_audio(ToneAgent(220.0, 0.3), user, CLOCK)
    ref = gen_sine(220.0, 1.0, 0.3, CLOCK)
    np.testing.assert_array_equal(cap.agent_audio.samples, ref.samples)


def test_session_rejects_out_of_order_frames():
    session = AgentSession(SilentAgent(), CLOCK)
    session.step(AgentFrameIn(0, np.zeros(SPF, dtype=np.int16)))
    with pytest.raises(ProtocolError, match="expected 1"):
        session.step(AgentFrameIn(0, np.zeros(SPF, dtype=np.int16)))
    with pytest.raises(ProtocolError):
        session.step(AgentFrameIn(5, np.zeros(SPF, dtype=np.int16)))


def test_session_rejects_wrong_frame_size():
    session = AgentSession(SilentAgent(), CLOCK)
    with pytest.raises(ProtocolError, match="frame size"):
        session.step(AgentFrameIn(0, np.zeros(SPF - 1, dtype=np.int16)))


def test_session_rejects_use_after_close():
    session = AgentSession(SilentAgent(), CLOCK)
    session.close()
    with pytest.raises(ProtocolError, match="closed"):
        session.step(AgentFrameIn(0, np.zeros(SPF, dtype=np.int16)))
    session.close()  # idempotent


def test_session_records_budget_violations():
    class SlowAgent(SilentAgent):
        def step(self, frame):
            import time

            time.sleep(0.002)
            return super().step(frame)

    user = user_input(0.4)
    cap = stream_audio(SlowAgent(), user, CLOCK, realtime_budget=1e-6)
    assert cap.budget_violations == list(range(cap.frames))
    cap = stream_audio(SlowAgent(), user, CLOCK, realtime_budget=5.0)
    assert cap.budget_violations == []


def test_scripted_agent_waits_then_replies():
    # 1.04 s of speech (13 frames), then silence; latency 0.4 s = 5 frames.
    # Turn end is detected on frame 13 (first silent), playback starts 18.
    user_frames = 40
    speech = gen_sine(300.0, 1.0, 0.4, CLOCK)  # rounds to 13 frames
    buf = np.zeros(user_frames * SPF, dtype=np.int16)
    buf[: len(speech)] = speech.samples
    agent = ScriptedAgent(latency_s=0.4)
    cap = stream_audio(agent, AudioBuffer(buf, CLOCK.sample_rate), CLOCK)

    first_voiced = np.flatnonzero(cap.agent_audio.samples)[0] // SPF
    assert first_voiced == 13 + 5


def test_scripted_agent_measured_latency_matches_configured():
    # measured first-onset delay equals the configured latency exactly
    speech = gen_sine(300.0, 1.0, 0.4, CLOCK)
    n_frames = CLOCK.frames_in(speech)
    total = n_frames + 30
    buf = np.zeros(total * SPF, dtype=np.int16)
    buf[: len(speech)] = speech.samples
    user = AudioBuffer(buf, CLOCK.sample_rate)

    cap = stream_audio(ScriptedAgent(latency_s=0.4), user, CLOCK)
    trial = StitchedDialog(user, cap.agent_audio, alignment=[])
    anchor = n_frames / CLOCK.frame_rate
    ev = extract_events(trial, TrialMeta(Category.TURN_TAKING, anchor), CLOCK)
    assert ev.first_onset_delay == pytest.approx(0.4, abs=1e-9)


def test_scripted_agent_emits_transcript_tokens():
    speech = gen_sine(300.0, 1.0, 0.4, CLOCK)
    buf = np.zeros(40 * SPF, dtype=np.int16)
    buf[: len(speech)] = speech.samples
    agent = ScriptedAgent(latency_s=0.0, transcript="hello there caller")
    cap = stream_audio(agent, AudioBuffer(buf, CLOCK.sample_rate), CLOCK)
    tokens = [t for t in cap.text_tokens if t != -1]
    assert agent.decode_text(tokens) == "hello there caller"
    assert agent.vocabulary() is not None


def test_scripted_agent_max_responses():
    speech = gen_sine(300.0, 1.0, 0.4, CLOCK)
    gap = np.zeros(20 * SPF, dtype=np.int16)
    one = np.concatenate([speech.samples, gap])
    user = AudioBuffer(np.concatenate([one, one]), CLOCK.sample_rate)
    cap = stream_audio(ScriptedAgent(latency_s=0.0, max_responses=1), user, CLOCK)
    segs = vad(cap.agent_audio, CLOCK)
    assert len(segs) == 1


def test_scripted_agent_ignores_short_blips():
    # a single active frame is below min_turn_frames, so no response
    blip = np.zeros(30 * SPF, dtype=np.int16)
    tone = gen_sine(300.0, 2.0, 0.4, CLOCK)
    blip[:SPF] = tone.samples[:SPF]
    cap = stream_audio(ScriptedAgent(latency_s=0.0), AudioBuffer(blip, CLOCK.sample_rate), CLOCK)
    assert not cap.agent_audio.samples.any()


def test_scripted_agent_validation():
    with pytest.raises(InvalidArgument):
        ScriptedAgent(latency_s=-0.1)
    agent = ScriptedAgent(response=AudioBuffer(np.zeros(160, dtype=np.int16), 16000))
    with pytest.raises(InvalidArgument):
        stream_audio(agent, user_input(0.5), CLOCK)


def test_stream_audio_rejects_partial_frames():
    ragged = AudioBuffer(np.zeros(SPF + 7, dtype=np.int16), CLOCK.sample_rate)
    with pytest.raises(InvalidArgument):
        stream_audio(SilentAgent(), ragged, CLOCK)
