import numpy as np
import pytest

from duplexbench import (
    AudioBuffer,
    Category,
    FrameClock,
    InvalidArgument,
    Speaker,
    StitchedDialog,
    TrialMeta,
    VadParams,
    extract_events,
    frame_levels,
    gen_sine,
    vad,
)

CLOCK = FrameClock()
RATE = CLOCK.sample_rate
SPF = CLOCK.samples_per_frame
DT = 1.0 / CLOCK.frame_rate


def buf_from_frames(active):
    """Audio with a -6 dBFS tone on active frames, silence elsewhere."""
    out = np.zeros(len(active) * SPF, dtype=np.int16)
    tone = gen_sine(320.0, len(active) * DT, 0.5, CLOCK)
    for i, on in enumerate(active):
        if on:
            out[i * SPF : (i + 1) * SPF] = tone.samples[i * SPF : (i + 1) * SPF]
    return AudioBuffer(out, RATE)


def dialog(user_frames, agent_frames):
    """Two-channel trial driven by per-frame activity patterns."""
    n = max(len(user_frames), len(agent_frames))
    user = buf_from_frames(list(user_frames) + [False] * (n - len(user_frames)))
    agent = buf_from_frames(list(agent_frames) + [False] * (n - len(agent_frames)))
    return StitchedDialog(user, agent, alignment=[])


def test_silence_yields_no_segments():
    assert vad(AudioBuffer.silence(2 * 13 * SPF, RATE), CLOCK) == []


def test_single_tone_boundaries():
    # 13 active frames then 13 silent: one segment with frame-exact edges
    segs = vad(buf_from_frames([True] * 13 + [False] * 13), CLOCK)
    assert len(segs) == 1
    (seg,) = segs
    assert seg.start == 0.0
    assert seg.end == pytest.approx(13 * DT)
    assert seg.channel is Speaker.AGENT
    assert seg.mean_level == pytest.approx(-9.03, abs=0.1)  # sine RMS = peak - 3 dB


def test_frame_levels_values():
    levels = frame_levels(buf_from_frames([True, False]), CLOCK)
    assert levels.shape == (2,)
    assert levels[0] == pytest.approx(-9.03, abs=0.1)
    assert levels[1] == -200.0


def test_hangover_bridges_short_gap():
    # 1-frame gap < hangover 2: merged into one segment
    segs = vad(buf_from_frames([True] * 4 + [False] + [True] * 4), CLOCK)
    assert len(segs) == 1
    assert segs[0].end - segs[0].start == pytest.approx(9 * DT)


def test_hangover_keeps_long_gap():
    segs = vad(buf_from_frames([True] * 4 + [False] * 2 + [True] * 4), CLOCK)
    assert len(segs) == 2


def test_min_speech_drops_short_burst():
    assert vad(buf_from_frames([False] * 3 + [True] + [False] * 4), CLOCK) == []


def test_bridging_happens_before_duration_filter():
    # two 1-frame bursts bridge across a 1-frame gap into 3 frames, so survive
    segs = vad(buf_from_frames([True, False, True] + [False] * 5), CLOCK)
    assert len(segs) == 1
    assert segs[0].end == pytest.approx(3 * DT)


def test_threshold_is_dbfs():
    quiet = gen_sine(320.0, 1.0, 0.002, CLOCK)  # peak about -54 dBFS
    assert vad(quiet, CLOCK) == []
    assert vad(quiet, CLOCK, VadParams(threshold_dbfs=-70.0)) != []


def test_scale_consistency_random_signals():
    # halving amplitude shifts every frame level by one fixed constant
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = rng.integers(-12000, 12000, size=4 * SPF, dtype=np.int16)
        full = frame_levels(AudioBuffer(x, RATE), CLOCK)
        half = frame_levels(AudioBuffer((x // 2).astype(np.int16), RATE), CLOCK)
        np.testing.assert_allclose(full - half, 20 * np.log10(2), atol=0.02)


def test_vad_params_validation():
    with pytest.raises(InvalidArgument):
        VadParams(hangover_frames=-1)
    with pytest.raises(InvalidArgument):
        VadParams(min_speech_frames=-1)
    with pytest.raises(InvalidArgument):
        VadParams(eval_window_s=0.0)


def test_onsets_inside_window():
    # user speaks frames 0-24, agent answers frames 30-37; anchor at 2.0 s
    trial = dialog([True] * 25 + [False] * 25, [False] * 30 + [True] * 8 + [False] * 12)
    meta = TrialMeta(Category.TURN_TAKING, anchor_time=2.0)
    ev = extract_events(trial, meta, CLOCK)
    assert ev.agent_onsets == [pytest.approx(30 * DT)]
    assert ev.took_over
    assert ev.first_onset_delay == pytest.approx(30 * DT - 2.0)


def test_segment_active_at_anchor_clamps_onset():
    # agent already speaking when the window opens: onset counts at the anchor
    trial = dialog([False] * 50, [True] * 50)
    meta = TrialMeta(Category.INTERRUPTION, anchor_time=2.0)
    ev = extract_events(trial, meta, CLOCK)
    assert ev.agent_onsets == [2.0]
    assert ev.first_onset_delay == 0.0


def test_onset_after_window_ignored():
    # agent starts at 3.2 s, outside [1.0, 1.0 + 2.0]
    trial = dialog([False] * 50, [False] * 40 + [True] * 10)
    meta = TrialMeta(Category.PAUSE, anchor_time=1.0, eval_window_s=2.0)
    ev = extract_events(trial, meta, CLOCK)
    assert ev.agent_onsets == []
    assert not ev.took_over
    assert ev.first_onset_delay is None


def test_backchannel_labeling():
    # short agent burst inside user speech is a backchannel, long one is not
    user = [True] * 50
    agent = [False] * 10 + [True] * 5 + [False] * 5 + [True] * 20 + [False] * 10
    trial = dialog(user, agent)
    ev = extract_events(trial, TrialMeta(Category.BACKCHANNEL, anchor_time=1.0), CLOCK)
    assert [pytest.approx(10 * DT)] == [b.start for b in ev.backchannels]


def test_backchannel_outside_user_speech_not_counted():
    trial = dialog([True] * 10 + [False] * 40, [False] * 20 + [True] * 5 + [False] * 25)
    ev = extract_events(trial, TrialMeta(Category.BACKCHANNEL, anchor_time=0.5), CLOCK)
    assert ev.backchannels == []


def test_anchor_outside_trial_rejected():
    trial = dialog([True] * 10, [False] * 10)
    with pytest.raises(InvalidArgument):
        extract_events(trial, TrialMeta(Category.PAUSE, anchor_time=-0.5), CLOCK)
    with pytest.raises(InvalidArgument):
        extract_events(trial, TrialMeta(Category.PAUSE, anchor_time=99.0), CLOCK)


def test_trial_meta_round_trip(tmp_path):
    meta = TrialMeta(
        Category.TURN_TAKING,
        anchor_time=3.25,
        eval_window_s=2.0,
        vad_overrides={"threshold_dbfs": -45.0},
    )
    p = tmp_path / "meta.json"
    meta.save(p)
    back = TrialMeta.load(p)
    assert back == meta
    assert back.resolved_params().threshold_dbfs == -45.0
    assert back.resolved_params().eval_window_s == 2.0


def test_vad_override_unknown_field_rejected():
    meta = TrialMeta(Category.PAUSE, 1.0, vad_overrides={"nope": 1})
    with pytest.raises(InvalidArgument):
        meta.resolved_params()


def test_meta_load_errors(tmp_path):
    p = tmp_path / "meta.json"
    p.write_text('{"category": "pause"}')
    with pytest.raises(InvalidArgument):
        TrialMeta.load(p)
    p.write_text('{"category": "sideways", "anchor_time": 1.0}')
    with pytest.raises(InvalidArgument):
        TrialMeta.load(p)
