"""
Voice activity detection and turn-taking events
===============================================

The detector marks a frame active when its RMS level clears a dBFS
threshold, bridges sub-hangover gaps, and drops too-short bursts.
Event extraction then anchors an evaluation window on the moment of
interest and reports agent onsets, clamping segments that were already
running when the window opened.
"""

import numpy as np

from duplexbench import (
    AudioBuffer,
    Category,
    FrameClock,
    StitchedDialog,
    TrialMeta,
    extract_events,
    gen_sine,
    vad,
)

clock = FrameClock()
spf = clock.samples_per_frame

# Compose an agent channel frame by frame: speech, a one-frame dip
# (bridged by the hangover), more speech, then a long silence.
pattern = [True] * 10 + [False] + [True] * 6 + [False] * 23
agent_pcm = np.zeros(len(pattern) * spf, dtype=np.int16)
tone = gen_sine(330.0, len(pattern) / clock.frame_rate, 0.4, clock)
for i, active in enumerate(pattern):
    if active:
        agent_pcm[i * spf : (i + 1) * spf] = tone.samples[i * spf : (i + 1) * spf]
agent = AudioBuffer(agent_pcm, clock.sample_rate)

segments = vad(agent, clock)
print("agent VAD segments (the mid-speech dip does not split them):")
for seg in segments:
    print(f"  {seg.start:5.2f} .. {seg.end:5.2f} s at {seg.mean_level:6.1f} dBFS")

# The user asks a question over the first second; anchor the window at
# the end of their turn and see whether (and when) the agent took over.
user_pcm = np.zeros(len(pattern) * spf, dtype=np.int16)
question = gen_sine(250.0, 1.0, 0.4, clock)
user_pcm[: len(question)] = question.samples
dialog = StitchedDialog(AudioBuffer(user_pcm, clock.sample_rate), agent, alignment=[])

anchor = len(question) / clock.sample_rate
events = extract_events(dialog, TrialMeta(Category.TURN_TAKING, anchor), clock)
print(f"anchor {anchor:.2f} s, window {events.eval_window_s:.1f} s")
print(f"took over: {events.took_over}, onsets {events.agent_onsets}")
print(f"first onset delay: {events.first_onset_delay:.3f} s"
      if events.first_onset_delay is not None else "no onset in the window")
