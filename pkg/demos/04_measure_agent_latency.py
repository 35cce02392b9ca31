"""
Measuring response latency and take-over rate against oracle agents
===================================================================

The scripted agent waits for the user's turn to end and replies after
a configured delay, so the measurement pipeline can be validated
end-to-end: the harness must read back exactly the latency that was
configured. Silent and always-speaking agents pin the take-over rate
to its two extremes.
"""

import numpy as np

from duplexbench import (
    AudioBuffer,
    Category,
    FrameClock,
    ScriptedAgent,
    SilentAgent,
    StitchedDialog,
    ToneAgent,
    TrialMeta,
    extract_events,
    latency,
    speech_like,
    stream_audio,
    tor,
)

clock = FrameClock()
spf = clock.samples_per_frame


def run_trial(agent, seed):
    """Stream one user turn plus silence; return the extracted events."""
    speech = speech_like(1.0 + 0.08 * seed, clock, seed=seed)
    n_speech = clock.frames_in(speech)
    pcm = np.zeros((n_speech + 30) * spf, dtype=np.int16)
    pcm[: len(speech)] = speech.samples
    user = AudioBuffer(pcm, clock.sample_rate)
    capture = stream_audio(agent, user, clock)
    dialog = StitchedDialog(user, capture.agent_audio, alignment=[])
    anchor = n_speech / clock.frame_rate
    return extract_events(dialog, TrialMeta(Category.TURN_TAKING, anchor), clock)

for configured in (0.16, 0.40, 0.80):
    trials = [run_trial(ScriptedAgent(latency_s=configured), k) for k in range(10)]
    print(f"configured {configured:.2f} s -> measured {latency(trials):.3f} s "
          f"over {len(trials)} trials (take-over rate {tor(trials):.3f})")

silent = [run_trial(SilentAgent(), k) for k in range(10)]
talker = [run_trial(ToneAgent(220.0, 0.3), k) for k in range(10)]
print(f"silent agent        -> take-over rate {tor(silent):.3f}")
print(f"always-speaking one -> take-over rate {tor(talker):.3f}")
