"""
Building a hybrid prompt from a voice sample and a role description
===================================================================

A conditioning prefix for a full-duplex agent carries two segments on
the agent's streams: the voice example as codec tokens (with the text
lane padded) and the role text at one token per frame (with the audio
lane silent), closed by a single delimiter frame. The user lane holds
a 440 Hz tone for the whole prefix, and every prompt frame carries
zero training weight.
"""

import tempfile
from pathlib import Path

from duplexbench import (
    FrameClock,
    HybridPromptSpec,
    Vocabulary,
    build_hybrid_prompt,
    load_prompt_bundle,
    speech_like,
)

clock = FrameClock()  # 12.5 Hz frames over 24 kHz mono PCM

# A stand-in voice example: two seconds of deterministic speech-shaped
# audio. Any frame-aligned 24 kHz buffer works here, e.g. from read_wav.
voice = speech_like(2.0, clock, seed=11)

# Tokenize the role description with a throwaway vocabulary.
vocab = Vocabulary()
role = vocab.encode(
    "You are a patient billing assistant for a regional utility company."
)

spec = HybridPromptSpec(voice, tuple(role), order="voice-first")
prompt = build_hybrid_prompt(spec, clock)

print(f"voice sample : {voice.duration:.2f} s -> {clock.frames_in(voice)} frames")
print(f"role text    : {len(role)} tokens")
print(f"prompt       : {prompt.num_frames} frames "
      f"(voice {prompt.voice_span}, text {prompt.text_span}, "
      f"delimiter at {prompt.delimiter_frame})")
print(f"prefill ends : frame {prompt.prefill_boundary}")

# All prompt frames are weightless; dialogue frames after the prompt
# would get 0.3/1.0 on text and 1.0/0.02 across audio codebooks.
weights = {f.loss_weight_text for f in prompt.stream.agent_frames}
print(f"text weights over the prompt: {sorted(weights)}")

# Prompts round-trip through a zip bundle (two WAV lanes + a sidecar),
# which is also what travels over the wire to out-of-process agents.
out = Path(tempfile.mkdtemp()) / "prompt.zip"
prompt.save(out)
again = load_prompt_bundle(out)
print(f"bundle round-trip identical: {again == prompt}  ({out})")
