"""
Stitching scripted turns into a two-channel dialog
==================================================

Turns land on separate user/agent channels at integer sample offsets;
a positive pad leaves a gap before the next turn and a negative pad
starts it early, simulating a barge-in. Overlap between the channels
is recorded, never mixed, and same-speaker overlap is an error.
"""

import tempfile
from pathlib import Path

from duplexbench import (
    FrameClock,
    Speaker,
    StitchError,
    Turn,
    speech_for_text,
    stitch,
)

clock = FrameClock()

turns = [
    Turn(Speaker.USER, speech_for_text("could you check my last invoice", clock),
         transcript="could you check my last invoice", pad_after=0.3),
    Turn(Speaker.AGENT, speech_for_text("of course give me one moment", clock),
         transcript="of course give me one moment", pad_after=0.2),
    # the user barges in half a second before the agent finishes
    Turn(Speaker.AGENT, speech_for_text("I see two invoices from April", clock),
         transcript="I see two invoices from April", pad_after=-0.5),
    Turn(Speaker.USER, speech_for_text("sorry I meant the March one", clock),
         transcript="sorry I meant the March one"),
]

dialog = stitch(turns, clock)
print(f"stitched {len(turns)} turns into {dialog.duration:.2f} s")
for speaker, start, end in dialog.alignment:
    print(f"  {speaker.value:<5} {start:6.2f} .. {end:6.2f} s")
print(f"cross-channel overlaps: {[(round(a, 2), round(b, 2)) for a, b in dialog.overlaps]}")

out_dir = Path(tempfile.mkdtemp())
dialog.save(out_dir, stem="invoice_call")
print(f"wrote {sorted(p.name for p in out_dir.iterdir())} under {out_dir}")

# Overlapping the same speaker with themselves is rejected outright.
try:
    stitch(
        [
            Turn(Speaker.USER, speech_for_text("first thing", clock), pad_after=-1.0),
            Turn(Speaker.USER, speech_for_text("second thing", clock)),
        ],
        clock,
    )
except StitchError as e:
    print(f"same-speaker overlap rejected: {e}")
