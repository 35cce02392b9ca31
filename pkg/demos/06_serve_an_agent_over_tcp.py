"""
Streaming to an out-of-process agent over the lockstep wire protocol
====================================================================

Agents can live behind a TCP socket: every message is a DPLX-framed
header plus payload, the handshake pins sample rate, frame rate, and
codebook count, and each user frame is answered by exactly one agent
frame. A remote agent is wrapped in the same interface as an
in-process one, so the rest of the harness cannot tell the difference.
"""

import threading

import numpy as np

from duplexbench import (
    EchoAgent,
    FrameClock,
    connect_wire,
    gen_sine,
    serve_forever,
    stream_audio,
)

clock = FrameClock()

# Serve an echo agent on an ephemeral port in a background thread.
ready = threading.Event()
port_holder = {}

def on_ready(port):
    port_holder["port"] = port
    ready.set()

server = threading.Thread(
    target=serve_forever,
    args=(lambda: EchoAgent(0), "127.0.0.1", 0),
    kwargs={"clock": clock, "max_sessions": 1, "ready_callback": on_ready},
)
server.start()
ready.wait()
endpoint = f"tcp:127.0.0.1:{port_holder['port']}"
print(f"echo agent listening at {endpoint}")

# Connect and stream two seconds of tone through the wire.
user = gen_sine(350.0, 2.0, 0.4, clock)
agent = connect_wire(endpoint, timeout=5.0)
capture = stream_audio(agent, user, clock)
server.join()

identical = np.array_equal(capture.agent_audio.samples, user.samples)
print(f"streamed {capture.frames} frames; echo returned the user audio "
      f"byte-identically: {identical}")

# The same endpoint string plugs into the command-line runner:
#   duplexbench eval --scenarios fixtures/scenarios --agent tcp:HOST:PORT --report out/
print("the eval runner accepts the same tcp:host:port endpoint")
