"""Record one wire session as a byte-exact golden capture.

The capture is a sequence of records, one per protocol message:

    direction u8 (0 = client to server, 1 = server to client)
    length    u32 LE
    payload   (the full framed message, header included)

Any conformant server fed the client-side records must emit the
server-side records byte for byte. The reference session drives a
silent agent: HELLO, empty PROMPT, a handful of seeded-noise frames,
then END.
"""

import argparse
import socket
import struct
import threading
from pathlib import Path

import numpy as np

from duplexbench import FrameClock, SilentAgent, Transport
from duplexbench.wire import (
    HEADER,
    pack_frame,
    pack_hello,
    pack_message,
    serve_session,
    MSG_END,
    MSG_PROMPT,
)
from duplexbench.agents import AgentFrameIn

TO_SERVER = 0
TO_CLIENT = 1


def client_messages(clock: FrameClock, codebooks: int, n_frames: int, seed: int):
    rng = np.random.default_rng(seed)
    yield pack_hello(clock, codebooks)
    yield pack_message(MSG_PROMPT)
    for i in range(n_frames):
        pcm = rng.integers(-20000, 20000, size=clock.samples_per_frame).astype(np.int16)
        yield pack_frame(AgentFrameIn(i, pcm))
    yield pack_message(MSG_END)


def read_one_message(transport: Transport) -> bytes:
    head = transport.recv_exact(HEADER.size)
    _, _, _, length = HEADER.unpack(head)
    return head + (transport.recv_exact(length) if length else b"")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures/golden/silent_session.bin")
    parser.add_argument("--frames", type=int, default=10)
    parser.add_argument("--seed", type=int, default=2025)
    parser.add_argument("--codebooks", type=int, default=8)
    args = parser.parse_args()

    clock = FrameClock()
    a, b = socket.socketpair()
    client = Transport.from_socket(a, 10.0)
    server = Transport.from_socket(b, 10.0)
    thread = threading.Thread(
        target=serve_session, args=(SilentAgent(), server, clock, args.codebooks)
    )
    thread.start()

    records = []
    for message in client_messages(clock, args.codebooks, args.frames, args.seed):
        records.append((TO_SERVER, message))
        client.send(message)
        records.append((TO_CLIENT, read_one_message(client)))
    thread.join()
    client.close()
    server.close()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "wb") as f:
        for direction, payload in records:
            f.write(struct.pack("<BI", direction, len(payload)))
            f.write(payload)
    total = sum(len(p) for _, p in records)
    print(f"wrote {out}: {len(records)} messages, {total} payload bytes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
