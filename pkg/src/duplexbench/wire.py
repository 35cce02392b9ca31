"""Frame-level lockstep wire protocol for out-of-process agents.

Every message is ``magic "DPLX" | version u8 | msg-type u8 | payload
length u32 | payload``, little-endian throughout. The conversation is
strictly synchronous; each harness message gets exactly one reply:

====== =======================  =========================
sent    payload                  reply
====== =======================  =========================
HELLO   sample_rate u32,         HELLO with the server's
        frame_rate f64, K u8     parameters (must match)
PROMPT  prompt bundle bytes      PROMPT, empty payload
        (may be empty)
FRAME   frame_index u32,         OUT: PCM i16 x spf,
        PCM i16 x spf            text token i32 (-1 = PAD)
END     empty                    END, empty payload
====== =======================  =========================
"""

from __future__ import annotations

import socket
import struct

import numpy as np

from .agents import Agent, AgentFrameIn, AgentFrameOut, AgentSession
from .audio import FrameClock
from .codec import DEFAULT_CODEBOOKS
from .errors import HandshakeError, InvalidArgument, ProtocolError, TransportError
from .prompts import HybridPrompt

MAGIC = b"DPLX"
VERSION = 1
HEADER = struct.Struct("<4sBBI")
HELLO_PAYLOAD = struct.Struct("<IdB")

MSG_HELLO = 1
MSG_PROMPT = 2
MSG_FRAME = 3
MSG_OUT = 4
MSG_END = 5

WIRE_TEXT_PAD = -1
DEFAULT_FRAME_TIMEOUT_S = 10.0


class Transport:
    """Exact-read byte stream over a socket or a file-like pair."""

    def __init__(self, reader, writer, close=None):
        self._reader = reader
        self._writer = writer
        self._close = close

    @classmethod
    def from_socket(cls, sock: socket.socket, timeout: float | None = None) -> "Transport":
        sock.settimeout(timeout)
        rf = sock.makefile("rb")
        wf = sock.makefile("wb")

        def close():
            rf.close()
            wf.close()
            sock.close()

        return cls(rf, wf, close)

    def send(self, data: bytes) -> None:
        self._writer.write(data)
        self._writer.flush()

    def recv_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining:
            try:
                chunk = self._reader.read(remaining)
            except (socket.timeout, TimeoutError) as e:
                raise TransportError(f"timed out waiting for {remaining} bytes") from e
            if not chunk:
                raise TransportError(
                    f"stream closed with {remaining} of {n} bytes outstanding"
                )
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        if self._close:
            self._close()


def pack_message(msg_type: int, payload: bytes = b"") -> bytes:
    return HEADER.pack(MAGIC, VERSION, msg_type, len(payload)) + payload


def read_message(transport: Transport) -> tuple[int, bytes]:
    magic, version, msg_type, length = HEADER.unpack(transport.recv_exact(HEADER.size))
    if magic != MAGIC:
        raise HandshakeError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise HandshakeError(f"unsupported protocol version {version}")
    payload = transport.recv_exact(length) if length else b""
    return msg_type, payload


def pack_hello(clock: FrameClock, codebooks: int) -> bytes:
    return pack_message(
        MSG_HELLO, HELLO_PAYLOAD.pack(clock.sample_rate, clock.frame_rate, codebooks)
    )


def unpack_hello(payload: bytes) -> tuple[int, float, int]:
    if len(payload) != HELLO_PAYLOAD.size:
        raise ProtocolError(
            f"HELLO payload: expected {HELLO_PAYLOAD.size} bytes, received {len(payload)}"
        )
    return HELLO_PAYLOAD.unpack(payload)


def pack_frame(frame: AgentFrameIn) -> bytes:
    return pack_message(
        MSG_FRAME, struct.pack("<I", frame.frame_index) + frame.samples.tobytes()
    )


def unpack_frame(payload: bytes, samples_per_frame: int) -> AgentFrameIn:
    expected = 4 + 2 * samples_per_frame
    if len(payload) != expected:
        raise ProtocolError(
            f"FRAME payload: expected {expected} bytes, received {len(payload)}"
        )
    (index,) = struct.unpack_from("<I", payload)
    samples = np.frombuffer(payload, dtype="<i2", offset=4)
    return AgentFrameIn(index, samples)


def pack_out(out: AgentFrameOut) -> bytes:
    token = WIRE_TEXT_PAD if out.text_token is None else out.text_token
    return pack_message(MSG_OUT, out.samples.tobytes() + struct.pack("<i", token))


def unpack_out(payload: bytes, samples_per_frame: int) -> AgentFrameOut:
    expected = 2 * samples_per_frame + 4
    if len(payload) != expected:
        raise ProtocolError(
            f"OUT payload: expected {expected} bytes, received {len(payload)}"
        )
    samples = np.frombuffer(payload, dtype="<i2", count=samples_per_frame)
    (token,) = struct.unpack_from("<i", payload, 2 * samples_per_frame)
    return AgentFrameOut(samples, None if token == WIRE_TEXT_PAD else token)


def serve_session(agent: Agent, transport: Transport, clock: FrameClock, codebooks: int = DEFAULT_CODEBOOKS) -> int:
    """Run one lockstep session over an open transport.

    Returns the number of frames served. Raises HandshakeError when the
    peer's HELLO parameters do not match this server's configuration
    (after replying with our own parameters so the peer can tell too).
    """
    msg_type, payload = read_message(transport)
    if msg_type != MSG_HELLO:
        raise ProtocolError(f"expected HELLO first, got message type {msg_type}")
    rate, frame_rate, k = unpack_hello(payload)
    transport.send(pack_hello(clock, codebooks))
    if (rate, frame_rate, k) != (clock.sample_rate, clock.frame_rate, codebooks):
        raise HandshakeError(
            f"negotiation mismatch: peer ({rate}, {frame_rate}, {k}) vs "
            f"local ({clock.sample_rate}, {clock.frame_rate}, {codebooks})"
        )

    prompt = None
    msg_type, payload = read_message(transport)
    if msg_type == MSG_PROMPT:
        if payload:
            import io
            from .prompts import load_prompt_bundle

            prompt = load_prompt_bundle(io.BytesIO(payload))
        transport.send(pack_message(MSG_PROMPT))
        msg_type, payload = read_message(transport)

    session = AgentSession(agent, clock, prompt)
    spf = clock.samples_per_frame
    while msg_type != MSG_END:
        if msg_type != MSG_FRAME:
            raise ProtocolError(f"expected FRAME or END, got message type {msg_type}")
        frame = unpack_frame(payload, spf)
        transport.send(pack_out(session.step(frame)))
        msg_type, payload = read_message(transport)
    session.close()
    transport.send(pack_message(MSG_END))
    return session.frames_processed


class WireAgent(Agent):
    """In-process stand-in for a remote agent behind the wire protocol.

    Satisfies the Agent interface, so sessions are transport-transparent
    for the harness.
    """

    def __init__(
        self,
        transport: Transport,
        codebooks: int = DEFAULT_CODEBOOKS,
        send_prompt_bundle: bool = True,
        vocab=None,
    ):
        self.transport = transport
        self.codebooks = codebooks
        self.send_prompt_bundle = send_prompt_bundle
        self.vocab = vocab  # agent-supplied token table, loaded out-of-band
        self._frame_index = 0

    def vocabulary(self):
        return self.vocab

    def start(self, prompt: HybridPrompt | None, clock: FrameClock) -> None:
        super().start(prompt, clock)
        self.transport.send(pack_hello(clock, self.codebooks))
        msg_type, payload = read_message(self.transport)
        if msg_type != MSG_HELLO:
            raise HandshakeError(f"expected HELLO reply, got message type {msg_type}")
        got = unpack_hello(payload)
        want = (clock.sample_rate, clock.frame_rate, self.codebooks)
        if got != want:
            raise HandshakeError(f"negotiation mismatch: server {got} vs local {want}")

        bundle = b""
        if prompt is not None and self.send_prompt_bundle:
            import io
            from .prompts import save_prompt_bundle

            bio = io.BytesIO()
            save_prompt_bundle(prompt, bio)
            bundle = bio.getvalue()
        self.transport.send(pack_message(MSG_PROMPT, bundle))
        msg_type, _ = read_message(self.transport)
        if msg_type != MSG_PROMPT:
            raise ProtocolError(f"expected PROMPT ack, got message type {msg_type}")

    def step(self, frame: AgentFrameIn) -> AgentFrameOut:
        self.transport.send(pack_frame(frame))
        try:
            msg_type, payload = read_message(self.transport)
        except TransportError as e:
            raise TransportError(str(e), frame_index=frame.frame_index) from e
        if msg_type != MSG_OUT:
            raise ProtocolError(f"expected OUT, got message type {msg_type}")
        self._frame_index = frame.frame_index + 1
        return unpack_out(payload, self.clock.samples_per_frame)

    def finish(self) -> None:
        self.transport.send(pack_message(MSG_END))
        msg_type, _ = read_message(self.transport)
        if msg_type != MSG_END:
            raise ProtocolError(f"expected END ack, got message type {msg_type}")
        self.transport.close()


def connect_wire(
    endpoint: str,
    codebooks: int = DEFAULT_CODEBOOKS,
    timeout: float = DEFAULT_FRAME_TIMEOUT_S,
    vocab=None,
) -> WireAgent:
    """Open a ``tcp:host:port`` endpoint as a WireAgent."""
    host, port = parse_endpoint(endpoint)
    sock = socket.create_connection((host, port), timeout=timeout)
    return WireAgent(Transport.from_socket(sock, timeout), codebooks, vocab=vocab)


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    parts = endpoint.split(":")
    if len(parts) != 3 or parts[0] != "tcp":
        raise InvalidArgument(f"endpoint must look like tcp:host:port, got {endpoint!r}")
    try:
        return parts[1], int(parts[2])
    except ValueError as e:
        raise InvalidArgument(f"bad port in endpoint {endpoint!r}") from e


def serve_forever(
    agent_factory,
    host: str,
    port: int,
    clock: FrameClock | None = None,
    codebooks: int = DEFAULT_CODEBOOKS,
    max_sessions: int | None = None,
    ready_callback=None,
) -> int:
    """Accept TCP connections and serve one session per connection.

    Sessions run sequentially. Returns the number served (bounded by
    ``max_sessions`` when given, otherwise loops until interrupted).
    """
    clock = clock or FrameClock()
    served = 0
    with socket.create_server((host, port)) as server:
        if ready_callback:
            ready_callback(server.getsockname()[1])
        while max_sessions is None or served < max_sessions:
            conn, _ = server.accept()
            transport = Transport.from_socket(conn, DEFAULT_FRAME_TIMEOUT_S)
            try:
                serve_session(agent_factory(), transport, clock, codebooks)
            except (ProtocolError, TransportError):
                pass  # drop the session, keep serving
            finally:
                transport.close()
            served += 1
    return served
