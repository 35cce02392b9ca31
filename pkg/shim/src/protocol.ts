// Framed agent wire protocol: a 10-byte little-endian header
// (magic "DPLX", version u8, type u8, payload length u32) followed by
// the payload. Every client message gets exactly one server reply.

export const MAGIC = Buffer.from('DPLX', 'ascii');
export const VERSION = 1;
export const HEADER_SIZE = 10;
export const HELLO_PAYLOAD_SIZE = 13; // sample rate u32, frame rate f64, codebooks u8

export const MSG_HELLO = 1;
export const MSG_PROMPT = 2;
export const MSG_FRAME = 3;
export const MSG_OUT = 4;
export const MSG_END = 5;

export const PAD_TOKEN = -1;

export class HandshakeFailure extends Error {}
export class ProtocolFailure extends Error {}
export class TransportFailure extends Error {}

export interface Clock {
  sampleRate: number;
  frameRate: number;
}

export interface Hello extends Clock {
  codebooks: number;
}

export interface Message {
  type: number;
  payload: Buffer;
}

export function samplesPerFrame(clock: Clock): number {
  const spf = clock.sampleRate / clock.frameRate;
  if (!Number.isInteger(spf) || spf <= 0) {
    throw new ProtocolFailure(
      `sample rate ${clock.sampleRate} is not a whole multiple of frame rate ${clock.frameRate}`,
    );
  }
  return spf;
}

export function packMessage(type: number, payload: Buffer = Buffer.alloc(0)): Buffer {
  const head = Buffer.alloc(HEADER_SIZE);
  MAGIC.copy(head, 0);
  head.writeUInt8(VERSION, 4);
  head.writeUInt8(type, 5);
  head.writeUInt32LE(payload.length, 6);
  return payload.length ? Buffer.concat([head, payload]) : head;
}

export function packHello(hello: Hello): Buffer {
  const payload = Buffer.alloc(HELLO_PAYLOAD_SIZE);
  payload.writeUInt32LE(hello.sampleRate, 0);
  payload.writeDoubleLE(hello.frameRate, 4);
  payload.writeUInt8(hello.codebooks, 12);
  return packMessage(MSG_HELLO, payload);
}

export function unpackHello(payload: Buffer): Hello {
  if (payload.length !== HELLO_PAYLOAD_SIZE) {
    throw new ProtocolFailure(
      `HELLO payload: expected ${HELLO_PAYLOAD_SIZE} bytes, received ${payload.length}`,
    );
  }
  return {
    sampleRate: payload.readUInt32LE(0),
    frameRate: payload.readDoubleLE(4),
    codebooks: payload.readUInt8(12),
  };
}

export interface Frame {
  index: number;
  samples: Int16Array;
}

export function unpackFrame(payload: Buffer, spf: number): Frame {
  const expected = 4 + 2 * spf;
  if (payload.length !== expected) {
    throw new ProtocolFailure(
      `FRAME payload: expected ${expected} bytes, received ${payload.length}`,
    );
  }
  const samples = new Int16Array(spf);
  for (let i = 0; i < spf; i++) {
    samples[i] = payload.readInt16LE(4 + 2 * i);
  }
  return { index: payload.readUInt32LE(0), samples };
}

export interface Out {
  samples: Int16Array;
  token: number;
}

export function unpackOut(payload: Buffer, spf: number): Out {
  const expected = 2 * spf + 4;
  if (payload.length !== expected) {
    throw new ProtocolFailure(
      `OUT payload: expected ${expected} bytes, received ${payload.length}`,
    );
  }
  const samples = new Int16Array(spf);
  for (let i = 0; i < spf; i++) {
    samples[i] = payload.readInt16LE(2 * i);
  }
  return { samples, token: payload.readInt32LE(2 * spf) };
}

export function packOut(samples: Int16Array, token: number, spf: number): Buffer {
  if (samples.length !== spf) {
    throw new ProtocolFailure(`OUT frame has ${samples.length} samples, expected ${spf}`);
  }
  const payload = Buffer.alloc(2 * spf + 4);
  for (let i = 0; i < spf; i++) {
    payload.writeInt16LE(samples[i], 2 * i);
  }
  payload.writeInt32LE(token, 2 * spf);
  return packMessage(MSG_OUT, payload);
}

// Accumulates socket chunks and yields whole protocol messages.
export class MessageReader {
  private buf: Buffer = Buffer.alloc(0);
  private ready: Message[] = [];
  private waiter: { resolve: (m: Message) => void; reject: (e: Error) => void } | null = null;
  private failure: Error | null = null;

  push(chunk: Buffer): void {
    if (this.failure) return;
    this.buf = this.buf.length ? Buffer.concat([this.buf, chunk]) : chunk;
    try {
      this.drain();
    } catch (e) {
      this.fail(e as Error);
    }
  }

  private drain(): void {
    while (this.buf.length >= HEADER_SIZE) {
      if (!this.buf.subarray(0, 4).equals(MAGIC)) {
        throw new HandshakeFailure(`bad magic ${JSON.stringify(this.buf.subarray(0, 4).toString('latin1'))}`);
      }
      const version = this.buf.readUInt8(4);
      if (version !== VERSION) {
        throw new HandshakeFailure(`unsupported protocol version ${version}`);
      }
      const length = this.buf.readUInt32LE(6);
      if (this.buf.length < HEADER_SIZE + length) return;
      const type = this.buf.readUInt8(5);
      const payload = Buffer.from(this.buf.subarray(HEADER_SIZE, HEADER_SIZE + length));
      this.buf = this.buf.subarray(HEADER_SIZE + length);
      this.deliver({ type, payload });
    }
  }

  private deliver(message: Message): void {
    if (this.waiter) {
      const w = this.waiter;
      this.waiter = null;
      w.resolve(message);
    } else {
      this.ready.push(message);
    }
  }

  // Peer closed the stream; only fatal if someone is still reading.
  end(): void {
    this.fail(new TransportFailure('stream closed mid-session'));
  }

  fail(error: Error): void {
    if (this.failure) return;
    this.failure = error;
    if (this.waiter) {
      const w = this.waiter;
      this.waiter = null;
      w.reject(error);
    }
  }

  next(): Promise<Message> {
    if (this.ready.length) return Promise.resolve(this.ready.shift()!);
    if (this.failure) return Promise.reject(this.failure);
    return new Promise((resolve, reject) => {
      this.waiter = { resolve, reject };
    });
  }
}
