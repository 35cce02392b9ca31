import * as fs from 'node:fs';
import * as net from 'node:net';
import { describe, expect, it } from 'vitest';

import { makeBehavior } from '../src/behaviors';
import {
  MessageReader,
  MSG_END,
  MSG_FRAME,
  MSG_HELLO,
  MSG_OUT,
  MSG_PROMPT,
  packHello,
  packMessage,
  PAD_TOKEN,
  unpackHello,
  unpackOut,
} from '../src/protocol';
import { EXIT_HANDSHAKE, EXIT_OK, EXIT_RUNTIME, startServer } from '../src/server';

const CLOCK = { sampleRate: 24000, frameRate: 12.5 };
const SPF = 1920;
const GOLDEN = new URL('../../fixtures/golden/silent_session.bin', import.meta.url);

function serve(behavior: string, clock = CLOCK) {
  return startServer({
    host: '127.0.0.1',
    port: 0,
    clock,
    codebooks: 8,
    behavior: makeBehavior(behavior, { latency: 0.4, echoDelay: 0 }),
  });
}

async function connect(port: number) {
  const socket = net.createConnection({ host: '127.0.0.1', port });
  await new Promise<void>((resolve, reject) => {
    socket.once('connect', resolve);
    socket.once('error', reject);
  });
  const reader = new MessageReader();
  socket.on('data', (chunk) => reader.push(chunk));
  socket.on('end', () => reader.end());
  return { socket, reader };
}

function packFrame(index: number, samples: Int16Array): Buffer {
  const payload = Buffer.alloc(4 + 2 * samples.length);
  payload.writeUInt32LE(index, 0);
  for (let i = 0; i < samples.length; i++) payload.writeInt16LE(samples[i], 4 + 2 * i);
  return packMessage(MSG_FRAME, payload);
}

describe('one-session server', () => {
  it('runs a full echo session and exits 0', async () => {
    const { port, done } = await serve('echo');
    const { socket, reader } = await connect(port);

    socket.write(packHello({ ...CLOCK, codebooks: 8 }));
    const hello = await reader.next();
    expect(hello.type).toBe(MSG_HELLO);
    expect(unpackHello(hello.payload)).toEqual({ ...CLOCK, codebooks: 8 });

    socket.write(packMessage(MSG_PROMPT));
    expect((await reader.next()).type).toBe(MSG_PROMPT);

    const samples = new Int16Array(SPF).fill(777);
    socket.write(packFrame(0, samples));
    const reply = await reader.next();
    expect(reply.type).toBe(MSG_OUT);
    const out = unpackOut(reply.payload, SPF);
    expect(out.token).toBe(PAD_TOKEN);
    expect(Array.from(out.samples)).toEqual(Array.from(samples));

    socket.write(packMessage(MSG_END));
    expect((await reader.next()).type).toBe(MSG_END);
    socket.end();
    expect(await done).toBe(EXIT_OK);
  });

  it('skipping the prompt message is allowed', async () => {
    const { port, done } = await serve('silent');
    const { socket, reader } = await connect(port);

    socket.write(packHello({ ...CLOCK, codebooks: 8 }));
    await reader.next();
    socket.write(packFrame(0, new Int16Array(SPF)));
    expect((await reader.next()).type).toBe(MSG_OUT);
    socket.write(packMessage(MSG_END));
    await reader.next();
    socket.end();
    expect(await done).toBe(EXIT_OK);
  });

  it('replies hello, then fails the session on a clock mismatch', async () => {
    const { port, done } = await serve('silent');
    const { socket, reader } = await connect(port);

    socket.write(packHello({ sampleRate: 24000, frameRate: 25, codebooks: 8 }));
    const hello = await reader.next();
    expect(unpackHello(hello.payload).frameRate).toBe(12.5); // server's own clock
    expect(await done).toBe(EXIT_HANDSHAKE);
    socket.end();
  });

  it('rejects out-of-order frames', async () => {
    const { port, done } = await serve('silent');
    const { socket, reader } = await connect(port);

    socket.write(packHello({ ...CLOCK, codebooks: 8 }));
    await reader.next();
    socket.write(packFrame(5, new Int16Array(SPF)));
    expect(await done).toBe(EXIT_RUNTIME);
    socket.end();
  });

  it('replays the recorded golden session byte for byte', async () => {
    const data = fs.readFileSync(GOLDEN);
    const records: Array<{ direction: number; payload: Buffer }> = [];
    let off = 0;
    while (off < data.length) {
      const direction = data.readUInt8(off);
      const length = data.readUInt32LE(off + 1);
      off += 5;
      records.push({ direction, payload: data.subarray(off, off + length) });
      off += length;
    }
    expect(records.length).toBeGreaterThan(0);

    const { port, done } = await serve('silent');
    const { socket, reader } = await connect(port);
    for (const record of records) {
      if (record.direction === 0) {
        socket.write(record.payload);
      } else {
        const got = await reader.next();
        const reply = packMessage(got.type, got.payload);
        expect(reply.equals(record.payload)).toBe(true);
      }
    }
    socket.end();
    expect(await done).toBe(EXIT_OK);
  });
});
