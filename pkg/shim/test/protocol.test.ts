import { describe, expect, it } from 'vitest';

import {
  HEADER_SIZE,
  HandshakeFailure,
  MessageReader,
  MSG_END,
  MSG_FRAME,
  MSG_HELLO,
  MSG_OUT,
  packHello,
  packMessage,
  packOut,
  PAD_TOKEN,
  ProtocolFailure,
  unpackFrame,
  unpackHello,
} from '../src/protocol';

const SPF = 1920;

describe('message framing', () => {
  it('lays out the header as magic, version, type, length', () => {
    const msg = packMessage(MSG_END, Buffer.from([7, 7]));
    expect(msg.length).toBe(HEADER_SIZE + 2);
    expect(msg.subarray(0, 4).toString('ascii')).toBe('DPLX');
    expect(msg.readUInt8(4)).toBe(1);
    expect(msg.readUInt8(5)).toBe(MSG_END);
    expect(msg.readUInt32LE(6)).toBe(2);
  });

  it('round-trips the hello payload', () => {
    const hello = { sampleRate: 24000, frameRate: 12.5, codebooks: 8 };
    const msg = packHello(hello);
    expect(msg.length).toBe(HEADER_SIZE + 13);
    expect(unpackHello(msg.subarray(HEADER_SIZE))).toEqual(hello);
  });

  it('rejects short hello payloads naming both lengths', () => {
    expect(() => unpackHello(Buffer.alloc(5))).toThrow(/expected 13 bytes, received 5/);
  });

  it('round-trips frames and out messages', () => {
    const samples = new Int16Array(SPF);
    samples[0] = -32768;
    samples[1] = 32767;
    samples[SPF - 1] = 123;

    const framePayload = Buffer.alloc(4 + 2 * SPF);
    framePayload.writeUInt32LE(41, 0);
    for (let i = 0; i < SPF; i++) framePayload.writeInt16LE(samples[i], 4 + 2 * i);
    const frame = unpackFrame(framePayload, SPF);
    expect(frame.index).toBe(41);
    expect(Array.from(frame.samples)).toEqual(Array.from(samples));

    const out = packOut(samples, PAD_TOKEN, SPF);
    expect(out.readUInt8(5)).toBe(MSG_OUT);
    expect(out.readUInt32LE(6)).toBe(2 * SPF + 4);
    expect(out.readInt32LE(HEADER_SIZE + 2 * SPF)).toBe(-1);
    expect(out.readInt16LE(HEADER_SIZE)).toBe(-32768);
  });

  it('rejects frame payloads of the wrong size', () => {
    expect(() => unpackFrame(Buffer.alloc(10), SPF)).toThrow(ProtocolFailure);
  });
});

describe('message reader', () => {
  it('reassembles messages split across arbitrary chunks', async () => {
    const reader = new MessageReader();
    const msg = packHello({ sampleRate: 24000, frameRate: 12.5, codebooks: 8 });
    for (let i = 0; i < msg.length; i += 3) {
      reader.push(msg.subarray(i, Math.min(i + 3, msg.length)));
    }
    const got = await reader.next();
    expect(got.type).toBe(MSG_HELLO);
    expect(unpackHello(got.payload).codebooks).toBe(8);
  });

  it('delivers back-to-back messages in order', async () => {
    const reader = new MessageReader();
    reader.push(Buffer.concat([packMessage(MSG_FRAME), packMessage(MSG_END)]));
    expect((await reader.next()).type).toBe(MSG_FRAME);
    expect((await reader.next()).type).toBe(MSG_END);
  });

  it('fails on bad magic', async () => {
    const reader = new MessageReader();
    reader.push(Buffer.from('NOPE\x01\x05\x00\x00\x00\x00', 'latin1'));
    await expect(reader.next()).rejects.toBeInstanceOf(HandshakeFailure);
  });

  it('fails on an unsupported version', async () => {
    const bad = packMessage(MSG_END);
    bad.writeUInt8(9, 4);
    const reader = new MessageReader();
    reader.push(bad);
    await expect(reader.next()).rejects.toThrow(/unsupported protocol version 9/);
  });

  it('reports a mid-message disconnect', async () => {
    const reader = new MessageReader();
    reader.push(packMessage(MSG_END).subarray(0, 4));
    reader.end();
    await expect(reader.next()).rejects.toThrow(/closed mid-session/);
  });
});
