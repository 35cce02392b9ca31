// One-session TCP server. The process accepts a single connection,
// runs it to completion, and exits; supervisors restart it to serve
// again. Exit codes: 0 clean session, 2 protocol or transport failure,
// 3 negotiation mismatch.

import * as net from 'node:net';

import { Behavior } from './behaviors.js';
import {
  Clock,
  HandshakeFailure,
  Message,
  MessageReader,
  MSG_END,
  MSG_FRAME,
  MSG_HELLO,
  MSG_PROMPT,
  packHello,
  packMessage,
  packOut,
  ProtocolFailure,
  samplesPerFrame,
  unpackFrame,
  unpackHello,
} from './protocol.js';

export interface ServeConfig {
  host: string;
  port: number;
  clock: Clock;
  codebooks: number;
  behavior: Behavior;
}

export const EXIT_OK = 0;
export const EXIT_RUNTIME = 2;
export const EXIT_HANDSHAKE = 3;

export async function runSession(
  socket: net.Socket,
  reader: MessageReader,
  config: ServeConfig,
): Promise<void> {
  const spf = samplesPerFrame(config.clock);

  let msg: Message = await reader.next();
  if (msg.type !== MSG_HELLO) {
    throw new ProtocolFailure(`expected HELLO, got message type ${msg.type}`);
  }
  const peer = unpackHello(msg.payload);
  const local = {
    sampleRate: config.clock.sampleRate,
    frameRate: config.clock.frameRate,
    codebooks: config.codebooks,
  };
  // Reply first so the peer can observe the mismatch too.
  socket.write(packHello(local));
  if (
    peer.sampleRate !== local.sampleRate ||
    peer.frameRate !== local.frameRate ||
    peer.codebooks !== local.codebooks
  ) {
    throw new HandshakeFailure(
      `negotiation mismatch: peer (${peer.sampleRate}, ${peer.frameRate}, ${peer.codebooks})` +
        ` vs local (${local.sampleRate}, ${local.frameRate}, ${local.codebooks})`,
    );
  }

  config.behavior.start(config.clock);

  msg = await reader.next();
  if (msg.type === MSG_PROMPT) {
    // Prompt bundles configure model-side state; the reference
    // behaviors have none, so the bundle is acknowledged and dropped.
    socket.write(packMessage(MSG_PROMPT));
    msg = await reader.next();
  }

  let expected = 0;
  while (msg.type !== MSG_END) {
    if (msg.type !== MSG_FRAME) {
      throw new ProtocolFailure(`expected FRAME, got message type ${msg.type}`);
    }
    const frame = unpackFrame(msg.payload, spf);
    if (frame.index !== expected) {
      throw new ProtocolFailure(`expected frame ${expected}, received frame ${frame.index}`);
    }
    expected += 1;
    const out = config.behavior.step(frame.index, frame.samples);
    socket.write(packOut(out.samples, out.token, spf));
    msg = await reader.next();
  }
  socket.write(packMessage(MSG_END));
}

export interface RunningServer {
  port: number;
  done: Promise<number>;
}

export function startServer(config: ServeConfig): Promise<RunningServer> {
  return new Promise((resolveStart, rejectStart) => {
    const server = net.createServer();
    server.maxConnections = 1;

    const done = new Promise<number>((resolveDone) => {
      server.on('connection', (socket) => {
        server.close(); // one session per process
        const reader = new MessageReader();
        socket.on('data', (chunk) => reader.push(chunk));
        socket.on('end', () => reader.end());
        socket.on('error', (e) => reader.fail(e));

        runSession(socket, reader, config)
          .then(() => {
            socket.end();
            resolveDone(EXIT_OK);
          })
          .catch((e: Error) => {
            console.error(`error: ${e.message}`);
            socket.end();
            resolveDone(e instanceof HandshakeFailure ? EXIT_HANDSHAKE : EXIT_RUNTIME);
          });
      });
    });

    server.on('error', rejectStart);
    server.listen(config.port, config.host, () => {
      const addr = server.address() as net.AddressInfo;
      resolveStart({ port: addr.port, done });
    });
  });
}
