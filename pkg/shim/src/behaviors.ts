// Reference agent behaviors. Each consumes one user frame per step and
// returns exactly one agent frame (audio plus a text token, -1 = pad).

import { Clock, PAD_TOKEN, ProtocolFailure, samplesPerFrame } from './protocol.js';

export const FULL_SCALE = 32768;
export const THRESHOLD_DBFS = -40;
export const MIN_TURN_FRAMES = 2;

export const TRANSCRIPT = 'copy that';
export const PAD_STRING = '<pad>';

export interface BehaviorOut {
  samples: Int16Array;
  token: number;
}

export interface Behavior {
  start(clock: Clock): void;
  step(index: number, samples: Int16Array): BehaviorOut;
}

// Token table: id 0 is pad, then the transcript words in order.
export function vocabularyTsv(): string {
  const lines = [`0\t${PAD_STRING}`];
  TRANSCRIPT.split(/\s+/).forEach((word, i) => lines.push(`${i + 1}\t${word}`));
  return lines.join('\n') + '\n';
}

// The scripted reply: an integer triangle wave (period 60 samples,
// peak 12000). Integer-only arithmetic, so any implementation
// reproduces it bit for bit.
export function scriptedResponse(sampleRate: number): Int16Array {
  const total = Math.trunc(1.2 * sampleRate);
  const out = new Int16Array(total);
  for (let n = 0; n < total; n++) {
    const phase = n % 60;
    const tri = phase < 30 ? phase : 60 - phase;
    out[n] = (tri - 15) * 800;
  }
  return out;
}

// Round half to even, matching the harness's latency quantization.
function roundHalfEven(x: number): number {
  const floor = Math.floor(x);
  const diff = x - floor;
  if (diff > 0.5) return floor + 1;
  if (diff < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

function frameActive(samples: Int16Array): boolean {
  let sum = 0;
  for (let i = 0; i < samples.length; i++) {
    sum += samples[i] * samples[i];
  }
  const rms = Math.sqrt(sum / samples.length);
  if (rms <= 0) return false;
  return 20 * Math.log10(rms / FULL_SCALE) >= THRESHOLD_DBFS;
}

export class SilentBehavior implements Behavior {
  private zeros!: Int16Array;

  start(clock: Clock): void {
    this.zeros = new Int16Array(samplesPerFrame(clock));
  }

  step(): BehaviorOut {
    return { samples: this.zeros, token: PAD_TOKEN };
  }
}

export class EchoBehavior implements Behavior {
  private zeros!: Int16Array;
  private history: Int16Array[] = [];

  constructor(private delayFrames: number) {
    if (delayFrames < 0) throw new ProtocolFailure('echo delay must be non-negative');
  }

  start(clock: Clock): void {
    this.zeros = new Int16Array(samplesPerFrame(clock));
    this.history = [];
  }

  step(index: number, samples: Int16Array): BehaviorOut {
    this.history.push(samples);
    const at = index - this.delayFrames;
    const out = at >= 0 ? this.history[at] : this.zeros;
    return { samples: out, token: PAD_TOKEN };
  }
}

// Waits for the user turn to end, then plays the scripted reply.
// Turn end is the first silent input frame after at least
// MIN_TURN_FRAMES active ones; the reply begins exactly
// round(latency * frameRate) frames after detection.
export class ScriptedBehavior implements Behavior {
  private zeros!: Int16Array;
  private respFrames: Int16Array[] = [];
  private tokens: number[] = [];
  private latencyFrames = 0;
  private activeRun = 0;
  private startAt: number | null = null;
  private playPos: number | null = null;

  constructor(private latencyS: number) {
    if (latencyS < 0) throw new ProtocolFailure('latency must be non-negative');
  }

  start(clock: Clock): void {
    const spf = samplesPerFrame(clock);
    this.zeros = new Int16Array(spf);
    this.latencyFrames = roundHalfEven(this.latencyS * clock.frameRate);
    this.tokens = TRANSCRIPT.split(/\s+/).map((_, i) => i + 1);

    const response = scriptedResponse(clock.sampleRate);
    const frames = Math.ceil(response.length / spf);
    this.respFrames = [];
    for (let f = 0; f < frames; f++) {
      const frame = new Int16Array(spf);
      frame.set(response.subarray(f * spf, (f + 1) * spf));
      this.respFrames.push(frame);
    }
    this.activeRun = 0;
    this.startAt = null;
    this.playPos = null;
  }

  step(index: number, samples: Int16Array): BehaviorOut {
    if (frameActive(samples)) {
      this.activeRun += 1;
    } else {
      const ended = this.activeRun >= MIN_TURN_FRAMES;
      this.activeRun = 0;
      const idle = this.playPos === null && this.startAt === null;
      if (ended && idle) {
        this.startAt = index + this.latencyFrames;
      }
    }

    if (this.startAt !== null && index >= this.startAt) {
      this.playPos = 0;
      this.startAt = null;
    }

    let out = this.zeros;
    let token = PAD_TOKEN;
    if (this.playPos !== null) {
      out = this.respFrames[this.playPos];
      if (this.playPos < this.tokens.length) token = this.tokens[this.playPos];
      this.playPos += 1;
      if (this.playPos >= this.respFrames.length) this.playPos = null;
    }
    return { samples: out, token };
  }
}

export function makeBehavior(name: string, opts: { latency: number; echoDelay: number }): Behavior {
  switch (name) {
    case 'silent':
      return new SilentBehavior();
    case 'echo':
      return new EchoBehavior(opts.echoDelay);
    case 'scripted':
      return new ScriptedBehavior(opts.latency);
    default:
      throw new ProtocolFailure(`unknown behavior ${JSON.stringify(name)}`);
  }
}
