// CLI entry point: serve one wire-protocol session, or export the
// scripted behavior's token table.

import * as fs from 'node:fs';

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { makeBehavior, vocabularyTsv } from './behaviors.js';
import { startServer } from './server.js';

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .scriptName('duplexbench-shim')
    .command(
      'serve',
      'serve one agent session over TCP, then exit',
      (y) =>
        y
          .option('host', { type: 'string', default: '127.0.0.1' })
          .option('port', { type: 'number', default: 0, describe: '0 picks a free port' })
          .option('behavior', {
            type: 'string',
            default: 'silent',
            choices: ['silent', 'echo', 'scripted'] as const,
          })
          .option('latency', { type: 'number', default: 0.4, describe: 'scripted reply delay, seconds' })
          .option('echo-delay', { type: 'number', default: 0, describe: 'echo shift, frames' })
          .option('sample-rate', { type: 'number', default: 24000 })
          .option('frame-rate', { type: 'number', default: 12.5 })
          .option('codebooks', { type: 'number', default: 8 }),
      async (argv) => {
        const behavior = makeBehavior(argv.behavior, {
          latency: argv.latency,
          echoDelay: argv['echo-delay'],
        });
        const { port, done } = await startServer({
          host: argv.host,
          port: argv.port,
          clock: { sampleRate: argv['sample-rate'], frameRate: argv['frame-rate'] },
          codebooks: argv.codebooks,
          behavior,
        });
        console.log(`ready on port ${port}`);
        process.exit(await done);
      },
    )
    .command(
      'vocab',
      'write the scripted behavior token table as TSV',
      (y) => y.option('out', { type: 'string', demandOption: true }),
      (argv) => {
        fs.writeFileSync(argv.out, vocabularyTsv());
        console.log(`wrote ${argv.out}`);
      },
    )
    .demandCommand(1, 'pick a command: serve or vocab')
    .strict()
    .fail((message, error) => {
      console.error(`error: ${message ?? error?.message}`);
      process.exit(1);
    })
    .parseAsync();
}

main().catch((e: Error) => {
  console.error(`error: ${e.message}`);
  process.exit(2);
});
