import { readFileSync, writeFileSync } from 'fs';
import { TraceFile, parseTrace } from './trace.js';

/** Read and parse a metrics CSV (read-only; the file is never touched again). */
export function loadTrace(csvPath: string): TraceFile {
  return parseTrace(readFileSync(csvPath, 'utf8'));
}

export function runCli(
  argv: string[],
  name: string,
  render: (trace: TraceFile) => string,
): number {
  if (argv.length !== 2) {
    console.error(`usage: ${name} <metrics.csv> <out.svg>`);
    return 2;
  }
  const [csvPath, outPath] = argv;
  let svg: string;
  try {
    svg = render(loadTrace(csvPath));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  writeFileSync(outPath, svg);
  console.log(`wrote ${outPath}`);
  return 0;
}
