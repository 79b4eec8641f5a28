import Papa from 'papaparse';

/** One parsed metrics CSV from the observer harness. */
export interface TraceFile {
  columns: string[];
  rows: Record<string, number>[];
}

/** A maximal stretch of constant GNSS availability. */
export interface SigmaSpan {
  t0: number;
  t1: number;
  sigma: number;
}

const REQUIRED = [
  't', 'att_err', 'vel_err', 'pos_err', 'lm_err_rms', 'lyap', 'sigma',
  'true_x_1', 'true_x_2', 'true_x_3', 'est_x_1', 'est_x_2', 'est_x_3',
];

export function parseTrace(csvText: string): TraceFile {
  const parsed = Papa.parse<Record<string, number>>(csvText.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`malformed trace CSV: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  const missing = REQUIRED.filter((c) => !columns.includes(c));
  if (missing.length > 0) {
    throw new Error(`trace is missing required column(s): ${missing.join(', ')}`);
  }
  if (parsed.data.length === 0) {
    throw new Error('trace has no data rows');
  }
  for (const row of parsed.data) {
    for (const c of REQUIRED) {
      if (typeof row[c] !== 'number' || !Number.isFinite(row[c])) {
        throw new Error(`non-numeric value in column ${c} at t=${row.t}`);
      }
    }
  }
  return { columns, rows: parsed.data };
}

/** Contiguous availability spans, in time order, covering the whole trace. */
export function sigmaSpans(trace: TraceFile): SigmaSpan[] {
  const spans: SigmaSpan[] = [];
  for (const row of trace.rows) {
    const last = spans[spans.length - 1];
    if (last !== undefined && last.sigma === row.sigma) {
      last.t1 = row.t;
    } else {
      spans.push({ t0: row.t, t1: row.t, sigma: row.sigma });
    }
  }
  return spans;
}

/** Times where the logged availability flag flips (start of each new span). */
export function shadingBoundaries(trace: TraceFile): number[] {
  return sigmaSpans(trace).slice(1).map((s) => s.t0);
}

export function column(trace: TraceFile, name: string): number[] {
  if (!trace.columns.includes(name)) {
    throw new Error(`trace is missing required column(s): ${name}`);
  }
  return trace.rows.map((r) => r[name]);
}
