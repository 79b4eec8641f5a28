import { TraceFile, column, sigmaSpans } from './trace.js';
import {
  Box, axisTicks, extent, linearScale, polyline, rect, svgDocument, text,
} from './svg.js';

export const GNSS_ON_FILL = '#b7e4b0';
export const GNSS_OFF_FILL = '#f3b8b8';

const PANELS: { col: string; label: string }[] = [
  { col: 'att_err', label: 'attitude error [rad]' },
  { col: 'vel_err', label: 'velocity error [m/s]' },
  { col: 'pos_err', label: 'position error [m]' },
  { col: 'lm_err_rms', label: 'landmark error rms [m]' },
  { col: 'lyap', label: 'Lyapunov value' },
];

const LOG_FLOOR = 1e-12;

function log10Clamped(values: number[]): number[] {
  return values.map((v) => Math.log10(Math.max(v, LOG_FLOOR)));
}

function shade(box: Box, trace: TraceFile, tx: (t: number) => number): string[] {
  return sigmaSpans(trace).map((span, i, spans) => {
    // extend each span to the start of the next one so the fill is gapless
    const end = i + 1 < spans.length ? spans[i + 1].t0 : span.t1;
    return rect(
      { x: tx(span.t0), y: box.y, width: tx(end) - tx(span.t0), height: box.height },
      span.sigma === 1 ? GNSS_ON_FILL : GNSS_OFF_FILL,
      0.45,
    );
  });
}

/**
 * Stacked log-scale error panels over time, background shaded by GNSS
 * availability (green = fix available, red = outage).
 */
export function renderErrorPlot(trace: TraceFile): string {
  const width = 860;
  const panelHeight = 120;
  const margin = { left: 70, right: 20, top: 24, gap: 18, bottom: 40 };
  const height =
    margin.top + PANELS.length * (panelHeight + margin.gap) + margin.bottom;

  const t = column(trace, 't');
  const tx = linearScale(extent(t), [margin.left, width - margin.right]);
  const body: string[] = [];

  PANELS.forEach((panel, idx) => {
    const y0 = margin.top + idx * (panelHeight + margin.gap);
    const box: Box = {
      x: margin.left, y: y0, width: width - margin.left - margin.right,
      height: panelHeight,
    };
    body.push(...shade(box, trace, tx));

    const logs = log10Clamped(column(trace, panel.col));
    const [lo, hi] = extent(logs);
    const ty = linearScale([lo, hi === lo ? lo + 1 : hi], [y0 + panelHeight, y0]);
    body.push(polyline(t.map(tx), logs.map(ty), '#1f3c88', 1.4));

    body.push(text(margin.left, y0 - 6, panel.label));
    for (const tick of axisTicks([lo, hi === lo ? lo + 1 : hi], 3)) {
      body.push(text(margin.left - 8, ty(tick) + 4, `1e${tick.toFixed(1)}`, 'end', 9));
    }
  });

  const yAxis = height - margin.bottom + 18;
  for (const tick of axisTicks(extent(t), 6)) {
    body.push(text(tx(tick), yAxis, tick.toFixed(0), 'middle', 10));
  }
  body.push(text(width / 2, height - 8, 'time [s]', 'middle'));
  return svgDocument(width, height, body);
}
