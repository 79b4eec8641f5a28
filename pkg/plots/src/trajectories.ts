import { TraceFile, column } from './trace.js';
import {
  axisTicks, extent, linearScale, polyline, svgDocument, text,
} from './svg.js';

export const TRUE_STROKE = '#222222';
export const EST_STROKE = '#d62728';

/**
 * Top-down (x-y) view of the true and estimated robot paths, plus a
 * side panel of altitude over time.
 */
export function renderTrajectoryPlot(trace: TraceFile): string {
  const width = 860;
  const height = 440;
  const margin = { left: 60, right: 20, top: 30, bottom: 45, split: 560 };

  const t = column(trace, 't');
  const tx1 = column(trace, 'true_x_1');
  const tx2 = column(trace, 'true_x_2');
  const tx3 = column(trace, 'true_x_3');
  const ex1 = column(trace, 'est_x_1');
  const ex2 = column(trace, 'est_x_2');
  const ex3 = column(trace, 'est_x_3');

  const body: string[] = [];

  // left panel: x-y path, equal margins, no aspect correction needed for a
  // quick-look figure
  const xdom = extent(tx1.concat(ex1));
  const ydom = extent(tx2.concat(ex2));
  const sx = linearScale(xdom, [margin.left, margin.split - 20]);
  const sy = linearScale(ydom, [height - margin.bottom, margin.top]);
  body.push(polyline(tx1.map(sx), tx2.map(sy), TRUE_STROKE, 1.6));
  body.push(polyline(ex1.map(sx), ex2.map(sy), EST_STROKE, 1.2));
  body.push(text(margin.left, margin.top - 10,
    'ground track: true (black) vs estimated (red)'));
  for (const tick of axisTicks(xdom, 5)) {
    body.push(text(sx(tick), height - margin.bottom + 16, tick.toFixed(1), 'middle', 10));
  }
  for (const tick of axisTicks(ydom, 5)) {
    body.push(text(margin.left - 8, sy(tick) + 4, tick.toFixed(1), 'end', 10));
  }
  body.push(text((margin.left + margin.split) / 2, height - 10, 'x [m]', 'middle'));

  // right panel: altitude vs time
  const tdom = extent(t);
  const zdom = extent(tx3.concat(ex3));
  const szx = linearScale(tdom, [margin.split + 30, width - margin.right]);
  const szy = linearScale(
    [zdom[0], zdom[1] === zdom[0] ? zdom[0] + 1 : zdom[1]],
    [height - margin.bottom, margin.top],
  );
  body.push(polyline(t.map(szx), tx3.map(szy), TRUE_STROKE, 1.6));
  body.push(polyline(t.map(szx), ex3.map(szy), EST_STROKE, 1.2));
  body.push(text(margin.split + 30, margin.top - 10, 'altitude z(t) [m]'));
  for (const tick of axisTicks(tdom, 4)) {
    body.push(text(szx(tick), height - margin.bottom + 16, tick.toFixed(0), 'middle', 10));
  }
  body.push(text((margin.split + width) / 2, height - 10, 'time [s]', 'middle'));

  return svgDocument(width, height, body);
}
