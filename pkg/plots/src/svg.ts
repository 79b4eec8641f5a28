/** Minimal SVG assembly helpers (no DOM, plain strings). */

export interface Box {
  x: number;
  y: number;
  width: number;
  height: number;
}

export function linearScale(domain: [number, number], range: [number, number]) {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

export function polyline(
  xs: number[], ys: number[], stroke: string, width = 1.2,
): string {
  const pts = xs.map((x, i) => `${x.toFixed(2)},${ys[i].toFixed(2)}`).join(' ');
  return `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`;
}

export function rect(box: Box, fill: string, opacity = 1): string {
  return `<rect x="${box.x.toFixed(2)}" y="${box.y.toFixed(2)}" ` +
    `width="${box.width.toFixed(2)}" height="${box.height.toFixed(2)}" ` +
    `fill="${fill}" fill-opacity="${opacity}"/>`;
}

export function text(
  x: number, y: number, label: string, anchor = 'start', size = 11,
): string {
  return `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" ` +
    `font-family="sans-serif" font-size="${size}" text-anchor="${anchor}">` +
    `${label}</text>`;
}

export function axisTicks(
  domain: [number, number], count = 5,
): number[] {
  const [lo, hi] = domain;
  const step = (hi - lo) / (count - 1) || 1;
  return Array.from({ length: count }, (_, i) => lo + i * step);
}

export function svgDocument(
  width: number, height: number, body: string[],
): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    rect({ x: 0, y: 0, width, height }, '#ffffff'),
    ...body,
    '</svg>',
    '',
  ].join('\n');
}
