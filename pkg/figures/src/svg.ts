/**
 * Minimal deterministic SVG line charts: no DOM, no randomness, identical
 * input yields an identical string. Data values are carried onto the point
 * markers as data-y attributes so tests can confirm nothing was recomputed.
 */

export interface Series {
  name: string;
  points: { x: number; y: number; se: number }[];
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  refLineY?: number;
  markerX?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W = 440;
const H = 340;
const M = { left: 58, right: 14, top: 34, bottom: 46 };

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.001) return v.toExponential(1);
  return String(Number(v.toPrecision(4)));
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / (n * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) out.push(Number(v.toPrecision(12)));
  return out;
}

export function renderPanel(spec: PanelSpec, ox: number): string {
  const xs = spec.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = spec.series.flatMap((s) => s.points.flatMap((p) => [p.y - p.se, p.y + p.se]));
  if (spec.refLineY !== undefined) ys.push(spec.refLineY);
  if (spec.markerX !== undefined) xs.push(spec.markerX);
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(0, ...ys);
  let yHi = Math.max(...ys);
  if (xHi === xLo) {
    xLo -= 0.5;
    xHi += 0.5;
  }
  if (yHi === yLo) yHi = yLo + 1;
  yHi += 0.06 * (yHi - yLo);

  const sx = (x: number) => ox + M.left + ((x - xLo) / (xHi - xLo)) * (W - M.left - M.right);
  const sy = (y: number) => M.top + (1 - (y - yLo) / (yHi - yLo)) * (H - M.top - M.bottom);

  const parts: string[] = [];
  parts.push(
    `<text x="${ox + W / 2}" y="${M.top - 14}" text-anchor="middle" class="title">${spec.title}</text>`,
  );
  const axY = sy(yLo);
  parts.push(
    `<line x1="${sx(xLo)}" y1="${axY}" x2="${sx(xHi)}" y2="${axY}" class="axis"/>`,
    `<line x1="${sx(xLo)}" y1="${sy(yLo)}" x2="${sx(xLo)}" y2="${sy(yHi)}" class="axis"/>`,
  );
  for (const t of niceTicks(xLo, xHi)) {
    parts.push(
      `<line x1="${sx(t)}" y1="${axY}" x2="${sx(t)}" y2="${axY + 4}" class="axis"/>`,
      `<text x="${sx(t)}" y="${axY + 17}" text-anchor="middle" class="tick">${fmt(t)}</text>`,
    );
  }
  for (const t of niceTicks(yLo, yHi)) {
    parts.push(
      `<line x1="${sx(xLo) - 4}" y1="${sy(t)}" x2="${sx(xLo)}" y2="${sy(t)}" class="axis"/>`,
      `<text x="${sx(xLo) - 7}" y="${sy(t) + 3.5}" text-anchor="end" class="tick">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${ox + W / 2}" y="${H - 10}" text-anchor="middle" class="label">${spec.xLabel}</text>`,
    `<text transform="translate(${ox + 14},${H / 2}) rotate(-90)" text-anchor="middle" class="label">${spec.yLabel}</text>`,
  );

  if (spec.refLineY !== undefined) {
    parts.push(
      `<line x1="${sx(xLo)}" y1="${sy(spec.refLineY)}" x2="${sx(xHi)}" y2="${sy(spec.refLineY)}" class="refline"/>`,
    );
  }
  if (spec.markerX !== undefined) {
    parts.push(
      `<line x1="${sx(spec.markerX)}" y1="${sy(yLo)}" x2="${sx(spec.markerX)}" y2="${sy(yHi)}" class="marker"/>`,
    );
  }

  spec.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = [...s.points].sort((a, b) => a.x - b.x);
    if (pts.some((p) => p.se > 0)) {
      const upper = pts.map((p) => `${sx(p.x)},${sy(p.y + p.se)}`);
      const lower = [...pts].reverse().map((p) => `${sx(p.x)},${sy(p.y - p.se)}`);
      parts.push(`<polygon points="${upper.join(" ")} ${lower.join(" ")}" fill="${color}" opacity="0.15"/>`);
    }
    const line = pts.map((p) => `${sx(p.x)},${sy(p.y)}`).join(" ");
    parts.push(`<polyline points="${line}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    const markers = pts.length <= 60;
    if (markers) {
      for (const p of pts) {
        parts.push(
          `<circle cx="${sx(p.x)}" cy="${sy(p.y)}" r="2.4" fill="${color}" data-series="${s.name}" data-y="${p.y}"/>`,
        );
      }
    }
    const ly = M.top + 6 + i * 14;
    parts.push(
      `<line x1="${ox + M.left + 8}" y1="${ly}" x2="${ox + M.left + 26}" y2="${ly}" stroke="${color}" stroke-width="1.5"/>`,
      `<text x="${ox + M.left + 31}" y="${ly + 3.5}" class="legend">${s.name}</text>`,
    );
  });
  return parts.join("\n");
}

export function renderFigureSvg(panels: PanelSpec[]): string {
  const width = panels.length * W;
  const body = panels.map((p, i) => renderPanel(p, i * W)).join("\n");
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${H}" width="${width}" height="${H}">`,
    `<style>text{font-family:Helvetica,Arial,sans-serif}.title{font-size:13px}.tick{font-size:9px}.label{font-size:11px}.legend{font-size:10px}` +
      `.axis{stroke:#222;stroke-width:1}.refline{stroke:#000;stroke-dasharray:4 3;stroke-width:1}.marker{stroke:#666;stroke-dasharray:2 3;stroke-width:1}</style>`,
    `<rect width="${width}" height="${H}" fill="white"/>`,
    body,
    `</svg>`,
  ].join("\n");
}
