/**
 * Figure kinds and their panel layouts. Rows land on panels unchanged: this
 * module only groups, sorts, and labels.
 */

import { Meta, Row, SchemaError } from "./schema.js";
import { PanelSpec, Series, renderFigureSvg } from "./svg.js";

export const FIGURE_KINDS = ["sweep", "weighted", "piggyback", "alpha_death"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

interface KindLayout {
  panels: { id: string; title: string; yLabel: string; refAlpha: boolean }[];
  xLabel: string;
  marker: boolean;
}

const LAYOUTS: Record<FigureKind, KindLayout> = {
  sweep: {
    panels: [
      { id: "power", title: "Power vs non-null rate", yLabel: "power", refAlpha: false },
      { id: "fdr", title: "FDR vs non-null rate", yLabel: "FDR", refAlpha: true },
    ],
    xLabel: "pi1",
    marker: false,
  },
  weighted: {
    panels: [
      { id: "power", title: "Weighted power vs non-null rate", yLabel: "power", refAlpha: false },
      { id: "fdr", title: "Weighted FDR vs non-null rate", yLabel: "FDR", refAlpha: true },
    ],
    xLabel: "pi1",
    marker: false,
  },
  piggyback: {
    panels: [
      { id: "mem_power", title: "Decayed power over time", yLabel: "mem-power", refAlpha: false },
      { id: "mem_fdr", title: "Decayed FDR over time", yLabel: "mem-FDR", refAlpha: true },
    ],
    xLabel: "t",
    marker: true,
  },
  alpha_death: {
    panels: [
      { id: "wealth", title: "Wealth over time", yLabel: "wealth", refAlpha: false },
      { id: "mem_power", title: "Decayed power over time", yLabel: "mem-power", refAlpha: false },
    ],
    xLabel: "t",
    marker: false,
  },
};

function seriesFor(rows: Row[], panel: string): Series[] {
  const byName = new Map<string, Series>();
  for (const r of rows) {
    if (r.panel !== panel) continue;
    let s = byName.get(r.series);
    if (!s) {
      s = { name: r.series, points: [] };
      byName.set(r.series, s);
    }
    s.points.push({ x: r.x, y: r.y, se: r.se });
  }
  return [...byName.values()].sort((a, b) => a.name.localeCompare(b.name));
}

export function renderFigure(kind: string, rows: Row[], meta: Meta = {}): string {
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new SchemaError(`unknown figure kind ${kind}; expected one of ${FIGURE_KINDS.join(", ")}`);
  }
  if (rows.length === 0) {
    throw new SchemaError("no data rows to plot");
  }
  const layout = LAYOUTS[kind as FigureKind];
  const panels: PanelSpec[] = [];
  for (const p of layout.panels) {
    const series = seriesFor(rows, p.id);
    if (series.length === 0) {
      throw new SchemaError(
        `no rows for panel ${p.id}; panels present: ${[...new Set(rows.map((r) => r.panel))].join(", ")}`,
      );
    }
    panels.push({
      title: p.title,
      xLabel: meta.x_label ?? layout.xLabel,
      yLabel: p.yLabel,
      series,
      refLineY: p.refAlpha ? meta.alpha : undefined,
      markerX: layout.marker ? meta.switch_at : undefined,
    });
  }
  return renderFigureSvg(panels);
}
