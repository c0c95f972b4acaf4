/**
 * Deterministic SVG line charts for the benchmark metric files.
 *
 * Four figure kinds map onto the two CSV schemas:
 *   rmse_time, coverr_time  <- metrics.csv (step,variant,rmse_pos,cov_err)
 *   rmse_sweep, coverr_sweep <- sweep.csv  (r,variant,avg_rmse_pos,avg_cov_err)
 *
 * The output embeds no timestamps or random identifiers, so a fixed input
 * always renders byte-identical SVG.
 */

import { parseCsv, requireColumns, SchemaError, toNumber } from "./csv.js";

export type FigureKind = "rmse_time" | "coverr_time" | "rmse_sweep" | "coverr_sweep";

export const FIGURE_KINDS: FigureKind[] = [
  "rmse_time",
  "coverr_time",
  "rmse_sweep",
  "coverr_sweep",
];

interface KindSpec {
  xColumn: string;
  yColumn: string;
  xLabel: string;
  yLabel: string;
  title: string;
}

const KIND_SPECS: Record<FigureKind, KindSpec> = {
  rmse_time: {
    xColumn: "step",
    yColumn: "rmse_pos",
    xLabel: "time step",
    yLabel: "position RMSE",
    title: "Position RMSE versus time",
  },
  coverr_time: {
    xColumn: "step",
    yColumn: "cov_err",
    xLabel: "time step",
    yLabel: "noise covariance estimation error",
    title: "Covariance estimation error versus time",
  },
  rmse_sweep: {
    xColumn: "r",
    yColumn: "avg_rmse_pos",
    xLabel: "measurement noise level r",
    yLabel: "averaged position RMSE",
    title: "Averaged position RMSE versus noise level",
  },
  coverr_sweep: {
    xColumn: "r",
    yColumn: "avg_cov_err",
    xLabel: "measurement noise level r",
    yLabel: "averaged covariance estimation error",
    title: "Averaged covariance error versus noise level",
  },
};

const VARIANT_STYLE: Record<string, { label: string; color: string; dash: string }> = {
  kl: { label: "IMM-KL", color: "#d62728", dash: "" },
  mm: { label: "IMM-MM", color: "#1f77b4", dash: "6 3" },
  known_r: { label: "IMM-KF (known R)", color: "#2ca02c", dash: "2 3" },
};

const FALLBACK_COLORS = ["#9467bd", "#ff7f0e", "#8c564b", "#e377c2"];

export interface Series {
  variant: string;
  points: Array<[number, number]>;
}

export function extractSeries(csvText: string, kind: FigureKind): Series[] {
  const spec = KIND_SPECS[kind];
  if (spec === undefined) {
    throw new SchemaError(`unknown figure kind '${kind}'`);
  }
  const table = parseCsv(csvText);
  requireColumns(table, [spec.xColumn, "variant", spec.yColumn]);
  const byVariant = new Map<string, Array<[number, number]>>();
  for (const row of table.rows) {
    const x = toNumber(row[spec.xColumn], spec.xColumn);
    const y = toNumber(row[spec.yColumn], spec.yColumn);
    const points = byVariant.get(row.variant) ?? [];
    points.push([x, y]);
    byVariant.set(row.variant, points);
  }
  return [...byVariant.entries()].map(([variant, points]) => ({
    variant,
    points: points.sort((a, b) => a[0] - b[0]),
  }));
}

/** Round-number ticks covering [min, max] with a 1-2-5 step. */
export function niceTicks(min: number, max: number, target = 6): number[] {
  if (min === max) {
    const pad = min === 0 ? 1 : Math.abs(min) * 0.1;
    min -= pad;
    max += pad;
  }
  const rawStep = (max - min) / Math.max(target - 1, 1);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const mult of [1, 2, 5, 10]) {
    if (power * mult >= rawStep) {
      step = power * mult;
      break;
    }
  }
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function formatTick(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e5 || abs < 1e-3) return value.toExponential(1);
  return String(Number(value.toPrecision(6)));
}

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { left: 72, right: 24, top: 40, bottom: 52 };

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderFigure(csvText: string, kind: FigureKind): string {
  const spec = KIND_SPECS[kind];
  const series = extractSeries(csvText, kind);
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  let [xMin, xMax] = [Math.min(...xs), Math.max(...xs)];
  let [yMin, yMax] = [Math.min(0, Math.min(...ys)), Math.max(...ys)];
  if (xMin === xMax) {
    xMin -= 1;
    xMax += 1;
  }
  if (yMin === yMax) {
    yMax = yMin + 1;
  }
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - xMin) / (xMax - xMin)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - yMin) / (yMax - yMin)) * plotH;
  const fmt = (v: number) => String(Number(v.toFixed(3)));

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">` +
      `${escapeXml(spec.title)}</text>`,
  );

  for (const tick of niceTicks(xMin, xMax)) {
    if (tick < xMin - 1e-9 || tick > xMax + 1e-9) continue;
    const px = fmt(sx(tick));
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" ` +
        `stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${px}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" ` +
        `font-size="11">${formatTick(tick)}</text>`,
    );
  }
  for (const tick of niceTicks(yMin, yMax)) {
    if (tick < yMin - 1e-9 || tick > yMax + 1e-9) continue;
    const py = fmt(sy(tick));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" ` +
        `stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" ` +
        `font-size="11">${formatTick(tick)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333333"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-size="13">${escapeXml(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">${escapeXml(spec.yLabel)}</text>`,
  );

  series.forEach((s, index) => {
    const style =
      VARIANT_STYLE[s.variant] ??
      ({
        label: s.variant,
        color: FALLBACK_COLORS[index % FALLBACK_COLORS.length],
        dash: "",
      } as const);
    const coords = s.points.map(([x, y]) => `${fmt(sx(x))},${fmt(sy(y))}`).join(" ");
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${style.color}" ` +
        `stroke-width="1.8"${dash}/>`,
    );
    if (s.points.length <= 12) {
      for (const [x, y] of s.points) {
        parts.push(
          `<circle cx="${fmt(sx(x))}" cy="${fmt(sy(y))}" r="3" fill="${style.color}"/>`,
        );
      }
    }
  });

  const legendX = MARGIN.left + plotW - 168;
  series.forEach((s, index) => {
    const style =
      VARIANT_STYLE[s.variant] ??
      ({
        label: s.variant,
        color: FALLBACK_COLORS[index % FALLBACK_COLORS.length],
        dash: "",
      } as const);
    const y = MARGIN.top + 14 + index * 18;
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    parts.push(
      `<line x1="${legendX}" y1="${y}" x2="${legendX + 26}" y2="${y}" ` +
        `stroke="${style.color}" stroke-width="1.8"${dash}/>`,
    );
    parts.push(
      `<text x="${legendX + 32}" y="${y + 4}" font-size="12">${escapeXml(style.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
