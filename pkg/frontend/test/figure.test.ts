import { describe, expect, it } from "vitest";

import { parseCsv, requireColumns, SchemaError } from "../src/csv.js";
import { extractSeries, niceTicks, renderFigure } from "../src/figure.js";

const METRICS_CSV = [
  "step,variant,rmse_pos,cov_err",
  "1,kl,12.5,0.9",
  "1,mm,13.0,0.95",
  "1,known_r,10.0,0.0",
  "2,kl,11.5,0.8",
  "2,mm,12.0,0.85",
  "2,known_r,9.5,0.0",
  "3,kl,11.0,0.7",
  "3,mm,11.6,0.78",
  "3,known_r,9.4,0.0",
].join("\n");

const SWEEP_CSV = [
  "r,variant,avg_rmse_pos,avg_cov_err",
  "50.0,kl,6.1,0.51",
  "50.0,mm,6.2,0.52",
  "50.0,known_r,5.8,0.0",
  "100.0,kl,8.3,0.6",
  "100.0,mm,8.4,0.62",
  "100.0,known_r,7.9,0.0",
  "200.0,kl,11.4,0.55",
  "200.0,mm,11.5,0.56",
  "200.0,known_r,10.9,0.0",
  "400.0,kl,15.9,0.5",
  "400.0,mm,16.0,0.51",
  "400.0,known_r,15.2,0.0",
].join("\n");

describe("csv parsing", () => {
  it("parses the metrics schema", () => {
    const table = parseCsv(METRICS_CSV);
    expect(table.columns).toEqual(["step", "variant", "rmse_pos", "cov_err"]);
    expect(table.rows).toHaveLength(9);
    expect(table.rows[0].variant).toBe("kl");
  });

  it("rejects an empty file", () => {
    expect(() => parseCsv("")).toThrow(SchemaError);
  });

  it("rejects a header-only file", () => {
    const table = parseCsv("step,variant,rmse_pos,cov_err");
    expect(() => requireColumns(table, ["step"])).toThrow(/no data rows/);
  });

  it("names a missing column", () => {
    const table = parseCsv("step,variant\n1,kl");
    expect(() => requireColumns(table, ["step", "rmse_pos"])).toThrow(/'rmse_pos'/);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1,2,3")).toThrow(/row 2/);
  });
});

describe("series extraction", () => {
  it("splits the metrics file into one series per variant", () => {
    const series = extractSeries(METRICS_CSV, "rmse_time");
    expect(series.map((s) => s.variant)).toEqual(["kl", "mm", "known_r"]);
    expect(series[0].points).toEqual([
      [1, 12.5],
      [2, 11.5],
      [3, 11.0],
    ]);
  });

  it("reads the covariance column for coverr_time", () => {
    const series = extractSeries(METRICS_CSV, "coverr_time");
    expect(series[0].points.map((p) => p[1])).toEqual([0.9, 0.8, 0.7]);
  });

  it("gives four points per curve for the sweep", () => {
    const series = extractSeries(SWEEP_CSV, "rmse_sweep");
    expect(series).toHaveLength(3);
    for (const s of series) {
      expect(s.points).toHaveLength(4);
    }
  });

  it("rejects the wrong schema for a kind", () => {
    expect(() => extractSeries(SWEEP_CSV, "rmse_time")).toThrow(/'step'/);
    expect(() => extractSeries(METRICS_CSV, "rmse_sweep")).toThrow(/'r'/);
  });

  it("rejects non-numeric cells", () => {
    const bad = "step,variant,rmse_pos,cov_err\n1,kl,abc,0.5";
    expect(() => extractSeries(bad, "rmse_time")).toThrow(/non-numeric/);
  });
});

describe("tick selection", () => {
  it("uses round steps covering the range", () => {
    const ticks = niceTicks(0, 100);
    expect(ticks[0]).toBe(0);
    expect(ticks[ticks.length - 1]).toBe(100);
    expect(ticks).toContain(20);
  });

  it("handles a degenerate range", () => {
    const ticks = niceTicks(5, 5);
    expect(ticks.length).toBeGreaterThan(1);
  });
});

describe("figure rendering", () => {
  it("draws one labeled curve per variant", () => {
    const svg = renderFigure(METRICS_CSV, "rmse_time");
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg.match(/<polyline/g)).toHaveLength(3);
    expect(svg).toContain("IMM-KL");
    expect(svg).toContain("IMM-MM");
    expect(svg).toContain("IMM-KF (known R)");
    expect(svg).toContain("Position RMSE versus time");
  });

  it("marks sweep points with circles", () => {
    const svg = renderFigure(SWEEP_CSV, "coverr_sweep");
    expect(svg.match(/<circle/g)).toHaveLength(12);
  });

  it("is deterministic for a fixed input", () => {
    const a = renderFigure(METRICS_CSV, "coverr_time");
    const b = renderFigure(METRICS_CSV, "coverr_time");
    expect(a).toBe(b);
  });

  it("renders every figure kind from its matching schema", () => {
    expect(renderFigure(METRICS_CSV, "rmse_time")).toContain("time step");
    expect(renderFigure(METRICS_CSV, "coverr_time")).toContain("estimation error");
    expect(renderFigure(SWEEP_CSV, "rmse_sweep")).toContain("noise level");
    expect(renderFigure(SWEEP_CSV, "coverr_sweep")).toContain("noise level");
  });
});
