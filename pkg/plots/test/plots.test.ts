import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, describe, expect, it } from "vitest";

import { SchemaError, readCsv, requireColumns } from "../src/csv";
import { fitRate } from "../src/render";
import { renderConvergence, main as convergenceMain } from "../src/plot_convergence";
import { renderSpacetime } from "../src/plot_spacetime";
import { renderSnapshot } from "../src/plot_snapshot";
import { renderDifference, main as differenceMain } from "../src/plot_difference";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "chplots-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function writeCsv(name: string, lines: string[]): string {
  const p = path.join(tmp, name);
  fs.writeFileSync(p, lines.join("\n") + "\n");
  return p;
}

function snapshot1d(name: string, fn: (x: number) => number, n = 17): string {
  const lines = ["x,value"];
  for (let i = 0; i < n; i++) {
    const x = i / (n - 1);
    lines.push(`${x},${fn(x)}`);
  }
  return writeCsv(name, lines);
}

function snapshot2d(name: string, fn: (x: number, y: number) => number, n = 9): string {
  const lines = ["x,y,value"];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const x = i / (n - 1);
      const y = j / (n - 1);
      lines.push(`${x},${y},${fn(x, y)}`);
    }
  }
  return writeCsv(name, lines);
}

const testdata = path.join(__dirname, "..", "testdata");
const have = (name: string) => fs.existsSync(path.join(testdata, name));

describe("csv reading", () => {
  it("reads a rectangular numeric table", () => {
    const p = writeCsv("ok.csv", ["a,b", "1,2", "3,4"]);
    const t = readCsv(p);
    expect(t.header).toEqual(["a", "b"]);
    expect(t.rows).toEqual([
      [1, 2],
      [3, 4],
    ]);
  });

  it("names the offending column on schema mismatch", () => {
    const p = writeCsv("bad.csv", ["level,state_error", "1,2"]);
    const t = readCsv(p);
    expect(() =>
      requireColumns(t, ["level", "state_error", "adjoint_error"], p),
    ).toThrowError(/adjoint_error/);
  });

  it("rejects ragged rows", () => {
    const p = writeCsv("ragged.csv", ["a,b", "1,2", "3"]);
    expect(() => readCsv(p)).toThrowError(SchemaError);
  });

  it("names the column holding a non-numeric cell", () => {
    const p = writeCsv("nan.csv", ["a,b", "1,oops"]);
    expect(() => readCsv(p)).toThrowError(/column 'b'/);
  });
});

describe("rate fitting", () => {
  it("recovers exact slopes", () => {
    const xs = [0.01, 0.005, 0.0025];
    expect(fitRate(xs, xs)).toBeCloseTo(1.0, 12);
    expect(fitRate(xs, xs.map((x) => x * x))).toBeCloseTo(2.0, 12);
  });

  it("returns null for degenerate input", () => {
    expect(fitRate([0.01], [0.1])).toBeNull();
    expect(fitRate([0.01, 0.01], [0.1, 0.2])).toBeNull();
  });
});

describe("plot-convergence", () => {
  it("draws a slope-2 guide parallel to quadratic data", () => {
    const xs = [0.08, 0.04, 0.02, 0.01];
    const lines = ["level,state_error,adjoint_error"];
    for (const x of xs) {
      lines.push(`${x},${x * x},${0.5 * x * x}`);
    }
    const p = writeCsv("conv2.csv", lines);
    const res = renderConvergence(p);
    expect(res.svg).toContain("<svg");
    expect(res.guideSlope).toBe(2);
    expect(res.stateRate!).toBeCloseTo(2.0, 6);
    // guide parallel to the data: same slope within plotting tolerance
    expect(Math.abs(res.stateRate! - res.guideSlope!)).toBeLessThan(0.25);
  });

  it("renders markers only for a single-row file", () => {
    const p = writeCsv("conv1.csv", ["level,state_error,adjoint_error",
                                     "0.01,1e-3,1e-4"]);
    const res = renderConvergence(p);
    expect(res.stateRate).toBeNull();
    expect(res.guideSlope).toBeNull();
    expect(res.svg).toContain("single level");
  });

  it("rejects a wrong schema naming the column", () => {
    const p = writeCsv("convbad.csv", ["level,state_error", "0.01,1e-3"]);
    expect(() => renderConvergence(p)).toThrowError(/adjoint_error/);
  });

  it("cli writes the file and exits zero", () => {
    const xs = [0.08, 0.04, 0.02];
    const lines = ["level,state_error,adjoint_error"];
    for (const x of xs) {
      lines.push(`${x},${x},${x}`);
    }
    const p = writeCsv("convcli.csv", lines);
    const out = path.join(tmp, "convcli.svg");
    expect(convergenceMain([p, out])).toBe(0);
    expect(fs.existsSync(out)).toBe(true);
    // idempotent overwrite
    expect(convergenceMain([p, out])).toBe(0);
  });

  it("rejects non-svg output extensions", () => {
    const p = writeCsv("convpng.csv", ["level,state_error,adjoint_error",
                                       "0.01,1e-3,1e-4"]);
    expect(convergenceMain([p, path.join(tmp, "o.png")])).toBe(1);
  });

  it.skipIf(!have("convergence_time_s1.csv"))(
    "guide parallels the real accuracy-study data",
    () => {
      const res = renderConvergence(
        path.join(testdata, "convergence_time_s1.csv"),
      );
      expect(res.svg).toContain("<svg");
      expect(res.guideSlope).not.toBeNull();
      expect(res.adjointRate!).toBeGreaterThan(0.8);
      expect(res.adjointRate!).toBeLessThan(1.2);
    },
  );
});

describe("plot-spacetime", () => {
  it("renders a (t, x) heatmap", () => {
    const lines = ["t,x,value"];
    for (const t of [0, 0.5, 1]) {
      for (const x of [0, 0.25, 0.5, 0.75, 1]) {
        lines.push(`${t},${x},${Math.cos(2 * Math.PI * x) * Math.exp(-t)}`);
      }
    }
    const p = writeCsv("xt.csv", lines);
    const svg = renderSpacetime(p);
    expect(svg).toContain("<svg");
  });

  it("rejects a snapshot schema", () => {
    const p = snapshot1d("snapforxt.csv", (x) => x);
    expect(() => renderSpacetime(p)).toThrowError(/expected column/);
  });

  it.skipIf(!have("state_xt.csv"))("renders the real space-time field", () => {
    const svg = renderSpacetime(path.join(testdata, "state_xt.csv"));
    expect(svg).toContain("<svg");
  });
});

describe("plot-snapshot", () => {
  it("renders a 1D profile as a line", () => {
    const p = snapshot1d("snap1.csv", (x) => Math.cos(2 * Math.PI * x));
    const svg = renderSnapshot(p);
    expect(svg).toContain("<svg");
    expect(svg).toContain("<path");
  });

  it("renders a 2D field as a heatmap", () => {
    const p = snapshot2d("snap2.csv", (x, y) => Math.cos(2 * Math.PI * x * y));
    const svg = renderSnapshot(p);
    expect(svg).toContain("<svg");
  });

  it("rejects an incomplete lattice", () => {
    const p = writeCsv("notgrid.csv", ["x,y,value", "0,0,1", "1,1,2", "0,1,3"]);
    expect(() => renderSnapshot(p)).toThrowError(/lattice/);
  });

  it.skipIf(!have("state_final_2d.csv"))("renders the real 2D state", () => {
    const svg = renderSnapshot(path.join(testdata, "state_final_2d.csv"));
    expect(svg).toContain("<svg");
  });
});

describe("plot-difference", () => {
  it("reports zero for identical inputs", () => {
    const p = snapshot2d("diffa.csv", (x, y) => x + y);
    const res = renderDifference(p, p);
    expect(res.maxAbs).toBe(0);
    expect(res.svg).toContain("0.00e+0");
  });

  it("reports the max difference and prints it", () => {
    const a = snapshot2d("da.csv", (x, y) => x * y);
    const b = snapshot2d("db.csv", (x, y) => x * y + 0.02 * Math.sin(x));
    const res = renderDifference(a, b);
    expect(res.maxAbs).toBeGreaterThan(0.005);
    expect(res.maxAbs).toBeLessThan(0.03);
    const out = path.join(tmp, "diff.svg");
    expect(differenceMain([a, b, out])).toBe(0);
    expect(fs.existsSync(out)).toBe(true);
  });

  it("rejects mismatched grids naming the coordinate", () => {
    const a = snapshot2d("ga.csv", (x, y) => x, 9);
    const b = snapshot2d("gb.csv", (x, y) => x, 8);
    expect(() => renderDifference(a, b)).toThrowError(/grids differ/);
  });

  it.skipIf(!have("state_final_2d.csv") || !have("target_final_2d.csv"))(
    "real tracking pair differs at the 1e-2 scale",
    () => {
      const res = renderDifference(
        path.join(testdata, "state_final_2d.csv"),
        path.join(testdata, "target_final_2d.csv"),
      );
      expect(res.maxAbs).toBeGreaterThan(1e-3);
      expect(res.maxAbs).toBeLessThan(0.05);
    },
  );
});
