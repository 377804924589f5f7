import { SchemaError, readCsv, requireColumns, Table } from "./csv";
import { heatmapOption, toLattice } from "./heatmap";
import { baseLayout, renderSvg, writeFigure } from "./render";

export interface DifferenceResult {
  svg: string;
  maxAbs: number;
}

function checkSameGrid(a: Table, b: Table, coordCols: number, pathB: string): void {
  if (a.rows.length !== b.rows.length) {
    throw new SchemaError(
      `${pathB}: grids differ (${a.rows.length} vs ${b.rows.length} rows)`,
    );
  }
  for (let i = 0; i < a.rows.length; i++) {
    for (let c = 0; c < coordCols; c++) {
      if (a.rows[i][c] !== b.rows[i][c]) {
        throw new SchemaError(
          `${pathB}: grid mismatch at row ${i + 2}, column '${a.header[c]}'`,
        );
      }
    }
  }
}

/** |a - b| of two snapshots on the same grid; reports the max in the title. */
export function renderDifference(pathA: string, pathB: string): DifferenceResult {
  const a = readCsv(pathA);
  const b = readCsv(pathB);
  const is2d = a.header.length === 3;
  const cols = is2d ? ["x", "y", "value"] : ["x", "value"];
  requireColumns(a, cols, pathA);
  requireColumns(b, cols, pathB);
  const coordCols = cols.length - 1;
  checkSameGrid(a, b, coordCols, pathB);

  const diffRows = a.rows.map((row, i) => {
    const d = Math.abs(row[coordCols] - b.rows[i][coordCols]);
    return [...row.slice(0, coordCols), d];
  });
  const maxAbs = diffRows.reduce((m, r) => Math.max(m, r[coordCols]), 0);
  const diff: Table = { header: a.header, rows: diffRows };
  const title = `Absolute difference (max ${maxAbs.toExponential(2)})`;

  let svg: string;
  if (is2d) {
    const data = toLattice(diff, 0, 1, 2, pathA);
    svg = renderSvg({ ...baseLayout(title), ...heatmapOption(data, "x", "y") });
  } else {
    svg = renderSvg({
      ...baseLayout(title),
      xAxis: { type: "value", name: "x", nameLocation: "middle", nameGap: 28 },
      yAxis: { type: "value", name: "|difference|", scale: true },
      series: [
        {
          type: "line",
          symbol: "none",
          data: diffRows.map((r) => [r[0], r[coordCols]]),
        },
      ],
    });
  }
  return { svg, maxAbs };
}

export function main(argv: string[]): number {
  if (argv.length !== 3) {
    console.error("usage: plot_difference <a.csv> <b.csv> <out.svg>");
    return 1;
  }
  try {
    const result = renderDifference(argv[0], argv[1]);
    writeFigure(argv[2], result.svg);
    console.log(`max |difference| = ${result.maxAbs.toExponential(6)}`);
    console.log(`wrote ${argv[2]}`);
    return 0;
  } catch (err) {
    console.error(String(err));
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
