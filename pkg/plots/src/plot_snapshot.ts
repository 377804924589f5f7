import { SchemaError, column, readCsv, requireColumns } from "./csv";
import { heatmapOption, toLattice } from "./heatmap";
import { baseLayout, renderSvg, writeFigure } from "./render";

/** Single-time field: line plot in 1D, heatmap in 2D (by header shape). */
export function renderSnapshot(csvPath: string): string {
  const table = readCsv(csvPath);
  if (table.header.length === 2) {
    requireColumns(table, ["x", "value"], csvPath);
    const xs = column(table, "x");
    const vs = column(table, "value");
    return renderSvg({
      ...baseLayout("Field snapshot"),
      xAxis: { type: "value", name: "x", nameLocation: "middle", nameGap: 28 },
      yAxis: { type: "value", name: "value", scale: true },
      series: [
        {
          type: "line",
          symbol: "none",
          data: xs.map((x, i) => [x, vs[i]]),
        },
      ],
    });
  }
  if (table.header.length === 3) {
    requireColumns(table, ["x", "y", "value"], csvPath);
    const data = toLattice(table, 0, 1, 2, csvPath);
    return renderSvg({
      ...baseLayout("Field snapshot"),
      ...heatmapOption(data, "x", "y"),
    });
  }
  throw new SchemaError(
    `${csvPath}: expected columns x,value or x,y,value, found ${table.header.join(",")}`,
  );
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: plot_snapshot <snapshot.csv> <out.svg>");
    return 1;
  }
  try {
    writeFigure(argv[1], renderSnapshot(argv[0]));
    console.log(`wrote ${argv[1]}`);
    return 0;
  } catch (err) {
    console.error(String(err));
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
