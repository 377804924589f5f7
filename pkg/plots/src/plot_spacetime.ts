import { readCsv, requireColumns } from "./csv";
import { heatmapOption, toLattice } from "./heatmap";
import { baseLayout, renderSvg, writeFigure } from "./render";

/** Space-time field of a 1D run as a (t, x) heatmap. */
export function renderSpacetime(csvPath: string): string {
  const table = readCsv(csvPath);
  requireColumns(table, ["t", "x", "value"], csvPath);
  const data = toLattice(table, 0, 1, 2, csvPath);
  return renderSvg({
    ...baseLayout("Space-time field"),
    ...heatmapOption(data, "t", "x"),
  });
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: plot_spacetime <spacetime.csv> <out.svg>");
    return 1;
  }
  try {
    writeFigure(argv[1], renderSpacetime(argv[0]));
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
