import { column, readCsv, requireColumns } from "./csv";
import { baseLayout, fitRate, renderSvg, writeFigure } from "./render";

export interface ConvergenceResult {
  svg: string;
  stateRate: number | null;
  adjointRate: number | null;
  guideSlope: number | null;
}

/** Log-log error curves with a reference-slope guide line. */
export function renderConvergence(csvPath: string): ConvergenceResult {
  const table = readCsv(csvPath);
  requireColumns(table, ["level", "state_error", "adjoint_error"], csvPath);
  const levels = column(table, "level");
  const stateErr = column(table, "state_error");
  const adjointErr = column(table, "adjoint_error");

  const stateRate = fitRate(levels, stateErr);
  const adjointRate = fitRate(levels, adjointErr);

  const series: any[] = [
    {
      name: "state error",
      type: "line",
      symbolSize: 8,
      data: levels.map((l, i) => [l, stateErr[i]]).filter(([, e]) => e > 0),
    },
    {
      name: "adjoint error",
      type: "line",
      symbolSize: 8,
      data: levels.map((l, i) => [l, adjointErr[i]]).filter(([, e]) => e > 0),
    },
  ];

  let guideSlope: number | null = null;
  if (stateRate !== null) {
    // guide parallel to the nearest integer order, anchored under the data
    const slope = Math.abs(stateRate - 1) <= Math.abs(stateRate - 2) ? 1 : 2;
    guideSlope = slope;
    const anchorX = levels[levels.length - 1];
    const anchorE = stateErr[stateErr.length - 1] * 0.5;
    const c = anchorE / anchorX ** slope;
    series.push({
      name: `slope ${slope} guide`,
      type: "line",
      symbol: "none",
      lineStyle: { type: "dashed", color: "#888" },
      data: levels.map((l) => [l, c * l ** slope]),
    });
  }

  const note =
    stateRate === null
      ? "single level: no fitted slope"
      : `fitted rates: state ${stateRate.toFixed(2)}, adjoint ${adjointRate!.toFixed(2)}`;

  const svg = renderSvg({
    ...baseLayout(`Refinement errors (${note})`),
    legend: { bottom: 6 },
    xAxis: {
      type: "log",
      name: "level",
      nameLocation: "middle",
      nameGap: 28,
    },
    yAxis: { type: "log", name: "max error" },
    series,
  });
  return { svg, stateRate, adjointRate, guideSlope };
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: plot_convergence <convergence.csv> <out.svg>");
    return 1;
  }
  try {
    const result = renderConvergence(argv[0]);
    writeFigure(argv[1], result.svg);
    if (result.stateRate !== null) {
      console.log(
        `fitted rates: state ${result.stateRate.toFixed(3)}, adjoint ${result.adjointRate!.toFixed(3)}`,
      );
    }
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
