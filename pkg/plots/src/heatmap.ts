import type * as echarts from "echarts";
import { Table, SchemaError } from "./csv";

export interface GridData {
  xs: number[];
  ys: number[];
  cells: [number, number, number][]; // [xIndex, yIndex, value]
  vmin: number;
  vmax: number;
}

/** Group (a, b, value) rows into a rectangular lattice for a heatmap. */
export function toLattice(
  table: Table,
  aCol: number,
  bCol: number,
  vCol: number,
  path: string,
): GridData {
  const xs = [...new Set(table.rows.map((r) => r[aCol]))].sort((p, q) => p - q);
  const ys = [...new Set(table.rows.map((r) => r[bCol]))].sort((p, q) => p - q);
  if (xs.length * ys.length !== table.rows.length) {
    throw new SchemaError(
      `${path}: rows do not form a full ${xs.length} x ${ys.length} lattice`,
    );
  }
  const xIndex = new Map(xs.map((v, i) => [v, i]));
  const yIndex = new Map(ys.map((v, i) => [v, i]));
  let vmin = Infinity;
  let vmax = -Infinity;
  const cells: [number, number, number][] = table.rows.map((r) => {
    const v = r[vCol];
    vmin = Math.min(vmin, v);
    vmax = Math.max(vmax, v);
    return [xIndex.get(r[aCol])!, yIndex.get(r[bCol])!, v];
  });
  if (vmin === vmax) {
    vmax = vmin + 1e-300; // flat fields still need a nonempty color range
  }
  return { xs, ys, cells, vmin, vmax };
}

const tickLabel = (v: number) => Number(v.toPrecision(3)).toString();

/** Heatmap option with a colorbar; axis labels thinned for readability. */
export function heatmapOption(
  data: GridData,
  xName: string,
  yName: string,
): echarts.EChartsOption {
  return {
    xAxis: {
      type: "category",
      name: xName,
      nameLocation: "middle",
      nameGap: 28,
      data: data.xs.map(tickLabel),
      axisLabel: { interval: Math.max(0, Math.ceil(data.xs.length / 8) - 1) },
    },
    yAxis: {
      type: "category",
      name: yName,
      data: data.ys.map(tickLabel),
      axisLabel: { interval: Math.max(0, Math.ceil(data.ys.length / 8) - 1) },
    },
    visualMap: {
      min: data.vmin,
      max: data.vmax,
      calculable: false,
      orient: "vertical",
      right: 10,
      top: "center",
      precision: 2,
      inRange: {
        color: ["#30123b", "#4662d8", "#35abf8", "#1be5b5", "#74fe5d",
                "#c9ef34", "#fbb938", "#f56918", "#c92903", "#7a0403"],
      },
    },
    series: [
      {
        type: "heatmap",
        data: data.cells,
        progressive: 0,
      },
    ],
  };
}
