import * as fs from "fs";
import * as path from "path";
import * as echarts from "echarts";

export const WIDTH = 760;
export const HEIGHT = 540;

/** Render one echarts option to an SVG string (server-side, no DOM). */
export function renderSvg(option: echarts.EChartsOption): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  try {
    chart.setOption(option);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}

/** Write the figure; only .svg output is supported in this environment. */
export function writeFigure(outPath: string, svg: string): void {
  const ext = path.extname(outPath).toLowerCase();
  if (ext !== ".svg") {
    throw new Error(
      `unsupported output extension '${ext}': only .svg is available`,
    );
  }
  fs.writeFileSync(outPath, svg);
}

/** Least-squares slope of log(e) against log(x). */
export function fitRate(xs: number[], es: number[]): number | null {
  const pts = xs
    .map((x, i) => [x, es[i]])
    .filter(([x, e]) => x > 0 && e > 0);
  if (pts.length < 2) {
    return null;
  }
  const lx = pts.map(([x]) => Math.log(x));
  const le = pts.map(([, e]) => Math.log(e));
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const me = le.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (lx[i] - mx) * (le[i] - me);
    den += (lx[i] - mx) ** 2;
  }
  if (den === 0) {
    return null;
  }
  return num / den;
}

/** Shared axis/grid defaults for a clean standalone SVG. */
export function baseLayout(title: string): echarts.EChartsOption {
  return {
    animation: false,
    backgroundColor: "#ffffff",
    title: { text: title, left: "center", textStyle: { fontSize: 14 } },
    grid: { left: 70, right: 90, top: 60, bottom: 55 },
  };
}
