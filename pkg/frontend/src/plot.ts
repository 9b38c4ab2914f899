/**
 * Chart generation for graphbench CSV results.
 *
 * One SVG per workload: throughput vs threads, one line per implementation,
 * each point the mean over that configuration's iterations. A sidecar CSV
 * with the aggregated values is written next to every chart so tests can
 * assert numbers without parsing images. Output is fully deterministic:
 * same input bytes, same output bytes.
 */

export const EXPECTED_HEADER = [
  "impl",
  "threads",
  "workload",
  "seed",
  "iteration",
  "duration_s",
  "total_ops",
  "throughput_ops_per_s",
  "slowpath_entries",
];

export class SchemaError extends Error {}

export interface BenchRow {
  impl: string;
  threads: number;
  workload: string;
  seed: string;
  iteration: number;
  duration_s: number;
  total_ops: number;
  throughput_ops_per_s: number;
  slowpath_entries: number;
}

export interface SeriesPoint {
  threads: number;
  meanThroughput: number;
  iterations: number;
}

export interface WorkloadChart {
  workload: string;
  series: Map<string, SeriesPoint[]>; // impl -> points sorted by threads
}

/** Parse graphbench CSV text; the header must match exactly. */
export function parseCsv(text: string): BenchRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: missing header");
  }
  const header = lines[0].split(",");
  if (
    header.length !== EXPECTED_HEADER.length ||
    header.some((h, i) => h !== EXPECTED_HEADER[i])
  ) {
    throw new SchemaError(`unexpected CSV header: ${lines[0]}`);
  }
  return lines.slice(1).map((line, n) => {
    const parts = line.split(",");
    if (parts.length !== EXPECTED_HEADER.length) {
      throw new SchemaError(`row ${n + 2}: expected ${EXPECTED_HEADER.length} fields`);
    }
    return {
      impl: parts[0],
      threads: Number(parts[1]),
      workload: parts[2],
      seed: parts[3],
      iteration: Number(parts[4]),
      duration_s: Number(parts[5]),
      total_ops: Number(parts[6]),
      throughput_ops_per_s: Number(parts[7]),
      slowpath_entries: Number(parts[8]),
    };
  });
}

/** Group rows by workload and average iterations per (impl, threads). */
export function aggregate(rows: BenchRow[]): WorkloadChart[] {
  const byWorkload = new Map<string, Map<string, Map<number, number[]>>>();
  for (const r of rows) {
    let impls = byWorkload.get(r.workload);
    if (!impls) byWorkload.set(r.workload, (impls = new Map()));
    let byThreads = impls.get(r.impl);
    if (!byThreads) impls.set(r.impl, (byThreads = new Map()));
    let vals = byThreads.get(r.threads);
    if (!vals) byThreads.set(r.threads, (vals = []));
    vals.push(r.throughput_ops_per_s);
  }
  const charts: WorkloadChart[] = [];
  for (const workload of [...byWorkload.keys()].sort()) {
    const series = new Map<string, SeriesPoint[]>();
    const impls = byWorkload.get(workload)!;
    for (const impl of [...impls.keys()].sort()) {
      const byThreads = impls.get(impl)!;
      const points = [...byThreads.keys()]
        .sort((a, b) => a - b)
        .map((threads) => {
          const vals = byThreads.get(threads)!;
          const mean = vals.reduce((a, b) => a + b, 0) / vals.length;
          return { threads, meanThroughput: mean, iterations: vals.length };
        });
      series.set(impl, points);
    }
    charts.push({ workload, series });
  }
  return charts;
}

const WIDTH = 880;
const HEIGHT = 520;
const MARGIN = { top: 48, right: 200, bottom: 56, left: 88 };
const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
];

function fmt(x: number): string {
  // fixed-precision, locale-independent formatting keeps the SVG byte-stable
  return x.toFixed(2);
}

function niceTicks(max: number, count: number): number[] {
  if (max <= 0) return [0];
  const rawStep = max / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rawStep) ?? rawStep;
  const ticks: number[] = [];
  for (let v = 0; v <= max + 1e-9; v += step) ticks.push(v);
  return ticks;
}

/** Render one workload chart as a standalone SVG document. */
export function renderSvg(chart: WorkloadChart): string {
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const allPoints = [...chart.series.values()].flat();
  const maxY = Math.max(1, ...allPoints.map((p) => p.meanThroughput));
  const threadValues = [...new Set(allPoints.map((p) => p.threads))].sort(
    (a, b) => a - b
  );
  const maxX = Math.max(1, ...threadValues);

  const x = (t: number) => MARGIN.left + (plotW * t) / maxX;
  const y = (v: number) => MARGIN.top + plotH - (plotH * v) / maxY;

  const out: string[] = [];
  out.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`);
  out.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  out.push(
    `<text x="${MARGIN.left}" y="28" font-family="sans-serif" font-size="18">throughput vs threads - ${chart.workload} workload</text>`
  );
  // axes
  out.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${MARGIN.top + plotH}" stroke="black"/>`
  );
  out.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top + plotH}" x2="${MARGIN.left + plotW}" y2="${MARGIN.top + plotH}" stroke="black"/>`
  );
  for (const tick of niceTicks(maxY, 6)) {
    const ty = y(tick);
    out.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(ty)}" x2="${MARGIN.left}" y2="${fmt(ty)}" stroke="black"/>`
    );
    out.push(
      `<text x="${MARGIN.left - 9}" y="${fmt(ty + 4)}" font-family="sans-serif" font-size="11" text-anchor="end">${tick}</text>`
    );
  }
  for (const t of threadValues) {
    const tx = x(t);
    out.push(
      `<line x1="${fmt(tx)}" y1="${MARGIN.top + plotH}" x2="${fmt(tx)}" y2="${MARGIN.top + plotH + 5}" stroke="black"/>`
    );
    out.push(
      `<text x="${fmt(tx)}" y="${MARGIN.top + plotH + 20}" font-family="sans-serif" font-size="11" text-anchor="middle">${t}</text>`
    );
  }
  out.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" font-family="sans-serif" font-size="13" text-anchor="middle">threads</text>`
  );
  out.push(
    `<text x="20" y="${MARGIN.top + plotH / 2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">ops/s</text>`
  );
  // series
  let idx = 0;
  for (const [impl, points] of chart.series) {
    const color = PALETTE[idx % PALETTE.length];
    const coords = points
      .map((p) => `${fmt(x(p.threads))},${fmt(y(p.meanThroughput))}`)
      .join(" ");
    out.push(
      `<polyline fill="none" stroke="${color}" stroke-width="2" points="${coords}"/>`
    );
    for (const p of points) {
      out.push(
        `<circle cx="${fmt(x(p.threads))}" cy="${fmt(y(p.meanThroughput))}" r="3.5" fill="${color}"/>`
      );
    }
    const ly = MARGIN.top + 16 + idx * 20;
    out.push(
      `<line x1="${WIDTH - MARGIN.right + 12}" y1="${ly - 4}" x2="${WIDTH - MARGIN.right + 40}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`
    );
    out.push(
      `<text x="${WIDTH - MARGIN.right + 46}" y="${ly}" font-family="sans-serif" font-size="12">${impl}</text>`
    );
    idx += 1;
  }
  out.push("</svg>");
  return out.join("\n") + "\n";
}

/** Sidecar CSV with the aggregated means, full float precision. */
export function sidecarCsv(chart: WorkloadChart): string {
  const lines = ["workload,impl,threads,iterations,mean_throughput_ops_per_s"];
  for (const [impl, points] of chart.series) {
    for (const p of points) {
      lines.push(
        `${chart.workload},${impl},${p.threads},${p.iterations},${p.meanThroughput.toPrecision(12)}`
      );
    }
  }
  return lines.join("\n") + "\n";
}

export interface RenderedFile {
  name: string;
  content: string;
}

/** Full pipeline: CSV text in, list of files to write out. */
export function renderAll(csvText: string): RenderedFile[] {
  const charts = aggregate(parseCsv(csvText));
  const files: RenderedFile[] = [];
  for (const chart of charts) {
    files.push({ name: `${chart.workload}.svg`, content: renderSvg(chart) });
    files.push({ name: `${chart.workload}_aggregated.csv`, content: sidecarCsv(chart) });
  }
  return files;
}
