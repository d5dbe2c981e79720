/**
 * Chart renderers — pure functions of run payloads.
 *
 * Bars for per-node values (detection time, contracts), a pie for the
 * consensus shares, and the expected-time-vs-k front as a step polyline.
 */

import { svgEl, el, clear } from "./dom.js";
import { fmtShare } from "./format.js";

export interface BarDatum {
  label: string;
  value: number;
  display: string;
}

export function renderBars(container: HTMLElement, data: BarDatum[], title: string): void {
  clear(container);
  container.append(el("h3", {}, [title]));
  if (data.length === 0) {
    container.append(el("div", { class: "empty-state" }, ["nothing to chart"]));
    return;
  }
  const max = Math.max(...data.map((d) => d.value), 0);
  const list = el("div", { class: "bar-chart" });
  for (const d of data) {
    const widthPct = max > 0 ? (d.value / max) * 100 : 0;
    list.append(
      el("div", { class: "bar-row", "data-label": d.label }, [
        el("span", { class: "bar-label" }, [d.label]),
        el("div", { class: "bar-track" }, [
          el("div", { class: "bar-fill", style: `width:${widthPct.toFixed(1)}%` }),
        ]),
        el("span", { class: "bar-value" }, [d.display]),
      ]),
    );
  }
  container.append(list);
}

const PIE_COLORS = [
  "#4878a8", "#e49444", "#d1605e", "#85b6b2", "#6a9f58",
  "#e7ca60", "#a87c9f", "#f1a2a9", "#967662", "#b8b0ac",
];

/**
 * Consensus pie. Shares come straight from the payload; the legend prints
 * each share and their plain sum, so agreement with 100% is visible (and
 * testable) rather than recomputed.
 */
export function renderPie(
  container: HTMLElement,
  shares: Record<string, number>,
  counts: Record<string, number>,
): void {
  clear(container);
  container.append(el("h3", {}, ["Consensus across objectives"]));
  const entries = Object.entries(shares);
  if (entries.length === 0) {
    container.append(el("div", { class: "empty-state" }, ["no consensus yet"]));
    return;
  }

  const size = 180;
  const r = size / 2 - 4;
  const cx = size / 2;
  const cy = size / 2;
  const svg = svgEl("svg", { viewBox: `0 0 ${size} ${size}`, class: "pie-chart" });

  let angle = -Math.PI / 2;
  entries.forEach(([node, share], i) => {
    const sweep = share * 2 * Math.PI;
    const x1 = cx + r * Math.cos(angle);
    const y1 = cy + r * Math.sin(angle);
    const x2 = cx + r * Math.cos(angle + sweep);
    const y2 = cy + r * Math.sin(angle + sweep);
    const largeArc = sweep > Math.PI ? 1 : 0;
    const d = share >= 0.999999
      ? `M ${cx} ${cy - r} A ${r} ${r} 0 1 1 ${cx - 0.01} ${cy - r} Z`
      : `M ${cx} ${cy} L ${x1} ${y1} A ${r} ${r} 0 ${largeArc} 1 ${x2} ${y2} Z`;
    svg.append(
      svgEl("path", {
        d,
        fill: PIE_COLORS[i % PIE_COLORS.length] ?? "#999",
        class: "pie-slice",
        "data-node": node,
        "data-share": share,
      }),
    );
    angle += sweep;
  });

  const total = entries.reduce((acc, [, share]) => acc + share, 0);
  const legend = el("ul", { class: "pie-legend", "data-share-total": total });
  entries.forEach(([node, share], i) => {
    legend.append(
      el("li", { "data-node": node }, [
        el("span", {
          class: "swatch",
          style: `background:${PIE_COLORS[i % PIE_COLORS.length]}`,
        }),
        `${node} — ${fmtShare(share)} (picked by ${counts[node] ?? 0})`,
      ]),
    );
  });
  legend.append(
    el("li", { class: "legend-total" }, [`sum ${fmtShare(total)}`]),
  );
  container.append(svg, legend);
}

/** Expected detection time against sensor count. */
export function renderPareto(container: HTMLElement, points: [number, number][]): void {
  clear(container);
  container.append(el("h3", {}, ["Expected detection time vs sensors"]));
  if (points.length === 0) {
    container.append(
      el("div", { class: "empty-state" }, [
        "no sweep requested — set Pareto sensor counts in the form",
      ]),
    );
    return;
  }

  const width = 360;
  const height = 200;
  const margin = 34;
  const ks = points.map(([k]) => k);
  const values = points.map(([, v]) => v);
  const maxK = Math.max(...ks);
  const maxV = Math.max(...values, 1e-9);

  const px = (k: number) => margin + (k / maxK) * (width - 2 * margin);
  const py = (v: number) => height - margin - (v / maxV) * (height - 2 * margin);

  const svg = svgEl("svg", { viewBox: `0 0 ${width} ${height}`, class: "pareto-chart" });
  svg.append(
    svgEl("line", { x1: margin, y1: height - margin, x2: width - margin, y2: height - margin, class: "axis" }),
    svgEl("line", { x1: margin, y1: margin, x2: margin, y2: height - margin, class: "axis" }),
  );
  svg.append(
    svgEl("polyline", {
      points: points.map(([k, v]) => `${px(k)},${py(v)}`).join(" "),
      class: "pareto-line",
      fill: "none",
    }),
  );
  for (const [k, v] of points) {
    const dot = svgEl("circle", {
      cx: px(k), cy: py(v), r: 3.5,
      class: "pareto-point",
      "data-k": k,
      "data-minutes": v,
    });
    dot.append(svgEl("title", {}, [`k=${k}: ${v.toFixed(1)} min`]));
    svg.append(dot);
  }
  for (const k of ks) {
    svg.append(
      svgEl("text", { x: px(k), y: height - margin + 14, class: "tick" }, [String(k)]),
    );
  }
  container.append(svg);
}
