/**
 * SVG network map.
 *
 * Node positions are the network file's 2-D coordinates used verbatim
 * (y flipped because SVG grows downward); nodes without coordinates are
 * parked in a strip below the drawing so they stay visible and hoverable.
 */

import type { NetworkGeometry, NodeScoreRow, PlacementPayload } from "./api.js";
import { svgEl, el, clear } from "./dom.js";
import { fmtMinutes, fmtNumber } from "./format.js";

export type MapMode = "placement" | "heatmap";

export interface MapOptions {
  mode: MapMode;
  objective: string; // whose placement to highlight
  width?: number;
  height?: number;
}

const BASE_COLOR = "#7fa8c9";
const SOURCE_COLOR = "#444";

/** Relative score 0..1 -> fill color. 0 must give the base color so an
 * all-zero run renders uniformly. */
export function heatColor(relative: number): string {
  if (!(relative > 0)) return BASE_COLOR;
  const clamped = Math.min(relative, 1);
  const hue = 210 - 210 * clamped; // base blue down to red
  return `hsl(${hue.toFixed(0)}, 70%, 55%)`;
}

interface NodePosition {
  x: number;
  y: number;
  placedInStrip: boolean;
}

function positionNodes(
  geometry: NetworkGeometry,
  width: number,
  height: number,
): Map<string, NodePosition> {
  const placed = geometry.nodes.filter((n) => n.x !== null && n.y !== null);
  const missing = geometry.nodes.filter((n) => n.x === null || n.y === null);
  const stripHeight = missing.length > 0 ? 40 : 0;
  const drawHeight = height - stripHeight;

  const margin = 24;
  let minX = 0, maxX = 1, minY = 0, maxY = 1;
  if (placed.length > 0) {
    minX = Math.min(...placed.map((n) => n.x as number));
    maxX = Math.max(...placed.map((n) => n.x as number));
    minY = Math.min(...placed.map((n) => n.y as number));
    maxY = Math.max(...placed.map((n) => n.y as number));
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;

  const positions = new Map<string, NodePosition>();
  for (const node of placed) {
    positions.set(node.id, {
      x: margin + ((node.x as number) - minX) / spanX * (width - 2 * margin),
      // flip: file coordinates grow upward
      y: drawHeight - margin - ((node.y as number) - minY) / spanY * (drawHeight - 2 * margin),
      placedInStrip: false,
    });
  }
  missing.forEach((node, i) => {
    positions.set(node.id, {
      x: margin + i * 28,
      y: height - stripHeight / 2,
      placedInStrip: true,
    });
  });
  return positions;
}

function nodeTooltip(node: { id: string }, score: NodeScoreRow | undefined): string {
  if (!score) return node.id;
  return [
    node.id,
    `score ${fmtNumber(score.total)} (relative ${score.relative.toFixed(3)})`,
    `detection ${fmtMinutes(score.detection_time)}`,
    `contracts ${fmtNumber(score.contracts)}`,
  ].join("\n");
}

/**
 * Render the map into `container`. With no result yet, renders an explicit
 * empty state instead of an empty canvas.
 */
export function renderMap(
  container: HTMLElement,
  geometry: NetworkGeometry | null,
  scores: NodeScoreRow[],
  placement: PlacementPayload | null,
  options: MapOptions,
): void {
  clear(container);
  if (!geometry) {
    container.append(
      el("div", { class: "empty-state" }, [
        "No run yet — upload a network and start one.",
      ]),
    );
    return;
  }

  const width = options.width ?? 720;
  const height = options.height ?? 520;
  const positions = positionNodes(geometry, width, height);
  const byNode = new Map(scores.map((s) => [s.node, s]));
  const highlighted = new Set(
    (placement?.per_objective[options.objective] ?? []).map(([node]) => node),
  );

  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "network-map",
    role: "img",
  });

  for (const edge of geometry.edges) {
    const a = positions.get(edge.from);
    const b = positions.get(edge.to);
    if (!a || !b) continue;
    svg.append(
      svgEl("line", {
        x1: a.x, y1: a.y, x2: b.x, y2: b.y,
        class: edge.status === "closed" ? "edge edge-closed" : "edge",
      }),
    );
  }

  for (const node of geometry.nodes) {
    const pos = positions.get(node.id);
    if (!pos) continue;
    const score = byNode.get(node.id);
    const isSource = node.kind !== "junction";
    const fill = isSource
      ? SOURCE_COLOR
      : options.mode === "heatmap"
        ? heatColor(score?.relative ?? 0)
        : BASE_COLOR;
    const circle = svgEl("circle", {
      cx: pos.x,
      cy: pos.y,
      r: isSource ? 7 : 5,
      fill,
      class: `node node-${node.kind}`,
      "data-node": node.id,
    });
    circle.append(svgEl("title", {}, [nodeTooltip(node, score)]));
    svg.append(circle);

    if (highlighted.has(node.id)) {
      svg.append(
        svgEl("circle", {
          cx: pos.x,
          cy: pos.y,
          r: 10,
          class: "marker",
          "data-node": node.id,
        }),
      );
    }
  }

  container.append(svg);
  if (geometry.title) {
    container.append(el("div", { class: "map-title" }, [geometry.title]));
  }
}
