/** Side-by-side what-if comparison of two runs from the history. */

import { el, clear } from "./dom.js";
import { fmtMinutes, fmtShare } from "./format.js";
import { payloadsIdentical, type HistoryEntry } from "./state.js";

function configCell(entry: HistoryEntry, key: string): string {
  const value = (entry.config as Record<string, unknown>)[key];
  if (value === undefined || value === null) return "—";
  if (Array.isArray(value)) return value.join(", ");
  if (typeof value === "object") return JSON.stringify(value);
  return String(value);
}

const COMPARED_KEYS = [
  "sensor_count",
  "objectives",
  "cutoff",
  "region",
  "weights",
  "thresholds",
  "scenario_count",
  "seed",
  "pareto_ks",
];

export function renderCompare(
  container: HTMLElement,
  a: HistoryEntry | undefined,
  b: HistoryEntry | undefined,
): void {
  clear(container);
  if (!a || !b) {
    container.append(
      el("div", { class: "empty-state" }, [
        "pick two runs from the history to compare",
      ]),
    );
    return;
  }

  if (payloadsIdentical(a.result, b.result)) {
    container.append(
      el("div", { class: "identical-badge" }, [
        "identical results (timings aside) — same config, same seed",
      ]),
    );
  }

  const table = el("table", { class: "compare-table" });
  const header = el("tr", {}, [
    el("th", {}, [""]),
    el("th", {}, [a.label]),
    el("th", {}, [b.label]),
  ]);
  table.append(header);

  for (const key of COMPARED_KEYS) {
    const left = configCell(a, key);
    const right = configCell(b, key);
    table.append(
      el("tr", { class: left !== right ? "differs" : "" }, [
        el("td", {}, [key]),
        el("td", {}, [left]),
        el("td", {}, [right]),
      ]),
    );
  }

  table.append(
    el("tr", { class: "result-row" }, [
      el("td", {}, ["expected detection"]),
      el("td", { "data-expected": a.result.placement.expected_time ?? "" }, [
        fmtMinutes(a.result.placement.expected_time),
      ]),
      el("td", { "data-expected": b.result.placement.expected_time ?? "" }, [
        fmtMinutes(b.result.placement.expected_time),
      ]),
    ]),
  );

  const topConsensus = (entry: HistoryEntry) =>
    Object.entries(entry.result.placement.shares)
      .slice(0, 3)
      .map(([node, share]) => `${node} ${fmtShare(share)}`)
      .join(", ");
  table.append(
    el("tr", { class: "result-row" }, [
      el("td", {}, ["top consensus"]),
      el("td", {}, [topConsensus(a)]),
      el("td", {}, [topConsensus(b)]),
    ]),
  );

  container.append(table);
}
