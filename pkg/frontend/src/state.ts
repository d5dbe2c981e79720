/**
 * Form model, client-side validation, and run history.
 *
 * Validation mirrors the engine's own config rules so bad configs are
 * blocked before upload; the server remains the authority (a 400 is
 * still surfaced inline if something slips through).
 */

import type { RunConfigInput, RunResultPayload, ServiceError } from "./api.js";

export const MANDATORY_OBJECTIVES = ["time_of_detection", "normalized_score"] as const;

export const ALL_OBJECTIVES = [
  "time_of_detection",
  "normalized_score",
  "contracts",
  "thm_events",
  "haa_events",
] as const;

export const OBJECTIVE_LABELS: Record<string, string> = {
  time_of_detection: "Time of detection",
  normalized_score: "Normalized score",
  contracts: "Contracts covered",
  thm_events: "THM events",
  haa_events: "HAA events",
};

export const FAMILIES = ["THM", "HAA"] as const;

export const BUILTIN_MODEL_NAMES: Record<string, string[]> = {
  THM: ["sohn_thm", "uyak_thm"],
  HAA: ["sohn_haa9", "okoji_haa9"],
};

export const MAX_SENSORS = 100;
export const MAX_WEIGHT = 5;

export interface FormState {
  objectives: Record<string, boolean>;
  sensorCount: number;
  cutoff: number;
  region: "eu" | "us";
  weights: Record<string, number>;
  // empty string = use the regional default
  thresholds: Record<string, string>;
  models: Record<string, string>;
  customFormulas: Record<string, string>;
  injectionNode: string;
  scenarioCount: number;
  seed: number;
  horizonHours: number;
  intervalHours: number;
  fillMethod: "auto" | "kriging" | "ranges";
  injectionC0: number;
  paretoKs: string; // comma list, e.g. "1,5,10"
}

export function defaultFormState(): FormState {
  return {
    objectives: {
      time_of_detection: true,
      normalized_score: true,
      contracts: false,
      thm_events: false,
      haa_events: false,
    },
    sensorCount: 5,
    cutoff: 0.9,
    region: "eu",
    weights: { THM: 0.4, HAA: 0.3 },
    thresholds: { THM: "", HAA: "" },
    models: { THM: "sohn_thm", HAA: "sohn_haa9" },
    customFormulas: { THM: "", HAA: "" },
    injectionNode: "",
    scenarioCount: 100,
    seed: 0,
    horizonHours: 168,
    intervalHours: 1,
    fillMethod: "auto",
    injectionC0: 1.0,
    paretoKs: "",
  };
}

export type FieldErrors = Record<string, string>;

export function selectedObjectives(form: FormState): string[] {
  return ALL_OBJECTIVES.filter((o) => form.objectives[o]);
}

export function validateForm(form: FormState): FieldErrors {
  const errors: FieldErrors = {};

  const picked = selectedObjectives(form);
  if (picked.length === 0) {
    errors.objectives = "select at least one objective";
  } else if (!picked.some((o) => (MANDATORY_OBJECTIVES as readonly string[]).includes(o))) {
    errors.objectives =
      "at least one of Time of detection / Normalized score is required";
  }

  if (!Number.isInteger(form.sensorCount) || form.sensorCount < 1 || form.sensorCount > MAX_SENSORS) {
    errors.sensorCount = `sensor count must be between 1 and ${MAX_SENSORS}`;
  }
  if (!(form.cutoff >= 0 && form.cutoff <= 1)) {
    errors.cutoff = "cutoff must be between 0 and 1";
  }
  for (const fam of FAMILIES) {
    const w = form.weights[fam] ?? 0;
    if (!(w >= 0 && w <= MAX_WEIGHT)) {
      errors[`weight_${fam}`] = `weight must be between 0 and ${MAX_WEIGHT}`;
    }
    const t = form.thresholds[fam] ?? "";
    if (t.trim() !== "" && !(Number(t) > 0)) {
      errors[`threshold_${fam}`] = "threshold must be a positive number";
    }
    if (form.models[fam] === "custom" && !(form.customFormulas[fam] ?? "").trim()) {
      errors[`model_${fam}`] = "custom model needs a formula";
    }
  }
  if (!Number.isInteger(form.scenarioCount) || form.scenarioCount < 1) {
    errors.scenarioCount = "scenario count must be a positive integer";
  }
  if (!(form.horizonHours > 0)) {
    errors.horizonHours = "horizon must be positive";
  }
  if (!(form.intervalHours > 0)) {
    errors.intervalHours = "interval must be positive";
  }
  if (!(form.injectionC0 > 0)) {
    errors.injectionC0 = "injection concentration must be positive";
  }
  if (form.paretoKs.trim() !== "") {
    const ks = parseParetoKs(form.paretoKs);
    if (ks === null) {
      errors.paretoKs = "use an ascending comma list of positive integers, e.g. 1,5,10";
    }
  }
  return errors;
}

export function parseParetoKs(text: string): number[] | null {
  const parts = text.split(",").map((p) => p.trim()).filter((p) => p !== "");
  const ks: number[] = [];
  for (const part of parts) {
    const n = Number(part);
    if (!Number.isInteger(n) || n < 1) return null;
    ks.push(n);
  }
  for (let i = 1; i < ks.length; i++) {
    const prev = ks[i - 1]!;
    if (ks[i]! <= prev) return null;
  }
  return ks;
}

/** Build the POST /runs config body. Defaults the engine already applies
 * are omitted rather than restated. */
export function formToConfig(form: FormState): RunConfigInput {
  const config: RunConfigInput = {
    objectives: selectedObjectives(form),
    sensor_count: form.sensorCount,
    cutoff: form.cutoff,
    region: form.region,
    weights: { ...form.weights },
    scenario_count: form.scenarioCount,
    seed: form.seed,
    horizon_hours: form.horizonHours,
    interval_hours: form.intervalHours,
    fill_method: form.fillMethod,
    injection_c0: form.injectionC0,
  };

  const models: Record<string, string> = {};
  for (const fam of FAMILIES) {
    models[fam] = form.models[fam] === "custom"
      ? (form.customFormulas[fam] ?? "").trim()
      : (form.models[fam] ?? "");
  }
  config.models = models;

  const thresholds: Record<string, number> = {};
  for (const fam of FAMILIES) {
    const t = (form.thresholds[fam] ?? "").trim();
    if (t !== "") thresholds[fam] = Number(t);
  }
  if (Object.keys(thresholds).length > 0) config.thresholds = thresholds;

  if (form.injectionNode.trim() !== "") {
    config.injection_node = form.injectionNode.trim();
  }
  const ks = parseParetoKs(form.paretoKs);
  if (ks && ks.length > 0) config.pareto_ks = ks;
  return config;
}

// --- run history -------------------------------------------------------

export interface HistoryEntry {
  id: string;
  label: string;
  config: RunConfigInput;
  result: RunResultPayload;
  startedAt: Date;
}

export class RunHistory {
  private entries: HistoryEntry[] = [];

  add(entry: HistoryEntry): void {
    this.entries.unshift(entry);
  }

  all(): readonly HistoryEntry[] {
    return this.entries;
  }

  byId(id: string): HistoryEntry | undefined {
    return this.entries.find((e) => e.id === id);
  }
}

/** Which form field a service 400 belongs beside. */
export function errorField(detail: ServiceError): string {
  switch (detail.stage) {
    case "parse":
      return "network";
    case "environment":
      return "env_data";
    case "models":
      return "models";
    default:
      break;
  }
  const msg = detail.message.toLowerCase();
  if (msg.includes("objective")) return "objectives";
  if (msg.includes("sensor_count")) return "sensorCount";
  if (msg.includes("cutoff")) return "cutoff";
  if (msg.includes("threshold")) return "thresholds";
  if (msg.includes("weight")) return "weights";
  return "global";
}

/** Two runs are "identical" when their payloads agree except timings and
 * the per-upload input paths echoed inside config. */
export function payloadsIdentical(a: RunResultPayload, b: RunResultPayload): boolean {
  const strip = (p: RunResultPayload) => {
    const { timings: _timings, config, ...rest } = p;
    const {
      network_path: _n,
      env_data_path: _e,
      contracts_path: _c,
      ...configRest
    } = config as Record<string, unknown>;
    return JSON.stringify(sortKeysDeep({ ...rest, config: configRest }));
  };
  return strip(a) === strip(b);
}

function sortKeysDeep(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeysDeep);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as Record<string, unknown>).sort()) {
      out[key] = sortKeysDeep((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}
