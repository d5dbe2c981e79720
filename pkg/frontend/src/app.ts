/**
 * Page wiring: upload inputs, configure a run, submit it to the service,
 * and render the result views (map, charts, comparison, history).
 *
 * All domain numbers shown anywhere come from service payloads; this file
 * only routes them to renderers.
 */

import { ApiClient, ApiError, type RunResultPayload } from "./api.js";
import { renderBars, renderPareto, renderPie, type BarDatum } from "./charts.js";
import { renderCompare } from "./compare.js";
import { el, clear } from "./dom.js";
import { fmtMinutes, fmtNumber } from "./format.js";
import { renderMap, type MapMode } from "./map.js";
import {
  ALL_OBJECTIVES,
  BUILTIN_MODEL_NAMES,
  FAMILIES,
  MAX_SENSORS,
  MAX_WEIGHT,
  OBJECTIVE_LABELS,
  RunHistory,
  defaultFormState,
  errorField,
  formToConfig,
  selectedObjectives,
  validateForm,
  type FormState,
} from "./state.js";

const API_BASE = (window as { DBPSENSE_API?: string }).DBPSENSE_API
  ?? "http://127.0.0.1:8000";

interface ViewState {
  objective: string;
  mode: MapMode;
  currentId: string | null;
  compareA: string | null;
  compareB: string | null;
}

export function startApp(root: HTMLElement): void {
  const client = new ApiClient(API_BASE);
  const form = defaultFormState();
  const history = new RunHistory();
  const view: ViewState = {
    objective: "time_of_detection",
    mode: "placement",
    currentId: null,
    compareA: null,
    compareB: null,
  };
  const files: { network?: File; env_data?: File; contracts?: File } = {};

  root.append(
    el("header", {}, [
      el("h1", {}, ["DBP sensor placement"]),
      el("span", { id: "status", class: "status" }, ["idle"]),
    ]),
    el("main", {}, [
      el("section", { id: "form-panel" }),
      el("section", { id: "result-panel" }, [
        el("div", { id: "view-controls" }),
        el("div", { id: "map" }),
        el("div", { id: "warnings" }),
        el("div", { class: "charts" }, [
          el("div", { id: "detection-bars" }),
          el("div", { id: "contract-bars" }),
          el("div", { id: "consensus-pie" }),
          el("div", { id: "pareto" }),
        ]),
      ]),
      el("aside", { id: "side-panel" }, [
        el("div", { id: "history" }),
        el("div", { id: "compare" }),
      ]),
    ]),
  );

  const statusEl = root.querySelector("#status") as HTMLElement;
  const formPanel = root.querySelector("#form-panel") as HTMLElement;

  function setStatus(text: string, kind: "idle" | "busy" | "error" = "idle"): void {
    statusEl.textContent = text;
    statusEl.className = `status status-${kind}`;
  }

  function fieldError(field: string): HTMLElement {
    return el("div", { class: "field-error", "data-field": field });
  }

  function buildForm(): void {
    clear(formPanel);
    const errors = validateForm(form);

    const uploads = el("fieldset", {}, [el("legend", {}, ["Inputs"])]);
    const fileRow = (
      name: "network" | "env_data" | "contracts",
      label: string,
      accept: string,
      required: boolean,
    ) => {
      const input = el("input", {
        type: "file",
        accept,
        id: `file-${name}`,
        change: (ev: Event) => {
          const target = ev.target as HTMLInputElement;
          files[name] = target.files?.[0];
          buildForm();
        },
      });
      return el("div", { class: "form-row" }, [
        el("label", { for: `file-${name}` }, [
          `${label}${required ? " *" : ""}`,
        ]),
        input,
        el("span", { class: "file-name" }, [files[name]?.name ?? "none"]),
        fieldError(name),
      ]);
    };
    uploads.append(
      fileRow("network", "Network (.inp)", ".inp", true),
      fileRow("env_data", "Environmental data (.csv)", ".csv", false),
      fileRow("contracts", "Contracts (.csv)", ".csv", false),
    );

    const objectives = el("fieldset", {}, [el("legend", {}, ["Objectives"])]);
    for (const kind of ALL_OBJECTIVES) {
      objectives.append(
        el("label", { class: "check-row" }, [
          el("input", {
            type: "checkbox",
            ...(form.objectives[kind] ? { checked: true } : {}),
            change: (ev: Event) => {
              form.objectives[kind] = (ev.target as HTMLInputElement).checked;
              buildForm();
            },
          }),
          OBJECTIVE_LABELS[kind] ?? kind,
        ]),
      );
    }
    objectives.append(fieldError("objectives"));

    const weights = el("fieldset", {}, [el("legend", {}, ["Family weights"])]);
    for (const fam of FAMILIES) {
      const slider = el("input", {
        type: "range",
        min: 0,
        max: MAX_WEIGHT,
        step: 0.1,
        value: form.weights[fam] ?? 0,
        id: `weight-${fam}`,
        input: (ev: Event) => {
          form.weights[fam] = Number((ev.target as HTMLInputElement).value);
          const label = formPanel.querySelector(`#weight-value-${fam}`);
          if (label) label.textContent = String(form.weights[fam]);
        },
      });
      weights.append(
        el("div", { class: "form-row" }, [
          el("label", { for: `weight-${fam}` }, [`${fam} weight`]),
          slider,
          el("span", { id: `weight-value-${fam}` }, [String(form.weights[fam])]),
          fieldError(`weight_${fam}`),
        ]),
      );
    }

    const modelRows = el("fieldset", {}, [el("legend", {}, ["Models and thresholds"])]);
    for (const fam of FAMILIES) {
      const select = el("select", {
        id: `model-${fam}`,
        change: (ev: Event) => {
          form.models[fam] = (ev.target as HTMLSelectElement).value;
          buildForm();
        },
      });
      for (const name of [...(BUILTIN_MODEL_NAMES[fam] ?? []), "custom"]) {
        const opt = el("option", { value: name }, [name]);
        if (form.models[fam] === name) opt.setAttribute("selected", "");
        select.append(opt);
      }
      const row = el("div", { class: "form-row" }, [
        el("label", { for: `model-${fam}` }, [`${fam} model`]),
        select,
      ]);
      if (form.models[fam] === "custom") {
        row.append(
          el("input", {
            type: "text",
            placeholder: "formula, e.g. 12.7 * TOC**0.8",
            value: form.customFormulas[fam] ?? "",
            input: (ev: Event) => {
              form.customFormulas[fam] = (ev.target as HTMLInputElement).value;
            },
          }),
        );
      }
      row.append(
        el("input", {
          type: "number",
          placeholder: `threshold (${form.region} default)`,
          value: form.thresholds[fam] ?? "",
          min: 0,
          input: (ev: Event) => {
            form.thresholds[fam] = (ev.target as HTMLInputElement).value;
          },
        }),
        fieldError(`model_${fam}`),
        fieldError(`threshold_${fam}`),
      );
      modelRows.append(row);
    }

    const numberRow = (
      key: keyof FormState & string,
      label: string,
      attrs: Record<string, string | number> = {},
    ) =>
      el("div", { class: "form-row" }, [
        el("label", { for: `field-${key}` }, [label]),
        el("input", {
          type: "number",
          id: `field-${key}`,
          value: form[key] as number,
          ...attrs,
          input: (ev: Event) => {
            (form as unknown as Record<string, unknown>)[key] = Number(
              (ev.target as HTMLInputElement).value,
            );
          },
        }),
        fieldError(key),
      ]);

    const runParams = el("fieldset", {}, [
      el("legend", {}, ["Run parameters"]),
      numberRow("sensorCount", `Sensors (1-${MAX_SENSORS})`, { min: 1, max: MAX_SENSORS }),
      numberRow("cutoff", "Candidate cutoff (0-1)", { min: 0, max: 1, step: 0.05 }),
      el("div", { class: "form-row" }, [
        el("label", { for: "field-region" }, ["Threshold region"]),
        el("select", {
          id: "field-region",
          change: (ev: Event) => {
            form.region = (ev.target as HTMLSelectElement).value as FormState["region"];
          },
        }, [
          el("option", { value: "eu", ...(form.region === "eu" ? { selected: true } : {}) }, ["EU"]),
          el("option", { value: "us", ...(form.region === "us" ? { selected: true } : {}) }, ["US"]),
        ]),
      ]),
      numberRow("scenarioCount", "Injection scenarios", { min: 1 }),
      numberRow("seed", "Seed"),
      el("div", { class: "form-row" }, [
        el("label", { for: "field-injection" }, ["Injection node (optional)"]),
        el("input", {
          type: "text",
          id: "field-injection",
          value: form.injectionNode,
          input: (ev: Event) => {
            form.injectionNode = (ev.target as HTMLInputElement).value;
          },
        }),
      ]),
      el("div", { class: "form-row" }, [
        el("label", { for: "field-pareto" }, ["Pareto sensor counts"]),
        el("input", {
          type: "text",
          id: "field-pareto",
          placeholder: "e.g. 1,5,10,20",
          value: form.paretoKs,
          input: (ev: Event) => {
            form.paretoKs = (ev.target as HTMLInputElement).value;
          },
        }),
        fieldError("paretoKs"),
      ]),
    ]);

    const canSubmit = Object.keys(errors).length === 0 && !!files.network;
    const submit = el("button", {
      id: "run-button",
      type: "button",
      click: () => void submitRun(),
    }, ["Run placement"]);
    if (!canSubmit) submit.setAttribute("disabled", "");

    const submitRow = el("div", { class: "form-row" }, [
      submit,
      fieldError("global"),
    ]);
    if (!files.network) {
      submitRow.append(el("span", { class: "hint" }, ["upload a network file first"]));
    }

    formPanel.append(uploads, objectives, weights, modelRows, runParams, submitRow);

    for (const [field, message] of Object.entries(errors)) {
      const slot = formPanel.querySelector(`.field-error[data-field="${field}"]`);
      if (slot) slot.textContent = message;
    }
  }

  async function submitRun(): Promise<void> {
    if (!files.network) return;
    const config = formToConfig(form);
    setStatus("running…", "busy");
    try {
      const id = await client.startRun(
        { network: files.network, env_data: files.env_data, contracts: files.contracts },
        config,
      );
      const result = await client.getRun(id);
      history.add({
        id,
        label: `${files.network.name} k=${config.sensor_count} seed=${config.seed} (${id.slice(0, 6)})`,
        config,
        result,
        startedAt: new Date(),
      });
      view.currentId = id;
      const picked = selectedObjectives(form);
      if (!picked.includes(view.objective) && picked.length > 0) {
        view.objective = picked[0]!;
      }
      setStatus(`done — run ${id}`);
      renderAll();
    } catch (err) {
      if (err instanceof ApiError) {
        setStatus(`failed: ${err.detail.message}`, "error");
        buildForm();
        const slot = formPanel.querySelector(
          `.field-error[data-field="${errorField(err.detail)}"]`,
        ) ?? formPanel.querySelector('.field-error[data-field="global"]');
        if (slot) slot.textContent = `${err.detail.error}: ${err.detail.message}`;
      } else {
        setStatus(`failed: ${(err as Error).message}`, "error");
      }
    }
  }

  function renderViewControls(result: RunResultPayload): void {
    const controls = root.querySelector("#view-controls") as HTMLElement;
    clear(controls);
    const objectives = Object.keys(result.placement.per_objective);
    for (const kind of objectives) {
      const btn = el("button", {
        type: "button",
        class: kind === view.objective ? "objective-btn active" : "objective-btn",
        "data-objective": kind,
        click: () => {
          view.objective = kind;
          renderAll();
        },
      }, [OBJECTIVE_LABELS[kind] ?? kind]);
      controls.append(btn);
    }
    const modeBtn = el("button", {
      type: "button",
      class: "mode-btn",
      click: () => {
        view.mode = view.mode === "placement" ? "heatmap" : "placement";
        renderAll();
      },
    }, [view.mode === "placement" ? "show score heatmap" : "show placement"]);
    controls.append(modeBtn);
    if (result.placement.expected_time !== null) {
      controls.append(
        el("span", { class: "expected-time" }, [
          `expected detection ${fmtMinutes(result.placement.expected_time)}`,
        ]),
      );
    }
  }

  function renderAll(): void {
    const entry = view.currentId ? history.byId(view.currentId) : undefined;
    const mapEl = root.querySelector("#map") as HTMLElement;
    if (!entry) {
      renderMap(mapEl, null, [], null, { mode: view.mode, objective: view.objective });
      return;
    }
    const result = entry.result;
    renderViewControls(result);
    renderMap(mapEl, result.network, result.scores, result.placement, {
      mode: view.mode,
      objective: view.objective,
    });

    const warningsEl = root.querySelector("#warnings") as HTMLElement;
    clear(warningsEl);
    for (const warning of result.warnings) {
      warningsEl.append(el("div", { class: "warning" }, [warning]));
    }

    const byNode = new Map(result.scores.map((s) => [s.node, s]));
    const placed = result.placement.per_objective[view.objective] ?? [];
    const detectionData: BarDatum[] = placed.map(([node]) => {
      const score = byNode.get(node);
      const minutes = score?.detection_time ?? null;
      return {
        label: node,
        value: minutes ?? 0,
        display: fmtMinutes(minutes),
      };
    });
    renderBars(
      root.querySelector("#detection-bars") as HTMLElement,
      detectionData,
      "Mean detection time of placed nodes",
    );
    const contractData: BarDatum[] = placed.map(([node]) => {
      const score = byNode.get(node);
      return {
        label: node,
        value: score?.contracts ?? 0,
        display: fmtNumber(score?.contracts ?? 0),
      };
    });
    renderBars(
      root.querySelector("#contract-bars") as HTMLElement,
      contractData,
      "Contracts at placed nodes",
    );
    renderPie(
      root.querySelector("#consensus-pie") as HTMLElement,
      result.placement.shares,
      result.placement.consensus,
    );
    renderPareto(root.querySelector("#pareto") as HTMLElement, result.placement.pareto);
    renderHistory();
  }

  function renderHistory(): void {
    const panel = root.querySelector("#history") as HTMLElement;
    clear(panel);
    panel.append(el("h3", {}, ["Run history"]));
    if (history.all().length === 0) {
      panel.append(el("div", { class: "empty-state" }, ["no runs yet"]));
      return;
    }
    const list = el("ul", { class: "history-list" });
    for (const entry of history.all()) {
      const item = el("li", { "data-run": entry.id }, [
        el("a", {
          href: "#",
          click: (ev: Event) => {
            ev.preventDefault();
            view.currentId = entry.id;
            renderAll();
          },
        }, [entry.label]),
        el("label", { class: "compare-pick" }, [
          el("input", {
            type: "radio",
            name: "compare-a",
            ...(view.compareA === entry.id ? { checked: true } : {}),
            change: () => {
              view.compareA = entry.id;
              renderComparePanel();
            },
          }),
          "A",
        ]),
        el("label", { class: "compare-pick" }, [
          el("input", {
            type: "radio",
            name: "compare-b",
            ...(view.compareB === entry.id ? { checked: true } : {}),
            change: () => {
              view.compareB = entry.id;
              renderComparePanel();
            },
          }),
          "B",
        ]),
      ]);
      list.append(item);
    }
    panel.append(list);
  }

  function renderComparePanel(): void {
    renderCompare(
      root.querySelector("#compare") as HTMLElement,
      view.compareA ? history.byId(view.compareA) : undefined,
      view.compareB ? history.byId(view.compareB) : undefined,
    );
  }

  buildForm();
  renderAll();
  renderComparePanel();

  client.health().then(
    () => setStatus("service reachable — idle"),
    () => setStatus(`service unreachable at ${API_BASE}`, "error"),
  );
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  startApp(document.getElementById("app") as HTMLElement);
}
