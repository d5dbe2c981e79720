"""End-to-end orchestration: parse, simulate, fill data, evaluate models,
score, place, and persist run artifacts.

A run executes fixed stages in order, timing each one:

    parse -> hydraulics -> transport -> environment -> models
          -> scoring -> candidates -> placement -> serialize

Errors inside a stage are re-raised as StageError naming the stage;
configuration invariants fail fast before any computation starts.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .envdata import (
    CORE_HEADER,
    EnvDataset,
    assess_completeness,
    contaminate,
    load_contracts_csv,
    load_env_csv,
    load_env_csv_file,
    synthesize_kriging,
    synthesize_ranges,
)
from .errors import (
    ConfigError,
    EmptyCandidateSetError,
    EngineError,
    StageError,
)
from .formula import parse_formula
from .hydraulics import DecayParams, solve_flows
from .models import (
    BUILTIN_MODELS,
    CustomModel,
    DEFAULT_WEIGHTS,
    THRESHOLDS,
    WEIGHT_RANGE,
)
from .network import Network, parse_inp_file, validate_network
from .placement import OBJECTIVE_KINDS, run_placement
from .scoring import (
    NodeScore,
    detect_events,
    filter_candidates,
    score_nodes,
    scores_to_csv,
)
from .transport import (
    HORIZON_MINUTES,
    propagate,
    propagate_batch,
    single_node_scenarios,
)

MANDATORY_OBJECTIVES = ("time_of_detection", "normalized_score")

# sensor-count slider range in the UI; the engine only warns above it
UI_MAX_SENSORS = 100

# clean-water fallback ranges for parameters with no observations at all
DEFAULT_ENV_RANGES: dict[str, tuple[float, float]] = {
    "temperature": (12.0, 20.0),
    "pH": (6.8, 8.2),
    "TOC": (0.3, 1.5),
    "DON": (2.0, 13.0),
    "BR": (2.8, 4.9),
}

DEFAULT_MODELS = {"THM": "sohn_thm", "HAA": "sohn_haa9"}


@dataclass
class RunConfig:
    network_path: str
    env_data_path: str | None = None
    contracts_path: str | None = None
    models: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_MODELS))
    thresholds: dict[str, float] = field(default_factory=dict)
    region: str = "eu"
    weights: dict[str, float] = field(default_factory=dict)
    objectives: tuple[str, ...] = MANDATORY_OBJECTIVES
    sensor_count: int = 5
    cutoff: float = 0.9
    injection_node: str | None = None
    scenario_count: int = 100
    horizon_hours: float = 168.0
    interval_hours: float = 1.0
    fill_method: str = "auto"  # auto | ranges | kriging
    injection_c0: float = 1.0
    pareto_ks: tuple[int, ...] = ()
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "network_path": self.network_path,
            "env_data_path": self.env_data_path,
            "contracts_path": self.contracts_path,
            "models": dict(self.models),
            "thresholds": dict(self.resolved_thresholds()),
            "region": self.region,
            "weights": dict(self.resolved_weights()),
            "objectives": list(self.objectives),
            "sensor_count": self.sensor_count,
            "cutoff": self.cutoff,
            "injection_node": self.injection_node,
            "scenario_count": self.scenario_count,
            "horizon_hours": self.horizon_hours,
            "interval_hours": self.interval_hours,
            "fill_method": self.fill_method,
            "injection_c0": self.injection_c0,
            "pareto_ks": list(self.pareto_ks),
            "seed": self.seed,
        }

    def families(self) -> list[str]:
        return sorted(self.models)

    def resolved_thresholds(self) -> dict[str, float]:
        if self.region not in THRESHOLDS:
            raise ConfigError(
                f"unknown region {self.region!r}; expected one of "
                f"{', '.join(sorted(THRESHOLDS))}"
            )
        regional = THRESHOLDS[self.region]
        out: dict[str, float] = {}
        for family in self.families():
            if family in self.thresholds:
                out[family] = float(self.thresholds[family])
            elif family in regional:
                out[family] = regional[family]
            else:
                raise ConfigError(
                    f"no threshold for family {family!r}: none configured and "
                    f"region {self.region!r} has no default"
                )
            if out[family] <= 0:
                raise ConfigError(f"threshold for {family!r} must be positive")
        return out

    def resolved_weights(self) -> dict[str, float]:
        lo, hi = WEIGHT_RANGE
        out: dict[str, float] = {}
        for family in self.families():
            if family in self.weights:
                out[family] = float(self.weights[family])
            elif family in DEFAULT_WEIGHTS:
                out[family] = DEFAULT_WEIGHTS[family]
            else:
                raise ConfigError(
                    f"no weight for family {family!r}: none configured and no default"
                )
            if not lo <= out[family] <= hi:
                raise ConfigError(
                    f"weight for {family!r} outside [{lo}, {hi}]: {out[family]}"
                )
        return out

    def validate(self) -> list[str]:
        """Fail fast on invariants; returns non-fatal warnings."""
        warnings: list[str] = []
        if not any(obj in self.objectives for obj in MANDATORY_OBJECTIVES):
            raise ConfigError(
                "at least one mandatory objective required: "
                + " or ".join(MANDATORY_OBJECTIVES)
            )
        for obj in self.objectives:
            if obj not in OBJECTIVE_KINDS:
                raise ConfigError(
                    f"unknown objective {obj!r}; expected one of "
                    f"{', '.join(OBJECTIVE_KINDS)}"
                )
        if self.sensor_count < 1:
            raise ConfigError(f"sensor_count must be >= 1, got {self.sensor_count}")
        if self.sensor_count > UI_MAX_SENSORS:
            warnings.append(
                f"sensor_count {self.sensor_count} exceeds the interactive "
                f"range 1..{UI_MAX_SENSORS}"
            )
        if not 0.0 <= self.cutoff <= 1.0:
            raise ConfigError(f"cutoff must be in [0, 1], got {self.cutoff}")
        if self.scenario_count < 1:
            raise ConfigError("scenario_count must be >= 1")
        if self.horizon_hours <= 0 or self.interval_hours <= 0:
            raise ConfigError("horizon and interval must be positive")
        if self.fill_method not in ("auto", "ranges", "kriging"):
            raise ConfigError(f"unknown fill_method {self.fill_method!r}")
        if self.injection_c0 <= 0:
            raise ConfigError("injection_c0 must be positive")
        if not self.models:
            raise ConfigError("at least one family model required")
        if "thm_events" in self.objectives and "THM" not in self.models:
            raise ConfigError("thm_events objective requires a THM model")
        if "haa_events" in self.objectives and "HAA" not in self.models:
            raise ConfigError("haa_events objective requires a HAA model")
        self.resolved_thresholds()
        self.resolved_weights()
        self.resolve_models()
        return warnings

    def resolve_models(self) -> dict[str, Callable]:
        """Builtin names map directly; anything else parses as a formula."""
        out: dict[str, Callable] = {}
        for family, spec in self.models.items():
            if spec in BUILTIN_MODELS:
                declared, fn = BUILTIN_MODELS[spec]
                if declared != family:
                    raise ConfigError(
                        f"model {spec!r} is a {declared} model, not {family}"
                    )
                out[family] = fn
            else:
                out[family] = CustomModel(formula=parse_formula(spec), family=family)
        return out


@dataclass
class RunResult:
    config: dict
    completeness: dict
    scores: list[dict]
    candidates: list[str]
    placement: dict
    network_summary: dict
    timings: dict[str, float]
    warnings: list[str]
    diagnostics: list[dict]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "completeness": self.completeness,
            "scores": self.scores,
            "candidates": self.candidates,
            "placement": self.placement,
            "network": self.network_summary,
            "timings": self.timings,
            "warnings": self.warnings,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False)


def network_geometry(net: Network) -> dict:
    """Node/edge geometry for rendering and the /network endpoint."""
    nodes = []
    for nid in sorted(net.nodes):
        n = net.nodes[nid]
        x, y = n.coord if n.coord else (None, None)
        nodes.append(
            {
                "id": n.id,
                "kind": n.kind,
                "x": x,
                "y": y,
                "elevation": n.elevation,
                "demand": n.base_demand,
            }
        )
    edges = []
    for pid in sorted(net.pipes):
        p = net.pipes[pid]
        edges.append(
            {
                "id": p.id,
                "from": p.from_node,
                "to": p.to_node,
                "length": p.length,
                "diameter": p.diameter,
                "status": p.status,
            }
        )
    return {"nodes": nodes, "edges": edges, "title": net.title}


def empty_dataset() -> EnvDataset:
    return load_env_csv(",".join(CORE_HEADER) + "\n")


class _Stages:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name: str, fn: Callable):
        start = time.perf_counter()
        try:
            result = fn()
        except (EngineError, OSError) as exc:
            raise StageError(name, exc) from exc
        self.timings[name] = time.perf_counter() - start
        return result


def _finite_or_none(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


def run(config: RunConfig) -> RunResult:
    """Execute the full pipeline for one configuration."""
    warnings = config.validate()
    stages = _Stages()
    thresholds = config.resolved_thresholds()
    weights = config.resolved_weights()
    model_fns = config.resolve_models()

    # parse ------------------------------------------------------------------
    def parse_stage():
        net = parse_inp_file(config.network_path)
        contracts = {}
        if config.contracts_path:
            contracts = load_contracts_csv(
                Path(config.contracts_path).read_text(encoding="utf-8")
            )
        return net, contracts

    net, contracts = stages.run("parse", parse_stage)
    diagnostics = [
        {"code": d.code, "message": d.message, "node": d.node}
        for d in validate_network(net)
    ]

    # hydraulics ---------------------------------------------------------------
    flows = stages.run("hydraulics", lambda: solve_flows(net))

    # transport ----------------------------------------------------------------
    def transport_stage():
        # residual chlorine enters at the plants with their own strength;
        # contamination scenarios use the configured tracer strength
        source_c0 = max((n.initial_quality for n in net.sources()), default=0.0)
        steady = propagate(
            net,
            flows,
            {n.id for n in net.sources()},
            DecayParams(
                C0=source_c0 if source_c0 > 0 else config.injection_c0,
                K_b=net.bulk_coeff,
                n=net.reaction_order,
            ),
        )
        if config.injection_node is not None:
            injections = [{config.injection_node}]
        else:
            injections = list(
                single_node_scenarios(net, config.scenario_count, config.seed)
            )
        scenarios = propagate_batch(
            net,
            flows,
            injections,
            DecayParams(
                C0=config.injection_c0, K_b=net.bulk_coeff, n=net.reaction_order
            ),
        )
        return steady, scenarios

    steady, scenarios = stages.run("transport", transport_stage)

    # environment --------------------------------------------------------------
    def environment_stage():
        if config.env_data_path:
            ds = load_env_csv_file(config.env_data_path)
        else:
            ds = empty_dataset()
        report = assess_completeness(ds, net)
        has_gaps = (
            set(ds.nodes) != set(net.nodes)
            or len(ds.timestamps) == 0
            or any(np.isnan(arr).any() for arr in ds.data.values())
        )
        if report.synthesis_required or has_gaps:
            chlorine_fill = {n: steady.chlorine.get(n, 0.0) for n in net.nodes}
            observed_with_coords = sum(
                1 for node in ds.nodes if net.nodes[node].coord is not None
            )
            use_kriging = config.fill_method == "kriging" or (
                config.fill_method == "auto" and observed_with_coords >= 2
            )
            fill = synthesize_kriging if use_kriging else synthesize_ranges
            ds = fill(
                ds,
                net,
                horizon_hours=config.horizon_hours,
                interval_hours=config.interval_hours,
                seed=config.seed,
                default_ranges=DEFAULT_ENV_RANGES,
                chlorine_fill=chlorine_fill,
            )
        return ds, report

    dataset, report = stages.run("environment", environment_stage)
    completeness = {
        "coverage": report.coverage,
        "interval_hours": _finite_or_none(report.interval_hours),
        "record_count": report.record_count,
        "expected_records": report.expected_records,
        "synthesis_required": report.synthesis_required,
    }
    if report.synthesis_required:
        warnings.append(
            "observed data below completeness bounds; synthetic gap-fill applied"
        )

    # models -------------------------------------------------------------------
    def models_stage():
        age_hours = np.empty(len(dataset.nodes))
        for i, node in enumerate(dataset.nodes):
            arrival = steady.arrival_time.get(node, math.inf)
            age_hours[i] = min(arrival, HORIZON_MINUTES) / 60.0
        shape = (len(dataset.timestamps), len(dataset.nodes))
        time_matrix = np.broadcast_to(age_hours, shape)
        columns = dataset.columns()
        return {
            family: np.asarray(fn(columns, time_matrix), dtype=float)
            for family, fn in sorted(model_fns.items())
        }

    concentrations = stages.run("models", models_stage)

    # scoring --------------------------------------------------------------------
    def scoring_stage():
        events = detect_events(concentrations, dataset.nodes, thresholds)
        arrivals = np.full((len(scenarios), len(dataset.nodes)), HORIZON_MINUTES)
        for s, scenario in enumerate(scenarios):
            for i, node in enumerate(dataset.nodes):
                arrivals[s, i] = min(
                    scenario.arrival_time.get(node, math.inf), HORIZON_MINUTES
                )
        mean_minutes = arrivals.mean(axis=0)
        detection_times = {
            node: float(mean_minutes[i]) for i, node in enumerate(dataset.nodes)
        }
        node_contracts = {
            n: float(dataset.contracts[i]) for i, n in enumerate(dataset.nodes)
        }
        for node, value in contracts.items():
            if node in node_contracts:
                node_contracts[node] = value
        return score_nodes(
            events,
            len(dataset.timestamps),
            weights,
            detection_times=detection_times,
            contracts=node_contracts,
        )

    scores = stages.run("scoring", scoring_stage)

    # candidates ---------------------------------------------------------------
    def candidates_stage():
        try:
            return filter_candidates(scores, config.cutoff)
        except EmptyCandidateSetError:
            warnings.append(
                f"no node reached the relative-score cutoff {config.cutoff}; "
                "retrying with cutoff 0"
            )
            return filter_candidates(scores, 0.0)

    candidates = stages.run("candidates", candidates_stage)

    # placement ----------------------------------------------------------------
    placement = stages.run(
        "placement",
        lambda: run_placement(
            scores,
            candidates,
            scenarios,
            config.sensor_count,
            objectives=config.objectives,
            pareto_ks=config.pareto_ks or None,
        ),
    )

    # serialize ----------------------------------------------------------------
    def serialize_stage():
        score_dicts = [
            {
                "node": s.node,
                "events": s.events,
                "normalized_percent": s.normalized_percent,
                "weighted": s.weighted,
                "total": s.total,
                "relative": s.relative,
                "detection_time": _finite_or_none(s.detection_time),
                "contracts": s.contracts,
            }
            for s in scores
        ]
        placement_dict = {
            "per_objective": {
                kind: [[node, value] for node, value in placed]
                for kind, placed in placement.per_objective.items()
            },
            "consensus": placement.consensus,
            "shares": placement.shares,
            "pareto": [[k, v] for k, v in placement.pareto],
            "expected_time": _finite_or_none(placement.expected_time),
        }
        return score_dicts, placement_dict

    score_dicts, placement_dict = stages.run("serialize", serialize_stage)

    return RunResult(
        config=config.to_dict(),
        completeness=completeness,
        scores=score_dicts,
        candidates=list(candidates),
        placement=placement_dict,
        network_summary=network_geometry(net),
        timings=stages.timings,
        warnings=warnings,
        diagnostics=diagnostics,
    )


def scores_csv_from_result(result: RunResult) -> str:
    rebuilt = [
        NodeScore(
            node=s["node"],
            events=s["events"],
            normalized_percent=s["normalized_percent"],
            weighted=s["weighted"],
            total=s["total"],
            relative=s["relative"],
            detection_time=(
                math.inf if s["detection_time"] is None else s["detection_time"]
            ),
            contracts=s["contracts"],
        )
        for s in result.scores
    ]
    return scores_to_csv(rebuilt)


def save_run(result: RunResult, out_dir: str | Path) -> Path:
    """Persist the artifact set: config.json, result.json, scores.csv,
    network.json.  Returns the directory path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(result.config, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out / "result.json").write_text(result.to_json() + "\n", encoding="utf-8")
    (out / "network.json").write_text(
        json.dumps(result.network_summary, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    (out / "scores.csv").write_text(scores_csv_from_result(result), encoding="utf-8")
    return out


def run_scenario(
    network_path: str,
    fraction: float,
    families: list[str],
    env_data_path: str | None = None,
    seed: int = 0,
    horizon_hours: float = 168.0,
    interval_hours: float = 1.0,
) -> EnvDataset:
    """Build a contaminated dataset for what-if studies (CLI `scenario`)."""
    net = parse_inp_file(network_path)
    ds = load_env_csv_file(env_data_path) if env_data_path else empty_dataset()
    report = assess_completeness(ds, net)
    has_gaps = (
        set(ds.nodes) != set(net.nodes)
        or len(ds.timestamps) == 0
        or any(np.isnan(arr).any() for arr in ds.data.values())
    )
    if report.synthesis_required or has_gaps:
        flows = solve_flows(net)
        source_c0 = max((n.initial_quality for n in net.sources()), default=0.0)
        steady = propagate(
            net,
            flows,
            {n.id for n in net.sources()},
            DecayParams(
                C0=source_c0 if source_c0 > 0 else 1.0,
                K_b=net.bulk_coeff,
                n=net.reaction_order,
            ),
        )
        ds = synthesize_ranges(
            ds,
            net,
            horizon_hours=horizon_hours,
            interval_hours=interval_hours,
            seed=seed,
            default_ranges=DEFAULT_ENV_RANGES,
            chlorine_fill={n: steady.chlorine.get(n, 0.0) for n in net.nodes},
        )
    return contaminate(ds, net, fraction, families, seed=seed)
