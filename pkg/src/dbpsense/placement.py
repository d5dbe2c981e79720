"""Sensor placement: per-objective top-k selection, expected-detection-time
minimization over injection scenarios, the sensors-vs-time Pareto sweep,
and cross-objective consensus aggregation.

Separable objectives (scores, contracts, event counts, per-node detection
time) are solved exactly by sorting.  The one coupled objective — expected
time to detect a random injection with a sensor *set* — is solved greedily,
with exhaustive enumeration at small scale where brute force is affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._kernels import greedy_expected_time
from .errors import (
    ConfigError,
    EmptyCandidateSetError,
    MetricUnavailableError,
    NoScenariosError,
    UnknownNodeError,
)
from .scoring import NodeScore
from .transport import HORIZON_MINUTES, TransportResult

OBJECTIVE_KINDS = (
    "time_of_detection",
    "normalized_score",
    "contracts",
    "thm_events",
    "haa_events",
)

# exhaustive search is used instead of greedy below these limits
EXACT_CANDIDATE_LIMIT = 20
EXACT_K_LIMIT = 5


@dataclass(frozen=True)
class Objective:
    kind: str

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ConfigError(
                f"unknown objective {self.kind!r}; expected one of "
                f"{', '.join(OBJECTIVE_KINDS)}"
            )

    @property
    def direction(self) -> str:
        return "min" if self.kind == "time_of_detection" else "max"


@dataclass(frozen=True)
class PlacementResult:
    per_objective: dict[str, list[tuple[str, float]]]
    consensus: dict[str, int]
    shares: dict[str, float]
    pareto: list[tuple[int, float]]
    expected_time: float  # minutes, for the requested k


def _metric(score: NodeScore, kind: str) -> float:
    if kind == "time_of_detection":
        return score.detection_time
    if kind == "normalized_score":
        return score.relative
    if kind == "contracts":
        return score.contracts
    if kind == "thm_events":
        return float(score.events.get("THM", math.nan))
    if kind == "haa_events":
        return float(score.events.get("HAA", math.nan))
    raise ConfigError(f"unknown objective {kind!r}")


def place_separable(
    candidates: Sequence[NodeScore], obj: Objective | str, k: int
) -> list[tuple[str, float]]:
    """Exact top-k (bottom-k for detection time) with ties by node id.

    Sorting is optimal for any objective that is a plain sum of per-node
    metrics.  Raises MetricUnavailableError when the metric carries no
    information for any candidate (no contracts table, no arrival times,
    family not active).
    """
    if isinstance(obj, str):
        obj = Objective(obj)
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    if not candidates:
        raise EmptyCandidateSetError("no candidate nodes to place on")

    values = [_metric(s, obj.kind) for s in candidates]
    if any(math.isnan(v) for v in values):
        family = obj.kind.split("_")[0].upper()
        raise MetricUnavailableError(
            f"objective {obj.kind!r} needs family {family!r} active"
        )
    if obj.kind == "contracts" and not any(values):
        raise MetricUnavailableError("contracts objective without contracts data")
    if obj.kind == "time_of_detection" and all(math.isinf(v) for v in values):
        raise MetricUnavailableError("no candidate has a detection time")

    sign = 1.0 if obj.direction == "min" else -1.0
    ranked = sorted(
        zip(candidates, values), key=lambda sv: (sign * sv[1], sv[0].node)
    )
    return [(s.node, v) for s, v in ranked[: min(k, len(ranked))]]


def _times_matrix(
    scenarios: Sequence[TransportResult], candidates: Sequence[str]
) -> np.ndarray:
    """(S, C) arrival minutes, undetected capped at the 72 h horizon."""
    if not scenarios:
        raise NoScenariosError("at least one injection scenario required")
    if not candidates:
        raise EmptyCandidateSetError("no candidate nodes to place on")
    times = np.empty((len(scenarios), len(candidates)))
    for i, scenario in enumerate(scenarios):
        for j, node in enumerate(candidates):
            if node not in scenario.arrival_time:
                raise UnknownNodeError(
                    f"scenario {i} has no arrival time for node {node!r}"
                )
            times[i, j] = scenario.arrival_time[node]
    return np.minimum(times, HORIZON_MINUTES)


def place_expected_time(
    scenarios: Sequence[TransportResult],
    candidates: Sequence[str],
    k: int,
    force_greedy: bool = False,
) -> tuple[list[str], float]:
    """Choose sensors minimizing mean time to first detection.

    A scenario's detection time is the earliest arrival at any placed
    sensor (72 h when nothing is reached); the objective is its mean
    over scenarios.  Below EXACT_CANDIDATE_LIMIT candidates and
    EXACT_K_LIMIT sensors the optimum is found by enumerating every
    subset; otherwise greedy marginal improvement is used.
    """
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    ordered = sorted(candidates)
    times = _times_matrix(scenarios, ordered)
    k = min(k, len(ordered))

    if (
        not force_greedy
        and len(ordered) <= EXACT_CANDIDATE_LIMIT
        and k <= EXACT_K_LIMIT
    ):
        best_value, best_subset = math.inf, None
        for subset in combinations(range(len(ordered)), k):
            value = float(times[:, subset].min(axis=1).mean())
            if value < best_value:  # first minimum wins: lexicographic ids
                best_value, best_subset = value, subset
        return [ordered[j] for j in best_subset], best_value

    selection, values = greedy_expected_time(times, k)
    return [ordered[j] for j in selection], float(values[-1])


def greedy_chain(
    scenarios: Sequence[TransportResult], candidates: Sequence[str], max_k: int
) -> tuple[list[str], np.ndarray]:
    """One greedy run to max_k sensors; values[i] = expected minutes with
    the first i+1 picks."""
    ordered = sorted(candidates)
    times = _times_matrix(scenarios, ordered)
    max_k = min(max_k, len(ordered))
    selection, values = greedy_expected_time(times, max_k)
    return [ordered[j] for j in selection], values


def pareto_sweep(
    scenarios: Sequence[TransportResult],
    candidates: Sequence[str],
    k_values: Sequence[int],
) -> list[tuple[int, float]]:
    """Expected detection time at each sensor count, from one greedy chain.

    Every point is a prefix of the same greedy selection, which makes the
    curve non-increasing by construction (a property per-k re-optimization
    with mixed exact/greedy methods would not guarantee).  Counts beyond
    the candidate pool saturate at the full-placement value.
    """
    if not k_values:
        raise ConfigError("k_values must be non-empty")
    ks = list(k_values)
    if any(k < 1 for k in ks):
        raise ConfigError("k_values must be positive")
    if ks != sorted(ks):
        raise ConfigError("k_values must be ascending")
    if len(set(ks)) != len(ks):
        raise ConfigError("k_values must be distinct")

    _, values = greedy_chain(scenarios, candidates, max(ks))
    return [(k, float(values[min(k, len(values)) - 1])) for k in ks]


def consensus(
    per_objective: Mapping[str, Sequence[object]],
) -> tuple[dict[str, int], dict[str, float]]:
    """Count how many objective lists picked each node.

    Accepts bare node ids or (node, value) pairs.  Shares divide by the
    summed list lengths, so they add to 1.  Ordered by count descending,
    then node id.
    """
    if not per_objective:
        raise ConfigError("at least one objective result required")
    counts: dict[str, int] = {}
    total = 0
    for kind in sorted(per_objective):
        for entry in per_objective[kind]:
            node = entry[0] if isinstance(entry, (tuple, list)) else entry
            counts[node] = counts.get(node, 0) + 1
            total += 1
    ordered = dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    shares = {node: count / total for node, count in ordered.items()}
    return ordered, shares


def run_placement(
    scores: Sequence[NodeScore],
    candidate_ids: Sequence[str],
    scenarios: Sequence[TransportResult],
    k: int,
    objectives: Iterable[str] = OBJECTIVE_KINDS,
    pareto_ks: Sequence[int] | None = None,
) -> PlacementResult:
    """Aggregate every requested objective into one result.

    The detection-time objective is placed greedily over the scenario set
    (pairing each pick with the expected minutes after adding it); the
    separable objectives sort the candidates' score fields.  The Pareto
    sweep reuses the same greedy chain semantics.
    """
    by_node = {s.node: s for s in scores}
    missing = [n for n in candidate_ids if n not in by_node]
    if missing:
        raise UnknownNodeError(f"unknown candidate node {missing[0]!r}")
    candidates = [by_node[n] for n in candidate_ids]

    per_objective: dict[str, list[tuple[str, float]]] = {}
    expected = math.nan
    for kind in objectives:
        obj = Objective(kind) if isinstance(kind, str) else kind
        if obj.kind == "time_of_detection":
            chain, values = greedy_chain(scenarios, candidate_ids, k)
            per_objective[obj.kind] = [
                (node, float(values[i])) for i, node in enumerate(chain)
            ]
            expected = float(values[-1])
        else:
            per_objective[obj.kind] = place_separable(candidates, obj, k)

    counts, shares = consensus(per_objective)
    pareto: list[tuple[int, float]] = []
    if pareto_ks:
        pareto = pareto_sweep(scenarios, candidate_ids, pareto_ks)
    return PlacementResult(
        per_objective=per_objective,
        consensus=counts,
        shares=shares,
        pareto=pareto,
        expected_time=expected,
    )
