"""Exceedance counting and weighted node scoring.

Concentrations become events by strict comparison against a family
threshold; event counts are normalized to the maximum possible count
across the active families, weighted, and summed into a per-node total.
The candidate set for sensor placement is everything whose total is
within a cutoff of the best node's.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, EmptyCandidateSetError
from .models import WEIGHT_RANGE

DEFAULT_CUTOFF = 0.9


def round2(x: float) -> float:
    """Two-decimal rounding, ties away from zero, via the shortest
    decimal repr so results match hand arithmetic (0.125 -> 0.13)."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"), ROUND_HALF_UP))


@dataclass(frozen=True)
class NodeScore:
    node: str
    events: dict[str, int]
    normalized_percent: dict[str, float]
    weighted: dict[str, float]
    total: float
    relative: float
    detection_time: float = math.inf  # minutes
    contracts: float = 0.0


def detect_events(
    concentrations: Mapping[str, np.ndarray],
    nodes: Sequence[str],
    thresholds: Mapping[str, float],
) -> dict[str, dict[str, int]]:
    """Count strict threshold exceedances per node per family.

    ``concentrations`` maps family name to a (T, N) array aligned with
    ``nodes``.  A concentration exactly at the threshold is not an event.
    """
    out: dict[str, dict[str, int]] = {node: {} for node in nodes}
    for family in sorted(concentrations):
        threshold = thresholds.get(family)
        if threshold is None:
            raise ConfigError(f"no threshold for family {family!r}")
        if threshold <= 0:
            raise ConfigError(f"threshold for {family!r} must be positive")
        counts = (np.asarray(concentrations[family]) > threshold).sum(axis=0)
        if counts.shape != (len(nodes),):
            raise ConfigError(
                f"concentration array for {family!r} has {counts.shape[0]} "
                f"columns, want {len(nodes)}"
            )
        for j, node in enumerate(nodes):
            out[node][family] = int(counts[j])
    return out


def score_nodes(
    events: Mapping[str, Mapping[str, int]],
    timestamps: int,
    weights: Mapping[str, float],
    detection_times: Mapping[str, float] | None = None,
    contracts: Mapping[str, float] | None = None,
) -> list[NodeScore]:
    """Turn per-family event counts into weighted totals and relatives.

    normalized = round2(events/T * 100/F) with F the active family
    count, so the percentages over all families can never exceed 100;
    weighted = round2(normalized * weight); total = round2(sum).
    Relative is total over the best total (0 if every total is 0).
    Output is sorted by node id.
    """
    if timestamps < 1:
        raise ConfigError(f"timestamp count must be >= 1, got {timestamps}")
    families = sorted({f for per_node in events.values() for f in per_node})
    lo, hi = WEIGHT_RANGE
    for family in families:
        if family not in weights:
            raise ConfigError(f"no weight for family {family!r}")
        if not lo <= weights[family] <= hi:
            raise ConfigError(
                f"weight for {family!r} outside [{lo}, {hi}]: {weights[family]}"
            )
    f_count = len(families) or 1

    scores: list[NodeScore] = []
    for node in sorted(events):
        per_family = events[node]
        normalized: dict[str, float] = {}
        weighted: dict[str, float] = {}
        for family in families:
            count = int(per_family.get(family, 0))
            if not 0 <= count <= timestamps:
                raise ConfigError(
                    f"event count {count} for node {node!r} outside 0..{timestamps}"
                )
            normalized[family] = round2(count / timestamps * 100.0 / f_count)
            weighted[family] = round2(normalized[family] * weights[family])
        total = round2(sum(weighted.values()))
        scores.append(
            NodeScore(
                node=node,
                events={f: int(per_family.get(f, 0)) for f in families},
                normalized_percent=normalized,
                weighted=weighted,
                total=total,
                relative=0.0,
                detection_time=(detection_times or {}).get(node, math.inf),
                contracts=(contracts or {}).get(node, 0.0),
            )
        )

    best = max((s.total for s in scores), default=0.0)
    if best > 0:
        scores = [
            NodeScore(
                node=s.node,
                events=s.events,
                normalized_percent=s.normalized_percent,
                weighted=s.weighted,
                total=s.total,
                relative=s.total / best,
                detection_time=s.detection_time,
                contracts=s.contracts,
            )
            for s in scores
        ]
    return scores


def filter_candidates(
    scores: Iterable[NodeScore], cutoff: float = DEFAULT_CUTOFF
) -> list[str]:
    """Node ids with relative >= cutoff, best first, ties by id."""
    if not 0.0 <= cutoff <= 1.0:
        raise ConfigError(f"cutoff must be in [0, 1], got {cutoff}")
    kept = [s for s in scores if s.relative >= cutoff]
    kept.sort(key=lambda s: (-s.relative, s.node))
    if not kept:
        raise EmptyCandidateSetError(f"no node has relative score >= {cutoff}")
    return [s.node for s in kept]


def scores_to_csv(scores: Sequence[NodeScore]) -> str:
    """Delimited export: one row per node, families in sorted order."""
    families = sorted({f for s in scores for f in s.events})
    out = io.StringIO()
    header = ["node"]
    for family in families:
        header += [f"events_{family}", f"percent_{family}", f"weighted_{family}"]
    header += ["total", "relative", "detection_time", "contracts"]
    out.write(",".join(header) + "\n")
    for s in scores:
        row = [s.node]
        for family in families:
            row.append(str(s.events.get(family, 0)))
            row.append(f"{s.normalized_percent.get(family, 0.0):.2f}")
            row.append(f"{s.weighted.get(family, 0.0):.2f}")
        row.append(f"{s.total:.2f}")
        row.append(repr(s.relative))
        row.append(repr(s.detection_time))
        row.append(repr(s.contracts))
        out.write(",".join(row) + "\n")
    return out.getvalue()
