"""Water-quality observation datasets: CSV I/O, completeness, synthesis.

Observations are stored column-major: one (T, N) float array per parameter,
with NaN marking missing cells.  T indexes the sorted distinct timestamps,
N the sorted node ids.  A boolean ``present`` mask records which (t, n)
pairs correspond to actual rows, so sparse operator files keep their shape
through round-trips.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    CsvFormatError,
    InfeasibleTargetError,
    NoObservationsError,
    SingularSystemError,
    UnknownNodeError,
)
from .kriging import Variogram, default_variogram, krige
from .models import (
    BUILTIN_MODELS,
    DEFAULT_MODEL_FOR_FAMILY,
    DEFAULT_REGION,
    THRESHOLDS,
)
from .network import Network

# Canonical column order for observation files.  The first nine are fixed;
# anything after them is carried verbatim as an extra parameter.
CORE_HEADER = (
    "Timestamp",
    "Node",
    "Contracts",
    "Chlorine (mg/L)",
    "Temperature",
    "pH",
    "TOC (mg/L)",
    "DON (mg/L)",
    "BR (mg/L)",
)

# Column label -> internal parameter name, in file order.
_CORE_PARAMS = (
    ("Chlorine (mg/L)", "chlorine"),
    ("Temperature", "temperature"),
    ("pH", "pH"),
    ("TOC (mg/L)", "TOC"),
    ("DON (mg/L)", "DON"),
    ("BR (mg/L)", "BR"),
)

CORE_PARAM_NAMES = tuple(name for _, name in _CORE_PARAMS)

# concentrations must be >= 0; pH confined to the physical scale
_NONNEGATIVE = {"chlorine", "TOC", "DON", "BR"}

_TS_COMPACT = "%d-%m-%y %H:%M"

# Synthesis grids for empty datasets anchor here so runs are reproducible.
DEFAULT_GRID_START = datetime(2024, 1, 1, 0, 0)

# Physical ceilings used when pushing precursor levels upward.
PARAM_CEILINGS = {
    "TOC": 100.0,
    "chlorine": 5.0,
    "temperature": 35.0,
    "DON": 50.0,
}

# Order in which precursors are raised when forcing an exceedance.
_RAISE_ORDER = ("TOC", "chlorine", "temperature", "DON")


def _parse_timestamp(text: str, line: int) -> datetime:
    text = text.strip()
    try:
        return datetime.strptime(text, _TS_COMPACT)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise CsvFormatError(f"unparseable timestamp {text!r}", line) from None


def format_timestamp(ts: datetime) -> str:
    return ts.isoformat(sep=" ")


@dataclass(frozen=True)
class EnvRecord:
    """One node's observation at one timestamp.  NaN fields are missing."""

    timestamp: datetime
    node: str
    contracts: float
    chlorine: float
    temperature: float
    pH: float
    TOC: float
    DON: float
    BR: float
    extras: dict[str, float] = field(default_factory=dict)


@dataclass
class EnvDataset:
    timestamps: list[datetime]
    nodes: list[str]
    contracts: np.ndarray  # (N,)
    data: dict[str, np.ndarray]  # parameter -> (T, N)
    extra_names: tuple[str, ...] = ()
    present: np.ndarray | None = None  # (T, N) bool

    def __post_init__(self):
        t, n = len(self.timestamps), len(self.nodes)
        for name, arr in self.data.items():
            if arr.shape != (t, n):
                raise ValueError(f"column {name!r} has shape {arr.shape}, want {(t, n)}")
        if self.present is None:
            self.present = np.ones((t, n), dtype=bool)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.timestamps), len(self.nodes)

    def node_index(self, node: str) -> int:
        try:
            return self.nodes.index(node)
        except ValueError:
            raise UnknownNodeError(f"unknown node {node!r}") from None

    def record(self, t: int, n: int) -> EnvRecord:
        extras = {name: float(self.data[name][t, n]) for name in self.extra_names}
        return EnvRecord(
            timestamp=self.timestamps[t],
            node=self.nodes[n],
            contracts=float(self.contracts[n]),
            chlorine=float(self.data["chlorine"][t, n]),
            temperature=float(self.data["temperature"][t, n]),
            pH=float(self.data["pH"][t, n]),
            TOC=float(self.data["TOC"][t, n]),
            DON=float(self.data["DON"][t, n]),
            BR=float(self.data["BR"][t, n]),
            extras=extras,
        )

    def iter_records(self) -> Iterator[EnvRecord]:
        for t in range(len(self.timestamps)):
            for n in range(len(self.nodes)):
                if self.present[t, n]:
                    yield self.record(t, n)

    def record_count(self) -> int:
        return int(self.present.sum())

    def copy(self) -> "EnvDataset":
        return EnvDataset(
            timestamps=list(self.timestamps),
            nodes=list(self.nodes),
            contracts=self.contracts.copy(),
            data={k: v.copy() for k, v in self.data.items()},
            extra_names=self.extra_names,
            present=self.present.copy(),
        )

    def columns(self) -> "ColumnView":
        """Array-valued record for vectorised model evaluation."""
        extras = {name: self.data[name] for name in self.extra_names}
        return ColumnView(
            contracts=np.broadcast_to(self.contracts, self.shape),
            chlorine=self.data["chlorine"],
            temperature=self.data["temperature"],
            pH=self.data["pH"],
            TOC=self.data["TOC"],
            DON=self.data["DON"],
            BR=self.data["BR"],
            extras=extras,
        )


@dataclass(frozen=True)
class ColumnView:
    """Duck-typed stand-in for EnvRecord whose fields are (T, N) arrays."""

    contracts: np.ndarray
    chlorine: np.ndarray
    temperature: np.ndarray
    pH: np.ndarray
    TOC: np.ndarray
    DON: np.ndarray
    BR: np.ndarray
    extras: dict[str, np.ndarray]


def _parse_cell(text: str, column: str, param: str | None, line: int) -> float:
    text = text.strip()
    if not text:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"bad value {text!r} in column {column!r}", line) from None
    if param in _NONNEGATIVE and value < 0:
        raise CsvFormatError(f"negative {column!r} value {value}", line)
    if param == "pH" and not 0.0 <= value <= 14.0:
        raise CsvFormatError(f"pH {value} outside 0..14", line)
    return value


def load_env_csv(text: str) -> EnvDataset:
    """Parse an observation CSV into a column-major dataset.

    The header must begin with the nine canonical columns; any further
    columns become extra parameters available to custom models.
    Raises CsvFormatError on a bad header, unparseable cell, or a
    duplicate (timestamp, node) pair.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("empty file", 1) from None
    header = [h.strip() for h in header]
    if tuple(header[: len(CORE_HEADER)]) != CORE_HEADER:
        raise CsvFormatError(
            f"header must start with {', '.join(CORE_HEADER)}", 1
        )
    extra_names = tuple(header[len(CORE_HEADER) :])
    if len(set(extra_names)) != len(extra_names):
        raise CsvFormatError("duplicate extra column name", 1)

    rows: list[tuple[datetime, str, float, dict[str, float]]] = []
    for lineno, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise CsvFormatError(
                f"expected {len(header)} cells, found {len(cells)}", lineno
            )
        ts = _parse_timestamp(cells[0], lineno)
        node = cells[1].strip()
        if not node:
            raise CsvFormatError("empty node id", lineno)
        contracts = _parse_cell(cells[2], "Contracts", None, lineno)
        if not math.isnan(contracts) and contracts < 0:
            raise CsvFormatError(f"negative 'Contracts' value {contracts}", lineno)
        values: dict[str, float] = {}
        for i, (column, param) in enumerate(_CORE_PARAMS, start=3):
            values[param] = _parse_cell(cells[i], column, param, lineno)
        for j, name in enumerate(extra_names, start=len(CORE_HEADER)):
            values[name] = _parse_cell(cells[j], name, None, lineno)
        rows.append((ts, node, contracts, values))

    timestamps = sorted({ts for ts, _, _, _ in rows})
    nodes = sorted({node for _, node, _, _ in rows})
    t_index = {ts: i for i, ts in enumerate(timestamps)}
    n_index = {node: i for i, node in enumerate(nodes)}
    shape = (len(timestamps), len(nodes))

    params = CORE_PARAM_NAMES + extra_names
    data = {name: np.full(shape, np.nan) for name in params}
    contracts_col = np.zeros(len(nodes))
    present = np.zeros(shape, dtype=bool)

    seen: set[tuple[datetime, str]] = set()
    for ts, node, contracts, values in rows:
        key = (ts, node)
        if key in seen:
            raise CsvFormatError(
                f"duplicate record for node {node!r} at {format_timestamp(ts)}"
            )
        seen.add(key)
        t, n = t_index[ts], n_index[node]
        present[t, n] = True
        if not math.isnan(contracts):
            contracts_col[n] = contracts
        for name, value in values.items():
            data[name][t, n] = value

    return EnvDataset(
        timestamps=timestamps,
        nodes=nodes,
        contracts=contracts_col,
        data=data,
        extra_names=extra_names,
        present=present,
    )


def load_env_csv_file(path) -> EnvDataset:
    with open(path, encoding="utf-8") as fh:
        return load_env_csv(fh.read())


def save_env_csv(ds: EnvDataset) -> str:
    """Serialize a dataset back to CSV (only cells marked present)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(CORE_HEADER) + list(ds.extra_names))
    for t, ts in enumerate(ds.timestamps):
        for n, node in enumerate(ds.nodes):
            if not ds.present[t, n]:
                continue
            rec = ds.record(t, n)
            cells = [format_timestamp(ts), node, _format_cell(rec.contracts)]
            for _, param in _CORE_PARAMS:
                cells.append(_format_cell(getattr(rec, param)))
            for name in ds.extra_names:
                cells.append(_format_cell(rec.extras[name]))
            writer.writerow(cells)
    return out.getvalue()


def _format_cell(value: float) -> str:
    if math.isnan(value):
        return ""
    return repr(value)


def load_contracts_csv(text: str) -> dict[str, float]:
    """Parse a 'Node,Contracts' file; missing counts default to 0."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CsvFormatError("empty file", 1) from None
    if header[:2] != ["Node", "Contracts"]:
        raise CsvFormatError("header must start with Node, Contracts", 1)
    out: dict[str, float] = {}
    for lineno, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        node = cells[0].strip()
        if not node:
            raise CsvFormatError("empty node id", lineno)
        if node in out:
            raise CsvFormatError(f"duplicate node {node!r}", lineno)
        raw = cells[1].strip() if len(cells) > 1 else ""
        if not raw:
            out[node] = 0.0
            continue
        try:
            value = float(raw)
        except ValueError:
            raise CsvFormatError(f"bad value {raw!r} in column 'Contracts'", lineno) from None
        if value < 0:
            raise CsvFormatError(f"negative 'Contracts' value {value}", lineno)
        out[node] = value
    return out


# ---------------------------------------------------------------------------
# Completeness


@dataclass(frozen=True)
class CompletenessReport:
    coverage: float  # fraction of network nodes with >= 1 record
    interval_hours: float  # largest gap between consecutive timestamps
    record_count: int
    expected_records: int  # timestamps x network nodes
    synthesis_required: bool

    @property
    def complete(self) -> bool:
        return not self.synthesis_required


def assess_completeness(ds: EnvDataset, net: Network) -> CompletenessReport:
    """Decide whether observed data is dense enough to use directly.

    Synthesis triggers when node coverage < 0.30 or the worst sampling
    gap exceeds one hour; both boundaries are inclusive on the passing
    side (coverage exactly 0.30 with hourly data does not trigger).
    """
    network_nodes = set(net.nodes)
    for node in ds.nodes:
        if node not in network_nodes:
            raise UnknownNodeError(f"unknown node {node!r}")

    covered = {ds.nodes[n] for n in np.flatnonzero(ds.present.any(axis=0))}
    total = len(network_nodes)
    coverage = len(covered) / total if total else 0.0

    if len(ds.timestamps) >= 2:
        gaps = [
            (b - a).total_seconds() / 3600.0
            for a, b in zip(ds.timestamps, ds.timestamps[1:])
        ]
        interval = max(gaps)
    else:
        interval = math.inf

    # integer comparison keeps the 0.30 boundary exact (no float drift)
    low_coverage = 10 * len(covered) < 3 * total
    sparse_in_time = interval > 1.0
    return CompletenessReport(
        coverage=coverage,
        interval_hours=interval,
        record_count=ds.record_count(),
        expected_records=len(ds.timestamps) * total,
        synthesis_required=low_coverage or sparse_in_time,
    )


# ---------------------------------------------------------------------------
# Synthesis


def _grid(ds: EnvDataset, horizon_hours: float, interval_hours: float) -> list[datetime]:
    if interval_hours <= 0 or horizon_hours <= 0:
        raise ConfigError("horizon and interval must be positive")
    count = round(horizon_hours / interval_hours)
    start = ds.timestamps[0] if ds.timestamps else DEFAULT_GRID_START
    step = timedelta(hours=interval_hours)
    return [start + i * step for i in range(count)]


def _observed_ranges(
    ds: EnvDataset,
    params: Sequence[str],
    default_ranges: Mapping[str, tuple[float, float]] | None,
) -> dict[str, tuple[float, float]]:
    ranges: dict[str, tuple[float, float]] = {}
    defaults = default_ranges or {}
    for name in params:
        observed = ds.data.get(name)
        finite = observed[np.isfinite(observed)] if observed is not None else np.array([])
        if finite.size:
            ranges[name] = (float(finite.min()), float(finite.max()))
        elif name in defaults:
            ranges[name] = defaults[name]
        else:
            raise NoObservationsError(
                f"no observations for {name!r} and no default range"
            )
    return ranges


def _synthesis_frame(
    ds: EnvDataset, net: Network, horizon_hours: float, interval_hours: float
) -> tuple[list[datetime], list[str], dict[str, np.ndarray], np.ndarray]:
    """Build the output grid and copy observed cells that land on it."""
    timestamps = _grid(ds, horizon_hours, interval_hours)
    nodes = sorted(net.nodes)
    shape = (len(timestamps), len(nodes))

    params = CORE_PARAM_NAMES + ds.extra_names
    data = {name: np.full(shape, np.nan) for name in params}
    contracts = np.zeros(len(nodes))

    t_new = {ts: i for i, ts in enumerate(timestamps)}
    n_new = {node: i for i, node in enumerate(nodes)}
    for n_old, node in enumerate(ds.nodes):
        if node in n_new:
            contracts[n_new[node]] = ds.contracts[n_old]
    for t_old, ts in enumerate(ds.timestamps):
        if ts not in t_new:
            continue
        for n_old, node in enumerate(ds.nodes):
            j = n_new.get(node)
            if j is None or not ds.present[t_old, n_old]:
                continue
            for name in params:
                value = ds.data[name][t_old, n_old]
                if np.isfinite(value):
                    data[name][t_new[ts], j] = value
    return timestamps, nodes, data, contracts


def _fill_chlorine(
    data: dict[str, np.ndarray],
    nodes: list[str],
    chlorine_fill: Mapping[str, float] | None,
) -> None:
    col = data["chlorine"]
    for j, node in enumerate(nodes):
        fill = (chlorine_fill or {}).get(node, 0.0)
        missing = ~np.isfinite(col[:, j])
        col[missing, j] = fill


def synthesize_ranges(
    ds: EnvDataset,
    net: Network,
    horizon_hours: float = 168.0,
    interval_hours: float = 1.0,
    seed: int = 0,
    default_ranges: Mapping[str, tuple[float, float]] | None = None,
    chlorine_fill: Mapping[str, float] | None = None,
) -> EnvDataset:
    """Fill a full hourly grid by uniform draws from each parameter's
    observed [min, max] range.

    Observed cells that fall exactly on the grid are kept.  Chlorine is
    never drawn: missing cells take ``chlorine_fill[node]`` (typically a
    transport result) or 0.  A parameter with no observations needs an
    entry in ``default_ranges`` or the call fails with
    NoObservationsError.
    """
    timestamps, nodes, data, contracts = _synthesis_frame(
        ds, net, horizon_hours, interval_hours
    )
    draw_params = [n for n in data if n != "chlorine"]
    ranges = _observed_ranges(ds, draw_params, default_ranges)

    rng = np.random.default_rng(seed)
    for name in sorted(draw_params):
        lo, hi = ranges[name]
        draws = rng.uniform(lo, hi, size=data[name].shape)
        missing = ~np.isfinite(data[name])
        data[name][missing] = draws[missing]

    _fill_chlorine(data, nodes, chlorine_fill)
    return EnvDataset(
        timestamps=timestamps,
        nodes=nodes,
        contracts=contracts,
        data=data,
        extra_names=ds.extra_names,
    )


def synthesize_kriging(
    ds: EnvDataset,
    net: Network,
    horizon_hours: float = 168.0,
    interval_hours: float = 1.0,
    seed: int = 0,
    default_ranges: Mapping[str, tuple[float, float]] | None = None,
    chlorine_fill: Mapping[str, float] | None = None,
    variogram: Variogram | None = None,
) -> EnvDataset:
    """Spatially interpolate missing cells from same-timestamp observations.

    Each (parameter, timestamp) pair with at least two observed nodes at
    distinct coordinates is kriged onto the unobserved nodes.  Parameters
    whose systems are singular fall back to range draws, as do any cells
    kriging cannot reach (no coordinates, too few samples).
    """
    timestamps, nodes, data, contracts = _synthesis_frame(
        ds, net, horizon_hours, interval_hours
    )
    coords = {nid: net.nodes[nid].coord for nid in nodes}

    draw_params = [n for n in data if n != "chlorine"]
    for name in sorted(draw_params):
        try:
            _krige_param(data[name], nodes, coords, variogram)
        except SingularSystemError:
            # full fallback for this parameter; range fill below covers it
            pass

    ranges = _observed_ranges(ds, draw_params, default_ranges)
    rng = np.random.default_rng(seed)
    for name in sorted(draw_params):
        missing = ~np.isfinite(data[name])
        if missing.any():
            lo, hi = ranges[name]
            draws = rng.uniform(lo, hi, size=data[name].shape)
            data[name][missing] = draws[missing]

    _fill_chlorine(data, nodes, chlorine_fill)
    return EnvDataset(
        timestamps=timestamps,
        nodes=nodes,
        contracts=contracts,
        data=data,
        extra_names=ds.extra_names,
    )


def _krige_param(
    column: np.ndarray,
    nodes: list[str],
    coords: Mapping[str, tuple[float, float] | None],
    variogram: Variogram | None,
) -> None:
    """Fill one parameter's (T, N) array in place, row by row."""
    for t in range(column.shape[0]):
        row = column[t]
        obs = [
            j
            for j in range(len(nodes))
            if np.isfinite(row[j]) and coords[nodes[j]] is not None
        ]
        targets = [
            j
            for j in range(len(nodes))
            if not np.isfinite(row[j]) and coords[nodes[j]] is not None
        ]
        if len(obs) < 2 or not targets:
            continue
        sample_xy = [coords[nodes[j]] for j in obs]
        if len(set(sample_xy)) < 2:
            continue
        values = [float(row[j]) for j in obs]
        v = variogram or default_variogram(values, sample_xy)
        samples = list(zip(sample_xy, values))
        target_xy = [coords[nodes[j]] for j in targets]
        estimates = krige(samples, target_xy, v)
        for j, est in zip(targets, estimates):
            row[j] = est.value


# ---------------------------------------------------------------------------
# Contamination scenarios


def _eccentricity_order(net: Network) -> list[str]:
    """Node ids sorted centre-outward: BFS eccentricity asc, then id."""
    adjacency = net.adjacency(include_closed=True)
    order = []
    for start in sorted(net.nodes):
        dist = {start: 0}
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                for v, _pipe in adjacency.get(u, ()):
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        order.append((max(dist.values()), start))
    order.sort()
    return [nid for _, nid in order]


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


ModelFn = Callable[[EnvRecord, float], float]


def contaminate(
    ds: EnvDataset,
    net: Network,
    fraction: float,
    families: Sequence[str],
    seed: int = 0,
    models: Mapping[str, ModelFn] | None = None,
    thresholds: Mapping[str, float] | None = None,
    times: Mapping[str, float] | None = None,
) -> EnvDataset:
    """Raise precursor levels at a central cluster of nodes until each
    requested family's model output crosses its regulatory threshold at
    every timestamp.

    The cluster is the ``round(fraction * node_count)`` most central
    nodes (BFS eccentricity ascending, ties by id).  TOC is scaled
    first; chlorine, temperature and DON are raised next, each capped
    at its physical ceiling.  If the ceilings cannot push a family past
    its threshold the call fails with InfeasibleTargetError rather than
    returning a half-contaminated dataset.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    if not families:
        raise ConfigError("at least one family required")
    family_list = sorted(set(families))

    resolved_models: dict[str, ModelFn] = {}
    resolved_thresholds: dict[str, float] = {}
    for fam in family_list:
        if models and fam in models:
            resolved_models[fam] = models[fam]
        else:
            name = DEFAULT_MODEL_FOR_FAMILY.get(fam)
            if name is None:
                raise ConfigError(f"no default model for family {fam!r}")
            resolved_models[fam] = BUILTIN_MODELS[name][1]
        if thresholds and fam in thresholds:
            resolved_thresholds[fam] = thresholds[fam]
        else:
            regional = THRESHOLDS[DEFAULT_REGION]
            if fam not in regional:
                raise ConfigError(f"no default threshold for family {fam!r}")
            resolved_thresholds[fam] = regional[fam]

    count = _round_half_away(fraction * len(ds.nodes))
    in_dataset = set(ds.nodes)
    central = [nid for nid in _eccentricity_order(net) if nid in in_dataset]
    selected = central[:count]

    out = ds.copy()
    rng = np.random.default_rng(seed)
    times = times or {}
    for node in selected:
        j = out.nodes.index(node)
        hours = float(times.get(node, 24.0))
        for fam in family_list:
            _force_exceedance(
                out, j, resolved_models[fam], resolved_thresholds[fam], hours, rng, fam
            )
    return out


def _node_view(ds: EnvDataset, j: int, toc: np.ndarray | None = None) -> ColumnView:
    """One node's column as a record whose fields are (T,) arrays."""
    t = len(ds.timestamps)
    extras = {name: ds.data[name][:, j] for name in ds.extra_names}
    return ColumnView(
        contracts=np.full(t, ds.contracts[j]),
        chlorine=ds.data["chlorine"][:, j],
        temperature=ds.data["temperature"][:, j],
        pH=ds.data["pH"][:, j],
        TOC=ds.data["TOC"][:, j] if toc is None else toc,
        DON=ds.data["DON"][:, j],
        BR=ds.data["BR"][:, j],
        extras=extras,
    )


def _force_exceedance(
    ds: EnvDataset,
    j: int,
    model: ModelFn,
    threshold: float,
    hours: float,
    rng: np.random.Generator,
    family: str,
) -> None:
    """Push one node's whole column over ``threshold``, in place."""
    t_count = len(ds.timestamps)
    current = np.broadcast_to(
        np.asarray(model(_node_view(ds, j), hours), dtype=float), (t_count,)
    )
    need = ~(current > threshold)
    # one draw per timestamp regardless of need keeps the stream stable
    target = threshold * (1.0 + rng.uniform(0.05, 0.30, size=t_count))
    if not need.any():
        return

    # TOC responds multiplicatively in the bundled models, so bisect a
    # per-timestamp scale factor for it before touching slower levers.
    toc = ds.data["TOC"][:, j]
    cap = np.maximum(PARAM_CEILINGS["TOC"] / np.maximum(toc, 1e-9), 1.0)
    at_cap = np.broadcast_to(
        np.asarray(model(_node_view(ds, j, toc * cap), hours), dtype=float), (t_count,)
    )
    reach = need & (at_cap > target)
    if reach.any():
        lo, hi = np.ones(t_count), cap.copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            value = np.asarray(model(_node_view(ds, j, toc * mid), hours))
            over = np.broadcast_to(value, (t_count,)) > target
            hi = np.where(over, mid, hi)
            lo = np.where(over, lo, mid)
        toc[reach] = (toc * hi)[reach]

    left = need & ~reach
    if not left.any():
        return
    # TOC alone cannot get there: pin each lever at its ceiling in turn.
    for name in _RAISE_ORDER:
        column = ds.data[name][:, j]
        column[left] = np.maximum(column[left], PARAM_CEILINGS[name])
        value = np.broadcast_to(
            np.asarray(model(_node_view(ds, j), hours), dtype=float), (t_count,)
        )
        left = left & ~(value > threshold)
        if not left.any():
            return
    raise InfeasibleTargetError(
        f"family {family!r} cannot exceed threshold {threshold} at node "
        f"{ds.nodes[j]!r} within physical parameter ceilings"
    )
