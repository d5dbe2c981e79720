"""NumPy reference implementation of the numeric kernels.

Array contracts (shared with the compiled backend):

``arrival_and_concentration(order, indptr, up_node, up_q, up_tt,
injections, c0, kb, n)``
    order      int64[N]    topological order of node indices (upstream first)
    indptr     int64[N+1]  CSR pointers into the incoming-edge arrays
    up_node    int64[E]    upstream node index of each incoming edge
    up_q       float64[E]  flow magnitude through the edge (L/s)
    up_tt      float64[E]  water travel time along the edge (hours)
    injections uint8[S,N]  one row per scenario, 1 = injection node
    c0, kb, n  scalars     initial dose (mg/L), decay rate (1/h), order

    Returns ``(arrival, conc)`` both float64[S,N]: arrival hours since
    injection (inf where no injected water arrives) and steady
    concentration in mg/L. Injection nodes are pinned to (0, c0).

``greedy_expected_time(times, k)``
    times float64[S,C] finite per-scenario detection time of each candidate
    k     int          sensors to place (k <= C)

    Returns ``(selection int64[k], values float64[k])``: greedy argmin of
    mean over scenarios of the min across placed sensors, with ties broken
    toward the lowest candidate index; values[i] is the objective after
    placing i+1 sensors.
"""

from __future__ import annotations

import numpy as np


def _decay_matrix(c: np.ndarray, tt: np.ndarray, kb: float, n: float) -> np.ndarray:
    """Bulk decay of concentrations ``c`` (S,E) over per-edge times ``tt`` (E,)."""
    if kb == 0.0:
        return c
    if abs(n - 1.0) <= 1e-4:
        return c * np.exp(-kb * tt)[None, :]
    one_minus = 1.0 - n
    positive = c > 0.0
    safe = np.where(positive, c, 1.0)
    base = safe ** one_minus + (n - 1.0) * kb * tt[None, :]
    return np.where(positive & (base > 0.0), base ** (1.0 / one_minus), 0.0)


def arrival_and_concentration(order, indptr, up_node, up_q, up_tt,
                              injections, c0, kb, n):
    n_scen, n_nodes = injections.shape
    arrival = np.full((n_scen, n_nodes), np.inf)
    conc = np.zeros((n_scen, n_nodes))

    for v in order:
        lo, hi = indptr[v], indptr[v + 1]
        if hi > lo:
            ups = up_node[lo:hi]
            tt = up_tt[lo:hi]
            q = up_q[lo:hi]
            arrival[:, v] = np.min(arrival[:, ups] + tt[None, :], axis=1)
            # normalized weights keep single-inflow nodes bit-exact (w == 1.0)
            w = q / np.sum(q)
            conc[:, v] = _decay_matrix(conc[:, ups], tt, kb, n) @ w
        injected = injections[:, v] != 0
        if injected.any():
            arrival[injected, v] = 0.0
            conc[injected, v] = c0
    return arrival, conc


def greedy_expected_time(times, k):
    n_scen, n_cand = times.shape
    selection = np.empty(k, dtype=np.int64)
    values = np.empty(k)
    best = np.full(n_scen, np.inf)
    taken = np.zeros(n_cand, dtype=bool)

    for i in range(k):
        scores = np.minimum(times, best[:, None]).mean(axis=0)
        scores[taken] = np.inf
        c = int(np.argmin(scores))
        selection[i] = c
        values[i] = scores[c]
        taken[c] = True
        best = np.minimum(best, times[:, c])
    return selection, values
