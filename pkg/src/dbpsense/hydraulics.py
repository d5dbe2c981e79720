"""Steady-state demand-driven hydraulics and chlorine bulk decay.

Flows come from a global-gradient (Newton) iteration on the Hazen-Williams
headloss law; no pump or valve elements are simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .errors import (
    DisconnectedNetworkError,
    NonConvergenceError,
    UnsupportedElementError,
)
from .network import Network, reachable_from_sources

HW_EXP = 1.852
# minimum |Q| (m³/s) used when evaluating the headloss gradient, so the
# Jacobian stays finite through flow reversals
_Q_FLOOR = 1e-6

DEFAULT_TOLERANCE_LPS = 1e-9
MAX_ITERATIONS = 200


@dataclass(frozen=True)
class FlowSolution:
    pipe_flows: dict[str, float]   # L/s, positive = from_node -> to_node
    node_heads: dict[str, float]   # m
    residual: float                # max |mass-balance error| over junctions, L/s
    iterations: int


@dataclass(frozen=True)
class DecayParams:
    C0: float        # mg/L
    K_b: float       # 1/hour
    n: float = 1.0   # reaction order

    def __post_init__(self):
        if self.C0 < 0 or self.K_b < 0 or self.n < 0:
            raise ValueError("C0, K_b and n must be non-negative")


def hw_resistance(length_m: float, diameter_mm: float, roughness: float) -> float:
    """Hazen-Williams resistance r such that headloss = r * Q^1.852 (Q in m³/s)."""
    d_m = diameter_mm / 1000.0
    return 10.667 * length_m / (roughness ** HW_EXP * d_m ** 4.871)


def pipe_headloss(length_m: float, diameter_mm: float, roughness: float,
                  flow_lps: float) -> float:
    """Signed headloss in meters for a signed flow in L/s."""
    q = flow_lps / 1000.0
    r = hw_resistance(length_m, diameter_mm, roughness)
    return math.copysign(r * abs(q) ** HW_EXP, q)


HEAD_TOLERANCE_M = 1e-6


def solve_flows(net: Network, tolerance: float = DEFAULT_TOLERANCE_LPS,
                max_iterations: int = MAX_ITERATIONS,
                head_tolerance: float = HEAD_TOLERANCE_M) -> FlowSolution:
    """Solve steady-state flows and heads.

    Converged when every junction's mass-balance error is within ``tolerance``
    (L/s) and every open pipe's head difference agrees with its Hazen-Williams
    headloss within ``head_tolerance`` (m).
    """
    open_pipes = [p for p in net.pipes.values() if p.status == "open"]
    reachable = reachable_from_sources(net, include_closed=False)
    unreachable = [n.id for n in net.junctions() if n.id not in reachable]
    if unreachable:
        if net.unsupported_elements:
            kinds = sorted({k for k, _ in net.unsupported_elements})
            raise UnsupportedElementError(
                f"junctions {unreachable} are only reachable through unsupported "
                f"elements ({', '.join(kinds)})")
        raise DisconnectedNetworkError(
            f"junctions not reachable from any fixed-head node: {unreachable}")

    junctions = sorted(n.id for n in net.junctions())
    j_index = {nid: i for i, nid in enumerate(junctions)}
    n_j = len(junctions)

    fixed_head = {n.id: float(n.head) for n in net.sources()}
    demand = np.array([net.nodes[j].base_demand / 1000.0 for j in junctions])  # m³/s

    m = len(open_pipes)
    r = np.array([hw_resistance(p.length, p.diameter, p.roughness) for p in open_pipes])
    a_idx = np.array([j_index.get(p.from_node, -1) for p in open_pipes])
    b_idx = np.array([j_index.get(p.to_node, -1) for p in open_pipes])
    a_fix = np.array([fixed_head.get(p.from_node, 0.0) for p in open_pipes])
    b_fix = np.array([fixed_head.get(p.to_node, 0.0) for p in open_pipes])

    # initial guess: 0.4 m/s velocity along the from->to orientation
    q = np.array([0.4 * math.pi * (p.diameter / 2000.0) ** 2 for p in open_pipes])

    heads = np.zeros(n_j)
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        grad = HW_EXP * r * np.maximum(np.abs(q), _Q_FLOOR) ** (HW_EXP - 1.0)
        inv_g = 1.0 / grad
        # Newton linearization of h_a - h_b = r*Q*|Q|^0.852 about the current
        # flows: Q = (h_a - h_b)/grad + y
        y = q - np.copysign(r * np.abs(q) ** HW_EXP, q) * inv_g

        rows, cols, vals = [], [], []
        rhs = -demand.copy()
        for k in range(m):
            ia, ib = a_idx[k], b_idx[k]
            if ia >= 0:
                rows.append(ia); cols.append(ia); vals.append(inv_g[k])
                rhs[ia] -= y[k]
            if ib >= 0:
                rows.append(ib); cols.append(ib); vals.append(inv_g[k])
                rhs[ib] += y[k]
            if ia >= 0 and ib >= 0:
                rows.append(ia); cols.append(ib); vals.append(-inv_g[k])
                rows.append(ib); cols.append(ia); vals.append(-inv_g[k])
            else:
                if ia >= 0:
                    rhs[ia] += b_fix[k] * inv_g[k]
                if ib >= 0:
                    rhs[ib] += a_fix[k] * inv_g[k]

        A = coo_matrix((vals, (rows, cols)), shape=(n_j, n_j)).tocsr()
        heads = np.atleast_1d(spsolve(A, rhs))

        h_a = np.where(a_idx >= 0, heads[np.maximum(a_idx, 0)], a_fix)
        h_b = np.where(b_idx >= 0, heads[np.maximum(b_idx, 0)], b_fix)
        q = (h_a - h_b) * inv_g + y

        residual = _mass_balance_residual(junctions, demand, open_pipes,
                                          a_idx, b_idx, q)
        energy = float(np.max(np.abs(
            (h_a - h_b) - np.copysign(r * np.abs(q) ** HW_EXP, q)))) if m else 0.0
        if residual <= tolerance and energy <= head_tolerance:
            converged = True
            break

    if not converged:
        raise NonConvergenceError(iterations, residual, tolerance)

    pipe_flows = {p.id: float(q[k] * 1000.0) for k, p in enumerate(open_pipes)}
    for p in net.pipes.values():
        if p.status == "closed":
            pipe_flows[p.id] = 0.0
    node_heads = {j: float(heads[i]) for j, i in j_index.items()}
    node_heads.update(fixed_head)
    return FlowSolution(pipe_flows, node_heads, residual, iterations)


def _mass_balance_residual(junctions, demand, open_pipes, a_idx, b_idx, q) -> float:
    imbalance = -demand.copy()
    for k in range(len(open_pipes)):
        if a_idx[k] >= 0:
            imbalance[a_idx[k]] -= q[k]
        if b_idx[k] >= 0:
            imbalance[b_idx[k]] += q[k]
    return float(np.max(np.abs(imbalance))) * 1000.0 if len(junctions) else 0.0


def decay_concentration(p: DecayParams, t: float) -> float:
    """Concentration after ``t`` hours of bulk decay dC/dt = -K_b * C^n."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if p.K_b == 0.0:
        return p.C0
    if p.C0 == 0.0:
        return 0.0
    # near first order the closed-form power law is ill-conditioned
    # (O(|n-1|) departure from the exponential); use the exponential branch
    if abs(p.n - 1.0) <= 1e-4:
        return p.C0 * math.exp(-p.K_b * t)
    base = p.C0 ** (1.0 - p.n) + (p.n - 1.0) * p.K_b * t
    if base <= 0.0:
        return 0.0
    return base ** (1.0 / (1.0 - p.n))
