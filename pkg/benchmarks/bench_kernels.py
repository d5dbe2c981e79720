"""Compare the compiled and pure-NumPy kernel backends.

Usage: python benchmarks/bench_kernels.py [--nodes 1000] [--scenarios 100]
       [--candidates 500] [--k 100] [--repeat 5]

Times the batched transport pass and the greedy selector on a synthetic
random DAG of the requested size and prints per-backend wall times plus
the speedup.  Falls back gracefully when the extension is not built.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dbpsense._kernels import _pure

try:
    from dbpsense._kernels import _core
except ImportError:
    _core = None


def random_dag(rng, n_nodes, n_scen, max_up=3):
    up_node, up_q, up_tt = [], [], []
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    for v in range(n_nodes):
        if v > 0:
            count = int(rng.integers(1, min(v, max_up) + 1))
            for u in sorted(int(x) for x in rng.choice(v, count, replace=False)):
                up_node.append(u)
                up_q.append(float(rng.uniform(0.1, 5.0)))
                up_tt.append(float(rng.uniform(0.01, 4.0)))
        indptr[v + 1] = len(up_node)
    injections = np.zeros((n_scen, n_nodes), dtype=np.uint8)
    injections[np.arange(n_scen), rng.integers(0, n_nodes, n_scen)] = 1
    return (
        np.arange(n_nodes, dtype=np.int64),
        indptr,
        np.array(up_node, dtype=np.int64),
        np.array(up_q, dtype=np.float64),
        np.array(up_tt, dtype=np.float64),
        injections,
    )


def best_of(repeat, fn, *args):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=1000)
    parser.add_argument("--scenarios", type=int, default=100)
    parser.add_argument("--candidates", type=int, default=500)
    parser.add_argument("--k", type=int, default=100)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    dag = random_dag(rng, args.nodes, args.scenarios)
    transport_args = (*dag, 1.0, 0.5, 1.0)
    times = rng.uniform(0.0, 4320.0, size=(args.scenarios, args.candidates))

    backends = [("pure", _pure)]
    if _core is not None:
        backends.append(("compiled", _core))
    else:
        print("note: accelerator extension not built; timing pure backend only")

    print(
        f"transport: {args.nodes} nodes x {args.scenarios} scenarios | "
        f"greedy: {args.candidates} candidates, k={args.k} "
        f"(best of {args.repeat})"
    )
    results: dict[str, dict[str, float]] = {}
    for name, impl in backends:
        results[name] = {
            "transport": best_of(
                args.repeat, impl.arrival_and_concentration, *transport_args
            ),
            "greedy": best_of(
                args.repeat, impl.greedy_expected_time, times, args.k
            ),
        }

    for kernel in ("transport", "greedy"):
        line = f"{kernel:10s}"
        for name, _ in backends:
            line += f"  {name}: {results[name][kernel] * 1e3:9.3f} ms"
        if len(backends) == 2:
            speedup = results["pure"][kernel] / results["compiled"][kernel]
            line += f"  speedup: {speedup:5.2f}x"
        print(line)

    if len(backends) == 2:
        a = _pure.arrival_and_concentration(*transport_args)
        b = _core.arrival_and_concentration(*transport_args)
        drift = 0.0
        for x, y in zip(a, b):
            assert (np.isinf(x) == np.isinf(y)).all()
            finite = np.isfinite(x)
            drift = max(drift, float(np.abs(x[finite] - y[finite]).max()))
        print(f"max abs disagreement (transport): {drift:.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
