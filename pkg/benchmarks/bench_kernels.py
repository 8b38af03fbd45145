#!/usr/bin/env python3
"""Benchmark the compiled routing kernel against the pure-Python fallback,
and pre-filtered adjacency against in-search balance checking.

Usage: python benchmarks/bench_kernels.py [--size 500] [--txs 300] [--reps 5]
"""

import argparse
import time

import numpy as np

from feesim._kernel import get_kernel
from feesim.graph import localize
from feesim.simulate import simulate_round
from feesim.synth import synthetic_network
from feesim.traffic import TrafficSpec


def time_round(graph, spec, backend, prefilter, reps):
    best = float("inf")
    for _ in range(reps):
        g = graph.copy()
        rng = np.random.default_rng(0)
        t0 = time.perf_counter()
        simulate_round(g, spec, "97851", rng=rng, backend=backend, prefilter=prefilter)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=500, help="localization size")
    parser.add_argument("--txs", type=int, default=300, help="transactions per round")
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()

    print("building synthetic network...")
    full = synthetic_network()
    graph = localize(full, "97851", args.size)
    print(f"graph: {graph.n} nodes, {graph.m} channels")
    per_entry = max(1, args.txs // 3)
    spec = TrafficSpec.from_sat(
        [10000, 50000, 100000], [per_entry] * 3, [0.6] * 3
    )

    backends = {}
    for name in ("cython", "pure"):
        try:
            backends[name] = get_kernel(name)
        except (ImportError, ValueError):
            print(f"backend {name}: unavailable")

    results = {}
    for name, backend in backends.items():
        for prefilter in (True, False):
            label = f"{name}/{'prefilter' if prefilter else 'in-search'}"
            elapsed = time_round(graph, spec, backend, prefilter, args.reps)
            results[label] = elapsed
            rate = 3 * per_entry / elapsed
            print(f"{label:24s} {elapsed * 1e3:9.2f} ms/round  ({rate:9.0f} tx/s)")

    if "cython/prefilter" in results and "pure/prefilter" in results:
        speedup = results["pure/prefilter"] / results["cython/prefilter"]
        print(f"\ncompiled kernel speedup over pure Python: {speedup:.1f}x")
    if "cython/prefilter" in results and "cython/in-search" in results:
        speedup = results["cython/in-search"] / results["cython/prefilter"]
        print(f"pre-filter speedup over in-search checks: {speedup:.2f}x")


if __name__ == "__main__":
    main()
