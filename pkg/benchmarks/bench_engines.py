#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Three workloads cover the hot paths: the Gillespie event loop on a
supercritical Gilbert graph, the front race on the long chain, and the
lazy k-ary tree.  Each workload first replays a few paired runs to confirm
the backends produce bit-identical trajectories, then times each backend
on its own batch (the pure side at a reduced replication count, scaled).

Usage: python benchmarks/bench_engines.py [--quick]
"""

import argparse
import math
import time

import numpy as np

from chasescape import BoxSpec, build_gilbert, sample_configuration
from chasescape._engine import _pure
from chasescape.dynamics import (boundary_mask, displacement_from_origin,
                                 initial_states)
from chasescape.rng import derive_stream

try:
    from chasescape._engine import _speedups
except ImportError:
    _speedups = None

BIG = 2**62


def _gilbert_engines():
    rng = derive_stream(2024, 1)
    config = sample_configuration(BoxSpec(dim=2, side=24.0), 3.0, 0.1, rng)
    graph = build_gilbert(config, 1.0)
    args = (graph.indptr, graph.indices, initial_states(graph),
            boundary_mask(graph), displacement_from_origin(graph))
    return ("gilbert d=2 L=24 mu=3.1 lam_i=10", 10.0,
            _speedups.GillespieEngine(*args) if _speedups else None,
            _pure.GillespieEngine(*args))


def _chain_engines():
    n = 10_000
    states = np.zeros(n + 1, dtype=np.int8)
    states[0] = 2  # knight front
    states[1] = 1  # infection front
    censor = np.zeros(n + 1, dtype=np.uint8)
    censor[n] = 1
    disp = np.abs(np.arange(n + 1, dtype=np.float64) - 1.0)
    src = np.concatenate([np.arange(n), np.arange(1, n + 1)]).astype(np.int32)
    dst = np.concatenate([np.arange(1, n + 1), np.arange(n)]).astype(np.int32)
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 2, dtype=np.int64)
    np.cumsum(np.bincount(src[order], minlength=n + 1), out=indptr[1:])
    args = (indptr, dst[order].copy(), states, censor, disp)
    return ("chain cap 1e4 lam_i=1", 1.0,
            _speedups.GillespieEngine(*args) if _speedups else None,
            _pure.GillespieEngine(*args))


def _run_batch(engine, lam_i, reps, seed_tag):
    t0 = time.monotonic()
    events = 0
    for rep in range(reps):
        rng = derive_stream(2024, seed_tag, rep)
        out = engine.run(lam_i, 1.0, BIG, BIG, math.inf, rng, False)
        events += out[1]
    return time.monotonic() - t0, events


def _run_tree_batch(engine_cls, reps, seed_tag):
    t0 = time.monotonic()
    events = 0
    for rep in range(reps):
        rng = derive_stream(2024, seed_tag, rep)
        out = engine_cls(2, 14, 10**6, True).run(1.0, 1.0, BIG, math.inf, rng, False)
        events += out[1]
    return time.monotonic() - t0, events


def _check_paired(name, lam_i, compiled, pure):
    for rep in range(5):
        a = compiled.run(lam_i, 1.0, BIG, BIG, math.inf,
                         derive_stream(1, 7, rep), True)
        b = pure.run(lam_i, 1.0, BIG, BIG, math.inf,
                     derive_stream(1, 7, rep), True)
        assert a[:3] == b[:3] and (a[7][0] == b[7][0]).all(), f"{name}: backends diverge"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller batches")
    args = parser.parse_args()
    if _speedups is None:
        print("compiled backend unavailable; nothing to compare")
        return

    scale = 10 if args.quick else 1
    rows = []
    for maker, reps_c, reps_p, tag in (
            (_gilbert_engines, 400 // scale, 20 // scale or 2, 11),
            (_chain_engines, 20_000 // scale, 400 // scale, 12)):
        name, lam_i, compiled, pure = maker()
        _check_paired(name, lam_i, compiled, pure)
        dt_c, ev_c = _run_batch(compiled, lam_i, reps_c, tag)
        dt_p, ev_p = _run_batch(pure, lam_i, reps_p, tag)
        rate_c = ev_c / dt_c
        rate_p = ev_p / dt_p
        rows.append((name, rate_c, rate_p))

    dt_c, ev_c = _run_tree_batch(_speedups.TreeEngine, 400 // scale, 13)
    dt_p, ev_p = _run_tree_batch(_pure.TreeEngine, 40 // scale or 4, 13)
    rows.append(("tree k=2 depth 14 lam_i=1", ev_c / dt_c, ev_p / dt_p))

    print(f"{'workload':38s} {'compiled ev/s':>14s} {'pure ev/s':>12s} {'speedup':>8s}")
    for name, rate_c, rate_p in rows:
        print(f"{name:38s} {rate_c:14.3g} {rate_p:12.3g} {rate_c / rate_p:7.1f}x")


if __name__ == "__main__":
    main()
