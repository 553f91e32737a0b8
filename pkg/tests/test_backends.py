"""Contract tests between the compiled kernels and the pure-Python twin."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

import chasescape as cs
from chasescape import _engine
from chasescape._engine import _pure
from chasescape.dynamics import (boundary_mask, displacement_from_origin,
                                 initial_states)

compiled = pytest.importorskip("chasescape._engine._speedups")

BIG = 2**62


def paired_results_equal(a, b):
    if a[:3] != b[:3]:
        return False
    if not ((math.isnan(a[3]) and math.isnan(b[3])) or a[3] == b[3]):
        return False
    if a[4:7] != b[4:7]:
        return False
    if (a[7] is None) != (b[7] is None):
        return False
    if a[7] is not None:
        return all((x == y).all() for x, y in zip(a[7], b[7]))
    return True


def test_rng_stream_consumed_identically():
    # after identical runs both generators must sit at the same state
    g = cs.build_gilbert(cs.sample_configuration(
        cs.BoxSpec(dim=2, side=8.0), 1.5, 0.3, np.random.default_rng(0)), 1.0)
    args = (g.indptr, g.indices, initial_states(g), boundary_mask(g),
            displacement_from_origin(g))
    rng_c = np.random.default_rng(5)
    rng_p = np.random.default_rng(5)
    compiled.GillespieEngine(*args).run(1.0, 1.0, BIG, BIG, math.inf, rng_c, False)
    _pure.GillespieEngine(*args).run(1.0, 1.0, BIG, BIG, math.inf, rng_p, False)
    assert rng_c.bit_generator.state == rng_p.bit_generator.state


def test_gillespie_trajectories_bit_identical():
    for seed in range(40):
        r = np.random.default_rng(seed)
        box = cs.BoxSpec(dim=2, side=7.0)
        config = cs.thin_marks(box, cs.sample_ppp(1.8, box, r), 0.3, r)
        g = cs.build_gilbert(config, 0.9)
        args = (g.indptr, g.indices, initial_states(g), boundary_mask(g),
                displacement_from_origin(g))
        eng_c = compiled.GillespieEngine(*args)
        eng_p = _pure.GillespieEngine(*args)
        lam = float(r.uniform(0.2, 3.0))
        a = eng_c.run(lam, 1.0, BIG, BIG, math.inf, cs.derive_stream(1, seed), True)
        b = eng_p.run(lam, 1.0, BIG, BIG, math.inf, cs.derive_stream(1, seed), True)
        assert paired_results_equal(a, b)


def test_tree_trajectories_bit_identical():
    for seed in range(40):
        a = compiled.TreeEngine(2, 10, 10**6, True).run(
            0.9, 1.0, BIG, math.inf, cs.derive_stream(2, seed), True)
        b = _pure.TreeEngine(2, 10, 10**6, True).run(
            0.9, 1.0, BIG, math.inf, cs.derive_stream(2, seed), True)
        assert paired_results_equal(a, b)


def test_caps_apply_identically():
    g = cs.build_gilbert(cs.sample_configuration(
        cs.BoxSpec(dim=2, side=10.0), 2.0, 0.1, np.random.default_rng(3)), 1.0)
    args = (g.indptr, g.indices, initial_states(g),
            np.zeros(g.n_nodes, np.uint8), displacement_from_origin(g))
    for caps in ((5, BIG, math.inf), (BIG, 3, math.inf), (BIG, BIG, 0.25)):
        a = compiled.GillespieEngine(*args).run(2.0, 1.0, *caps,
                                                cs.derive_stream(4, 0), True)
        b = _pure.GillespieEngine(*args).run(2.0, 1.0, *caps,
                                             cs.derive_stream(4, 0), True)
        assert paired_results_equal(a, b)


def test_bfs_agrees():
    for seed in range(20):
        r = np.random.default_rng(seed)
        box = cs.BoxSpec(dim=2, side=10.0)
        config = cs.thin_marks(box, cs.sample_ppp(1.5, box, r), 0.0, r)
        g = cs.build_gilbert(config, 1.0)
        allowed = np.ones(g.n_nodes, dtype=np.uint8)
        a = compiled.component_bfs(g.indptr, g.indices, 0, allowed)
        b = _pure.component_bfs(g.indptr, g.indices, 0, allowed)
        assert (a == b).all()


def test_pure_fallback_env_var():
    env = dict(os.environ, CHASESCAPE_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import chasescape; print(chasescape.BACKEND)"],
        capture_output=True, text=True, env=env, timeout=120)
    assert out.stdout.strip() == "pure"


def test_default_backend_is_compiled():
    assert _engine.BACKEND == "compiled"


def test_pure_backend_full_run_same_outcome():
    # a small end-to-end chain run must classify identically under the fallback
    code = (
        "import numpy as np, chasescape as cs\n"
        "cfg = cs.ChainConfig.front(gap=2, lambda_i=2.0, length_cap=200)\n"
        "outs = [cs.simulate_chain(cfg, cs.derive_stream(9, i)).outcome.value"
        " for i in range(50)]\n"
        "print(','.join(outs))\n"
    )
    base = subprocess.run([sys.executable, "-c", code], capture_output=True,
                          text=True, timeout=120)
    forced = subprocess.run([sys.executable, "-c", code], capture_output=True,
                            text=True, timeout=120,
                            env=dict(os.environ, CHASESCAPE_PURE="1"))
    assert base.returncode == 0 and forced.returncode == 0
    assert base.stdout == forced.stdout
