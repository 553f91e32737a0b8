"""Exact and simulated chase-escape on fixed graphs.

Two families serve as analytic oracles for the random-geometry simulator:
the half-infinite nearest-neighbor chain (front-versus-front race, exactly
a gambler's-ruin problem in the gap) and the rooted k-ary tree with its
closed-form critical rate.  Chain patterns may contain ABSENT sites, which
disconnect the line; that is the construction behind the non-monotonicity
counterexample (an added infected node can doom an otherwise unstoppable
infection).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _engine
from .dynamics import NodeState, SimOutcome, _outcome_from_kernel
from .errors import ParameterError

_BIG = 2**62

ABSENT = "ABSENT"
_TOKEN_TO_STATE = {"S": NodeState.S, "I": NodeState.I, "W": NodeState.W}


@dataclass(frozen=True)
class ChainConfig:
    """Chase-escape on the sites 0, 1, 2, ... of the half-infinite chain.

    ``initial_states`` is the finite prefix pattern of tokens "S", "I",
    "W", or "ABSENT"; every site beyond the pattern is susceptible.  Sites
    at ``length_cap`` and beyond act as the censoring boundary: infecting
    site ``length_cap`` stops the run as a global-survival proxy.
    """

    initial_states: tuple[str, ...]
    lambda_i: float
    lambda_w: float = 1.0
    length_cap: int = 10_000

    def __post_init__(self):
        pattern = tuple(self.initial_states)
        object.__setattr__(self, "initial_states", pattern)
        if not pattern:
            raise ParameterError("pattern must be non-empty")
        for tok in pattern:
            if tok not in ("S", "I", "W", ABSENT):
                raise ParameterError(f"unknown site token {tok!r}")
        if "I" not in pattern:
            raise ParameterError("pattern must contain at least one infected site")
        for idx in (0, len(pattern) - 1):
            if pattern[idx] == ABSENT:
                raise ParameterError("ABSENT is allowed only at interior positions")
        if self.length_cap < len(pattern):
            raise ParameterError("length_cap must not truncate the pattern")
        if self.lambda_i < 0 or self.lambda_w <= 0:
            raise ParameterError("rates must satisfy lambda_i >= 0, lambda_w > 0")

    @classmethod
    def front(cls, gap: int, lambda_i: float, length_cap: int = 10_000,
              lambda_w: float = 1.0) -> "ChainConfig":
        """Knight front at site 0 chasing ``gap`` infected sites."""
        if gap < 1:
            raise ParameterError("gap must be >= 1")
        return cls(initial_states=("W",) + ("I",) * gap, lambda_i=lambda_i,
                   lambda_w=lambda_w, length_cap=length_cap)


@lru_cache(maxsize=32)
def _chain_engine(config: ChainConfig):
    """CSR path graph for a chain config; cached so replication loops reuse it."""
    cap = config.length_cap
    tokens = [config.initial_states[p] if p < len(config.initial_states) else "S"
              for p in range(cap + 1)]
    present = [p for p in range(cap + 1) if tokens[p] != ABSENT]
    node_of = {p: i for i, p in enumerate(present)}
    n = len(present)
    states = np.array([_TOKEN_TO_STATE[tokens[p]] for p in present], dtype=np.int8)
    censor = np.zeros(n, dtype=np.uint8)
    censor[node_of[cap]] = 1
    first_i = next(p for p in present if tokens[p] == "I")
    displacement = np.array([abs(p - first_i) for p in present], dtype=np.float64)

    lo_side, hi_side = [], []
    for p in present:
        if p + 1 in node_of:
            lo_side.append(node_of[p])
            hi_side.append(node_of[p + 1])
    src = np.asarray(lo_side + hi_side, dtype=np.int32)
    dst = np.asarray(hi_side + lo_side, dtype=np.int32)
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src[order], minlength=n), out=indptr[1:])
    return _engine.GillespieEngine(indptr, np.ascontiguousarray(dst[order], dtype=np.int32),
                                   states, censor, displacement)


def simulate_chain(config: ChainConfig, rng: np.random.Generator) -> SimOutcome:
    """One chain trajectory; GLOBAL_PROXY when the infection reaches the cap."""
    engine = _chain_engine(config)
    result = engine.run(config.lambda_i, config.lambda_w, _BIG, _BIG, math.inf,
                        rng, record=False)
    return _outcome_from_kernel(result)


def chain_survival_oracle(initial_gap: int, lambda_i: float) -> float:
    """Exact survival probability for the front-distance walk.

    The knight front can only advance onto previously infected sites, so
    the gap performs a birth-death walk (up rate lambda_i, down rate 1,
    absorbed at 0): survival = 1 - lambda_i^-gap for lambda_i > 1, else 0.
    """
    if initial_gap < 1:
        raise ParameterError("gap must be >= 1")
    if lambda_i < 0:
        raise ParameterError("lambda_i must be nonnegative")
    if lambda_i <= 1.0:
        return 0.0
    return 1.0 - lambda_i ** (-initial_gap)


def chain_reach_prob(n: int, lambda_i: float, replications: int,
                     rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of the probability that site n is ever infected
    from the canonical start (knight at 0, infection at 1, S beyond).

    Censoring exactly at site n makes the run stop the moment n is reached;
    per-replication streams are spawned from ``rng`` independently of n, so
    estimates at increasing n are monotonically coupled.
    """
    if n < 1:
        raise ParameterError("site index must be >= 1")
    if replications < 1:
        raise ParameterError("replications must be >= 1")
    config = ChainConfig.front(gap=1, lambda_i=lambda_i, length_cap=n + 1)
    hits = 0
    for child in rng.spawn(replications):
        outcome = simulate_chain(config, child)
        hits += outcome.stop_reason.value == "boundary"
    p = hits / replications
    return p, math.sqrt(p * (1.0 - p) / replications)


@dataclass(frozen=True)
class TreeConfig:
    """Chase-escape on the rooted k-ary tree.

    The root starts infected; with ``root_knight`` a white knight hangs
    above the root on a single extra edge.  Children materialize lazily on
    first infection of their parent.  Infecting any node at ``depth_cap``
    stops the run as the global proxy; exceeding ``node_budget`` flags a
    capped result.
    """

    k: int
    lambda_i: float
    depth_cap: int = 30
    lambda_w: float = 1.0
    root_knight: bool = True
    node_budget: int = 2_000_000

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("branching factor must be >= 1")
        if self.depth_cap < 1:
            raise ParameterError("depth_cap must be >= 1")
        if self.node_budget < 1 + self.k:
            raise ParameterError("node_budget too small for the root's children")
        if self.lambda_i < 0 or self.lambda_w <= 0:
            raise ParameterError("rates must satisfy lambda_i >= 0, lambda_w > 0")


def simulate_tree(config: TreeConfig, rng: np.random.Generator) -> SimOutcome:
    """One tree trajectory (lazy materialization); displacement is depth."""
    engine = _engine.TreeEngine(config.k, config.depth_cap, config.node_budget,
                                config.root_knight)
    result = engine.run(config.lambda_i, config.lambda_w, _BIG, math.inf,
                        rng, record=False)
    return _outcome_from_kernel(result)


@lru_cache(maxsize=8)
def _eager_tree_engine(k: int, depth_cap: int, root_knight: bool):
    """Dense k-ary tree as a static CSR graph (dual route to the lazy engine).

    Nodes in breadth-first order, root 0; the knight, when present, is the
    last index.  Only sensible for small depth caps.
    """
    n_tree = (k ** (depth_cap + 1) - 1) // (k - 1) if k > 1 else depth_cap + 1
    if n_tree > 5_000_000:
        raise ParameterError("eager tree too large; lower depth_cap")
    n = n_tree + (1 if root_knight else 0)
    src, dst = [], []
    depths = np.zeros(n, dtype=np.float64)
    # children of BFS node v are k*v + 1 .. k*v + k while inside the tree
    for v in range(n_tree):
        for j in range(1, k + 1):
            c = k * v + j
            if c >= n_tree:
                break
            src.append(v)
            dst.append(c)
            depths[c] = depths[v] + 1
    if root_knight:
        src.append(0)
        dst.append(n_tree)
    src_full = np.asarray(src + dst, dtype=np.int32)
    dst_full = np.asarray(dst + src, dtype=np.int32)
    order = np.lexsort((dst_full, src_full))
    src_full = src_full[order]
    dst_full = dst_full[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src_full, minlength=n), out=indptr[1:])
    states = np.zeros(n, dtype=np.int8)
    states[0] = NodeState.I
    if root_knight:
        states[n_tree] = NodeState.W
    censor = (depths >= depth_cap).astype(np.uint8)
    if root_knight:
        censor[n_tree] = 0
    return _engine.GillespieEngine(indptr, np.ascontiguousarray(dst_full, dtype=np.int32),
                                   states, censor, depths)


def simulate_tree_eager(config: TreeConfig, rng: np.random.Generator) -> SimOutcome:
    """Tree trajectory on the fully materialized graph.

    Consumes the same draws as simulate_tree and yields the same outcome;
    the pair is the dual-route check that lazy materialization never
    changes results.
    """
    engine = _eager_tree_engine(config.k, config.depth_cap, config.root_knight)
    result = engine.run(config.lambda_i, config.lambda_w, _BIG, _BIG, math.inf,
                        rng, record=False)
    return _outcome_from_kernel(result)
