"""Point processes, Gilbert graphs, clusters, and self-avoiding walks.

Conventions: boxes are [-side/2, side/2]^dim with the distinguished origin
node at the zero vector; edges use the closed ball (distance <= radius), so
hand-built deterministic tests are unambiguous while the law is unchanged
for Poisson inputs.  Graphs and point configurations are immutable after
construction and safe to share across parallel workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _engine
from .errors import ParameterError, UnsupportedTopologyError


class Topology(Enum):
    BOUNDED = "bounded"
    TORUS = "torus"


class Mark(Enum):
    SUSCEPTIBLE = 0
    WHITE_KNIGHT = 1


_MARK_S = np.uint8(0)
_MARK_W = np.uint8(1)


@dataclass(frozen=True)
class BoxSpec:
    """Simulation box [-side/2, side/2]^dim."""

    dim: int
    side: float
    topology: Topology = Topology.BOUNDED

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        if self.dim > 8:
            raise ParameterError("dim > 8 is not supported by the grid search")
        if not math.isfinite(self.side) or self.side <= 0:
            raise ParameterError(f"side must be positive and finite, got {self.side}")

    @property
    def volume(self) -> float:
        return self.side**self.dim


@dataclass(frozen=True)
class PointConfiguration:
    """Marked point set with the distinguished origin node.

    positions is an (n, dim) float64 array, marks a uint8 array with 0 for
    susceptible and 1 for white knight.  The origin node sits at the zero
    vector and carries a susceptible mark (it receives the initial infection
    in the dynamics).  Arrays are read-only.
    """

    box: BoxSpec
    positions: np.ndarray
    marks: np.ndarray
    origin_index: int = 0

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        marks = np.ascontiguousarray(self.marks, dtype=np.uint8)
        if pos.ndim != 2 or pos.shape[1] != self.box.dim:
            raise ParameterError("positions must have shape (n, dim)")
        if marks.shape != (pos.shape[0],):
            raise ParameterError("marks must have one entry per point")
        if not (0 <= self.origin_index < pos.shape[0]):
            raise ParameterError("origin_index out of range")
        half = self.box.side / 2.0
        if pos.size and np.abs(pos).max() > half:
            raise ParameterError("positions outside the box")
        if np.any(pos[self.origin_index] != 0.0):
            raise ParameterError("origin node must sit at the zero vector")
        if marks[self.origin_index] != _MARK_S:
            raise ParameterError("origin node must be marked susceptible")
        pos.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "marks", marks)

    @property
    def n_points(self) -> int:
        return self.positions.shape[0]

    @property
    def susceptible_indices(self) -> np.ndarray:
        return np.flatnonzero(self.marks == _MARK_S)

    @property
    def knight_indices(self) -> np.ndarray:
        return np.flatnonzero(self.marks == _MARK_W)


@dataclass(frozen=True)
class GilbertGraph:
    """Immutable adjacency of a PointConfiguration at connection radius."""

    config: PointConfiguration
    radius: float
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def mean_degree(self) -> float:
        return float(self.degrees.mean()) if self.n_nodes else 0.0

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n_nodes else 0

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]


@dataclass(frozen=True)
class ClusterReport:
    member_indices: np.ndarray
    touches_boundary: bool
    size: int


@dataclass(frozen=True)
class SawCount:
    count: int
    capped: bool


def ball_volume(dim: int, radius: float) -> float:
    """Lebesgue volume of the radius-r ball: pi^(d/2) r^d / Gamma(d/2 + 1).

    Gamma is evaluated by the half-integer recursion, exact for integer d.
    """
    if not isinstance(dim, int) or dim < 1:
        raise ParameterError(f"dim must be a positive integer, got {dim}")
    if radius < 0:
        raise ParameterError("radius must be nonnegative")
    if dim % 2 == 0:
        g = float(math.factorial(dim // 2))
    else:
        g = math.sqrt(math.pi)
        x = 0.5
        for _ in range((dim + 1) // 2):
            g *= x
            x += 1.0
    return math.pi ** (dim / 2.0) * radius**dim / g


def sample_ppp(intensity: float, box: BoxSpec, rng: np.random.Generator) -> np.ndarray:
    """Sample a homogeneous Poisson point process in the box.

    Returns an (n, dim) array; n is Poisson(intensity * volume) and the
    positions are i.i.d. uniform.  Deterministic given the generator state.
    """
    if not math.isfinite(intensity) or intensity < 0:
        raise ParameterError(f"intensity must be finite and >= 0, got {intensity}")
    n = int(rng.poisson(intensity * box.volume))
    half = box.side / 2.0
    return rng.uniform(-half, half, size=(n, box.dim))


def thin_marks(box: BoxSpec, points: np.ndarray, p: float,
               rng: np.random.Generator) -> PointConfiguration:
    """Mark points i.i.d. white-knight with probability p, prepend the origin.

    The origin node (index 0) is always susceptible; it carries the initial
    infection in the dynamics.
    """
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"thinning probability must be in [0, 1], got {p}")
    points = np.asarray(points, dtype=np.float64).reshape(-1, box.dim)
    n = points.shape[0]
    marks = np.where(rng.random(n) < p, _MARK_W, _MARK_S).astype(np.uint8)
    positions = np.vstack([np.zeros((1, box.dim)), points])
    marks = np.concatenate([[_MARK_S], marks]).astype(np.uint8)
    return PointConfiguration(box=box, positions=positions, marks=marks, origin_index=0)


def sample_configuration(box: BoxSpec, mu_s: float, mu_w: float,
                         rng: np.random.Generator) -> PointConfiguration:
    """Sample the superposed process at mu_s + mu_w and thin with p = mu_w/mu.

    Equivalent in law to independent susceptible and knight processes.
    """
    if mu_s < 0 or mu_w < 0:
        raise ParameterError("intensities must be nonnegative")
    mu = mu_s + mu_w
    points = sample_ppp(mu, box, rng)
    p = mu_w / mu if mu > 0 else 0.0
    return thin_marks(box, points, p, rng)


def configuration_from_points(box: BoxSpec, positions, marks,
                              origin_index: int = 0) -> PointConfiguration:
    """Build a configuration from explicit positions and Mark values."""
    marks_arr = np.array(
        [m.value if isinstance(m, Mark) else int(m) for m in marks], dtype=np.uint8)
    return PointConfiguration(box=box, positions=np.asarray(positions, dtype=np.float64),
                              marks=marks_arr, origin_index=origin_index)


def build_gilbert(config: PointConfiguration, radius: float) -> GilbertGraph:
    """Gilbert graph: edge iff distance <= radius under the box topology.

    Expected O(n) via a uniform cell grid; adjacency lists come out sorted,
    identically for both backends.
    """
    if not math.isfinite(radius) or radius <= 0:
        raise ParameterError(f"radius must be positive, got {radius}")
    box = config.box
    torus = box.topology is Topology.TORUS
    if torus and radius > box.side / 2.0:
        raise ParameterError("torus topology requires radius <= side/2")
    n = config.n_points
    pi, pj = _engine.gilbert_pairs(config.positions, box.side, radius, torus)
    src = np.concatenate([pi, pj])
    dst = np.concatenate([pj, pi])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = np.ascontiguousarray(dst[order], dtype=np.int32)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    indptr.setflags(write=False)
    dst.setflags(write=False)
    return GilbertGraph(config=config, radius=radius, indptr=indptr, indices=dst)


def _touches_boundary(graph: GilbertGraph, members: np.ndarray) -> bool:
    box = graph.config.box
    if box.topology is Topology.TORUS or len(members) == 0:
        return False
    shell = box.side / 2.0 - graph.radius
    return bool(np.abs(graph.config.positions[members]).max() >= shell)


def cluster_of(graph: GilbertGraph, start: int,
               restrict_to_susceptible: bool = False) -> ClusterReport:
    """Connected component of ``start`` by breadth-first search.

    With ``restrict_to_susceptible`` the traversal uses only susceptible
    nodes plus the origin; started at the origin this yields the cluster the
    infection is confined to.  touches_boundary flags members within radius
    of a box face (always False on the torus).
    """
    n = graph.n_nodes
    if not (0 <= start < n):
        raise ParameterError(f"start index {start} out of range")
    if restrict_to_susceptible:
        allowed = (graph.config.marks == _MARK_S).astype(np.uint8)
        allowed[graph.config.origin_index] = 1
        if not allowed[start]:
            raise ParameterError("start node is not susceptible")
    else:
        allowed = np.ones(n, dtype=np.uint8)
    members = np.sort(_engine.component_bfs(graph.indptr, graph.indices, start, allowed))
    members.setflags(write=False)
    return ClusterReport(member_indices=members,
                         touches_boundary=_touches_boundary(graph, members),
                         size=len(members))


def count_saws(graph: GilbertGraph, origin: int, n: int,
               restrict_to_susceptible: bool = True,
               max_paths: int | None = None) -> SawCount:
    """Exact count of self-avoiding paths of n edges starting at origin.

    Depth-first search with a visited set; count_saws(..., 0) == 1.  When
    ``max_paths`` is given, counting stops there and the result is flagged
    capped instead of silently truncated.
    """
    if n < 0:
        raise ParameterError("path length must be >= 0")
    if not (0 <= origin < graph.n_nodes):
        raise ParameterError(f"origin index {origin} out of range")
    if n == 0:
        return SawCount(count=1, capped=False)
    if restrict_to_susceptible:
        allowed = graph.config.marks == _MARK_S
        allowed = allowed.copy()
        allowed[graph.config.origin_index] = True
    else:
        allowed = np.ones(graph.n_nodes, dtype=bool)
    if not allowed[origin]:
        return SawCount(count=0, capped=False)

    indptr, indices = graph.indptr, graph.indices
    visited = np.zeros(graph.n_nodes, dtype=bool)
    count = 0
    capped = False

    def dfs(v: int, remaining: int):
        nonlocal count, capped
        visited[v] = True
        for u in indices[indptr[v]:indptr[v + 1]]:
            if capped:
                break
            if visited[u] or not allowed[u]:
                continue
            if remaining == 1:
                count += 1
                if max_paths is not None and count >= max_paths:
                    capped = True
                    break
            else:
                dfs(int(u), remaining - 1)
        visited[v] = False

    dfs(origin, n)
    return SawCount(count=count, capped=capped)


def estimate_theta(mu_s: float, radius: float, box: BoxSpec, replications: int,
                   rng_master: np.random.Generator) -> tuple[float, float]:
    """Finite-box percolation-probability estimate for the susceptible process.

    Fraction of replications in which the origin's susceptible cluster
    reaches the boundary shell (within radius of a box face), with the
    binomial standard error.  Clusters that reach the shell are censored
    rather than frozen, hence the bounded-topology requirement.
    """
    if box.topology is not Topology.BOUNDED:
        raise UnsupportedTopologyError("theta estimation requires a bounded box")
    if replications < 1:
        raise ParameterError("replications must be >= 1")
    hits = 0
    for child in rng_master.spawn(replications):
        points = sample_ppp(mu_s, box, child)
        config = thin_marks(box, points, 0.0, child)
        graph = build_gilbert(config, radius)
        report = cluster_of(graph, config.origin_index, restrict_to_susceptible=True)
        hits += report.touches_boundary
    theta = hits / replications
    stderr = math.sqrt(theta * (1.0 - theta) / replications)
    return theta, stderr


def config_to_json(config: PointConfiguration, radius: float) -> dict:
    """JSON document for a configuration and its intended connection radius.

    Graphs are derived from this document, never serialized themselves.
    """
    return {
        "box": {"dim": config.box.dim, "side": config.box.side,
                "topology": config.box.topology.value},
        "radius": radius,
        "points": [
            {"x": [float(c) for c in pos], "mark": "W" if m == _MARK_W else "S"}
            for pos, m in zip(config.positions, config.marks)
        ],
        "origin_index": config.origin_index,
    }


def config_from_json(doc: dict) -> tuple[PointConfiguration, float]:
    box = BoxSpec(dim=int(doc["box"]["dim"]), side=float(doc["box"]["side"]),
                  topology=Topology(doc["box"]["topology"]))
    points = doc["points"]
    positions = np.array([p["x"] for p in points], dtype=np.float64).reshape(len(points), box.dim)
    marks = np.array([_MARK_W if p["mark"] == "W" else _MARK_S for p in points],
                     dtype=np.uint8)
    config = PointConfiguration(box=box, positions=positions, marks=marks,
                                origin_index=int(doc["origin_index"]))
    return config, float(doc["radius"])


def save_configuration(config: PointConfiguration, radius: float, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_json(config, radius), fh)


def load_configuration(path) -> tuple[PointConfiguration, float]:
    with open(path) as fh:
        return config_from_json(json.load(fh))
