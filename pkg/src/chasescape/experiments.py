"""Replicated Monte Carlo experiments over the simulator.

Every experiment resamples a fresh point configuration per replication
(the target quantities average over both the environment and the jump
process), derives per-replication streams from the master seed, and
aggregates order-independently.  Sweep-cell streams are keyed by the cell's
parameter values, not its grid position, so splitting a grid across runs
or processes reproduces identical rows.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .analytics import local_survival_bounds
from .dynamics import OutcomeClass, RateParams, Simulator, StopPolicy
from .errors import ParameterError
from .geometry import (BoxSpec, PointConfiguration, Topology, ball_volume,
                       build_gilbert, cluster_of, count_saws,
                       sample_configuration, sample_ppp, thin_marks)
from .rng import (GENERATOR_NAME, TAG_LOCAL_SURVIVAL, TAG_PERCOLATION,
                  TAG_SAW, TAG_SWEEP, derive_stream, float_key)

CSV_HEADER = ("lambda_i,mu_w,reps,n_extinct,n_local,n_global_proxy,"
              "frac_global,stderr_global,mean_total_infected,mean_extinction_time")


@dataclass(frozen=True)
class SweepSpec:
    """Monte Carlo sweep over a (lambda_i, mu_w) grid."""

    dim: int
    radius: float
    mu_s: float
    box_side: float
    lambda_grid: tuple[float, ...]
    mu_w_grid: tuple[float, ...]
    replications: int
    master_seed: int
    lambda_w: float = 1.0
    topology: Topology = Topology.BOUNDED
    policy: StopPolicy = StopPolicy()

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        object.__setattr__(self, "mu_w_grid", tuple(float(x) for x in self.mu_w_grid))
        if not self.lambda_grid or not self.mu_w_grid:
            raise ParameterError("grids must be non-empty")
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")

    @property
    def box(self) -> BoxSpec:
        return BoxSpec(dim=self.dim, side=self.box_side, topology=self.topology)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["topology"] = self.topology.value
        doc["lambda_grid"] = list(self.lambda_grid)
        doc["mu_w_grid"] = list(self.mu_w_grid)
        return doc


@dataclass(frozen=True)
class SweepRow:
    lambda_i: float
    mu_w: float
    reps: int
    n_extinct: int
    n_local: int
    n_global_proxy: int
    frac_global: float
    stderr_global: float
    mean_total_infected: float
    mean_extinction_time: float  # nan when no run went extinct


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...]
    manifest: dict

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(",".join([
                repr(r.lambda_i), repr(r.mu_w), str(r.reps), str(r.n_extinct),
                str(r.n_local), str(r.n_global_proxy), repr(r.frac_global),
                repr(r.stderr_global), repr(r.mean_total_infected),
                repr(r.mean_extinction_time),
            ]))
        return "\n".join(lines) + "\n"

    def frac_global_matrix(self) -> np.ndarray:
        """(len(mu_w_grid), len(lambda_grid)) matrix of global fractions."""
        lams = self.manifest["sweep"]["lambda_grid"]
        muws = self.manifest["sweep"]["mu_w_grid"]
        mat = np.zeros((len(muws), len(lams)))
        by_key = {(r.lambda_i, r.mu_w): r.frac_global for r in self.rows}
        for i, mw in enumerate(muws):
            for j, lam in enumerate(lams):
                mat[i, j] = by_key[(lam, mw)]
        return mat


def _run_cell_chunk(args) -> tuple:
    """One cell's replications [rep_lo, rep_hi); returns per-rep outcome data."""
    spec, lam, mu_w, rep_lo, rep_hi = args
    box = spec.box
    params = RateParams(lambda_i=lam, lambda_w=spec.lambda_w)
    classes = []
    total_infected = []
    ext_times = []
    for rep in range(rep_lo, rep_hi):
        rng = derive_stream(spec.master_seed, TAG_SWEEP, float_key(lam),
                            float_key(mu_w), rep)
        config = sample_configuration(box, spec.mu_s, mu_w, rng)
        graph = build_gilbert(config, spec.radius)
        outcome = Simulator(graph, params, spec.policy).run(rng)
        classes.append(outcome.outcome)
        total_infected.append(outcome.total_ever_infected)
        if outcome.outcome is OutcomeClass.EXTINCTION:
            ext_times.append(outcome.extinction_time)
    return classes, total_infected, ext_times


def _aggregate_cell(lam, mu_w, reps, chunks) -> SweepRow:
    classes = []
    total_infected = []
    ext_times = []
    for cls, tot, ext in chunks:
        classes.extend(cls)
        total_infected.extend(tot)
        ext_times.extend(ext)
    n_ext = sum(c is OutcomeClass.EXTINCTION for c in classes)
    n_loc = sum(c is OutcomeClass.LOCAL_SURVIVAL for c in classes)
    n_glob = sum(c is OutcomeClass.GLOBAL_PROXY for c in classes)
    frac = n_glob / reps
    return SweepRow(
        lambda_i=lam, mu_w=mu_w, reps=reps, n_extinct=n_ext, n_local=n_loc,
        n_global_proxy=n_glob, frac_global=frac,
        stderr_global=math.sqrt(frac * (1.0 - frac) / reps),
        mean_total_infected=float(np.mean(total_infected)),
        mean_extinction_time=float(np.mean(ext_times)) if ext_times else math.nan,
    )


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepTable:
    """Replicated runs over the grid; deterministic given the spec.

    Results are independent of ``threads`` and of any grid splitting: every
    replication stream is derived from (master_seed, sweep tag, lambda bits,
    mu_w bits, replication).
    """
    started = time.monotonic()
    cells = [(lam, mu_w) for lam in spec.lambda_grid for mu_w in spec.mu_w_grid]
    chunk = max(1, spec.replications // max(1, threads * 4))
    tasks = []
    for lam, mu_w in cells:
        for lo in range(0, spec.replications, chunk):
            tasks.append((spec, lam, mu_w, lo, min(lo + chunk, spec.replications)))
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell_chunk, tasks))
    else:
        results = [_run_cell_chunk(t) for t in tasks]
    by_cell: dict[tuple, list] = {c: [] for c in cells}
    for task, res in zip(tasks, results):
        by_cell[(task[1], task[2])].append(res)
    rows = tuple(_aggregate_cell(lam, mu_w, spec.replications, by_cell[(lam, mu_w)])
                 for lam, mu_w in cells)
    manifest = {
        "experiment": "sweep",
        "sweep": spec.to_dict(),
        "master_seed": spec.master_seed,
        "tool_version": __version__,
        "rng": GENERATOR_NAME,
        "wall_time_s": time.monotonic() - started,
    }
    return SweepTable(rows=rows, manifest=manifest)


@dataclass(frozen=True)
class SawRow:
    n: int
    samples: int
    capped_excluded: int
    mean: float
    stderr: float
    analytic: float
    growth_rate: float  # (1/n) log(mean); nan at n = 0


def connective_constant_experiment(mu_s: float, r: float, d: int, n_max: int,
                                   samples: int, master_seed: int,
                                   max_paths: int = 1_000_000) -> list[SawRow]:
    """Monte Carlo mean of the self-avoiding-path counts against the
    analytic (mu_s * kappa_r)^n.

    The box is sized so every path of length <= n_max fits with room to
    spare, which keeps the finite-volume mean exactly equal to the
    infinite-volume expectation.  Capped enumerations are excluded from the
    mean and reported.
    """
    if n_max < 0 or samples < 1:
        raise ParameterError("need n_max >= 0 and samples >= 1")
    box = BoxSpec(dim=d, side=2.0 * r * (n_max + 0.5))
    counts: dict[int, list[int]] = {n: [] for n in range(n_max + 1)}
    capped: dict[int, int] = {n: 0 for n in range(n_max + 1)}
    for i in range(samples):
        rng = derive_stream(master_seed, TAG_SAW, i)
        points = sample_ppp(mu_s, box, rng)
        config = thin_marks(box, points, 0.0, rng)
        graph = build_gilbert(config, r)
        for n in range(n_max + 1):
            res = count_saws(graph, config.origin_index, n, max_paths=max_paths)
            if res.capped:
                capped[n] += 1
            else:
                counts[n].append(res.count)
    rows = []
    kappa = ball_volume(d, r)
    for n in range(n_max + 1):
        vals = np.asarray(counts[n], dtype=np.float64)
        mean = float(vals.mean()) if len(vals) else math.nan
        stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
        rate = math.log(mean) / n if n >= 1 and mean > 0 else math.nan
        rows.append(SawRow(n=n, samples=len(vals), capped_excluded=capped[n],
                           mean=mean, stderr=stderr,
                           analytic=(mu_s * kappa) ** n, growth_rate=rate))
    return rows


@dataclass(frozen=True)
class LocalSurvivalResult:
    dynamic_estimate: float
    dynamic_stderr: float
    void_estimate: float
    void_stderr: float
    lower_bound: float
    upper_bound: float
    replications: int
    n_boundary_clusters: int


def _union_ball_volume(positions: np.ndarray, r: float, samples: int,
                       rng: np.random.Generator) -> float:
    """Monte Carlo volume of the union of radius-r balls around positions."""
    lo = positions.min(axis=0) - r
    hi = positions.max(axis=0) + r
    box_vol = float(np.prod(hi - lo))
    r2 = r * r
    inside = 0
    remaining = samples
    # chunked to bound the (points x centers) distance matrix
    while remaining > 0:
        m = min(remaining, 20_000)
        pts = rng.uniform(lo, hi, size=(m, positions.shape[1]))
        d2 = ((pts[:, None, :] - positions[None, :, :]) ** 2).sum(axis=2)
        inside += int((d2 <= r2).any(axis=1).sum())
        remaining -= m
    return box_vol * inside / samples


def local_survival_experiment(mu_s: float, mu_w: float, r: float, d: int,
                              box_side: float, replications: int,
                              master_seed: int, lambda_i: float = 1.0,
                              volume_samples: int = 100_000,
                              theta: float = 0.0) -> LocalSurvivalResult:
    """Dual estimation of the local-survival probability.

    dynamic: fraction of runs absorbed with infected nodes remaining.
    void formula: mean of exp(-mu_w * vol(B_r(C_o^S))) over susceptible
    clusters, zero for clusters reaching the boundary shell.  Both are
    unbiased for the same finite-box quantity (local survival happens
    exactly when the susceptible cluster is finite and carries no knight
    within reach), so they must agree within Monte Carlo error.  The
    infection rate only affects run length, not the classification.
    """
    box = BoxSpec(dim=d, side=box_side)
    params = RateParams(lambda_i=lambda_i)
    policy = StopPolicy(boundary_censoring=True)
    dyn = np.zeros(replications)
    void = np.zeros(replications)
    n_boundary = 0
    for rep in range(replications):
        rng = derive_stream(master_seed, TAG_LOCAL_SURVIVAL, rep)
        config = sample_configuration(box, mu_s, mu_w, rng)
        graph = build_gilbert(config, r)
        outcome = Simulator(graph, params, policy).run(rng)
        dyn[rep] = outcome.outcome is OutcomeClass.LOCAL_SURVIVAL
        cluster = cluster_of(graph, config.origin_index, restrict_to_susceptible=True)
        if cluster.touches_boundary:
            n_boundary += 1
            void[rep] = 0.0
        else:
            vol = _union_ball_volume(config.positions[cluster.member_indices], r,
                                     volume_samples, rng)
            void[rep] = math.exp(-mu_w * vol)
    lower, upper = local_survival_bounds(mu_s, mu_w, r, d, theta)
    return LocalSurvivalResult(
        dynamic_estimate=float(dyn.mean()),
        dynamic_stderr=float(dyn.std(ddof=1) / math.sqrt(replications)),
        void_estimate=float(void.mean()),
        void_stderr=float(void.std(ddof=1) / math.sqrt(replications)),
        lower_bound=lower, upper_bound=upper,
        replications=replications, n_boundary_clusters=n_boundary,
    )


def _all_susceptible_config(box: BoxSpec, points: np.ndarray) -> PointConfiguration:
    points = np.asarray(points, dtype=np.float64).reshape(-1, box.dim)
    positions = np.vstack([np.zeros((1, box.dim)), points])
    marks = np.zeros(len(positions), dtype=np.uint8)
    return PointConfiguration(box=box, positions=positions, marks=marks, origin_index=0)


@dataclass(frozen=True)
class PercolationResult:
    rows: tuple[tuple[float, float, float], ...]  # (mu, theta_hat, stderr)
    mu_c_hat: float | None


def percolation_consistency(r: float, d: int, box_side: float,
                            mu_grid, replications: int,
                            master_seed: int,
                            crossing: float = 0.5) -> PercolationResult:
    """Coupled-thinning theta curve and the finite-size crossing estimate.

    Each replication samples one point set at the largest intensity and
    subsamples it for the smaller ones with shared uniforms, so the
    boundary-reach indicator is monotone replication by replication and the
    estimated curve is exactly non-decreasing.  mu_c_hat is the smallest
    grid intensity whose estimate exceeds ``crossing``.
    """
    mu_grid = tuple(float(m) for m in mu_grid)
    if not mu_grid or any(m < 0 for m in mu_grid) or sorted(mu_grid) != list(mu_grid):
        raise ParameterError("mu_grid must be non-empty, nonnegative, increasing")
    box = BoxSpec(dim=d, side=box_side)
    mu_top = mu_grid[-1]
    hits = np.zeros(len(mu_grid), dtype=np.int64)
    for rep in range(replications):
        rng = derive_stream(master_seed, TAG_PERCOLATION, rep)
        points = sample_ppp(mu_top, box, rng)
        u = rng.random(len(points))
        for k, mu in enumerate(mu_grid):
            keep = points[u < (mu / mu_top if mu_top > 0 else 0.0)]
            config = _all_susceptible_config(box, keep)
            graph = build_gilbert(config, r)
            report = cluster_of(graph, config.origin_index, restrict_to_susceptible=True)
            hits[k] += report.touches_boundary
    rows = []
    mu_c = None
    for k, mu in enumerate(mu_grid):
        th = hits[k] / replications
        rows.append((mu, float(th), math.sqrt(th * (1.0 - th) / replications)))
        if mu_c is None and th > crossing:
            mu_c = mu
    return PercolationResult(rows=tuple(rows), mu_c_hat=mu_c)
