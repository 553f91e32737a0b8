"""Command-line interface.

Subcommands: simulate, sweep, theta, saw, local-survival, calc, oracle.
Values resolve as defaults < --config file < explicit flags (last writer
wins).  Data goes to stdout or --out; the run manifest goes alongside the
output file (<out>.manifest.json) or to stderr when streaming, so the data
stream itself is byte-reproducible.  Exit code 2 flags parameter errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__, analytics
from .dynamics import (NodeState, RateParams, Simulator, StopPolicy,
                       initial_states)
from .errors import ParameterError
from .experiments import (SweepSpec, connective_constant_experiment,
                          local_survival_experiment, run_sweep)
from .geometry import (BoxSpec, Topology, ball_volume, build_gilbert,
                       estimate_theta, sample_configuration)
from .manifest import RunManifest, params_from_config_file
from .reference_models import chain_survival_oracle
from .rng import TAG_SIMULATE, TAG_THETA, derive_stream
from .viz import render_phase_heatmap, render_state_frame

_COMMON_DEFAULTS = {
    "dim": 2,
    "radius": 1.0,
    "mu_s": 1.0,
    "mu_w": 0.0,
    "lambda_i": 1.0,
    "lambda_w": 1.0,
    "box": 20.0,
    "topology": "bounded",
    "seed": 0,
    "reps": 100,
    "max_events": 10_000_000,
    "max_infected": None,
    "max_time": None,
    "out": None,
    "threads": os.cpu_count() or 1,
}

_DEFAULTS = {
    "simulate": {**_COMMON_DEFAULTS, "no_boundary_censoring": False,
                 "dump_trajectory": False, "frame": None},
    "sweep": {**_COMMON_DEFAULTS, "lambda_grid": "0.5,1,2,4",
              "mu_w_grid": "0.1,0.3,1", "svg": None},
    "theta": dict(_COMMON_DEFAULTS),
    "saw": {**_COMMON_DEFAULTS, "n_max": 5, "samples": 10_000,
            "max_paths": 1_000_000},
    "local-survival": {**_COMMON_DEFAULTS, "volume_samples": 100_000},
    "calc": {"x": None, "k": None, "n": None, "m": None, "gamma": None,
             "alpha": None, "theta": 0.0, "mu_s": None, "mu_w": None,
             "radius": 1.0, "dim": 2, "lambda_i": None, "out": None},
    "oracle": {"gap": 1, "lambda_i": 2.0, "k": 2, "out": None},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chasescape",
        description="Chase-escape simulation on Gilbert graphs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model=True):
        p.add_argument("--config", help="JSON config file (flag names as keys)")
        p.add_argument("--out", help="output file (manifest goes to <out>.manifest.json)")
        if model:
            p.add_argument("--dim", type=int)
            p.add_argument("--radius", type=float)
            p.add_argument("--mu-s", dest="mu_s", type=float)
            p.add_argument("--mu-w", dest="mu_w", type=float)
            p.add_argument("--lambda-i", dest="lambda_i", type=float)
            p.add_argument("--lambda-w", dest="lambda_w", type=float)
            p.add_argument("--box", type=float, help="box side length")
            p.add_argument("--topology", choices=["bounded", "torus"])
            p.add_argument("--seed", type=int)
            p.add_argument("--reps", type=int)
            p.add_argument("--max-infected", dest="max_infected", type=int)
            p.add_argument("--max-events", dest="max_events", type=int)
            p.add_argument("--max-time", dest="max_time", type=float)
            p.add_argument("--threads", type=int)

    p = sub.add_parser("simulate", help="replicated single runs, JSON records")
    add_common(p)
    p.add_argument("--no-boundary-censoring", dest="no_boundary_censoring",
                   action="store_true")
    p.add_argument("--dump-trajectory", dest="dump_trajectory", action="store_true")
    p.add_argument("--frame", help="write the last run's terminal state as SVG")

    p = sub.add_parser("sweep", help="(lambda_i, mu_w) grid sweep, CSV output")
    add_common(p)
    p.add_argument("--lambda-grid", dest="lambda_grid",
                   help="comma-separated lambda_i values")
    p.add_argument("--mu-w-grid", dest="mu_w_grid",
                   help="comma-separated mu_w values")
    p.add_argument("--svg", help="write a phase-diagram heatmap here")

    p = sub.add_parser("theta", help="percolation probability estimate")
    add_common(p)

    p = sub.add_parser("saw", help="self-avoiding-walk count experiment")
    add_common(p)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--max-paths", dest="max_paths", type=int)

    p = sub.add_parser("local-survival", help="dual local-survival estimators")
    add_common(p)
    p.add_argument("--volume-samples", dest="volume_samples", type=int)

    p = sub.add_parser("calc", help="closed-form quantities, JSON output")
    p.add_argument("quantity", choices=[
        "rho", "tree-critical-rate", "local-survival-bounds",
        "closed-node-prob", "open-node-lower-bound", "reflection-decay",
        "speed-constant", "critical-speed", "expected-saw-count",
        "ball-volume"])
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--x", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--mu-s", dest="mu_s", type=float)
    p.add_argument("--mu-w", dest="mu_w", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--lambda-i", dest="lambda_i", type=float)

    p = sub.add_parser("oracle", help="exact reference-model values")
    p.add_argument("model", choices=["chain", "tree-critical"])
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--gap", type=int)
    p.add_argument("--lambda-i", dest="lambda_i", type=float)
    p.add_argument("--k", type=int)

    # Leave only explicitly-passed optionals in the namespace; defaults are
    # resolved later so that config-file values slot in between.
    for sp in sub.choices.values():
        for action in sp._actions:
            if action.option_strings and action.dest != "help":
                action.default = argparse.SUPPRESS
    return parser


def _resolve(command: str, ns: argparse.Namespace) -> dict:
    provided = {k: v for k, v in vars(ns).items() if k not in ("command",)}
    config = {}
    if "config" in provided:
        config = params_from_config_file(provided.pop("config"))
    params = dict(_DEFAULTS[command])
    for key, value in config.items():
        if key in ("command", "config"):
            continue
        params[key] = value
    params.update(provided)
    return params


def _grid(value) -> tuple[float, ...]:
    if isinstance(value, str):
        return tuple(float(tok) for tok in value.split(",") if tok.strip())
    return tuple(float(v) for v in value)


def _policy(params: dict) -> StopPolicy:
    return StopPolicy(
        max_events=params["max_events"],
        max_infected=params["max_infected"],
        max_time=params["max_time"],
        boundary_censoring=not params.get("no_boundary_censoring", False),
    )


def _box(params: dict) -> BoxSpec:
    return BoxSpec(dim=int(params["dim"]), side=float(params["box"]),
                   topology=Topology(params["topology"]))


def _cmd_simulate(params: dict) -> str:
    box = _box(params)
    rates = RateParams(lambda_i=float(params["lambda_i"]),
                       lambda_w=float(params["lambda_w"]))
    policy = _policy(params)
    want_frame = bool(params.get("frame"))
    records = []
    last = None
    for rep in range(int(params["reps"])):
        rng = derive_stream(int(params["seed"]), TAG_SIMULATE, rep)
        config = sample_configuration(box, float(params["mu_s"]),
                                      float(params["mu_w"]), rng)
        graph = build_gilbert(config, float(params["radius"]))
        sim = Simulator(graph, rates, policy)
        if params.get("dump_trajectory") or want_frame:
            outcome, events = sim.run_recorded(rng)
        else:
            outcome, events = sim.run(rng), None
        record = outcome.to_record()
        record["seed"] = int(params["seed"])
        record["replication_index"] = rep
        if events is not None and params.get("dump_trajectory"):
            record["trajectory"] = [
                {"time": e.time, "node": e.node, "transition": e.transition}
                for e in events]
        records.append(record)
        last = (graph, events, outcome)
    if want_frame and last is not None:
        graph, events, outcome = last
        states = initial_states(graph)
        for e in events:
            states[e.node] = (NodeState.I if e.transition == "S->I"
                              else NodeState.W)
        with open(params["frame"], "w") as fh:
            fh.write(render_state_frame(graph, states,
                                        max_displacement=outcome.max_displacement))
    return json.dumps({"records": records}, indent=2) + "\n"


def _cmd_sweep(params: dict) -> str:
    spec = SweepSpec(
        dim=int(params["dim"]), radius=float(params["radius"]),
        mu_s=float(params["mu_s"]), box_side=float(params["box"]),
        lambda_grid=_grid(params["lambda_grid"]),
        mu_w_grid=_grid(params["mu_w_grid"]),
        replications=int(params["reps"]), master_seed=int(params["seed"]),
        lambda_w=float(params["lambda_w"]),
        topology=Topology(params["topology"]), policy=_policy(params))
    table = run_sweep(spec, threads=int(params["threads"]))
    if params.get("svg"):
        kappa = ball_volume(spec.dim, spec.radius)
        threshold = (analytics.rho(spec.mu_s * kappa)
                     if spec.mu_s * kappa >= 1.0 else None)
        svg = render_phase_heatmap(spec.lambda_grid, spec.mu_w_grid,
                                   table.frac_global_matrix(), threshold)
        with open(params["svg"], "w") as fh:
            fh.write(svg)
    return table.to_csv()


def _cmd_theta(params: dict) -> str:
    box = _box(params)
    theta, stderr = estimate_theta(float(params["mu_s"]), float(params["radius"]),
                                   box, int(params["reps"]),
                                   derive_stream(int(params["seed"]), TAG_THETA))
    doc = {"mu_s": params["mu_s"], "radius": params["radius"],
           "box": params["box"], "reps": params["reps"],
           "theta": theta, "stderr": stderr}
    return json.dumps(doc, indent=2) + "\n"


def _cmd_saw(params: dict) -> str:
    rows = connective_constant_experiment(
        float(params["mu_s"]), float(params["radius"]), int(params["dim"]),
        int(params["n_max"]), int(params["samples"]), int(params["seed"]),
        max_paths=int(params["max_paths"]))
    doc = {"rows": [{"n": r.n, "samples": r.samples,
                     "capped_excluded": r.capped_excluded, "mean": r.mean,
                     "stderr": r.stderr, "analytic": r.analytic,
                     "growth_rate": r.growth_rate} for r in rows]}
    return json.dumps(doc, indent=2) + "\n"


def _cmd_local_survival(params: dict) -> str:
    res = local_survival_experiment(
        float(params["mu_s"]), float(params["mu_w"]), float(params["radius"]),
        int(params["dim"]), float(params["box"]), int(params["reps"]),
        int(params["seed"]), lambda_i=float(params["lambda_i"]),
        volume_samples=int(params["volume_samples"]))
    doc = {
        "dynamic_estimate": res.dynamic_estimate,
        "dynamic_stderr": res.dynamic_stderr,
        "void_estimate": res.void_estimate,
        "void_stderr": res.void_stderr,
        "lower_bound": res.lower_bound,
        "upper_bound": res.upper_bound,
        "replications": res.replications,
        "n_boundary_clusters": res.n_boundary_clusters,
    }
    return json.dumps(doc, indent=2) + "\n"


def _require(params: dict, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ParameterError(f"missing required value(s): {', '.join(missing)}")
    return [params[n] for n in names]


def _cmd_calc(params: dict) -> str:
    q = params["quantity"]
    inputs: dict = {}
    if q == "rho":
        (x,) = _require(params, "x")
        inputs, value = {"x": x}, analytics.rho(x)
    elif q == "tree-critical-rate":
        (k,) = _require(params, "k")
        inputs, value = {"k": k}, analytics.tree_critical_rate(int(k))
    elif q == "local-survival-bounds":
        mu_s, mu_w = _require(params, "mu_s", "mu_w")
        r, d, theta = params["radius"], int(params["dim"]), params["theta"]
        lower, upper = analytics.local_survival_bounds(mu_s, mu_w, r, d, theta)
        inputs = {"mu_s": mu_s, "mu_w": mu_w, "radius": r, "dim": d, "theta": theta}
        value = {"lower": lower, "upper": upper}
    elif q == "closed-node-prob":
        k, n, lam = _require(params, "k", "n", "lambda_i")
        inputs = {"k": k, "n": n, "lambda_i": lam}
        value = analytics.closed_node_prob(int(k), int(n), lam)
    elif q == "open-node-lower-bound":
        n, m, lam = _require(params, "n", "m", "lambda_i")
        inputs = {"n": n, "m": m, "lambda_i": lam}
        value = analytics.open_node_lower_bound(int(n), int(m), lam)
    elif q == "reflection-decay":
        (lam,) = _require(params, "lambda_i")
        inputs, value = {"lambda_i": lam}, analytics.reflection_decay(lam)
    elif q == "speed-constant":
        gamma, lam, alpha = _require(params, "gamma", "lambda_i", "alpha")
        r = params["radius"]
        inputs = {"gamma": gamma, "lambda_i": lam, "radius": r, "alpha": alpha}
        value = analytics.speed_constant(gamma, lam, r, alpha)
    elif q == "critical-speed":
        gamma, lam = _require(params, "gamma", "lambda_i")
        r = params["radius"]
        sol = analytics.critical_speed(gamma, lam, r)
        inputs = {"gamma": gamma, "lambda_i": lam, "radius": r}
        value = {"alpha_c": sol.alpha_c, "t_star": sol.t_star}
    elif q == "expected-saw-count":
        mu_s, n = _require(params, "mu_s", "n")
        r, d = params["radius"], int(params["dim"])
        inputs = {"mu_s": mu_s, "radius": r, "dim": d, "n": n}
        value = analytics.expected_saw_count(mu_s, r, d, int(n))
    elif q == "ball-volume":
        r, d = params["radius"], int(params["dim"])
        inputs, value = {"radius": r, "dim": d}, ball_volume(d, r)
    else:  # pragma: no cover - argparse restricts choices
        raise ParameterError(f"unknown quantity {q}")
    return json.dumps({"quantity": q, "inputs": inputs, "value": value},
                      indent=2) + "\n"


def _cmd_oracle(params: dict) -> str:
    model = params["model"]
    if model == "chain":
        survival = chain_survival_oracle(int(params["gap"]), float(params["lambda_i"]))
        return json.dumps({"survival": survival}, indent=2) + "\n"
    value = analytics.tree_critical_rate(int(params["k"]))
    return json.dumps({"quantity": "tree_critical_rate", "k": int(params["k"]),
                       "value": value}, indent=2) + "\n"


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    command = ns.command
    started = time.monotonic()
    try:
        params = _resolve(command, ns)
        if command == "simulate":
            data = _cmd_simulate(params)
        elif command == "sweep":
            data = _cmd_sweep(params)
        elif command == "theta":
            data = _cmd_theta(params)
        elif command == "saw":
            data = _cmd_saw(params)
        elif command == "local-survival":
            data = _cmd_local_survival(params)
        elif command == "calc":
            data = _cmd_calc(params)
        elif command == "oracle":
            data = _cmd_oracle(params)
        else:  # pragma: no cover
            raise ParameterError(f"unknown command {command}")
    except ParameterError as exc:
        print(f"chasescape {command}: error: {exc}", file=sys.stderr)
        return 2

    manifest = RunManifest(
        subcommand=command,
        params={k: v for k, v in params.items() if k != "out"},
        master_seed=int(params.get("seed", 0)),
        wall_time_s=time.monotonic() - started,
    )
    out = params.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(data)
        with open(str(out) + ".manifest.json", "w") as fh:
            fh.write(manifest.to_json())
    else:
        sys.stdout.write(data)
        sys.stderr.write(manifest.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
