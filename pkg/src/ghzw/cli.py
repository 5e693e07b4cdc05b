"""Command-line entry point: ``ghzw simulate|sweep|certify|analyze|vertices``.

Exit codes: 0 success, 2 informative negative outcome (no violation, or the
behavior satisfies the inflation constraints), 1 error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import expdata, inflation, polytope
from .lp import FEAS_TOL, GAP_TOL, LPError, dumps_lp
from .qsim import (Behavior, DichotomicObservable, MeasurementStrategy, behavior_from_state,
                   deterministic_behavior, noisy_ghz, uniform_behavior)
from .witness import (builtin, evaluate, probability_form_to_dict, term_values,
                      threshold_mixed_noise, witness_from_dict)

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class ConfigError(ValueError):
    pass


# --- config helpers ----------------------------------------------------------


def parse_p_range(text: str) -> np.ndarray:
    try:
        a, b, steps = text.split(":")
        a, b, steps = float(a), float(b), int(steps)
    except ValueError:
        raise ConfigError(f"--p-range must look like a:b:steps, got {text!r}") from None
    if steps < 2:
        raise ConfigError("--p-range needs at least 2 steps")
    if not (0 <= a <= 1 and 0 <= b <= 1):
        raise ConfigError("--p-range endpoints must lie in [0, 1]")
    return np.linspace(a, b, steps)


def _unit(name: str, value: float) -> float:
    if not 0 <= value <= 1:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return value


def load_witness_source(name: str, n: int | None):
    """Builtin name or a JSON file.  A JSON file may carry a ``strategy`` block
    (list of per-party lists of measurement angles) for simulation."""
    path = Path(name)
    if path.suffix == ".json" or path.exists():
        data = json.loads(path.read_text(encoding="utf-8"))
        w = witness_from_dict(data)
        strategy = None
        if "strategy" in data:
            strategy = MeasurementStrategy(tuple(
                tuple(DichotomicObservable(float(a)) for a in party) for party in data["strategy"]))
        return w, strategy
    try:
        return builtin(name, n)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None


def _need_strategy(w, strategy):
    if strategy is None:
        raise ConfigError(f"witness {w.name} has no measurement strategy; add a 'strategy' block")
    return strategy


def load_behavior(spec: str, inputs: tuple[int, ...], quantum: Behavior | None) -> Behavior:
    """``quantum`` (default), ``uniform``, ``det:<outcome bits per party, comma separated>``
    or a JSON file with ``inputs`` and a nested ``table``."""
    if spec in ("quantum", "", None):
        if quantum is None:
            raise ConfigError("no quantum behavior available for this witness")
        return quantum
    if spec == "uniform":
        return uniform_behavior(inputs)
    if spec.startswith("det:"):
        parts = spec[4:].split(",")
        responses = [[int(ch) for ch in part] for part in parts]
        b = deterministic_behavior(responses)
        if b.inputs != inputs:
            raise ConfigError(f"deterministic behavior has inputs {b.inputs}, expected {inputs}")
        return b
    data = json.loads(Path(spec).read_text(encoding="utf-8"))
    return Behavior(tuple(data["inputs"]), np.array(data["table"], dtype=float))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def versions() -> dict:
    return {"ghzw": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _emit(args, report: dict, rows: list[dict] | None = None) -> None:
    if args.csv and rows is not None:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = out.getvalue()
    else:
        text = json.dumps(report, indent=2, default=_jsonable) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _report(args, **body) -> dict:
    config = _config(args)
    return {"command": args.command, "config": config, "config_hash": config_hash(config),
            "versions": versions(), **body}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GHZW_THREADS", "1")))
    except ValueError:
        return 1


# --- commands ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    w, strategy = load_witness_source(args.witness, args.n)
    strategy = _need_strategy(w, strategy)
    p, k = _unit("--p", args.p), _unit("--k", args.k)
    b = behavior_from_state(noisy_ghz(strategy.n_parties, p, k), strategy)
    terms = term_values(w, b)
    total = float(sum(terms))
    violated = total > w.bound + 1e-12
    rows = [{"term": i, "value": v} for i, v in enumerate(terms)] + [{"term": "total", "value": total}]
    _emit(args, _report(args, witness=w.name, bound=w.bound, terms=terms, total=total, violated=violated), rows)
    return EXIT_OK if violated else EXIT_NEGATIVE


def cmd_sweep(args) -> int:
    w, strategy = load_witness_source(args.witness, args.n)
    strategy = _need_strategy(w, strategy)
    n = strategy.n_parties
    grid = parse_p_range(args.p_range)
    ks = [_unit("--k", k) for k in (args.k_list or [0.0])]

    def value(pk):
        p, k = pk
        return evaluate(w, behavior_from_state(noisy_ghz(n, p, k), strategy))

    points = [(float(p), k) for k in ks for p in grid]
    with ThreadPoolExecutor(_threads()) as pool:
        values = list(pool.map(value, points))
    thresholds = {k: threshold_mixed_noise(w, strategy, n, k) for k in ks}
    rows = []
    for (p, k), v in zip(points, values):
        th = thresholds[k]
        rows.append({"n": n, "k": k, "p": p, "value": v, "violated": bool(v > w.bound + 1e-12),
                     "p_star": None if th is None else th.p,
                     "fidelity_star": None if th is None else th.fidelity})
    summary = {str(k): (None if th is None else {"p": th.p, "fidelity": th.fidelity})
               for k, th in thresholds.items()}
    _emit(args, _report(args, witness=w.name, bound=w.bound, thresholds=summary, rows=rows), rows)
    return EXIT_OK if any(r["violated"] for r in rows) else EXIT_NEGATIVE


def _inflation_graphs(args, scenario):
    if args.inflation in (None, "ring"):
        return [inflation.ring_inflation(scenario, args.order)]
    return [inflation.load_graph(path) for path in args.inflation.split(",")]


def cmd_certify(args) -> int:
    w, strategy = load_witness_source(args.witness, args.n)
    inputs = w.inputs
    quantum = None
    if strategy is not None:
        quantum = behavior_from_state(noisy_ghz(strategy.n_parties, _unit("--p", args.p),
                                                _unit("--k", args.k)), strategy)
    p = load_behavior(args.behavior, inputs, quantum)
    scenario = inflation.Scenario(len(inputs), inputs)
    graphs = _inflation_graphs(args, scenario)
    cs = inflation.build_constraint_system(graphs, scenario)
    if args.lp_out:
        Path(args.lp_out).write_text(dumps_lp(inflation.visibility_program(cs, p)), encoding="utf-8")
    feasible = inflation.lp_sat_feasible(cs, p, tol_feas=args.tol_feas)
    cert = inflation.dual_certificate(cs, p, tol_feas=args.tol_feas, tol_gap=args.tol_gap)
    check = inflation.verify_system_certificate(cs, cert, p)
    visibility = 1.0 / cert.primal_value
    body = {
        "scenario": {"inputs": list(inputs), "graphs": len(graphs)},
        "system": {"columns": cs.n_vars, "m1_rows": cs.M1.shape[0], "m2_rows": cs.M2.shape[0],
                   "m2_groups": cs.m2_groups},
        "feasible": feasible,
        "visibility": visibility,
        "gmf_lower_bound": inflation.gmf_lower_bound(cs, p, tol_feas=args.tol_feas, tol_gap=args.tol_gap),
        "certificate": {
            "value": cert.value,
            "verified": check.passed,
            "max_violation": check.max_violation,
            "failures": check.failures,
            "witness": probability_form_to_dict(cert.witness(cs)),
        },
    }
    _emit(args, _report(args, **body), [{"feasible": feasible, "visibility": visibility,
                                         "certificate_value": cert.value, "verified": check.passed}])
    return EXIT_NEGATIVE if feasible else EXIT_OK


def cmd_analyze(args) -> int:
    ds = expdata.parse_dataset(args.dataset) if args.dataset else expdata.bundled_table1()
    blocks = {}
    rows = []
    for name, bound, fn in (("W3", 8.0, expdata.eval_w3_from_data), ("W4", 6.0, expdata.eval_w4_from_data)):
        value = fn(ds)
        _, sigma = expdata.monte_carlo_sigma(ds, name.lower(), args.resamples, args.seed)
        sig = expdata.significance(value, bound, sigma)
        blocks[name] = {"value": value, "sigma": sigma, "bound": bound, "sigmas_above_bound": sig}
        rows.append({"quantity": name, "value": value, "sigma": sigma, "sigmas_above_bound": sig})
    stab = expdata.stabilizer_fidelity(ds)
    _, stab_sigma = expdata.monte_carlo_sigma(ds, "stabilizer", args.resamples, args.seed)
    blocks["stabilizer"] = {"witness": stab.witness, "witness_sigma": stab_sigma,
                            "fidelity_bound": stab.fidelity_bound, "fidelity_sigma": stab_sigma / 2,
                            "hom_visibility": stab.hom_visibility, "pairwise_zz": list(stab.pairwise_zz)}
    rows.append({"quantity": "stabilizer_witness", "value": stab.witness, "sigma": stab_sigma,
                 "sigmas_above_bound": ""})
    rows.append({"quantity": "fidelity_bound", "value": stab.fidelity_bound, "sigma": stab_sigma / 2,
                 "sigmas_above_bound": ""})
    _emit(args, _report(args, dataset=ds.provenance, **blocks), rows)
    return EXIT_OK


def cmd_vertices(args) -> int:
    w, _ = load_witness_source(args.witness, args.n)
    vertices = polytope.local_deterministic_vertices(w.n_parties, w.inputs)
    values = [evaluate(w, v) for v in vertices]
    best = int(np.argmax(values))
    body = {"witness": w.name, "count": len(vertices), "local_max": float(values[best]),
            "bound": w.bound, "maximizer_index": best}
    if w.n_parties <= 4 and max(w.inputs) <= 3:
        body["nonsignalling_min"] = polytope.extremize_over_nonsignalling(w, "min")
        body["nonsignalling_max"] = polytope.extremize_over_nonsignalling(w, "max")
    _emit(args, _report(args, **body), [{"count": len(vertices), "local_max": float(values[best])}])
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghzw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ghzw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, witness=True):
        if witness:
            p.add_argument("--witness", default="w3", help="w3, w4, npartite or a witness JSON file")
            p.add_argument("--n", type=int, default=None, help="party count for npartite")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--csv", action="store_true", help="CSV instead of JSON")

    p = sub.add_parser("simulate", help="witness terms on a noisy GHZ state")
    common(p)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--k", type=float, default=0.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="witness value over a grid of p, with thresholds")
    common(p)
    p.add_argument("--p-range", default="0:1:101")
    p.add_argument("--k", type=float, action="append", dest="k_list", help="repeatable")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("certify", help="inflation feasibility, visibility and dual certificate")
    common(p)
    p.add_argument("--behavior", default="quantum", help="quantum, uniform, det:<bits>,... or a JSON file")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--k", type=float, default=0.0)
    p.add_argument("--inflation", default="ring", help="ring or comma-separated graph JSON files")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--tol-feas", type=float, default=FEAS_TOL)
    p.add_argument("--tol-gap", type=float, default=GAP_TOL)
    p.add_argument("--lp-out", default=None, help="also dump the visibility LP in text form")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("analyze", help="witness values and error bars from coincidence counts")
    common(p, witness=False)
    p.add_argument("--dataset", default=None, help="counts CSV (default: bundled reference table)")
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("vertices", help="local deterministic and nonsignalling extremes of a witness")
    common(p)
    p.set_defaults(func=cmd_vertices)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, LPError, OSError, json.JSONDecodeError) as exc:
        print(f"ghzw {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
