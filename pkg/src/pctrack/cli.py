"""Command-line front end: ``solve``, ``sweep``, ``simulate`` and ``matrix``.

Configs are YAML or JSON files; any key can be overridden by the matching
flag. Cost coefficients, discount and horizon have no defaults. Every run
writes the fully resolved config next to its outputs, and feeding that file
back in reproduces the same CSVs byte for byte.

Environment: ``PCTRACK_OUTPUT_DIR`` overrides the output directory and
``PCTRACK_WORKERS`` the worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .bounds import cost_ratio, fo_initial, fo_lower_bound
from .core import (
    Belief,
    BudgetExceededError,
    CostModel,
    DomainError,
    InitialBelief,
    InitialEntry,
    PolicyTable,
)
from .matrices import format_matrix, from_descriptor, load_matrix
from .optimal_dp import DEFAULT_BUDGET, best_initial_sequence, required_evaluations, solve_optimal
from .percentile import ThresholdTable, frp_with_initial_belief, myopic_policy, solve_frp
from .policy_eval import evaluate_policy, evaluate_with_initial_belief
from .simulator import simulate, write_trace

log = logging.getLogger("pctrack")

REQUIRED = ("matrix", "c_u", "c_l", "beta", "horizon")
DEFAULTS = {
    "delta": 0.01,
    "families": ["frp", "myopic"],
    "start": 0,
    "n_paths": 10_000,
    "budget": DEFAULT_BUDGET,
}
FAMILIES = ("optimal", "frp", "myopic")
SWEEP_PARAMS = ("beta", "c_u", "c_l", "horizon", "T", "eps")
SWEEP_FIELDS = ("param_name", "param_value", "policy", "anchor_or_b0", "cost", "fo_cost", "ratio")
EXIT_BUDGET = 3
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


def _num(x) -> str:
    return repr(float(x))


def load_config(path) -> dict:
    text = Path(path).read_text()
    cfg = yaml.safe_load(text) or {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return cfg


def resolve_config(cfg: dict, overrides: dict | None = None, need_seed: bool = False) -> dict:
    out = dict(DEFAULTS)
    out.update({k: v for k, v in cfg.items() if v is not None})
    out.update({k: v for k, v in (overrides or {}).items() if v is not None})
    missing = [k for k in REQUIRED if k not in out]
    if need_seed and "seed" not in out:
        missing.append("seed")
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    if isinstance(out["families"], str):
        out["families"] = [f.strip() for f in out["families"].split(",") if f.strip()]
    bad = [f for f in out["families"] if f not in FAMILIES]
    if bad:
        raise ConfigError(f"unknown policy families {bad}; choose from {FAMILIES}")
    out["c_u"], out["c_l"], out["beta"] = float(out["c_u"]), float(out["c_l"]), float(out["beta"])
    out["horizon"], out["delta"] = int(out["horizon"]), float(out["delta"])
    out["n_paths"], out["budget"] = int(out["n_paths"]), int(out["budget"])
    if isinstance(out["matrix"], Path):
        out["matrix"] = str(out["matrix"])
    return out


def _model(cfg: dict) -> CostModel:
    return CostModel(cfg["c_u"], cfg["c_l"], cfg["beta"], cfg["horizon"], allow_degenerate=True)


def _start(cfg: dict, n: int):
    """``(state, None)`` for a known start state, ``(None, Belief)`` for a belief."""
    st = cfg["start"]
    if isinstance(st, str):
        if st == "uniform":
            return None, Belief.uniform(n)
        if st.isdigit():
            st = int(st)
        else:
            raise ConfigError(f"start must be a state, 'uniform' or a belief vector, got {st!r}")
    if isinstance(st, (list, tuple)):
        return None, Belief(st)
    if not 0 <= int(st) < n:
        raise ConfigError(f"start state {st} out of range")
    return int(st), None


def _solve_family(family: str, model: CostModel, P: np.ndarray, cfg: dict, b0):
    """Returns ``(policy table, threshold table or None)``."""
    if family == "optimal":
        table = solve_optimal(model, P, budget=cfg["budget"])
        if b0 is not None:
            seq, w = best_initial_sequence(model, P, b0, table.costs)
            table.initial = InitialEntry(b0, seq, w)
        return table, None
    if family == "frp":
        th, table = solve_frp(model, P, cfg["delta"])
        if b0 is not None:
            frp_with_initial_belief(model, P, b0, cfg["delta"], frp=(th, table))
        return table, th
    if family == "myopic":
        table = myopic_policy(model, P, b0=b0)
        h = model.myopic_threshold
        return table, ThresholdTable.constant(P.shape[0], model.horizon, h, initial=h if b0 is not None else None)
    raise ConfigError(f"unknown family {family}")


def _zero_cost_policy(family: str, P: np.ndarray, T: int, b0) -> PolicyTable:
    """Both coefficients zero: any policy is optimal at cost 0; play 0 throughout."""
    n = P.shape[0]
    seqs = {(s, t): (0,) * (T - t) for s in range(n) for t in range(T)}
    table = PolicyTable(n, T, seqs, np.zeros((n, T)), label=family)
    if b0 is not None:
        table.initial = InitialEntry(b0, (0,) * T, 0.0)
    return table


def solve_all(cfg: dict):
    """Solve every requested family; returns ``(P, model, results, fo, fo_b0, b0, s0)``."""
    P = from_descriptor(cfg["matrix"]).matrix
    model = _model(cfg)
    s0, b0 = _start(cfg, P.shape[0])
    degenerate = model.c_u == 0 and model.c_l == 0
    results = {}
    for fam in cfg["families"]:
        if degenerate:
            results[fam] = (_zero_cost_policy(fam, P, model.horizon, b0), None)
        else:
            results[fam] = _solve_family(fam, model, P, cfg, b0)
    fo = fo_lower_bound(model, P)
    fo_b0 = fo_initial(model, P, b0, fo) if b0 is not None else None
    return P, model, results, fo, fo_b0, b0, s0


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(cfg: dict, flag) -> Path:
    d = os.environ.get("PCTRACK_OUTPUT_DIR") or flag or cfg.get("output_dir") or "pctrack-out"
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def run_solve(cfg: dict, out: Path) -> dict:
    """Solve all families and write sequences, thresholds, costs, bounds and gaps."""
    P, model, results, fo, fo_b0, b0, s0 = solve_all(cfg)
    n, T = P.shape[0], model.horizon
    _dump_json(out / "resolved_config.json", cfg)
    seq_rows, cost_rows, th_rows, gap_rows = [], [], [], []
    summary = {"start": "b0" if b0 is not None else s0, "policies": {}}
    for fam, (table, th) in results.items():
        for t in range(T):
            for s in range(n):
                for tau, a in enumerate(table.sequences[(s, t)], 1):
                    seq_rows.append((fam, s, t, tau, a))
                cost_rows.append((fam, s, t, _num(table.costs[s, t])))
                gap_rows.append((fam, s, t, _num(table.costs[s, t]), _num(fo[s, t]),
                                 _num(cost_ratio(table.costs[s, t], fo[s, t]))))
                if th is not None:
                    th_rows.append((fam, s, t, _num(th.thresholds[s, t])))
        if b0 is not None:
            for tau, a in enumerate(table.initial.sequence, 1):
                seq_rows.append((fam, "b0", 0, tau, a))
            cost_rows.append((fam, "b0", 0, _num(table.initial.cost)))
            gap_rows.append((fam, "b0", 0, _num(table.initial.cost), _num(fo_b0),
                             _num(cost_ratio(table.initial.cost, fo_b0))))
            if th is not None and th.initial is not None:
                th_rows.append((fam, "b0", 0, _num(th.initial)))
            cost, fo_cost = table.initial.cost, fo_b0
        else:
            cost, fo_cost = float(table.costs[s0, 0]), float(fo[s0, 0])
        summary["policies"][fam] = {"cost": cost, "fo_cost": fo_cost, "ratio": cost_ratio(cost, fo_cost)}
        _dump_json(out / f"policy_{fam}.json", table.to_dict())
    for t in range(T):
        for s in range(n):
            cost_rows.append(("fo", s, t, _num(fo[s, t])))
    if b0 is not None:
        cost_rows.append(("fo", "b0", 0, _num(fo_b0)))
    _write_csv(out / "sequences.csv", ("policy", "state", "time", "tau", "action"), seq_rows)
    _write_csv(out / "costs.csv", ("policy", "state", "time", "cost"), cost_rows)
    _write_csv(out / "thresholds.csv", ("policy", "state", "time", "threshold"), th_rows)
    _write_csv(out / "gaps.csv", ("policy", "state", "time", "cost", "fo_cost", "ratio"), gap_rows)
    _dump_json(out / "summary.json", summary)
    return summary


def _sweep_point(args):
    cfg, param, value = args
    point = dict(cfg)
    point.pop("sweep", None)
    if param == "eps":
        descriptor = point["matrix"]
        if not (isinstance(descriptor, dict) and descriptor.get("generator") == "tridiagonal"):
            raise ConfigError("an eps sweep needs a tridiagonal matrix generator")
        point["matrix"] = dict(descriptor, eps=value)
    else:
        point["horizon" if param == "T" else param] = value
    point = resolve_config(point)
    rows = []
    try:
        P, model, results, fo, fo_b0, b0, s0 = solve_all(point)
        where = "b0" if b0 is not None else f"s0={s0}"
        for fam in point["families"]:
            table = results[fam][0]
            cost = table.initial.cost if b0 is not None else float(table.costs[s0, 0])
            fo_cost = fo_b0 if b0 is not None else float(fo[s0, 0])
            rows.append((param, _num(value), fam, where, _num(cost), _num(fo_cost), _num(cost_ratio(cost, fo_cost))))
        return rows, None
    except (DomainError, BudgetExceededError, ConfigError, ValueError) as exc:
        nan = _num(math.nan)
        return [(param, _num(value), fam, "error", nan, nan, nan) for fam in point["families"]], f"{param}={value}: {exc}"


def run_sweep(cfg: dict, out: Path, workers: int = 1) -> list:
    """One row per (value, family) in grid order; failing points get NaN rows."""
    sweep = cfg.get("sweep")
    if not sweep or "param" not in sweep or "values" not in sweep:
        raise ConfigError("sweep needs 'sweep: {param: ..., values: [...]}'")
    param = sweep["param"]
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {param!r}; choose from {SWEEP_PARAMS}")
    jobs = [(cfg, param, v) for v in sweep["values"]]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    rows = [r for rs, _ in results for r in rs]
    errors = [e for _, e in results if e]
    _dump_json(out / "resolved_config.json", cfg)
    _write_csv(out / "sweep.csv", SWEEP_FIELDS, rows)
    if errors:
        _dump_json(out / "sweep_errors.json", errors)
        for e in errors:
            log.warning("sweep point failed: %s", e)
    return rows


def run_simulate(cfg: dict, out: Path, policy_path=None, trace_path=None, workers: int = 1) -> dict:
    P = from_descriptor(cfg["matrix"]).matrix
    model = _model(cfg)
    s0, b0 = _start(cfg, P.shape[0])
    if policy_path:
        table = PolicyTable.from_dict(json.loads(Path(policy_path).read_text()))
    else:
        fam = cfg["families"][0]
        if model.c_u == 0 and model.c_l == 0:
            table = _zero_cost_policy(fam, P, model.horizon, b0)
        else:
            table = _solve_family(fam, model, P, cfg, b0)[0]
    if b0 is not None:
        start = InitialBelief(b0)
        analytic = evaluate_with_initial_belief(model, P, table, b0, table.initial.sequence)
    else:
        start = (s0, 0)
        analytic = float(evaluate_policy(model, P, table)[s0, 0])
    res = simulate(model, P, table, start, cfg["n_paths"], int(cfg["seed"]),
                   trace=trace_path is not None, workers=workers)
    delta = res.mean - analytic
    report = {
        "policy": table.label,
        "start": "b0" if b0 is not None else s0,
        "n_paths": res.n_paths,
        "seed": int(cfg["seed"]),
        "mean": res.mean,
        "stderr": res.stderr,
        "analytic": analytic,
        "delta": delta,
        "delta_in_stderr": delta / res.stderr if res.stderr > 0 else (0.0 if delta == 0 else math.inf),
    }
    _dump_json(out / "resolved_config.json", cfg)
    _dump_json(out / "simulate_report.json", report)
    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            write_trace(res.traces, fh)
    return report


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", help="YAML or JSON config file")
    p.add_argument("--matrix", help="matrix file path")
    p.add_argument("--c-u", dest="c_u", type=float)
    p.add_argument("--c-l", dest="c_l", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--horizon", "-T", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--families", help="comma-separated: optimal,frp,myopic")
    p.add_argument("--start", help="start state, 'uniform', or JSON belief list")
    p.add_argument("--budget", type=int)
    p.add_argument("--out", "-o", help="output directory")
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pctrack", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("solve", help="solve policies and write tables"))
    _add_common(sub.add_parser("sweep", help="sweep one parameter"))
    sim = sub.add_parser("simulate", help="Monte Carlo estimate of a policy's cost")
    _add_common(sim)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--n-paths", dest="n_paths", type=int)
    sim.add_argument("--policy", help="policy JSON written by 'solve'")
    sim.add_argument("--trace", help="write per-step trace CSV here")
    mat = sub.add_parser("matrix", help="generate or validate transition matrices")
    msub = mat.add_subparsers(dest="matrix_command", required=True)
    gen = msub.add_parser("generate")
    gen.add_argument("generator", choices=("tridiagonal", "banded20", "optimal_match", "non_percentile"))
    gen.add_argument("--M", type=int, default=4)
    gen.add_argument("--eps", type=float, default=0.3)
    gen.add_argument("--output", "-o")
    val = msub.add_parser("validate")
    val.add_argument("path")
    return ap


def _overrides(args) -> dict:
    keys = ("matrix", "c_u", "c_l", "beta", "horizon", "delta", "families", "budget", "seed", "n_paths")
    ov = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "start", None) is not None:
        st = args.start
        ov["start"] = json.loads(st) if st.startswith("[") else st
    return ov


def _workers(args) -> int:
    env = os.environ.get("PCTRACK_WORKERS")
    if env:
        return int(env)
    return args.workers or 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "matrix":
            return _matrix_cmd(args)
        cfg = load_config(args.config) if args.config else {}
        cfg = resolve_config(cfg, _overrides(args), need_seed=args.command == "simulate")
        out = _out_dir(cfg, args.out)
        if args.command == "solve":
            summary = run_solve(cfg, out)
            print(json.dumps(summary, indent=2, sort_keys=True))
        elif args.command == "sweep":
            rows = run_sweep(cfg, out, _workers(args))
            print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
        elif args.command == "simulate":
            report = run_simulate(cfg, out, args.policy, args.trace, _workers(args))
            print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    except BudgetExceededError as exc:
        print(f"error: optimal policy infeasible: needs {exc.required} sequence evaluations "
              f"(budget {exc.budget}); raise --budget or drop 'optimal'", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, DomainError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _matrix_cmd(args) -> int:
    if args.matrix_command == "generate":
        descriptor = {"generator": args.generator, "M": args.M, "eps": args.eps}
        text = format_matrix(from_descriptor(descriptor).matrix)
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    P = load_matrix(Path(args.path))
    print(f"ok: {P.n_states}x{P.n_states} row-stochastic matrix")
    return 0


if __name__ == "__main__":
    sys.exit(main())
