"""Command-line front end: ``ucal simulate | metrics | ucal | example``.

Exit codes: 0 success, 1 a fixture check disagreed with its expected values,
2 invalid input, 3 solver failure. Set ``UCAL_LOG=DEBUG`` (or INFO, WARNING)
for progress messages on stderr. ``--config file.json`` supplies defaults for
any flag of the chosen subcommand; explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import fixtures, io, oracle
from .agents import AgentError
from .forecasters import (
    PATTERNS,
    EmpiricalAverage,
    ForecasterError,
    ThresholdAdversary,
    file_outcomes,
    pattern_outcomes,
    run_adaptive,
    simulate,
)
from .metrics import agent_reg, cal, regret_report, vcal, weak_cal_witness
from .scoring import ScoringRuleError, per_outcome_rule_family
from .transcript import TranscriptError
from .ucal_lp import LPSizeError, build_lp, lp_dump, max_agent_reg, membership_check, witness_json

log = logging.getLogger("ucal")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
INPUT_ERRORS = (
    TranscriptError,
    ForecasterError,
    ScoringRuleError,
    AgentError,
    LPSizeError,
    fixtures.FixtureError,
    FileNotFoundError,
    json.JSONDecodeError,
)


class SolverFailure(RuntimeError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("UCAL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def parse_seeds(text: str) -> list[int]:
    """``7``, ``0..49`` (inclusive) or ``1,5,9``."""
    text = str(text).strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}; use N, A..B or A,B,C") from None


def _split_kv(text: str) -> tuple[str, str | None]:
    if "=" in text:
        k, v = text.split("=", 1)
        return k.strip(), v.strip()
    return text.strip(), None


# ---------------------------------------------------------------------------
# simulate


def _simulate_one(job: dict) -> dict:
    kind, param, K, seed = job["kind"], job["param"], job["K"], job["seed"]
    x = np.asarray(job["outcomes"], dtype=np.int64)
    t = simulate(kind, x, seed, K=K, param=param, fast=not job["step"])
    rules = per_outcome_rule_family(K) if kind == "ftpl" else None
    rep = regret_report(t, rules=rules, meta={"seed": seed, "forecaster": kind})
    out = Path(job["out"])
    io.write_transcript(t, out / f"transcript_seed{seed}.csv")
    return {"report": rep, "row": rep.row()}


def cmd_simulate(args) -> int:
    kind, param = _split_kv(args.forecaster)
    if kind == "constant":
        if param is None:
            raise ForecasterError("use --forecaster constant=<value>")
        param = float(param)
    elif param is not None:
        param = float(param)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    src, arg = _split_kv(args.adversary)

    if src == "adaptive":
        if not args.demo_adaptive:
            raise ForecasterError("the adaptive adversary breaks the oblivious model; pass --demo-adaptive")
        if kind != "empirical":
            raise ForecasterError("the adaptive demonstration runs the empirical-average forecaster")
        t = run_adaptive(EmpiricalAverage(args.T), ThresholdAdversary(float(arg) if arg else 0.5))
        rep = regret_report(t, meta={"seed": 0, "forecaster": kind})
        io.write_transcript(t, out / "transcript_adaptive.csv")
        io.write_report_csv([rep], out / "report.csv")
        if not args.no_plots:
            from .plotting import plot_vreg_curve

            plot_vreg_curve(t, out / "vreg_adaptive", title="adaptive threshold adversary")
        print(json.dumps({k: io.to_jsonable(v) for k, v in rep.row().items()}, default=io.to_jsonable))
        return EXIT_OK

    if src == "pattern":
        x = pattern_outcomes(arg or "", args.T)
    elif src == "file":
        x = file_outcomes(arg, K=args.K)
        if x.size < args.T:
            raise ForecasterError(f"outcome file has {x.size} rounds, fewer than T={args.T}")
        x = x[: args.T]
    else:
        raise ForecasterError(f"unknown adversary {args.adversary!r}; use pattern=<name>, file=<path> or adaptive")
    if kind != "ftpl" and args.K != 2:
        raise ForecasterError(f"{kind} is a binary forecaster; drop --K")

    jobs = [
        {"kind": kind, "param": param, "K": args.K, "seed": s, "outcomes": x.tolist(), "out": str(out), "step": args.step}
        for s in args.seeds
    ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_simulate_one, jobs))
    else:
        results = [_simulate_one(j) for j in jobs]
    reports = [r["report"] for r in results]
    io.write_report_csv(reports, out / "report.csv")
    log.info("wrote %d transcripts and report.csv to %s", len(reports), out)

    rows = [r["row"] for r in results]
    summary = {"runs": len(rows), "T": args.T, "forecaster": kind}
    for key in rows[0]:
        vals = [r[key] for r in rows]
        if all(isinstance(v, (int, float, np.floating, np.integer)) for v in vals) and key not in ("T", "K", "seed"):
            summary[f"mean_{key}"] = float(np.mean(vals))
    io.write_json(summary, out / "summary.json")
    if not args.no_plots:
        from .plotting import plot_seed_metrics, plot_vreg_curve

        metric_cols = [m for m in ("VCal", "Cal", "Reg") if m in rows[0]] or [
            k for k in rows[0] if k.startswith("Reg_")
        ]
        plot_seed_metrics(rows, metric_cols, out / "seed_metrics", title=f"{kind}, T={args.T}")
        first = simulate(kind, x, args.seeds[0], K=args.K, param=param, fast=not args.step)
        if first.is_binary:
            plot_vreg_curve(first, out / f"vreg_seed{args.seeds[0]}", title=f"{kind}, seed {args.seeds[0]}")
    print(json.dumps(summary, default=io.to_jsonable))
    return EXIT_OK


# ---------------------------------------------------------------------------
# metrics


def cmd_metrics(args) -> int:
    t = io.read_transcript(args.transcript)
    rules = io.load_rules(args.rules) if args.rules else None
    agents = {Path(p).stem: io.load_utility(p) for p in (args.agent or [])}
    rep = regret_report(t, rules=rules, agents=agents, include_lp=args.all, lp_epsilon=args.epsilon)
    if args.all and rep.metrics.get("MaxAgentReg_status") != "optimal":
        raise SolverFailure(f"LP solver ended with status {rep.metrics.get('MaxAgentReg_status')}")
    if args.oracle and t.is_binary:
        rep.metrics["VCal_grid_oracle"] = oracle.vcal_grid(t)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_report_csv([rep], out / "report.csv")
        io.write_json(rep.to_json(), out / "report.json")
        if not args.no_plots and t.is_binary:
            from .plotting import plot_reliability, plot_vreg_curve

            plot_vreg_curve(t, out / "vreg_curve")
            plot_reliability(t, out / "reliability")
    print(json.dumps(rep.to_json(), default=io.to_jsonable, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# ucal


def cmd_ucal(args) -> int:
    t = io.read_transcript(args.transcript)
    result: dict = {"T": t.T, "K": t.K}
    if args.method in ("vcal", "both"):
        if not t.is_binary:
            raise TranscriptError("V-calibration is defined for binary transcripts; use --method lp")
        vc = vcal(t)
        result["VCal"] = vc.value
        result["VCal_v"] = vc.v
        result["VCal_side"] = vc.side
    if args.dump_lp:
        Path(args.dump_lp).write_text(lp_dump(build_lp(t, pairs=args.pairs, max_anchors=args.max_anchors)))
    if args.method in ("lp", "both"):
        sol = max_agent_reg(t, epsilon=args.epsilon, max_anchors=args.max_anchors, pairs=args.pairs)
        result["MaxAgentReg"] = sol.value
        result["status"] = sol.status
        result["iterations"] = sol.iterations
        if not sol.optimal:
            print(json.dumps(result, default=io.to_jsonable))
            raise SolverFailure(f"LP solver ended with status {sol.status}")
        result["membership"] = bool(membership_check(sol.table, t))
        result["witness"] = witness_json(sol.table)
        if args.witness_out:
            io.write_json(result["witness"], args.witness_out)
    if args.method == "both":
        lo, hi = 0.5 * result["MaxAgentReg"] - args.epsilon * t.T, result["MaxAgentReg"] + args.epsilon * t.T
        result["sandwich_ok"] = bool(lo <= result["VCal"] <= hi)
    if args.oracle:
        if t.is_binary:
            result["VCal_grid_oracle"] = oracle.vcal_grid(t)
            try:
                result["MaxAgentReg_vertex_oracle"] = oracle.max_agent_reg_vertex(t)
            except ValueError as exc:
                log.info("vertex oracle skipped: %s", exc)
    print(json.dumps(result, default=io.to_jsonable, indent=2))
    if args.method == "both" and not result["sandwich_ok"]:
        raise SolverFailure("VCal falls outside [MaxAgentReg/2, MaxAgentReg]")
    return EXIT_OK


# ---------------------------------------------------------------------------
# example


def _example(name: str, T: int):
    """Fixture transcript, expected values and the recomputed values for the same keys."""
    if name in ("low_brier", "low_brier_quarter"):
        variant = "quarter_wrong" if name.endswith("quarter") else "fifth_wrong"
        t, u = fixtures.gen_low_brier(T, variant)
        exp = fixtures.expected_low_brier(T, variant)
        got = {"Reg": regret_report(t).metrics["Reg"], "AgentReg_wager": agent_reg(u, t), "VCal": vcal(t).value}
        return t, exp, got
    if name in ("quarter_wrong", "exact", "running_mean"):
        t = fixtures.gen_named_transcript(name, T)
        exp = fixtures.expected_named_transcript(name, T)
        vc = vcal(t).value
        got = {"VCal": vc, "Cal": cal(t)}
        if name == "running_mean":
            got = {
                "VCal_abs_max": abs(vc),
                "Cal_min": cal(t),
                "Cal": cal(t),
                "spike_abs_min": abs(weak_cal_witness(t)),
            }
        return t, exp, got
    if name == "perturbed":
        t = fixtures.gen_perturbed_calibrated(T)
        rep = regret_report(t)
        return t, fixtures.expected_perturbed(T), {"Cal_min": rep.metrics["Cal"], "Reg_max": rep.metrics["Reg"], "VCal_max": rep.metrics["VCal"]}
    if name == "multiclass_epochs":
        t, _ = fixtures.gen_multiclass_epoch_example(T)
        us = fixtures.epoch_utilities()
        got = {f"Cal_outcome_{i}": cal(b) for i, b in enumerate(fixtures.per_outcome_views(t))}
        got["AgentReg_raw"] = agent_reg(us["raw"], t)
        got["AgentReg_div6"] = agent_reg(us["div6"], t)
        got["MaxAgentReg_min"] = max_agent_reg(t).value
        return t, fixtures.expected_multiclass_epochs(T), got
    raise fixtures.FixtureError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


EXAMPLES = ("low_brier", "low_brier_quarter", "quarter_wrong", "exact", "running_mean", "perturbed", "multiclass_epochs")


def _check(key: str, expected: float, got: float, tol: float) -> bool:
    if key.endswith("_min"):
        return got >= expected - tol
    if key.endswith("_max"):
        return got <= expected + tol
    return abs(got - expected) <= tol


def cmd_example(args) -> int:
    t, exp, got = _example(args.name, args.T)
    checks = {k: {"expected": exp[k], "computed": got[k], "ok": _check(k, exp[k], got[k], args.tol)} for k in exp}
    if args.oracle and t.is_binary:
        checks["VCal_grid_oracle"] = {"expected": vcal(t).value, "computed": oracle.vcal_grid(t)}
        checks["VCal_grid_oracle"]["ok"] = abs(checks["VCal_grid_oracle"]["expected"] - checks["VCal_grid_oracle"]["computed"]) <= 1e-9 * max(1, t.T)
    ok = all(c["ok"] for c in checks.values())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_transcript(t, out / f"{args.name}_T{args.T}.csv")
    io.write_json({"name": args.name, "T": args.T, "checks": checks, "ok": ok}, out / f"{args.name}_T{args.T}.expected.json")
    if not args.no_plots and t.is_binary:
        from .plotting import plot_vreg_curve

        plot_vreg_curve(t, out / f"{args.name}_T{args.T}_vreg", title=f"{args.name}, T={args.T}")
    print(json.dumps({"name": args.name, "T": args.T, "ok": ok, "checks": checks}, default=io.to_jsonable, indent=2))
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    p = argparse.ArgumentParser(prog="ucal", description="U-calibration metrics, LP solver, forecasters and fixtures.")
    p.add_argument("--config", help="JSON file of default flag values for the subcommand")
    sub = p.add_subparsers(dest="command", required=True)
    subs = {}

    s = sub.add_parser("simulate", help="run a forecaster against an outcome source over a range of seeds")
    s.add_argument("--forecaster", default="hedge", help="hedge | ftpl | empirical | constant=<v>; hedge=<eta> overrides eta")
    s.add_argument("--adversary", default="pattern=half_ones", help=f"pattern=<{'|'.join(PATTERNS)}> | file=<path> | adaptive[=<threshold>]")
    s.add_argument("--T", type=int, default=1024, help="horizon")
    s.add_argument("--K", type=int, default=2, help="number of outcomes (ftpl only)")
    s.add_argument("--seeds", type=parse_seeds, default=[0], help="N, A..B (inclusive) or A,B,C")
    s.add_argument("--out", default="ucal_out", help="output directory")
    s.add_argument("--jobs", type=int, default=1, help="worker processes for seed fan-out")
    s.add_argument("--step", action="store_true", help="use the round-by-round loop instead of the one-pass path")
    s.add_argument("--demo-adaptive", action="store_true", help="allow the adaptive threshold adversary")
    s.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    s.set_defaults(func=cmd_simulate)
    subs["simulate"] = s

    m = sub.add_parser("metrics", help="compute every metric for a transcript CSV")
    m.add_argument("--transcript", required=True)
    m.add_argument("--rules", help="JSON list of rules (inline or a file path)")
    m.add_argument("--agent", action="append", help="utility JSON file; repeatable")
    m.add_argument("--all", action="store_true", help="also solve the LP for MaxAgentReg")
    m.add_argument("--epsilon", type=float, default=1e-9, help="LP optimality tolerance")
    m.add_argument("--oracle", action="store_true", help="add the grid-search V-calibration oracle")
    m.add_argument("--out", help="directory for report.csv, report.json and figures")
    m.add_argument("--no-plots", action="store_true")
    m.set_defaults(func=cmd_metrics)
    subs["metrics"] = m

    u = sub.add_parser("ucal", help="exact U-calibration by LP and/or V-calibration")
    u.add_argument("--transcript", required=True)
    u.add_argument("--method", choices=("lp", "vcal", "both"), default="both")
    u.add_argument("--epsilon", type=float, default=1e-9, help="LP optimality tolerance")
    u.add_argument("--pairs", choices=("auto", "adjacent", "all"), default="auto", help="properness rows to generate")
    u.add_argument("--max-anchors", type=int, default=2000)
    u.add_argument("--dump-lp", help="write the LP instance as MPS-style text")
    u.add_argument("--witness-out", help="write the witness rule JSON")
    u.add_argument("--oracle", action="store_true", help="also run the brute-force oracles when small enough")
    u.set_defaults(func=cmd_ucal)
    subs["ucal"] = u

    e = sub.add_parser("example", help="write a fixture transcript with its expected values")
    e.add_argument("--name", required=True, choices=EXAMPLES)
    e.add_argument("--T", type=int, required=True)
    e.add_argument("--out", default="ucal_examples")
    e.add_argument("--tol", type=float, default=1e-9)
    e.add_argument("--oracle", action="store_true", help="cross-check VCal with the grid oracle")
    e.add_argument("--no-plots", action="store_true")
    e.set_defaults(func=cmd_example)
    subs["example"] = e
    return p, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        sp = subs[args.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        if "seeds" in cfg:
            cfg["seeds"] = parse_seeds(cfg["seeds"])
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = parse_args(argv)
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
