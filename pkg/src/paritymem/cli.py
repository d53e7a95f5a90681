"""``paritymem`` command line: sweeps, thresholds, Monte Carlo, costs, verification.

Every output begins with the effective configuration. CSV files carry it as a
``# config: {...}`` comment line above the header row, and JSON documents
carry it under ``"config"`` next to ``"records"`` and ``"summary"``.

The worker count only changes how work is scheduled, never the output, so
it is left out of the header.

Exit codes: 0 success, 2 configuration error, 3 property failure,
4 unreachable target.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    BASELINES,
    PROFILES,
    CodeParams,
    MonotonicityError,
    ThresholdUnreachable,
    figure2_surface,
    monotonicity_violations,
    p_e,
    passive_crossover,
    threshold_search,
)
from .oracle import SizeLimitError
from .protocol import DEFAULT_SEED, DisentangleModel, estimate_p_e
from .resources import StrategyError, builtin_strategies, evaluate_strategy, load_strategy, simulate_factory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROPERTY = 3
EXIT_UNREACHABLE = 4

SURFACE_COLUMNS = ("n", "eta", "q_star", "p_qs", "p_ff", "p_qf", "p_e", "eta1", "eta2")
MC_COLUMNS = (
    "n", "q", "eta", "eta1", "eta2", "trials", "successes", "estimate",
    "ci_low", "ci_high", "p_e_analytic", "covered",
)
COST_COLUMNS = (
    "strategy", "expected_bell_pairs", "expected_fusion_attempts", "target_photons",
    "reference_cost", "relative_gap", "sim_runs", "sim_mean", "sim_std_error", "sim_p95",
)


class ConfigError(ValueError):
    """Invalid command-line configuration."""


@dataclass
class RunConfig:
    """Effective configuration of one command after defaults."""

    command: str
    params: dict = field(default_factory=dict)
    fmt: str = "csv"
    out: str | None = None

    def header(self) -> dict:
        return {"command": self.command, "version": __version__, "format": self.fmt, **self.params}


# ---------------------------------------------------------------------------
# range parsing


def parse_int_range(text: str) -> list[int]:
    """``"5"``, ``"2:8"`` (inclusive) or ``"2:40:2"``; comma lists also accepted."""
    if "," in text:
        vals = [int(t) for t in text.split(",") if t.strip()]
    else:
        parts = text.split(":")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"bad integer range {text!r}") from None
        if len(nums) == 1:
            vals = nums
        elif len(nums) in (2, 3):
            step = nums[2] if len(nums) == 3 else 1
            if step <= 0:
                raise ConfigError("range step must be positive")
            vals = list(range(nums[0], nums[1] + 1, step))
        else:
            raise ConfigError(f"bad integer range {text!r}")
    if not vals:
        raise ConfigError(f"empty range {text!r}")
    return vals


def parse_float_range(text: str) -> list[float]:
    """``"0.96"``, ``"0.8:1.0:0.005"`` (inclusive of the end) or a comma list."""
    try:
        if "," in text:
            vals = [float(t) for t in text.split(",") if t.strip()]
        else:
            parts = [float(p) for p in text.split(":")]
            if len(parts) == 1:
                vals = parts
            elif len(parts) == 3:
                lo, hi, step = parts
                if step <= 0:
                    raise ConfigError("range step must be positive")
                count = int(np.floor((hi - lo) / step + 1e-9)) + 1
                vals = [round(lo + i * step, 12) for i in range(max(count, 0))]
            else:
                raise ConfigError(f"float ranges need lo:hi:step, got {text!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad float range {text!r}") from None
    if not vals:
        raise ConfigError(f"empty range {text!r}")
    return vals


def _check_etas(etas: list[float]) -> None:
    if any(not 0.0 <= e <= 1.0 for e in etas):
        raise ConfigError("efficiencies must lie in [0, 1]")


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(cfg: RunConfig, columns, records: list[dict], summary: dict | None = None) -> str:
    if cfg.fmt == "json":
        doc = {"config": cfg.header(), "records": records, "summary": summary or {}}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(cfg.header(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_cell(r.get(c)) for c in columns])
    if summary is not None:
        buf.write("# summary: " + json.dumps(summary, sort_keys=True) + "\n")
    return buf.getvalue()


def emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_analytic(args) -> int:
    ns = parse_int_range(args.n_range)
    etas = parse_float_range(args.eta_range)
    _check_etas(etas)
    if min(ns) < 2:
        raise ConfigError("n must be >= 2")
    if args.q is not None and args.q < 1:
        raise ConfigError("--q must be >= 1")
    cfg = RunConfig("analytic", {
        "n_range": ns, "eta_range": etas, "q_max": args.q_max, "q_fixed": args.q,
        "profile": args.profile, "strict_monotone": args.strict_monotone,
    }, args.format, args.out)
    cells = figure2_surface(ns, etas, args.q_max, args.profile, args.q, workers=args.workers, check_monotone=False)
    bad = monotonicity_violations(cells) if args.q is None else []
    summary = {"cells": len(cells), "monotonicity_violations": [[n, e] for n, e in bad]}
    emit(cfg, render(cfg, SURFACE_COLUMNS, [c.as_dict() for c in cells], summary))
    if bad:
        print(f"paritymem: P_E* decreases in eta at {len(bad)} cells", file=sys.stderr)
        if args.strict_monotone:
            return EXIT_PROPERTY
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.n_max < 2:
        raise ConfigError("--n-max must be >= 2")
    if not 0 < args.target < 1 or args.tol <= 0:
        raise ConfigError("need 0 < target < 1 and tol > 0")
    cfg = RunConfig("threshold", {
        "target": args.target, "n_max": args.n_max, "q_max": args.q_max, "tol": args.tol,
        "profile": args.profile, "baseline": args.baseline, "crossover_profile": args.crossover_profile,
        "crossover_code": [5, 2],
    }, args.format, args.out)
    cross = passive_crossover(CodeParams(5, 2), args.baseline, args.crossover_profile).as_dict()
    try:
        rep = threshold_search(args.n_max, args.q_max, args.target, args.tol, args.profile)
    except ThresholdUnreachable as exc:
        rec = {"kind": "threshold", "eta_threshold": None, "reachable": False, "reason": str(exc)}
        emit(cfg, _threshold_text(cfg, rec, cross))
        print(f"paritymem: target unreachable: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    rec = {"kind": "threshold", **rep.as_dict(), "reachable": True}
    emit(cfg, _threshold_text(cfg, rec, cross))
    return EXIT_OK


def _threshold_text(cfg: RunConfig, rec: dict, cross: dict) -> str:
    cross = {"kind": "crossover", **cross}
    cols = ("kind", "eta_threshold", "target", "n_max", "q_max", "tol", "profile", "best_n", "best_q",
            "p_e_at_threshold", "scan_monotone", "reachable", "eta_cross", "baseline", "n", "q", "reason")
    return render(cfg, cols, [rec, cross])


def cmd_montecarlo(args) -> int:
    ns = parse_int_range(args.n_range)
    qs = parse_int_range(args.q_range)
    etas = parse_float_range(args.eta_range)
    _check_etas(etas)
    if min(ns) < 2 or min(qs) < 1:
        raise ConfigError("need n >= 2 and q >= 1")
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    model = DisentangleModel(args.disentangle)
    cfg = RunConfig("montecarlo", {
        "n_range": ns, "q_range": qs, "eta_range": etas, "trials": args.trials, "seed": args.seed,
        "profile": args.profile, "disentangle": model.value,
    }, args.format, args.out)
    records = []
    for n in ns:
        for q in qs:
            for eta in etas:
                eff = PROFILES[args.profile](eta)
                code = CodeParams(n, q)
                est = estimate_p_e(code, eff, args.trials, args.seed, disentangle=model, workers=args.workers)
                exact = p_e(code, eff).p_e
                records.append({
                    "n": n, "q": q, "eta": eta, "eta1": eff.eta1, "eta2": eff.eta2,
                    "trials": est.trials, "successes": est.successes, "estimate": est.estimate,
                    "ci_low": est.ci_low, "ci_high": est.ci_high, "p_e_analytic": exact,
                    "covered": est.covers(exact),
                })
    missed = [{"n": r["n"], "q": r["q"], "eta": r["eta"]} for r in records if not r["covered"]]
    summary = {"cells": len(records), "covered": len(records) - len(missed), "mismatches": missed}
    emit(cfg, render(cfg, MC_COLUMNS, records, summary))
    return EXIT_OK


def cmd_resources(args) -> int:
    if args.strategy:
        try:
            strategies = [load_strategy(p) for p in args.strategy]
        except (OSError, json.JSONDecodeError) as exc:
            raise StrategyError(f"cannot read strategy file: {exc}") from None
    else:
        table = builtin_strategies()
        names = args.builtin or list(table)
        unknown = [n for n in names if n not in table]
        if unknown:
            raise ConfigError(f"unknown built-in strategies {unknown}; choose from {sorted(table)}")
        strategies = [table[n] for n in names]
    if args.success_prob is not None and not 0 < args.success_prob <= 1:
        raise ConfigError("--success-prob must lie in (0, 1]")
    if args.simulate is not None and args.simulate < 1:
        raise ConfigError("--simulate must be >= 1")
    cfg = RunConfig("resources", {
        "strategies": [s.name for s in strategies], "strategy_files": args.strategy or [],
        "success_prob": 0.5 if args.success_prob is None else args.success_prob,
        "simulate": args.simulate, "seed": args.seed,
    }, args.format, args.out)
    p = cfg.params["success_prob"]
    records = []
    for s in strategies:
        rep = evaluate_strategy(s, success_prob=p)
        rec = rep.as_dict()
        if args.simulate:
            sim = simulate_factory(s, args.simulate, args.seed, p, workers=args.workers)
            rec.update(sim_runs=sim.runs, sim_mean=sim.expected_bell_pairs,
                       sim_std_error=sim.std_error, sim_p95=sim.p95)
        records.append(rec)
    emit(cfg, render(cfg, COST_COLUMNS, records))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SuiteConfig, run_suite

    suite = SuiteConfig(
        oracle_n_max=args.oracle_n, oracle_q_max=args.oracle_q, oracle_trials=args.trials,
        seed=args.seed, corrupt_fusion_sign=args.corrupt_fusion_sign,
    )
    cfg = RunConfig("verify", asdict(suite), "json" if args.format is None else args.format, args.out)
    results = run_suite(suite)
    failed = [r.name for r in results if not r.passed]
    summary = {"passed": not failed, "failed": failed, "total": len(results)}
    recs = [{"name": r.name, "passed": r.passed, "detail": json.dumps(r.detail, sort_keys=True)} for r in results]
    if cfg.fmt == "json":
        recs = [r.as_dict() for r in results]
    emit(cfg, render(cfg, ("name", "passed", "detail"), recs, summary))
    if failed:
        print("paritymem: failed properties: " + ", ".join(failed), file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _q_max(text: str) -> int | None:
    if text.lower() in ("none", "auto"):
        return None
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--q-max must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paritymem", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="csv"):
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)
        p.add_argument("--out", metavar="PATH", help="write here instead of stdout")
        p.add_argument("--workers", type=int, default=1, help="process pool size")

    p = sub.add_parser("analytic", help="optimal-q P_E surface over (n, eta)")
    p.add_argument("--n-range", default="2:40")
    p.add_argument("--eta-range", default="0.80:1.00:0.01")
    p.add_argument("--q-max", type=_q_max, default=None, help="cap on q (default: effectively unbounded)")
    p.add_argument("--q", type=int, default=None, help="fix q instead of optimising")
    p.add_argument("--profile", choices=sorted(PROFILES), default="uniform")
    p.add_argument("--strict-monotone", action="store_true", help="exit 3 if P_E* ever decreases in eta")
    common(p)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("threshold", help="efficiency threshold and passive crossover")
    p.add_argument("--target", type=float, default=0.99)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--q-max", type=_q_max, default=None)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--profile", choices=sorted(PROFILES), default="uniform")
    p.add_argument("--baseline", choices=sorted(BASELINES), default="eta2")
    p.add_argument("--crossover-profile", choices=sorted(PROFILES), default="lumped")
    common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("montecarlo", help="Monte Carlo P_E against the closed form")
    p.add_argument("--n-range", default="3")
    p.add_argument("--q-range", default="2")
    p.add_argument("--eta-range", default="1.0")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--profile", choices=sorted(PROFILES), default="uniform")
    p.add_argument("--disentangle", choices=[m.value for m in DisentangleModel],
                   default=DisentangleModel.AT_LEAST_ONE.value)
    common(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("resources", help="expected Bell-pair cost of build strategies")
    p.add_argument("--strategy", metavar="FILE", action="append", help="JSON strategy file (repeatable)")
    p.add_argument("--builtin", action="append", help="built-in strategy name (repeatable; default all)")
    p.add_argument("--success-prob", type=float, default=None, help="fusion success probability (default 0.5)")
    p.add_argument("--simulate", type=int, default=None, metavar="RUNS", help="also run the factory simulation")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common(p)
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("verify", help="oracle property suite")
    p.add_argument("--oracle-n", type=int, default=3, help="largest n for protocol-vs-oracle runs")
    p.add_argument("--oracle-q", type=int, default=2, help="largest q for protocol-vs-oracle runs")
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--corrupt-fusion-sign", action="store_true", help=argparse.SUPPRESS)
    common(p, fmt_default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if getattr(args, "workers", 1) < 1:
        print("paritymem: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, StrategyError, SizeLimitError) as exc:
        print(f"paritymem: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MonotonicityError as exc:
        print(f"paritymem: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except ValueError as exc:
        print(f"paritymem: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
