"""Command-line front end: learn a graph from a CSV, simulate benchmark data,
or run a scenario and emit its report.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import BenchmarkReport, ScenarioConfig, emit_report, run_benchmark
from .citests import CdcovCiTester, FisherZCiTester, TestConfig
from .data import load_csv, write_csv
from .errors import ConfigError, DataError, DcovdagError
from .learn import (
    OMITTED_ORIENTATION_RULES,
    LearnConfig,
    extend_to_cpdag,
    fci_stable_pipeline,
    pc_stable_skeleton,
)
from .simulate import (
    NoiseScheme,
    draw_nonlinear_coefficients,
    random_dag_adjacency,
    sample_linear_sem,
    sample_nonlinear_sem,
    truth_graph,
)

ALGO_TESTERS = {
    "nonpc": "cdcov",
    "nonfci": "cdcov",
    "pc": "fisher_z",
    "fci": "fisher_z",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcovdag")
    sub = parser.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn", help="learn a graph from a CSV file")
    learn.add_argument("data", help="input CSV path")
    learn.add_argument("--algo", choices=sorted(ALGO_TESTERS), default="nonpc")
    learn.add_argument("--alpha", type=float, default=0.05)
    learn.add_argument("--boot", type=int, default=199)
    learn.add_argument("--m-max", type=int, default=None)
    learn.add_argument("--seed", type=int, default=0)
    learn.add_argument("--missing-token", default="NA")
    learn.add_argument("--out-format", choices=("dot", "json"), default="dot")
    learn.add_argument("--out", default=None, help="graph output path (default stdout)")
    learn.add_argument("--sidecar", default=None, help="run-metadata JSON path")

    sim = sub.add_parser("simulate", help="draw a truth DAG and sample data")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--n", type=int, required=True)
    group = sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--sparsity", type=float)
    group.add_argument("--expected-degree", type=float)
    sim.add_argument(
        "--scheme", choices=("normal", "copula", "mixture", "nonlinear"), default="normal"
    )
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--data-out", required=True, help="CSV output path")
    sim.add_argument("--truth-out", default=None, help="truth-graph JSON output path")

    bench = sub.add_parser("bench", help="run a benchmark scenario")
    bench.add_argument("scenario", help="scenario config (.json or .toml)")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--format", choices=("json", "markdown"), default="json")
    bench.add_argument("--out", default=None, help="report output path (default stdout)")

    report = sub.add_parser("report", help="re-render a JSON report")
    report.add_argument("report", help="report JSON path")
    report.add_argument("--format", choices=("json", "markdown"), default="markdown")

    return parser


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_learn(args: argparse.Namespace) -> int:
    dataset = load_csv(args.data, missing_token=args.missing_token)
    tester_kind = ALGO_TESTERS[args.algo]
    test_cfg = TestConfig(alpha=args.alpha, n_boot=args.boot, seed=args.seed)
    tester = CdcovCiTester(test_cfg) if tester_kind == "cdcov" else FisherZCiTester(test_cfg)
    m_max = args.m_max if args.m_max is not None else min(dataset.p - 2, 8)
    cfg = LearnConfig(tester=tester, m_max=m_max)

    meta: dict = {
        "algorithm": args.algo,
        "alpha": args.alpha,
        "n_boot": args.boot,
        "seed": args.seed,
        "n": dataset.n,
        "p": dataset.p,
        "dropped_rows": dataset.dropped_rows,
        "m_max": m_max,
    }
    if args.algo in ("nonpc", "pc"):
        skel = pc_stable_skeleton(dataset, cfg)
        stats: dict = {}
        graph = extend_to_cpdag(skel, stats)
        meta.update(
            tests_performed=skel.tests_performed,
            max_level_reached=skel.max_level_reached,
            orientation_conflicts=stats["orientation_conflicts"],
        )
    else:
        stats = {}
        graph = fci_stable_pipeline(dataset, cfg, stats)
        meta.update(stats)
        meta["omitted_orientation_rules"] = list(OMITTED_ORIENTATION_RULES)

    names = list(dataset.names)
    text = graph.to_dot(names) if args.out_format == "dot" else graph.to_json()
    _write(text, args.out)
    if args.sidecar:
        _write(json.dumps(meta, indent=2, sort_keys=True) + "\n", args.sidecar)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    sparsity = (
        args.sparsity if args.sparsity is not None else args.expected_degree / (args.p - 1)
    )
    adj = random_dag_adjacency(args.p, sparsity, args.seed)
    if args.scheme == "nonlinear":
        coef = draw_nonlinear_coefficients(adj, args.seed + 1)
        dataset = sample_nonlinear_sem(adj, coef, args.n, args.seed + 2)
    else:
        dataset = sample_linear_sem(adj, NoiseScheme(args.scheme), args.n, args.seed + 2)
    write_csv(dataset, args.data_out)
    if args.truth_out:
        _write(truth_graph(adj).to_json() + "\n", args.truth_out)
    return 0


def _load_scenario(path: str) -> ScenarioConfig:
    try:
        if path.endswith(".toml"):
            try:
                import tomllib  # py311+
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        else:
            with open(path) as fh:
                raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"cannot parse scenario {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario {path} must hold a table/object")
    return ScenarioConfig.from_dict(raw)


def _cmd_bench(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario)
    report = run_benchmark(scenario, jobs=args.jobs)
    _write(emit_report(report, args.format), args.out)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        with open(args.report) as fh:
            payload = json.load(fh)
        report = BenchmarkReport.from_payload(payload)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read report {args.report}: {exc}") from None
    _write(emit_report(report, args.format), None)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "learn": _cmd_learn,
        "simulate": _cmd_simulate,
        "bench": _cmd_bench,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DcovdagError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
