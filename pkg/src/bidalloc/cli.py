"""Command-line entry point: ``bidalloc simulate | bench | verify``.

Exit codes: 0 success, 1 property failure or convergence warning, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics, pipeline, verify
from .classifier import Theta
from .errors import ConfigError, ContractError
from .game_sim import IID, GeneratorSpec, LogisticTruth, MarkovPersistence, calibrated_theta
from .pipeline import DEFAULT_SWEEP, RunConfig

EXIT_OK, EXIT_WARN, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("bidalloc")


def parse_generator(text: str, seed: int) -> GeneratorSpec:
    """Parse ``iid:p``, ``logistic:path``, ``logistic:default`` or ``markov:p1,p2``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "iid":
            return GeneratorSpec(IID(float(arg)), seed)
        if kind == "markov":
            p1, p2 = (float(s) for s in arg.split(","))
            return GeneratorSpec(MarkovPersistence(p1, p2), seed)
        if kind == "logistic":
            theta = calibrated_theta() if arg in ("", "default") else Theta.load(arg)
            return GeneratorSpec(LogisticTruth(theta), seed)
    except (ValueError, OSError, ContractError) as exc:
        raise ConfigError(f"bad --generator {text!r}: {exc}") from None
    raise ConfigError(f"unknown generator kind {kind!r} (expected iid, logistic or markov)")


def parse_sweep(text: str) -> list[int]:
    try:
        sweep = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad --sweep {text!r}") from None
    if not sweep or any(s < 1 for s in sweep):
        raise ConfigError("--sweep needs one or more counts >= 1")
    return sweep


def build_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, then command-line overrides."""
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("window", "train_samples", "test_samples", "d_max_us", "output_dir"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    config = RunConfig.from_dict(raw)
    seed = args.seed if args.seed is not None else config.generator.seed
    if args.generator:
        config = replace(config, generator=parse_generator(args.generator, seed))
    elif args.seed is not None:
        config = replace(config, generator=replace(config.generator, seed=seed))
    return config


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="64-bit generator seed")
    p.add_argument("--window", type=int, help="history window length n")
    p.add_argument("--train-samples", dest="train_samples", type=int)
    p.add_argument("--test-samples", dest="test_samples", type=int)
    p.add_argument("--dmax-us", dest="d_max_us", type=float, help="delay threshold in microseconds")
    p.add_argument("--generator", help="iid:P | logistic:PATH|default | markov:P1,P2")
    p.add_argument("--out", dest="output_dir", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bidalloc", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="train, allocate and write reports")
    _add_run_flags(sim)

    b = sub.add_parser("bench", help="delay table over a sweep of request counts")
    _add_run_flags(b)
    b.add_argument("--sweep", default=",".join(map(str, DEFAULT_SWEEP)))
    b.add_argument("--repeats", type=int, default=15)

    v = sub.add_parser("verify", help="run the property suite")
    v.add_argument("--seed", type=int, default=0)
    return ap


def cmd_simulate(config: RunConfig) -> int:
    summary = pipeline.simulate(config)
    u, a = summary.utilization, summary.accuracy
    print(f"accuracy {a.accuracy:.2f}% ({a.correct}/{a.total})")
    if summary.oracle_accuracy is not None:
        print(f"bayes oracle accuracy {summary.oracle_accuracy.accuracy:.2f}%")
    print(f"utilization C {u.share_c:.2f}%  D {u.share_d:.2f}%  overall {u.overall:.2f}%")
    b = summary.bound
    print(f"mean delay {b.mean_us:.4f} us; P(D >= {b.d_max_us:g} us) <= {b.bound:.4g} "
          f"(empirical {b.empirical_tail:.4g}, holds={b.holds})")
    print(f"reports written to {config.output_dir}")
    if not summary.train_report.converged or not b.holds:
        return EXIT_WARN
    return EXIT_OK


def cmd_bench(config: RunConfig, sweep, repeats: int) -> int:
    if repeats < 1:
        raise ConfigError("--repeats must be >= 1")
    rows = pipeline.bench(config, sweep, repeats)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_delay_csv(rows, out / "bench.csv")
    sys.stdout.write((out / "bench.csv").read_text())
    return EXIT_OK


def cmd_verify(seed: int) -> int:
    results = verify.run_all(seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return EXIT_OK if failed == 0 else EXIT_WARN


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be a 64-bit unsigned integer")
            return cmd_verify(args.seed)
        config = build_config(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        return cmd_bench(config, parse_sweep(args.sweep), args.repeats)
    except (ConfigError, ContractError) as exc:
        parser.print_usage(sys.stderr)
        print(f"bidalloc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
