"""End-to-end run: generate, featurize, train, allocate, report."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import allocator, game_sim, metrics
from .allocator import AccuracyReport, UtilizationReport
from .classifier import DEFAULT_WINDOW, Theta, TrainConfig, TrainReport, train
from .errors import ConfigError, ContractError
from .game_sim import GeneratorSpec, SplitSpec
from .metrics import DelayStats, MarkovBound

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (10, 50, 100, 500, 1000, 5000, 10000)
TIMING_FIELDS = ("delay", "bound")
DEFAULT_SEED = 2015


@dataclass(frozen=True)
class RunConfig:
    generator: GeneratorSpec = field(default_factory=lambda: game_sim.default_generator(DEFAULT_SEED))
    window: int = DEFAULT_WINDOW
    train_samples: int = 1000
    test_samples: int = 1000
    d_max_us: float = 1000.0
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "out"

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.train_samples < self.window + 1:
            raise ConfigError(f"train_samples must be >= window + 1 = {self.window + 1}")
        if self.test_samples < 1:
            raise ConfigError("test_samples must be >= 1")
        if not self.d_max_us > 0:
            raise ConfigError("d_max_us must be > 0")

    @property
    def seed(self) -> int:
        return self.generator.seed

    def to_dict(self) -> dict:
        return {
            "generator": self.generator.to_dict(),
            "window": self.window,
            "train_samples": self.train_samples,
            "test_samples": self.test_samples,
            "d_max_us": self.d_max_us,
            "train": self.train.to_dict(),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {"generator", "window", "train_samples", "test_samples", "d_max_us",
                 "train", "output_dir", "seed"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            base = cls()
            gen = GeneratorSpec.from_dict(d["generator"]) if "generator" in d else base.generator
            if "seed" in d:
                gen = replace(gen, seed=int(d["seed"]))
            return cls(
                generator=gen,
                window=int(d.get("window", base.window)),
                train_samples=int(d.get("train_samples", base.train_samples)),
                test_samples=int(d.get("test_samples", base.test_samples)),
                d_max_us=float(d.get("d_max_us", base.d_max_us)),
                train=TrainConfig.from_dict(d.get("train", {})),
                output_dir=str(d.get("output_dir", base.output_dir)),
            )
        except (ContractError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from None


@dataclass(frozen=True)
class RunSummary:
    accuracy: AccuracyReport
    utilization: UtilizationReport
    delay: DelayStats
    bound: MarkovBound
    theta: Theta
    train_report: TrainReport
    config_echo: RunConfig
    oracle_accuracy: AccuracyReport | None = None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy.to_dict(),
            "oracle_accuracy": None if self.oracle_accuracy is None else self.oracle_accuracy.to_dict(),
            "utilization": self.utilization.to_dict(),
            "delay": self.delay.to_dict(),
            "bound": self.bound.to_dict(),
            "theta": self.theta.to_dict(),
            "train_report": self.train_report.to_dict(),
            "config_echo": self.config_echo.to_dict(),
            "timing_fields": list(TIMING_FIELDS),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> RunSummary:
        delay = d["delay"]
        oracle = d.get("oracle_accuracy")
        return cls(
            accuracy=AccuracyReport.from_dict(d["accuracy"]),
            utilization=UtilizationReport.from_dict(d["utilization"]),
            # Per-request samples live in memory only; the summary keeps aggregates.
            delay=DelayStats(np.empty(0), delay["total_us"], delay["mean_us"], delay["n_requests"]),
            bound=MarkovBound.from_dict(d["bound"]),
            theta=Theta.from_dict(d["theta"]),
            train_report=TrainReport.from_dict(d["train_report"]),
            config_echo=RunConfig.from_dict(d["config_echo"]),
            oracle_accuracy=None if oracle is None else AccuracyReport.from_dict(oracle),
        )


def summary_without_timing(d: dict) -> dict:
    """The deterministic part of a summary document."""
    return {k: v for k, v in d.items() if k not in TIMING_FIELDS}


def prepare(config: RunConfig):
    """Generate the history and return (train set, test set)."""
    n_samples = config.train_samples + config.test_samples
    history = game_sim.generate(config.generator, n_samples + config.window)
    data = game_sim.featurize(history, config.window)
    return game_sim.split(data, SplitSpec(config.train_samples / n_samples))


def _oracle_accuracy(spec: GeneratorSpec, test) -> AccuracyReport | None:
    try:
        pred = game_sim.bayes_predict_batch(spec, test.features)
    except ContractError:
        return None
    correct = int(np.sum(pred == test.labels))
    return AccuracyReport(correct, test.m, 100.0 * correct / test.m)


def simulate(config: RunConfig, write: bool = True) -> RunSummary:
    """Run the whole pipeline and, if ``write``, emit the report files."""
    train_set, test_set = prepare(config)
    theta, report = train(train_set, config.train)
    if not report.converged:
        log.warning("training stopped at %d iterations with gradient norm %.3g",
                    report.iterations, report.final_grad_norm)

    decisions = allocator.run_closed_loop(theta, test_set.features[0], test_set.labels)
    delay = metrics.time_predictions(theta, test_set.features)
    _, bound = metrics.verify_bound(delay, config.d_max_us)

    summary = RunSummary(
        accuracy=allocator.accuracy(decisions),
        utilization=allocator.utilization(decisions),
        delay=delay,
        bound=bound,
        theta=theta,
        train_report=report,
        config_echo=config,
        oracle_accuracy=_oracle_accuracy(config.generator, test_set),
    )
    if write:
        write_reports(summary, decisions, Path(config.output_dir))
    return summary


def write_reports(summary: RunSummary, decisions, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(summary.to_json() + "\n")
    allocator.write_utilization_csv(summary.utilization, out / "utilization.csv")
    allocator.write_decisions_csv(decisions, out / "decisions.csv")
    metrics.write_delay_csv([summary.delay], out / "delays.csv")


def bench(config: RunConfig, sweep=DEFAULT_SWEEP, repeats: int = 15) -> list[metrics.BenchRow]:
    """Delay table: batch-prediction time for each request count in ``sweep``.

    The classifier is trained once from ``config``; the request windows come
    from a fresh stretch of the same generator.
    """
    sweep = [int(s) for s in sweep]
    if not sweep or any(s < 1 for s in sweep):
        raise ConfigError("sweep must be a non-empty list of counts >= 1")
    bench_cfg = replace(config, test_samples=max(sweep))
    train_set, test_set = prepare(bench_cfg)
    theta, _ = train(train_set, config.train)
    return metrics.bench_sweep(theta, test_set.features, sweep, repeats)
