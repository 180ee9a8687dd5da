"""
MQ Forecast - Main Entry Point
==============================

Command-line front door of the multi-horizon quantile forecasting engine.

Usage:
    python -m src.main synthesize --out bench --n-series 200 --length 120
    python -m src.main train --config run.yaml --data bench/data.csv --out runs/a
    python -m src.main predict --checkpoint runs/a/model.mqf --data bench/data.csv --fct 100 --out runs/a
    python -m src.main evaluate --grids runs/a/grids.csv --data bench/data.csv --out runs/a/eval
    python -m src.main report --grids runs/a/grids.csv --data bench/data.csv --series s0000 --out runs/a/fig

Every command writes manifest.json into its --out directory. Flag defaults
for --seed, --threads and the log level come from MQF_SEED, MQF_THREADS
and MQF_LOG_LEVEL (a .env file is honoured).
"""

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

# Load environment variables
from dotenv import load_dotenv
load_dotenv()

from pydantic import BaseModel, Field, ValidationError  # noqa: E402

from .config import ENV_LOG_LEVEL, ENV_SEED, ENV_THREADS, RunConfig, env_default, load_config  # noqa: E402
from .data.ingest import ingest  # noqa: E402
from .data.schema import Dataset  # noqa: E402
from .data.synthetic import NoiseKind, synthesize_benchmark, write_benchmark  # noqa: E402
from .errors import ExitCode, ForecastError, UsageError  # noqa: E402
from .evaluation.metrics import evaluate_grids  # noqa: E402
from .evaluation.rolling import EvaluationPlan, rolling_forecasts  # noqa: E402
from .models.forecaster import MQForecaster  # noqa: E402
from .models.grid import read_grids, write_grids  # noqa: E402
from .models.specs import EncoderKind, HeadKind  # noqa: E402
from .reporting.bands import write_band_report  # noqa: E402
from .training.trainer import TrainingScheme, train  # noqa: E402

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    """
    Record of one command invocation, enough to repeat it.

    Attributes:
        command: Subcommand name
        arguments: Parsed command-line arguments
        config: Resolved run configuration (train only)
        outputs: Files the command wrote
        started_at / finished_at: UTC timestamps
    """
    command: str
    arguments: Dict[str, Any] = Field(default_factory=dict)
    config: Optional[Dict[str, Any]] = None
    outputs: List[str] = Field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""

    def write(self, out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_NAME
        path.write_text(json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ForecastOrchestrator:
    """
    Runs one CLI command end to end and records its manifest.

    Attributes:
        args: Parsed arguments
        manifest: Manifest being filled in
    """

    def __init__(self, args: argparse.Namespace):
        self.args = args
        arguments = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
        self.manifest = RunManifest(command=args.command, arguments=arguments, started_at=_now())

    @property
    def out_dir(self) -> Path:
        return Path(self.args.out)

    def _dataset(self) -> Dataset:
        if not self.args.data:
            raise UsageError("--data is required")
        data = Path(self.args.data)
        schema = Path(self.args.schema) if self.args.schema else data.with_name("schema.yaml")
        return ingest(data, schema)

    def _record(self, *paths: Path) -> None:
        self.manifest.outputs.extend(str(p) for p in paths)

    def finish(self) -> Path:
        self.manifest.finished_at = _now()
        path = self.manifest.write(self.out_dir)
        logger.info(f"Manifest written: {path}")
        return path

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def run_train(self) -> int:
        args = self.args
        overrides: Dict[str, Any] = {
            "seed": args.seed,
            "threads": args.threads,
            "scheme": args.scheme,
            "head": args.head,
            "encoder": {"kind": args.encoder},
        }
        config: RunConfig = load_config(args.config, overrides)
        self.manifest.config = config.model_dump(mode="json")

        dataset = self._dataset()
        model = MQForecaster.for_dataset(dataset, config.model_spec(), config.seed, config.train_end)
        _, result = train(dataset, model, config.training_config(), self.out_dir)
        self._record(*result.checkpoints, self.out_dir / "loss_trace.csv")
        print(f"Trained {config.epochs} epoch(s); final mean loss {result.loss_trace[-1]:.6g}")
        return ExitCode.SUCCESS

    def run_predict(self) -> int:
        args = self.args
        if not args.checkpoint:
            raise UsageError("--checkpoint is required")
        if not args.fct:
            raise UsageError("--fct needs at least one forecast creation time")
        model = MQForecaster.from_checkpoint(args.checkpoint)
        dataset = self._dataset()
        model.check_schema(dataset)
        records = [dataset.get(s) for s in args.series] if args.series else dataset.records
        grids = [model.predict_grid(record, fct) for record in records for fct in args.fct]
        path = write_grids(grids, self.out_dir / "grids.csv")
        self._record(path)
        print(f"Wrote {len(grids)} grid(s) to {path}")
        return ExitCode.SUCCESS

    def run_evaluate(self) -> int:
        args = self.args
        if not args.grids and not args.fct:
            raise UsageError("Nothing to evaluate: give --grids or --checkpoint with --fct")
        dataset = self._dataset()
        baseline = read_grids(args.baseline) if args.baseline else None
        interval = (args.interval_low, args.interval_high)
        if args.grids:
            report = evaluate_grids(read_grids(args.grids), dataset.actuals(), args.data_end, interval, baseline)
        else:
            if not args.checkpoint:
                raise UsageError("Rolling evaluation needs --checkpoint")
            model = MQForecaster.from_checkpoint(args.checkpoint)
            model.check_schema(dataset)
            try:
                plan = EvaluationPlan(
                    fcts=args.fct, data_end=args.data_end, interpolate_99=args.interpolate_99, interval=interval
                )
            except ValidationError as e:
                raise UsageError(f"Invalid evaluation plan: {e.errors()[0]['msg']}") from e
            grids = rolling_forecasts(dataset, model, plan)
            self._record(write_grids(grids, self.out_dir / "grids.csv"))
            report = evaluate_grids(grids, dataset.actuals(), plan.data_end, plan.interval, baseline)
        self._record(*report.write(self.out_dir))
        print(report.summary(), end="")
        return ExitCode.SUCCESS

    def run_synthesize(self) -> int:
        args = self.args
        benchmark = synthesize_benchmark(
            seed=args.seed,
            n_series=args.n_series,
            length=args.length,
            period=args.period,
            noise=args.noise,
            noise_scale=args.noise_scale,
        )
        paths = write_benchmark(benchmark, self.out_dir)
        self._record(*paths.values())
        print(f"Wrote synthetic benchmark ({args.n_series} series, T={args.length}) to {self.out_dir}")
        return ExitCode.SUCCESS

    def run_report(self) -> int:
        args = self.args
        if not args.grids:
            raise UsageError("--grids is required")
        dataset = self._dataset()
        report = write_band_report(read_grids(args.grids), dataset.actuals(), self.out_dir, args.series, args.report_fct)
        self._record(*report.figures)
        if report.table is not None:
            self._record(report.table)
        if report.missing:
            print(f"Unknown series (skipped): {', '.join(report.missing)}", file=sys.stderr)
            return ExitCode.MISSING_SERIES
        return ExitCode.SUCCESS

    def run(self) -> int:
        handler = {
            "train": self.run_train,
            "predict": self.run_predict,
            "evaluate": self.run_evaluate,
            "synthesize": self.run_synthesize,
            "report": self.run_report,
        }[self.args.command]
        code = handler()
        self.finish()
        return int(code)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        description='MQ Forecast - multi-horizon quantile forecasting'
    )
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable debug logging')
    commands = parser.add_subparsers(dest='command', required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument('--out', '-o', required=True, help='Output directory')
        sub.add_argument('--data', help='Dataset CSV')
        sub.add_argument('--schema', help='Schema YAML (default: schema.yaml next to --data)')
        sub.add_argument('--seed', type=int, default=env_default(ENV_SEED, None, int), help='Root random seed')
        sub.add_argument('--threads', type=int, default=env_default(ENV_THREADS, None, int), help='Worker threads')

    sub = commands.add_parser('train', help='Train a model')
    common(sub)
    sub.add_argument('--config', '-c', help='Run configuration YAML')
    sub.add_argument('--scheme', choices=[s.value for s in TrainingScheme], help='Training scheme')
    sub.add_argument('--head', choices=[h.value for h in HeadKind], help='Output head')
    sub.add_argument('--encoder', choices=[e.value for e in EncoderKind], help='Encoder kind')

    sub = commands.add_parser('predict', help='Write forecast grids')
    common(sub)
    sub.add_argument('--checkpoint', help='Trained model checkpoint')
    sub.add_argument('--fct', type=int, nargs='+', help='Forecast creation times')
    sub.add_argument('--series', nargs='+', help='Restrict to these series')

    sub = commands.add_parser('evaluate', help='Score forecast grids')
    common(sub)
    sub.add_argument('--grids', help='Grid CSV to score')
    sub.add_argument('--checkpoint', help='Model for rolling evaluation')
    sub.add_argument('--fct', type=int, nargs='+', help='Rolling evaluation FCTs')
    sub.add_argument('--data-end', type=int, help='Mask targets after this time step')
    sub.add_argument('--baseline', help='Baseline grid CSV for the sharpness ratio')
    sub.add_argument('--interpolate-99', action='store_true', help='Score all 99 interpolated percentiles')
    sub.add_argument('--interval-low', type=float, default=0.1, help='Lower sharpness level')
    sub.add_argument('--interval-high', type=float, default=0.9, help='Upper sharpness level')

    sub = commands.add_parser('synthesize', help='Write the synthetic benchmark')
    common(sub)
    sub.add_argument('--n-series', type=int, default=200, help='Number of series')
    sub.add_argument('--length', type=int, default=120, help='Series length T')
    sub.add_argument('--period', type=int, default=52, help='Seasonal period')
    sub.add_argument('--noise', choices=[n.value for n in NoiseKind], default=NoiseKind.GAUSSIAN.value)
    sub.add_argument('--noise-scale', type=float, default=1.0, help='Multiplier on the noise level')

    sub = commands.add_parser('report', help='Draw forecast band figures')
    common(sub)
    sub.add_argument('--grids', help='Grid CSV')
    sub.add_argument('--series', nargs='+', help='Series to draw (default: all)')
    sub.add_argument('--fct', dest='report_fct', type=int, help='Creation time to draw (default: latest)')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    try:
        parser = build_parser()
    except ForecastError as e:
        print(f"Error: {e}", file=sys.stderr)
        return int(e.exit_code)
    args = parser.parse_args(argv)

    # Set log level
    level = "DEBUG" if args.verbose else str(env_default(ENV_LOG_LEVEL, "INFO")).upper()
    logging.getLogger().setLevel(getattr(logging, level, logging.INFO))

    if args.command == "synthesize" and args.seed is None:
        args.seed = 0

    try:
        return ForecastOrchestrator(args).run()
    except ForecastError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return int(e.exit_code)
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly")
        print(f"Error: {e}", file=sys.stderr)
        return int(ExitCode.FAILURE)


if __name__ == '__main__':
    sys.exit(main())
