"""
Trainer - Minibatch Adam Training
=================================

Each epoch shuffles the series with a per-epoch named stream and walks
them in minibatches. Inside a minibatch, series are grouped by encoder
length; every group is one batched computation record with its own tape.
Group gradients are merged in group order at a single point, divided by
the minibatch's live-term count, optionally clipped, and applied with Adam.

Under the cutting scheme each series is cut at an FCT drawn uniformly from
1..T with a per-epoch stream, so cut sequences are reproducible.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..autodiff.optim import AdamState, adam_step, clip_grad_norm
from ..autodiff.tensor import Tape, accumulate_gradients, backward
from ..data.assembly import ModelInputs
from ..data.schema import Dataset
from ..errors import DataError, NumericalError
from ..models.forecaster import MQForecaster
from ..models.specs import HeadKind
from ..seeding import named_stream
from .forking import cutting_loss, forking_loss
from .loss import QuantileSpec

# Configure module logger
logger = logging.getLogger(__name__)


class TrainingScheme(str, Enum):
    FORKING = "forking"
    CUTTING = "cutting"


class TrainingConfig(BaseModel):
    """
    Training settings.

    Attributes:
        scheme: forking (decoder at every FCT) or cutting (one random FCT)
        head: Output head the model must use
        epochs: Passes over the dataset (>= 1)
        batch_size: Series per minibatch (>= 1)
        seed: Root of every random stream
        lr / beta1 / beta2 / eps: Adam settings
        clip_norm: Global gradient-norm cap (None disables)
        threads: Worker threads for length groups (1 keeps runs bit-exact)
        checkpoint_every: Write a checkpoint every n epochs (None: final only)
        quantile_weights / horizon_weights: Loss weights (uniform default)
        train_end: Last time step in the training range (None: all data)
    """
    model_config = ConfigDict(extra="forbid")

    scheme: TrainingScheme = TrainingScheme.FORKING
    head: HeadKind = HeadKind.QUANTILE
    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = Field(default=0, ge=0)
    lr: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    clip_norm: Optional[float] = Field(default=None, gt=0)
    threads: int = Field(default=1, ge=1)
    checkpoint_every: Optional[int] = Field(default=None, ge=1)
    quantile_weights: Optional[List[float]] = None
    horizon_weights: Optional[List[float]] = None
    train_end: Optional[int] = None


@dataclass
class TrainingResult:
    """Per-epoch mean loss and the checkpoints written."""
    loss_trace: List[float] = field(default_factory=list)
    checkpoints: List[Path] = field(default_factory=list)

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"epoch": np.arange(1, len(self.loss_trace) + 1), "mean_loss": self.loss_trace})


@dataclass
class _Work:
    """One length group of a minibatch."""
    items: List[ModelInputs]
    fct: Optional[int] = None


class ForecastTrainer:
    """
    Trains an MQForecaster on a list of per-series inputs.

    Example:
        >>> trainer = ForecastTrainer(model, TrainingConfig(epochs=20, seed=7))
        >>> result = trainer.fit(inputs, out_dir="runs/weekly")
        >>> result.loss_trace[-1] < result.loss_trace[0]
    """

    def __init__(self, model: MQForecaster, config: TrainingConfig):
        if model.spec.head != config.head:
            raise DataError(f"Model head {model.spec.head.value} differs from config head {config.head.value}")
        self.model = model
        self.config = config
        self.quantiles = QuantileSpec(
            levels=list(model.spec.quantiles),
            quantile_weights=config.quantile_weights,
            horizon_weights=config.horizon_weights,
        )
        self.state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
        logger.info(
            f"ForecastTrainer initialized: scheme={config.scheme.value}, epochs={config.epochs}, "
            f"batch_size={config.batch_size}, threads={config.threads}"
        )

    # ------------------------------------------------------------------
    # Sampling
    # ------------------------------------------------------------------

    def shuffle_order(self, epoch: int, n_series: int) -> np.ndarray:
        return named_stream(self.config.seed, "shuffle", epoch).permutation(n_series)

    def draw_cut_points(self, epoch: int, lengths: Sequence[int]) -> np.ndarray:
        """One FCT per series, uniform on 1..T_i, in series order."""
        rng = named_stream(self.config.seed, "cut", epoch)
        return np.asarray([rng.integers(1, length + 1) for length in lengths], dtype=np.int64)

    def _groups(self, batch: Sequence[ModelInputs], cuts: Optional[Dict[int, int]]) -> List[_Work]:
        """Group a minibatch by encoder length (cut FCT for cutting)."""
        buckets: Dict[int, List[ModelInputs]] = {}
        for position, item in enumerate(batch):
            if cuts is None:
                key = item.length
            else:
                key = cuts[position]
                item = item.prefix(key)
            buckets.setdefault(key, []).append(item)
        if cuts is None:
            return [_Work(items=buckets[key]) for key in sorted(buckets)]
        return [_Work(items=buckets[key], fct=key) for key in sorted(buckets)]

    # ------------------------------------------------------------------
    # One step
    # ------------------------------------------------------------------

    def _group_gradients(self, work: _Work) -> Tuple[float, int, Dict[str, np.ndarray]]:
        tape = Tape()
        view = self.model.view(tape)
        if work.fct is None:
            loss, count = forking_loss(self.model, work.items, self.quantiles, view)
        else:
            loss, count = cutting_loss(self.model, work.items, work.fct, self.quantiles, view)
        grads = backward(tape, loss, accumulate=False)
        return loss.item(), count, grads

    def _diagnostic(self, index: int, series_ids: List[str]) -> str:
        norms = ", ".join(f"{name}={value:.4g}" for name, value in self.model.params.norms().items())
        return f"batch {index} (series {series_ids}); parameter norms: {norms}"

    def train_step(self, batch: Sequence[ModelInputs], index: int = 0, cuts: Optional[Dict[int, int]] = None) -> Tuple[float, int]:
        """
        One Adam update from a minibatch.

        Returns:
            (summed loss, live-term count); count 0 means no update was made

        Raises:
            NumericalError: If the loss or a gradient is not finite
        """
        groups = self._groups(batch, cuts)
        if self.config.threads > 1 and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                results = list(pool.map(self._group_gradients, groups))
        else:
            results = [self._group_gradients(work) for work in groups]

        total = sum(loss for loss, _, _ in results)
        count = sum(c for _, c, _ in results)
        series_ids = [item.series_id for item in batch]
        if not np.isfinite(total):
            raise NumericalError(f"Non-finite loss {total} at {self._diagnostic(index, series_ids)}")
        if count == 0:
            logger.debug(f"Batch {index} has no live loss terms; skipped")
            return 0.0, 0

        params = self.model.params
        params.zero_grad()
        for _, _, grads in results:
            accumulate_gradients(params, {name: grad / count for name, grad in grads.items()})
        for param in params:
            if not np.all(np.isfinite(param.grad)):
                raise NumericalError(
                    f"Non-finite gradient for {param.name} at {self._diagnostic(index, series_ids)}"
                )
        clip_grad_norm(params, self.config.clip_norm)
        adam_step(params, self.state)
        logger.debug(f"Batch {index}: {len(groups)} group(s), mean loss {total / count:.6g}")
        return total, count

    # ------------------------------------------------------------------
    # Epoch loop
    # ------------------------------------------------------------------

    def fit(self, inputs: Sequence[ModelInputs], out_dir: Optional[Union[str, Path]] = None) -> TrainingResult:
        """
        Train for ``config.epochs`` epochs.

        Args:
            inputs: One ModelInputs per series
            out_dir: Where checkpoints and loss_trace.csv go (None: nothing written)

        Returns:
            TrainingResult with the per-epoch mean loss
        """
        inputs = list(inputs)
        if not inputs:
            raise DataError("Training needs at least one series")
        result = TrainingResult()
        out_dir = Path(out_dir) if out_dir is not None else None
        size = self.config.batch_size

        for epoch in range(1, self.config.epochs + 1):
            order = self.shuffle_order(epoch, len(inputs))
            cut_points = None
            if self.config.scheme == TrainingScheme.CUTTING:
                cut_points = self.draw_cut_points(epoch, [item.length for item in inputs])

            epoch_loss, epoch_count = 0.0, 0
            for index, start in enumerate(range(0, len(order), size)):
                chosen = order[start:start + size]
                batch = [inputs[i] for i in chosen]
                cuts = None if cut_points is None else {p: int(cut_points[i]) for p, i in enumerate(chosen)}
                loss, count = self.train_step(batch, index, cuts)
                epoch_loss += loss
                epoch_count += count

            mean_loss = epoch_loss / epoch_count if epoch_count else float("nan")
            result.loss_trace.append(mean_loss)
            logger.info(f"Epoch {epoch}/{self.config.epochs}: mean loss {mean_loss:.6g}")

            every = self.config.checkpoint_every
            if out_dir is not None and every and epoch % every == 0 and epoch < self.config.epochs:
                result.checkpoints.append(self.model.save(out_dir / f"checkpoint_epoch{epoch:04d}.mqf"))

        if out_dir is not None:
            result.checkpoints.append(self.model.save(out_dir / "model.mqf"))
            write_loss_trace(result, out_dir / "loss_trace.csv")
        return result


def write_loss_trace(result: TrainingResult, path: Union[str, Path]) -> Path:
    """Write the (epoch, mean_loss) CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    result.trace_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.info(f"Loss trace written: {path}")
    return path


def training_inputs(model: MQForecaster, dataset: Dataset, train_end: Optional[int] = None) -> List[ModelInputs]:
    """
    Inputs for every series with at least one observed target in range.

    Raises:
        DataError: If the log-Gaussian head meets normalised targets <= -1,
            naming the series
    """
    inputs = []
    for record in dataset.records:
        if record.training_length(train_end) < 1:
            logger.warning(f"Series {record.series_id} has no training data; skipped")
            continue
        inputs.append(model.training_inputs(record, train_end))

    if model.spec.head == HeadKind.LOGGAUSSIAN:
        invalid = [item.series_id for item in inputs if np.any(item.targets[item.mask] <= -1.0)]
        if invalid:
            raise DataError(
                f"log-Gaussian head needs scaled targets > -1; series {', '.join(invalid)} "
                f"have values at or below minus their mean absolute level"
            )
    return inputs


def train(
    dataset: Dataset,
    model: MQForecaster,
    config: TrainingConfig,
    out_dir: Optional[Union[str, Path]] = None
) -> Tuple[MQForecaster, TrainingResult]:
    """
    Train ``model`` on ``dataset`` (up to ``config.train_end``).

    Returns:
        (the trained model, its TrainingResult)
    """
    inputs = training_inputs(model, dataset, config.train_end)
    result = ForecastTrainer(model, config).fit(inputs, out_dir)
    return model, result
