"""
Forecaster - MQ Encoder/Decoder Model
=====================================

MQForecaster owns the parameters of one model (static embeddings, encoder
and decoder), runs the batched forward pass used in training and turns a
trained model into ForecastGrids at chosen forecast creation times.

Forward pass for a batch of equal-length series:

1. static vector s = [embeddings of static categoricals, static reals]
2. encoder input x_t = (y block, x^(h)_t, x^(f)_t, s) for every t
3. h_t = encoder(x_{:t}) for every t
4. decoder(h_t, [x^(f)_{t+k}, s] for k = 1..K) for every t
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np

from ..autodiff import ops
from ..autodiff.checkpoint import load_checkpoint, save_checkpoint
from ..autodiff.init import glorot_uniform
from ..autodiff.tensor import ParameterStore, ParamView, Tape, Tensor
from ..data.assembly import BatchInputs, ModelInputs, assemble_model_inputs, stack_inputs
from ..data.normalization import fit_feature_scaling, fit_target_stats
from ..data.schema import Dataset, SeriesRecord
from ..errors import ContractError, DataError
from ..seeding import named_stream
from .decoder import decode_outputs, init_decoder_params
from .encoders import encode, init_encoder_params
from .grid import ForecastGrid, quantiles_from_loggaussian, repair_crossings
from .specs import HeadKind, ModelSpec

# Configure module logger
logger = logging.getLogger(__name__)


class MQForecaster:
    """
    Multi-horizon quantile forecaster.

    Attributes:
        spec: Architecture, quantiles and fitted feature layout
        seed: Seed of the parameter initialisation stream
        params: Named parameters in a fixed order

    Example:
        >>> model = MQForecaster.for_dataset(dataset, ModelSpec(horizon=13), seed=7)
        >>> grid = model.predict_grid(dataset.records[0], fct=100)
        >>> grid.values.shape
        (13, 3)
    """

    def __init__(self, spec: ModelSpec, seed: int = 0):
        if not spec.features.fitted:
            raise ContractError("ModelSpec features must carry fitted covariate scaling")
        self.spec = spec
        self.seed = seed
        self.params = ParameterStore()

        rng = named_stream(seed, "init")
        layout = spec.features
        for column, levels in layout.static_categorical.items():
            rows, width = len(levels) + 1, layout.embedding_width(column)
            self.params.add(f"static.{column}.embedding", glorot_uniform(rng, rows, width, (rows, width)))
        init_encoder_params(self.params, spec.encoder, spec.encoder_input_width, rng)
        init_decoder_params(self.params, spec, rng)

        logger.info(
            f"MQForecaster initialized: encoder={spec.encoder.kind.value}, "
            f"decoder={spec.decoder.kind.value}, head={spec.head.value}, "
            f"K={spec.horizon}, Q={spec.n_quantiles}, {len(self.params)} parameter tensors"
        )

    @classmethod
    def for_dataset(
        cls,
        dataset: Dataset,
        spec: ModelSpec,
        seed: int = 0,
        train_end: Optional[int] = None
    ) -> "MQForecaster":
        """Fit the dataset's feature layout on the training range and build a model."""
        layout = dataset.layout(spec.features.embedding_cap)
        layout = fit_feature_scaling(dataset, layout, train_end)
        return cls(spec.model_copy(update={"features": layout}), seed)

    def view(self, tape: Optional[Tape] = None) -> ParamView:
        return ParamView(self.params, tape)

    # ------------------------------------------------------------------
    # Forward pass
    # ------------------------------------------------------------------

    def static_vector(self, codes: np.ndarray, reals: np.ndarray, view: ParamView) -> Optional[Tensor]:
        """Static embedding [B, E], or None when the model has no statics."""
        parts = []
        for j, column in enumerate(self.spec.features.static_categorical):
            table = view[f"static.{column}.embedding"]
            parts.append(table[np.asarray(codes[:, j], dtype=np.int64)])
        if reals.shape[-1]:
            parts.append(Tensor(reals))
        if not parts:
            return None
        return ops.concat(parts, axis=-1) if len(parts) > 1 else parts[0]

    def forward(self, batch: BatchInputs, view: ParamView, last_only: bool = False) -> Tensor:
        """
        Decoder outputs for every series and forecast creation time.

        Args:
            batch: Stacked inputs [B, T, ...]
            view: Parameter view (on a tape for training)
            last_only: Decode only the final step

        Returns:
            Tensor[B, T, K, W] (T = 1 with last_only)
        """
        size, steps = batch.size, batch.length
        static = self.static_vector(batch.static_codes, batch.static_reals, view)
        encoder_in = Tensor(batch.encoder_features)
        future = Tensor(batch.future_features)
        if static is not None:
            width = static.shape[-1]
            row = ops.reshape(static, (size, 1, width))
            encoder_in = ops.concat([encoder_in, ops.broadcast_to(row, (size, steps, width))], axis=-1)

        hidden = encode(encoder_in, self.spec.encoder, view).hidden
        if last_only:
            hidden = hidden[:, steps - 1:, :]
            future = future[:, steps - 1:]
        if static is not None:
            decode_steps = hidden.shape[1]
            cell = ops.reshape(static, (size, 1, 1, width))
            future = ops.concat(
                [future, ops.broadcast_to(cell, (size, decode_steps, self.spec.horizon, width))],
                axis=-1,
            )
        return decode_outputs(hidden, future, self.spec, view)

    # ------------------------------------------------------------------
    # Inputs and prediction
    # ------------------------------------------------------------------

    def training_inputs(self, record: SeriesRecord, train_end: Optional[int] = None) -> ModelInputs:
        """Inputs over the training range, normalised with training-range stats."""
        length = record.training_length(train_end)
        if length < 1:
            raise DataError(f"Series {record.series_id} has no observed target before the training boundary")
        stats = fit_target_stats(record, length, self.spec.normalization)
        return assemble_model_inputs(record, self.spec, stats, length=length)

    def predict_grid(self, record: SeriesRecord, fct: int) -> ForecastGrid:
        """
        Forecast grid at time ``fct`` using only data at or before it.

        Raises:
            DataError: If fct is outside the series or future covariates
                do not cover all K horizons
        """
        index = record.index_of(fct)
        if not 0 <= index < len(record):
            raise DataError(f"FCT {fct} is outside series {record.series_id}")
        length = index + 1
        stats = fit_target_stats(record, length, self.spec.normalization)
        inputs = assemble_model_inputs(record, self.spec, stats, length=length, require_future=True)
        raw = self.forward(stack_inputs([inputs]), self.view(), last_only=True).numpy()[0, 0]

        if self.spec.head == HeadKind.QUANTILE:
            values = stats.denormalize(raw)
        else:
            normalized = quantiles_from_loggaussian(raw[:, 0], np.logaddexp(0.0, raw[:, 1]), self.spec.quantiles)
            values = stats.denormalize(normalized.values)
        grid = ForecastGrid(
            values=values,
            quantiles=list(self.spec.quantiles),
            creation_time=int(fct),
            series_id=record.series_id,
        )
        return repair_crossings(grid) if self.spec.repair_crossings else grid

    def predict(self, dataset: Dataset, fcts: Iterable[int]) -> List[ForecastGrid]:
        """Grids for every series at every FCT, in (series, fct) order."""
        fcts = list(fcts)
        return [self.predict_grid(record, fct) for record in dataset.records for fct in fcts]

    def check_schema(self, dataset: Dataset) -> None:
        """Raise DataError naming the columns where dataset and model disagree."""
        layout = self.spec.features
        problems = []
        if dataset.hist_names != layout.hist_names:
            problems.append(f"historical {dataset.hist_names} vs {layout.hist_names}")
        if dataset.future_names != layout.future_names:
            problems.append(f"future {dataset.future_names} vs {layout.future_names}")
        if sorted(dataset.static_levels) != sorted(layout.static_categorical):
            problems.append(f"static categorical {sorted(dataset.static_levels)} vs {sorted(layout.static_categorical)}")
        if dataset.static_real_names != layout.static_real:
            problems.append(f"static real {dataset.static_real_names} vs {layout.static_real}")
        if problems:
            raise DataError("Dataset does not match the model schema: " + "; ".join(problems))

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, {"spec": self.spec.to_json_dict(), "seed": self.seed}, self.params)

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path]) -> "MQForecaster":
        document, values = load_checkpoint(path)
        try:
            spec = ModelSpec.model_validate(document["spec"])
        except (KeyError, ValueError) as e:
            raise DataError(f"Checkpoint {path} carries an invalid model spec: {e}") from e
        model = cls(spec, int(document.get("seed", 0)))
        model.params.load_values(values)
        return model
