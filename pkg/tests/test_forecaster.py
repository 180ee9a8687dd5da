"""
Tests for MQForecaster Prediction
=================================

Prediction-time guarantees: grids read nothing after their creation time,
a series with a single step still forecasts, and unseen static levels use
the reserved embedding row.
"""

import copy
import os
import sys

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.data.assembly import assemble_model_inputs
from src.data.ingest import build_dataset
from src.data.normalization import fit_target_stats
from src.data.schema import ColumnSpec
from src.data.synthetic import synthesize_benchmark
from src.evaluation.rolling import EvaluationPlan, rolling_forecasts
from src.models.forecaster import MQForecaster
from src.models.specs import EncoderSpec, ModelSpec

ENCODERS = ["lstm", "lstm_narx", "lstm_lag", "wavenet"]


@pytest.fixture
def hist_dataset():
    """Benchmark series with an extra historical-only column."""
    bench = synthesize_benchmark(seed=6, n_series=3, length=24, period=6)
    frame = bench.frame.copy()
    frame["load"] = np.random.default_rng(0).normal(size=len(frame))
    schema = bench.schema.model_copy(deep=True)
    schema.columns["load"] = ColumnSpec(tag="h")
    return build_dataset(frame, schema)


def build_model(dataset, encoder="lstm", head="quantile"):
    spec = ModelSpec(
        horizon=3,
        quantiles=[0.1, 0.5, 0.9],
        head=head,
        encoder=EncoderSpec(kind=encoder, hidden=4, depth=3, layers=2),
    )
    return MQForecaster.for_dataset(dataset, spec, seed=3)


def corrupt_after(record, index):
    """Copy of ``record`` with huge targets and historical values after row ``index``."""
    corrupted = copy.deepcopy(record)
    corrupted.y[index + 1:] = 1e9
    corrupted.x_hist[index + 1:] = -1e9
    return corrupted


class TestNoLookAhead:
    """Grids depend only on data at or before their creation time."""

    @pytest.mark.parametrize("encoder", ENCODERS)
    def test_predict_grid_ignores_later_history(self, hist_dataset, encoder):
        """Test corrupting y and x_hist after the FCT leaves the grid bit-identical."""
        model = build_model(hist_dataset, encoder)
        record = hist_dataset.records[0]
        assert record.x_hist.shape[1] >= 1
        fct = int(record.times[10])
        before = model.predict_grid(record, fct)
        after = model.predict_grid(corrupt_after(record, 10), fct)
        np.testing.assert_array_equal(before.values, after.values)

    def test_rolling_forecasts_ignore_later_history(self, hist_dataset):
        """Test rolling evaluation grids are unchanged by corrupted later rows."""
        model = build_model(hist_dataset, "wavenet")
        fct = int(hist_dataset.records[0].times[10])
        plan = EvaluationPlan(fcts=[fct])
        before = rolling_forecasts(hist_dataset, model, plan)

        corrupted = copy.deepcopy(hist_dataset)
        corrupted.records = [corrupt_after(r, r.index_of(fct)) for r in corrupted.records]
        after = rolling_forecasts(corrupted, model, plan)
        assert len(before) == len(after) == 3
        for a, b in zip(before, after):
            np.testing.assert_array_equal(a.values, b.values)


class TestColdStart:
    """Forecasting from a single observed step."""

    @pytest.mark.parametrize("head", ["quantile", "loggaussian"])
    def test_first_step_forecast(self, hist_dataset, head):
        """Test the grid at the first time step is finite for both heads."""
        model = build_model(hist_dataset, head=head)
        record = hist_dataset.records[1]
        grid = model.predict_grid(record, int(record.times[0]))
        assert grid.values.shape == (3, 3)
        assert np.all(np.isfinite(grid.values))


class TestUnknownStaticLevel:
    """Unseen categorical levels read embedding row 0."""

    def test_unseen_level_uses_reserved_row(self, hist_dataset):
        """Test an unseen level maps to code 0 and only row 0 moves its forecast."""
        model = build_model(hist_dataset)
        seen = hist_dataset.records[0]
        unseen = copy.deepcopy(seen)
        unseen.static_categorical["group"] = "never_seen"

        stats = fit_target_stats(unseen, 12, model.spec.normalization)
        inputs = assemble_model_inputs(unseen, model.spec, stats, length=12)
        np.testing.assert_array_equal(inputs.static_codes, [0])

        fct = int(seen.times[11])
        seen_before = model.predict_grid(seen, fct).values
        unseen_before = model.predict_grid(unseen, fct).values
        assert np.all(np.isfinite(unseen_before))

        model.params["static.group.embedding"].value[0] += 1.0
        np.testing.assert_array_equal(model.predict_grid(seen, fct).values, seen_before)
        assert not np.allclose(model.predict_grid(unseen, fct).values, unseen_before)
