"""
Tests for Data
==============

Unit tests for the schema descriptor, CSV ingest, covariate builders,
normalisation, input assembly and the synthetic benchmark.
"""

import os
import sys

import numpy as np
import pandas as pd
import pytest
from scipy.stats import t as student_t

# Add src to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.data.assembly import TargetMask, assemble_model_inputs, stack_inputs
from src.data.features import Event, event_indicators, read_event_calendar, seasonal_kernels, us_holiday_events
from src.data.ingest import build_dataset, export_dataset, ingest
from src.data.normalization import NormalizationStats, fit_feature_scaling, fit_target_stats
from src.data.schema import MISSING_INDICATOR, ColumnSpec, SchemaDescriptor, SeasonalSpec
from src.data.synthetic import noise_quantile, oracle_grids, synthesize_benchmark, write_benchmark
from src.errors import ArgumentError, ContractError, DataError, ShapeError
from src.models.forecaster import MQForecaster
from src.models.specs import ModelSpec, NormalizationMode


@pytest.fixture
def schema():
    return SchemaDescriptor(
        columns={
            "price": ColumnSpec(tag="h"),
            "promo": ColumnSpec(tag="f"),
            "store": ColumnSpec(tag="s", type="categorical"),
        }
    )


@pytest.fixture
def frame():
    return pd.DataFrame({
        "series_id": ["b", "b", "a", "a", "a"],
        "t": [1, 2, 1, 2, 4],
        "y": [5.0, 6.0, 1.0, 2.0, 4.0],
        "price": [1.0, 1.5, 9.0, 8.0, 7.0],
        "promo": [0.0, 1.0, 0.0, 0.0, 1.0],
        "store": ["x", "x", "y", "y", "y"],
    })


class TestSchemaDescriptor:
    """Tests for the YAML schema."""

    def test_yaml_round_trip(self, schema, tmp_path):
        """Test a written descriptor reads back equal."""
        schema.seasonal = [SeasonalSpec(period=7, width=2)]
        assert SchemaDescriptor.from_yaml(schema.to_yaml(tmp_path / "schema.yaml")) == schema

    def test_unknown_tag(self, tmp_path):
        """Test an unknown tag names the offending key."""
        path = tmp_path / "schema.yaml"
        path.write_text("columns:\n  price: {tag: q}\n", encoding="utf-8")
        with pytest.raises(DataError, match="columns.price.tag"):
            SchemaDescriptor.from_yaml(path)

    def test_missing_file(self, tmp_path):
        """Test a missing descriptor."""
        with pytest.raises(DataError):
            SchemaDescriptor.from_yaml(tmp_path / "absent.yaml")


class TestIngest:
    """Tests for CSV ingest and validation."""

    def test_sorted_and_gap_filled(self, frame, schema):
        """Test series are sorted and time gaps filled with the missing flag set."""
        dataset = build_dataset(frame, schema)
        assert dataset.series_ids == ["a", "b"]
        record = dataset.get("a")
        np.testing.assert_array_equal(record.times, [1, 2, 3, 4])
        np.testing.assert_array_equal(record.y, [1.0, 2.0, 2.0, 4.0])
        np.testing.assert_array_equal(record.observed, [True, True, False, True])
        np.testing.assert_array_equal(record.inserted, [False, False, True, False])
        assert dataset.hist_names == ["price", MISSING_INDICATOR]
        np.testing.assert_array_equal(record.x_hist[:, 1], [0.0, 0.0, 1.0, 0.0])
        np.testing.assert_array_equal(record.x_hist[:, 0], [9.0, 8.0, 8.0, 7.0])

    def test_static_levels(self, frame, schema):
        """Test static categoricals are collected per series."""
        dataset = build_dataset(frame, schema)
        assert dataset.static_levels == {"store": ["x", "y"]}
        assert dataset.get("b").static_categorical == {"store": "x"}

    def test_missing_target_value(self, frame, schema):
        """Test a blank target is forward-filled and flagged."""
        frame.loc[1, "y"] = np.nan
        record = build_dataset(frame, schema).get("b")
        np.testing.assert_array_equal(record.y, [5.0, 5.0])
        np.testing.assert_array_equal(record.observed, [True, False])
        assert record.target_length == 1

    def test_duplicate_rows(self, frame, schema):
        """Test a duplicated (series_id, t) is refused."""
        frame.loc[1, "t"] = 1
        with pytest.raises(DataError, match="Duplicate"):
            build_dataset(frame, schema)

    def test_irregular_time(self, frame, schema):
        """Test a fractional time step is refused."""
        frame["t"] = frame["t"].astype(float)
        frame.loc[0, "t"] = 1.5
        with pytest.raises(DataError, match="integer"):
            build_dataset(frame, schema)

    def test_missing_column(self, frame, schema):
        """Test a declared column absent from the data."""
        with pytest.raises(DataError, match="price"):
            build_dataset(frame.drop(columns=["price"]), schema)

    def test_non_numeric_value(self, frame, schema):
        """Test text in a real column."""
        frame["promo"] = frame["promo"].astype(object)
        frame.loc[2, "promo"] = "yes"
        with pytest.raises(DataError, match="promo"):
            build_dataset(frame, schema)

    def test_varying_static(self, frame, schema):
        """Test a static column must be constant within a series."""
        frame.loc[3, "store"] = "z"
        with pytest.raises(DataError, match="varies"):
            build_dataset(frame, schema)

    def test_categorical_must_be_static(self, frame):
        """Test categorical columns are only accepted as statics."""
        schema = SchemaDescriptor(columns={"store": ColumnSpec(tag="f", type="categorical")})
        with pytest.raises(DataError):
            build_dataset(frame[["series_id", "t", "y", "store"]], schema)

    def test_csv_round_trip(self, frame, schema, tmp_path):
        """Test export then ingest reproduces the dataset."""
        dataset = build_dataset(frame, schema)
        again = ingest(export_dataset(dataset, tmp_path / "data.csv"), schema)
        for before, after in zip(dataset.records, again.records):
            np.testing.assert_array_equal(before.y, after.y)
            np.testing.assert_array_equal(before.observed, after.observed)
            np.testing.assert_array_equal(before.x_future, after.x_future)

    def test_row_order_is_irrelevant(self, tmp_path):
        """Test ingesting permuted rows gives the same dataset as sorted rows."""
        bench = synthesize_benchmark(seed=4, n_series=3, length=12, period=4)
        ordered = bench.frame.sort_values(["series_id", "t"])
        ordered.to_csv(tmp_path / "sorted.csv", index=False)
        ordered.sample(frac=1.0, random_state=7).to_csv(tmp_path / "shuffled.csv", index=False)

        first = ingest(tmp_path / "sorted.csv", bench.schema)
        second = ingest(tmp_path / "shuffled.csv", bench.schema)
        assert first.series_ids == second.series_ids
        assert first.future_names == second.future_names
        assert first.static_levels == second.static_levels
        for before, after in zip(first.records, second.records):
            assert before.series_id == after.series_id
            np.testing.assert_array_equal(before.times, after.times)
            np.testing.assert_array_equal(before.y, after.y)
            np.testing.assert_array_equal(before.observed, after.observed)
            np.testing.assert_array_equal(before.x_hist, after.x_hist)
            np.testing.assert_array_equal(before.x_future, after.x_future)
            assert before.static_categorical == after.static_categorical

    def test_seasonal_and_event_columns(self, frame, schema, tmp_path):
        """Test derived future-known columns follow the declared covariates."""
        calendar = tmp_path / "events.csv"
        calendar.write_text("kind,time,magnitude\npromo_day,2,0.5\nclosure,4,1\n", encoding="utf-8")
        schema.seasonal = [SeasonalSpec(period=2, width=1)]
        schema.events = "events.csv"
        data_path = tmp_path / "data.csv"
        frame.to_csv(data_path, index=False)
        dataset = ingest(data_path, schema)
        assert dataset.future_names == ["promo", "season_2_0", "season_2_1", "closure", "promo_day"]
        record = dataset.get("a")
        np.testing.assert_array_equal(record.x_future[:, 1], [0.0, 1.0, 0.0, 1.0])
        np.testing.assert_array_equal(record.x_future[:, 3], [0.0, 0.0, 0.0, 1.0])
        np.testing.assert_array_equal(record.x_future[:, 4], [0.0, 0.5, 0.0, 0.0])


class TestFeatures:
    """Tests for seasonal kernels and event calendars."""

    def test_one_hot_kernels(self):
        """Test width 1 gives one-hot phases."""
        kernels = seasonal_kernels(7, 1, range(14))
        np.testing.assert_array_equal(kernels.to_numpy(), np.vstack([np.eye(7), np.eye(7)]))
        assert list(kernels.columns)[:2] == ["season_7_0", "season_7_1"]

    def test_triangular_kernels_wrap(self):
        """Test kernels decay linearly over the circular phase distance."""
        kernels = seasonal_kernels(4, 2, [0])
        np.testing.assert_allclose(kernels.to_numpy()[0], [1.0, 0.5, 0.0, 0.5])

    def test_kernel_arguments(self):
        """Test period and width bounds."""
        with pytest.raises(ArgumentError):
            seasonal_kernels(1, 1, [0])
        with pytest.raises(ArgumentError):
            seasonal_kernels(4, 0, [0])

    def test_event_indicators(self):
        """Test magnitudes land on their steps and outside events are dropped."""
        events = [Event("promo", 2, 0.3), Event("launch", 3), Event("promo", 99)]
        frame = event_indicators(events, [1, 2, 3])
        assert list(frame.columns) == ["launch", "promo"]
        np.testing.assert_array_equal(frame["promo"].to_numpy(), [0.0, 0.3, 0.0])
        np.testing.assert_array_equal(frame["launch"].to_numpy(), [0.0, 0.0, 1.0])

    def test_same_step_events_add(self):
        """Test two events of one kind on one step sum their magnitudes."""
        frame = event_indicators([Event("promo", 2, 0.3), Event("promo", 2, 0.5)], [1, 2, 3])
        np.testing.assert_allclose(frame["promo"].to_numpy(), [0.0, 0.8, 0.0])

    def test_events_without_time_steps(self):
        """Test events against an empty time index are dropped without error."""
        frame = event_indicators([Event("promo", 2)], [])
        assert frame.shape == (0, 1)

    def test_us_holidays_on_weekly_steps(self):
        """Test holidays flag the week that contains them."""
        dates = ["2023-12-25", "2024-01-01", "2024-01-08", "2024-01-15"]
        events = us_holiday_events(dates, [1, 2, 3, 4])
        assert [e.time for e in events] == [1, 2, 4]
        assert {e.kind for e in events} == {"us_holiday"}

    def test_event_calendar_default_magnitude(self, tmp_path):
        """Test magnitude defaults to 1."""
        path = tmp_path / "events.csv"
        path.write_text("kind,time\nsale,5\n", encoding="utf-8")
        assert read_event_calendar(path) == [Event("sale", 5, 1.0)]


class TestNormalization:
    """Training-range statistics."""

    def test_standard_stats(self, frame, schema):
        """Test mean/std over observed targets in range."""
        record = build_dataset(frame, schema).get("a")
        stats = fit_target_stats(record, end=3)
        assert stats.center == pytest.approx(1.5)
        assert stats.scale == pytest.approx(0.5)
        np.testing.assert_allclose(stats.denormalize(stats.normalize([7.0])), [7.0])

    def test_scale_mode(self, frame, schema):
        """Test scale mode keeps zero fixed."""
        record = build_dataset(frame, schema).get("b")
        stats = fit_target_stats(record, mode=NormalizationMode.SCALE)
        assert (stats.center, stats.scale) == (0.0, pytest.approx(5.5))

    def test_constant_series(self, frame, schema):
        """Test zero spread falls back to scale 1."""
        frame["y"] = 3.0
        stats = fit_target_stats(build_dataset(frame, schema).get("a"))
        assert (stats.center, stats.scale) == (3.0, 1.0)

    def test_invalid_stats(self):
        """Test a non-positive scale is refused."""
        with pytest.raises(DataError):
            NormalizationStats(center=0.0, scale=0.0)

    def test_feature_scaling_ignores_later_rows(self, frame, schema):
        """Test covariate scaling sees only the training range."""
        dataset = build_dataset(frame, schema)
        first = fit_feature_scaling(dataset, dataset.layout(), train_end=2)
        dataset.get("a").x_future[2:] = 1000.0
        second = fit_feature_scaling(dataset, dataset.layout(), train_end=2)
        assert first.future_center == second.future_center
        assert first.fitted


class TestAssembly:
    """Model inputs from a series record."""

    def test_shapes_and_mask(self, make_model, dataset):
        """Test arrays line up and the mask stops at the boundary."""
        model = make_model()
        record = dataset.records[0]
        stats = fit_target_stats(record, 10)
        inputs = assemble_model_inputs(record, model.spec, stats, length=10)
        assert inputs.encoder_features.shape == (10, model.spec.encoder_input_width - model.spec.features.static_width)
        assert inputs.future_features.shape == (10, 3, model.spec.features.n_future)
        assert inputs.mask[6].all()
        np.testing.assert_array_equal(inputs.mask[7], [True, True, False])
        assert not inputs.mask[9].any()
        np.testing.assert_array_equal(inputs.targets[~inputs.mask], 0.0)

    def test_mask_follows_target_mask_rule(self, frame, schema):
        """Test assembled masks are the TargetMask of the record, unobserved steps included."""
        dataset = build_dataset(frame, schema)
        spec = MQForecaster.for_dataset(dataset, ModelSpec(horizon=3)).spec
        record = dataset.get("a")
        inputs = assemble_model_inputs(record, spec, fit_target_stats(record), length=4, boundary=4)
        expected = TargetMask.build("a", length=4, horizon=3, boundary=4, observed=record.observed)
        np.testing.assert_array_equal(inputs.mask, expected.values)
        assert not inputs.mask[1, 0]

    def test_future_rows_come_from_later_steps(self, make_model, dataset):
        """Test x^(f) for (t, k) is the row t + k."""
        model = make_model()
        record = dataset.records[0]
        inputs = assemble_model_inputs(record, model.spec, fit_target_stats(record, 10), length=10)
        layout = model.spec.features
        expected = (record.x_future[4 + 2] - np.asarray(layout.future_center)) / np.asarray(layout.future_scale)
        np.testing.assert_allclose(inputs.future_features[4, 1], expected)

    def test_require_future(self, make_model, dataset):
        """Test a prediction window past the data is refused."""
        model = make_model()
        record = dataset.records[0]
        with pytest.raises(DataError):
            assemble_model_inputs(record, model.spec, fit_target_stats(record), length=len(record), require_future=True)

    def test_unfitted_stats(self, make_model, dataset):
        """Test assembly needs fitted normalisation."""
        model = make_model()
        with pytest.raises(ContractError):
            assemble_model_inputs(dataset.records[0], model.spec, None)

    def test_lag_block(self, make_model, dataset):
        """Test the lag encoder gets D + 1 target columns."""
        model = make_model(encoder="lstm_lag", depth=3)
        inputs = model.training_inputs(dataset.records[0])
        assert model.spec.target_width == 4
        np.testing.assert_allclose(inputs.encoder_features[5, 1], inputs.encoder_features[4, 0])

    def test_stack_needs_equal_lengths(self, make_model, dataset):
        """Test batching series of different lengths is refused."""
        model = make_model()
        a = model.training_inputs(dataset.records[0])
        with pytest.raises(ShapeError):
            stack_inputs([a, a.prefix(5)])


class TestSyntheticBenchmark:
    """Tests for the generator and its oracle."""

    def test_deterministic(self):
        """Test one seed gives one dataset."""
        first = synthesize_benchmark(seed=1, n_series=3, length=20)
        second = synthesize_benchmark(seed=1, n_series=3, length=20)
        pd.testing.assert_frame_equal(first.frame, second.frame)
        pd.testing.assert_frame_equal(first.oracle, second.oracle)

    def test_series_independent_of_count(self):
        """Test series i does not depend on how many series are drawn."""
        small = synthesize_benchmark(seed=2, n_series=1, length=15).frame
        large = synthesize_benchmark(seed=2, n_series=4, length=15).frame
        pd.testing.assert_frame_equal(small, large[large["series_id"] == "s0000"].reset_index(drop=True))

    def test_oracle_median_is_mean(self):
        """Test the Gaussian oracle median equals the conditional mean."""
        oracle = synthesize_benchmark(seed=0, n_series=2, length=10).oracle
        np.testing.assert_allclose(oracle["q0.5"], oracle["mean"])

    def test_oracle_coverage(self):
        """Test realised coverage of the 0.9 oracle quantile."""
        bench = synthesize_benchmark(seed=4, n_series=50, length=100)
        covered = (bench.frame["y"].to_numpy() <= bench.oracle["q0.9"].to_numpy()).mean()
        assert abs(covered - 0.9) < 0.03

    def test_student_t_quantiles(self):
        """Test the heavy-tailed inverse CDF."""
        np.testing.assert_allclose(noise_quantile([0.9], "student_t"), [student_t.ppf(0.9, 3)])
        with pytest.raises(ArgumentError):
            noise_quantile([1.0])

    def test_arguments(self):
        """Test invalid generator arguments."""
        with pytest.raises(ArgumentError):
            synthesize_benchmark(seed=0, n_series=0, length=10)
        with pytest.raises(ArgumentError):
            synthesize_benchmark(seed=0, n_series=1, length=10, period=1)

    def test_written_files_ingest(self, tmp_path):
        """Test data.csv with schema.yaml ingests to the same targets."""
        bench = synthesize_benchmark(seed=5, n_series=2, length=12, period=4)
        paths = write_benchmark(bench, tmp_path)
        assert sorted(paths) == ["data", "oracle", "schema"]
        dataset = ingest(paths["data"], paths["schema"])
        assert dataset.series_ids == ["s0000", "s0001"]
        np.testing.assert_array_equal(dataset.get("s0001").y, bench.frame.loc[bench.frame["series_id"] == "s0001", "y"])

    def test_oracle_grids(self):
        """Test oracle grids cover K steps after each FCT."""
        bench = synthesize_benchmark(seed=0, n_series=2, length=10)
        grids = oracle_grids(bench.oracle, fcts=[3, 8], horizon=2)
        assert [(g.series_id, g.creation_time) for g in grids] == [("s0000", 3), ("s0000", 8), ("s0001", 3), ("s0001", 8)]
        grids = oracle_grids(bench.oracle, fcts=[9], horizon=2)
        assert grids == []
