import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sph import (
    ConfigError,
    ExperimentConfig,
    SphParams,
    bench_extraction,
    extract_features,
    fixed_split,
    kfold_splits,
    leave_one_out_splits,
    permute_labels,
    run_pipeline,
    sweep,
)
from sph.experiments import make_splits, write_sweep_csv
from sph.synth import synthetic_dataset


@pytest.fixture(scope="module")
def small_synth():
    return synthetic_dataset(classes=5, samples=6, jitter=1, image_size=32)


@pytest.fixture(scope="module")
def copies_dataset():
    return synthetic_dataset(classes=4, samples=4, jitter=0, image_size=32)


def assert_partition(dataset, split):
    combined = np.concatenate([split.train_indices, split.test_indices])
    assert len(np.intersect1d(split.train_indices, split.test_indices)) == 0
    assert np.array_equal(np.sort(combined), np.arange(len(dataset)))


class TestKfoldSplits:
    def test_two_fold_sizes(self, small_synth):
        splits = kfold_splits(small_synth, 2)
        assert len(splits) == 2
        for split in splits:
            # inverted convention: one part (3 per subject) trains, the rest tests
            assert len(split.train_indices) == 5 * 3
            assert len(split.test_indices) == 5 * 3
            assert_partition(small_synth, split)

    def test_ten_samples_two_folds_gives_five_five(self):
        ds = synthetic_dataset(classes=3, samples=10, jitter=1, image_size=16)
        for split in kfold_splits(ds, 2):
            groups = ds.indices_by_label()
            for label, idx in groups.items():
                train = np.intersect1d(split.train_indices, idx)
                test = np.intersect1d(split.test_indices, idx)
                assert (len(train), len(test)) == (5, 5)

    def test_n_equals_sample_count(self, small_synth):
        splits = kfold_splits(small_synth, 6)
        assert len(splits) == 6
        for split in splits:
            assert len(split.train_indices) == 5  # one sample per subject
            assert_partition(small_synth, split)

    def test_uneven_parts_remain_partition(self, small_synth):
        for split in kfold_splits(small_synth, 4):
            assert_partition(small_synth, split)

    def test_too_few_samples_rejected(self, small_synth):
        with pytest.raises(ValueError, match="fewer than"):
            kfold_splits(small_synth, 7)

    def test_deterministic(self, small_synth):
        a = kfold_splits(small_synth, 3)
        b = kfold_splits(small_synth, 3)
        for x, y in zip(a, b):
            assert np.array_equal(x.train_indices, y.train_indices)
            assert np.array_equal(x.test_indices, y.test_indices)


class TestLeaveOneOut:
    def test_counts(self, small_synth):
        splits = leave_one_out_splits(small_synth)
        assert len(splits) == 30
        for split in splits:
            assert len(split.test_indices) == 1
            assert len(split.train_indices) == 29
            assert_partition(small_synth, split)

    def test_every_sample_tested_once(self, small_synth):
        tested = np.sort(np.concatenate([s.test_indices for s in leave_one_out_splits(small_synth)]))
        assert np.array_equal(tested, np.arange(30))


class TestFixedSplit:
    def test_first_samples_train(self, small_synth):
        split = fixed_split(small_synth, 4)
        assert len(split.train_indices) == 5 * 4
        assert len(split.test_indices) == 5 * 2
        assert_partition(small_synth, split)
        groups = small_synth.indices_by_label()
        for label, idx in groups.items():
            assert set(idx[:4]) <= set(split.train_indices.tolist())

    def test_all_but_one(self, small_synth):
        split = fixed_split(small_synth, 5)
        assert len(split.test_indices) == 5

    def test_zero_train_count_rejected(self, small_synth):
        with pytest.raises(ValueError, match=">= 1"):
            fixed_split(small_synth, 0)

    def test_insufficient_samples_rejected(self, small_synth):
        with pytest.raises(ValueError, match="needs more than"):
            fixed_split(small_synth, 6)

    @given(st.integers(2, 6))
    @settings(max_examples=5, deadline=None)
    def test_partition_property_all_protocols(self, n):
        dataset = synthetic_dataset(classes=3, samples=6, jitter=1, image_size=16)
        for split in kfold_splits(dataset, n):
            assert_partition(dataset, split)
        for split in leave_one_out_splits(dataset):
            assert_partition(dataset, split)
        assert_partition(dataset, fixed_split(dataset, n - 1))


class TestExperimentConfig:
    def test_from_dict_round_trip(self):
        config = ExperimentConfig(
            dataset="x", feature="sph", params=(SphParams(8, 0.5, 2, 0.5),),
            reducer="lda", dims=10, classifier="crc", crc_lambda=0.01,
            protocol="fixed-split", n=3,
        )
        assert ExperimentConfig.from_dict(config.to_dict()) == config

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"reduccer": "pca"})

    def test_invalid_choices_rejected(self):
        with pytest.raises(ConfigError, match="feature"):
            ExperimentConfig(feature="hog").validate()
        with pytest.raises(ConfigError, match="protocol"):
            ExperimentConfig(protocol="2fold").validate()

    def test_sph_takes_single_params(self):
        params = (SphParams(8, 0.5, 2, 0.5), SphParams(16, 0.5, 4, 0.5))
        with pytest.raises(ConfigError, match="exactly one"):
            ExperimentConfig(feature="sph", params=params).validate()


class TestExtractFeatures:
    def test_matrix_shape(self, small_synth):
        x = extract_features(small_synth, ExperimentConfig(feature="sph"))
        assert x.shape == (30, 735)

    def test_pixels_feature(self, small_synth):
        x = extract_features(small_synth, ExperimentConfig(feature="pixels"))
        assert x.shape == (30, 1024)

    def test_parallel_matches_serial(self, small_synth):
        serial = extract_features(small_synth, ExperimentConfig(feature="sph", jobs=1))
        parallel = extract_features(small_synth, ExperimentConfig(feature="sph", jobs=2))
        assert np.array_equal(serial, parallel)


class TestRunPipeline:
    def test_identical_copies_reach_full_accuracy(self, copies_dataset):
        for reducer in ("pca", "none"):
            record = run_pipeline(
                ExperimentConfig(feature="sph", reducer=reducer, classifier="nnc", protocol="paper-nfold", n=2),
                dataset=copies_dataset,
            )
            assert record.mean == 1.0
            assert record.std == 0.0

    def test_deterministic_records(self, small_synth):
        config = ExperimentConfig(feature="sph", reducer="pca", dims=20, protocol="paper-nfold", n=2)
        a = run_pipeline(config, dataset=small_synth)
        b = run_pipeline(config, dataset=small_synth)
        assert a.fold_accuracies == b.fold_accuracies

    def test_mean_std_recomputable(self, small_synth):
        record = run_pipeline(
            ExperimentConfig(feature="sph", reducer="lda", protocol="paper-nfold", n=3),
            dataset=small_synth,
        )
        acc = np.array(record.fold_accuracies)
        assert abs(record.mean - acc.mean()) <= 1e-12
        assert abs(record.std - acc.std()) <= 1e-12

    def test_crc_pipeline_runs(self, small_synth):
        record = run_pipeline(
            ExperimentConfig(feature="sph", reducer="pca", dims=15, classifier="crc",
                             crc_lambda=1e-3, protocol="fixed-split", n=3),
            dataset=small_synth,
        )
        assert 0.0 <= record.mean <= 1.0

    def test_precomputed_features_shortcut(self, small_synth):
        config = ExperimentConfig(feature="sph", reducer="none", protocol="fixed-split", n=3)
        x = extract_features(small_synth, config)
        a = run_pipeline(config, dataset=small_synth, features=x)
        b = run_pipeline(config, dataset=small_synth)
        assert a.fold_accuracies == b.fold_accuracies

    def test_format_mean_std(self, copies_dataset):
        record = run_pipeline(ExperimentConfig(feature="sph", reducer="none", n=2), dataset=copies_dataset)
        assert record.format_mean_std() == "100.00±0.00%"


class TestSweep:
    def test_sixteen_combination_grid(self, small_synth):
        base = ExperimentConfig(feature="sph", reducer="pca", protocol="paper-nfold", n=2)
        rows = sweep(
            small_synth, base,
            block_sizes=[4, 6, 8, 10],
            block_overlaps=[0.0, 0.25, 0.5, 0.75],
        )
        assert len(rows) == 16
        evaluated = [r for r in rows if r["status"] == "ok"]
        skipped = [r for r in rows if r["status"].startswith("skipped")]
        # fractional strides: 6x(1/4, 3/4) and 10x(1/4, 3/4)
        assert len(skipped) == 4
        assert {(r["block_size"], r["block_overlap"]) for r in skipped} == {
            (6, 0.25), (6, 0.75), (10, 0.25), (10, 0.75),
        }
        for row in evaluated:
            assert 0.0 <= row["mean"] <= 1.0
            assert row["dims"] > 0

    def test_dimension_column(self, small_synth):
        base = ExperimentConfig(feature="sph", reducer="none", protocol="fixed-split", n=3)
        rows = sweep(small_synth, base, block_sizes=[8], block_overlaps=[0.5])
        assert rows[0]["dims"] == 735

    def test_single_point_grid_equals_run_pipeline(self, small_synth):
        base = ExperimentConfig(feature="sph", reducer="pca", dims=10, protocol="fixed-split", n=3)
        rows = sweep(small_synth, base, block_sizes=[8], block_overlaps=[0.5])
        record = run_pipeline(
            ExperimentConfig(feature="sph", params=(SphParams(8, 0.5, 2, 0.5),),
                             reducer="pca", dims=10, protocol="fixed-split", n=3),
            dataset=small_synth,
        )
        assert rows[0]["mean"] == record.mean
        assert rows[0]["fold_accuracies"] == ";".join(repr(a) for a in record.fold_accuracies)

    def test_csv_write(self, small_synth, tmp_path):
        base = ExperimentConfig(feature="sph", reducer="none", protocol="fixed-split", n=3)
        rows = sweep(small_synth, base, block_sizes=[8, 6], block_overlaps=[0.25])
        out = tmp_path / "sweep.csv"
        write_sweep_csv(out, rows)
        text = out.read_text()
        assert text.splitlines()[0].startswith("block_size,block_overlap")
        assert "skipped" in text


class TestBench:
    def test_report_contents(self, small_synth):
        report = bench_extraction(
            small_synth,
            [("sph", "sph", None), ("msph", "msph", None)],
            repetitions=3,
        )
        by_name = {r.name: r for r in report.rows}
        assert by_name["sph"].dims == 735
        assert by_name["msph"].dims == 885
        assert by_name["msph"].per_image_mean_s >= by_name["sph"].per_image_mean_s
        assert report.machine["cores"] >= 1
        assert "per-image" in report.format_text()

    def test_too_few_repetitions(self, small_synth):
        with pytest.raises(ValueError, match="at least 3"):
            bench_extraction(small_synth, [("sph", "sph", None)], repetitions=2)


class TestPermuteLabels:
    def test_preserves_label_multiset(self, small_synth):
        shuffled = permute_labels(small_synth, seed=0)
        assert sorted(shuffled.labels().tolist()) == sorted(small_synth.labels().tolist())
        assert [s.path for s in shuffled.samples] == [s.path for s in small_synth.samples]

    def test_deterministic_per_seed(self, small_synth):
        a = permute_labels(small_synth, seed=3).labels()
        b = permute_labels(small_synth, seed=3).labels()
        c = permute_labels(small_synth, seed=4).labels()
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestMakeSplits:
    def test_protocol_dispatch(self, small_synth):
        assert len(make_splits(small_synth, ExperimentConfig(protocol="paper-nfold", n=2))) == 2
        assert len(make_splits(small_synth, ExperimentConfig(protocol="loo"))) == 30
        assert len(make_splits(small_synth, ExperimentConfig(protocol="fixed-split", n=2))) == 1
