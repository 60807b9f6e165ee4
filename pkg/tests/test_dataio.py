import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpsqc.dataio import (AGRI_CLASS_SHIFT, AGRI_DIRECTION, AGRI_FEATURES, AGRI_TABLE, bin_eto,
                          bundled_iris_path, load_csv, load_task, make_pairwise_tasks, parse_pairs,
                          read_feature_rows, round_half_up, split_document, stratified_split,
                          synth_agri, task_manifest, write_csv)
from mpsqc.errors import DomainError, IngestionError


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_iris(self):
        data = load_csv(bundled_iris_path(), schema="iris")
        assert data.rows.shape == (150, 4)
        assert data.class_ids == (1, 2, 3)
        assert all(np.sum(data.labels == c) == 50 for c in (1, 2, 3))
        assert data.class_names[1] == "Iris-setosa"

    def test_agri_schema(self, tmp_path):
        p = write(tmp_path, "Date,Tmin,Tmax,RH,u2,Is,Rs,ETo\n"
                            "d1,10,20,70,2,5,12,1.5\nd2,20,35,50,4,9,22,4.5\n")
        data = load_csv(p, schema="agri")
        assert data.feature_names == AGRI_FEATURES
        assert data.rows.shape == (2, 6)
        np.testing.assert_array_equal(data.target, [1.5, 4.5])
        np.testing.assert_array_equal(data.labels, [1, 3])

    def test_blank_cell_dropped(self, tmp_path):
        p = write(tmp_path, "a,b,y\n1,2,x\n3,,x\n5,6,z\n")
        data = load_csv(p, "y")
        assert data.dropped == 1 and data.dropped_lines == [3]
        assert len(data.rows) == 2

    def test_non_numeric_cell(self, tmp_path):
        p = write(tmp_path, "a,b,y\n1,2,x\n3,abc,x\n")
        with pytest.raises(IngestionError, match=r":3: non-numeric"):
            load_csv(p, "y")

    def test_unknown_label_column(self, tmp_path):
        p = write(tmp_path, "a,b,y\n1,2,x\n")
        with pytest.raises(IngestionError, match=r":1: unknown label column"):
            load_csv(p, "class")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            load_csv(tmp_path / "nope.csv", "y")

    def test_too_many_fields(self, tmp_path):
        p = write(tmp_path, "a,y\n1,x,9\n")
        with pytest.raises(IngestionError, match=":2:"):
            load_csv(p, "y")

    def test_delimiter_and_feature_subset(self, tmp_path):
        p = write(tmp_path, "a;b;c;y\n1;2;3;p\n4;5;6;q\n")
        data = load_csv(p, "y", delimiter=";", features=["c", "a"])
        np.testing.assert_array_equal(data.rows, [[3, 1], [6, 4]])

    def test_generic_needs_label(self, tmp_path):
        with pytest.raises(DomainError):
            load_csv(write(tmp_path, "a,y\n1,x\n"))

    def test_write_then_read(self, tmp_path):
        data = synth_agri(4, seed=3)
        write_csv(data, tmp_path / "s.csv")
        back = load_csv(tmp_path / "s.csv", schema="agri")
        np.testing.assert_array_equal(back.rows, data.rows)
        np.testing.assert_array_equal(back.labels, data.labels)


class TestReadFeatureRows:
    def test_by_name(self, tmp_path):
        p = write(tmp_path, "b,a\n2,1\n4,3\n")
        np.testing.assert_array_equal(read_feature_rows(p, ["a", "b"], 2), [[1, 2], [3, 4]])

    def test_missing_value(self, tmp_path):
        p = write(tmp_path, "a,b\n1,\n")
        with pytest.raises(IngestionError, match=":2:"):
            read_feature_rows(p, ["a", "b"], 2)


class TestBinEto:
    @pytest.mark.parametrize("eto, cls", [(0.5, 1), (1.999, 1), (2.0, 2), (3.0, 2), (4.0, 3), (5.5, 3)])
    def test_bins(self, eto, cls):
        assert bin_eto(eto) == cls

    def test_clamped_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="mpsqc.dataio"):
            assert bin_eto(7.5) == 3
            assert bin_eto(-1.0) == 1
        assert len(caplog.records) == 2

    def test_nan(self):
        with pytest.raises(DomainError):
            bin_eto(float("nan"))


class TestSynthAgri:
    def test_shape_and_ranges(self):
        data = synth_agri(10, seed=1, noise_sigma=0.1)
        assert data.rows.shape == (30, 6)
        assert [int(np.sum(data.labels == c)) for c in (1, 2, 3)] == [10, 10, 10]
        for j, name in enumerate(AGRI_FEATURES):
            hi, lo = AGRI_TABLE[name][:2]
            assert np.all((data.rows[:, j] >= lo) & (data.rows[:, j] <= hi))
        assert np.all([bin_eto(t) == c for t, c in zip(data.target, data.labels)])

    def test_noise_free_means(self):
        data = synth_agri(3, noise_sigma=0.0)
        for cls in (1, 2, 3):
            block = data.rows[data.labels == cls]
            for j, name in enumerate(AGRI_FEATURES):
                hi, lo, mean, sd = AGRI_TABLE[name]
                centre = np.clip(mean + (cls - 2) * AGRI_CLASS_SHIFT * sd * AGRI_DIRECTION[name], lo, hi)
                np.testing.assert_array_equal(block[:, j], centre)

    def test_seeds(self):
        a, b = synth_agri(5, seed=1), synth_agri(5, seed=2)
        assert a.rows.shape == b.rows.shape
        assert not np.array_equal(a.rows, b.rows)
        np.testing.assert_array_equal(synth_agri(5, seed=1).rows, a.rows)

    def test_bad_args(self):
        with pytest.raises(DomainError):
            synth_agri(0)
        with pytest.raises(DomainError):
            synth_agri(5, noise_sigma=-1)


class TestSplit:
    def test_round_half_up(self):
        assert [round_half_up(x) for x in (80.5, 80.8, 2.5, 3.5, 0.49)] == [81, 81, 3, 4, 0]

    def test_iris_pair(self):
        data = load_csv(bundled_iris_path(), schema="iris")
        (task,) = make_pairwise_tasks(data, [(1, 2)], seed=7)
        assert len(task.labels) == 100 and len(task.train) == 80 and len(task.test) == 20
        assert np.sum(task.labels[task.train]) == 40
        assert task.name == "Iris1"
        assert task.class_mapping[0]["name"] == "Iris-setosa"

    def test_same_seed(self):
        data = load_csv(bundled_iris_path(), schema="iris")
        a = make_pairwise_tasks(data, [(2, 3)], seed=5)[0]
        b = make_pairwise_tasks(data, [(2, 3)], seed=5)[0]
        np.testing.assert_array_equal(a.train, b.train)

    def test_odd_count(self):
        labels = np.array([0] * 50 + [1] * 51)
        train, test = stratified_split(labels, 0.8, np.random.default_rng(0))
        assert len(train) == 81 and len(test) == 20
        assert abs(np.sum(labels[train] == 1) - 0.8 * 51) < 1

    @settings(max_examples=200, deadline=None)
    @given(n0=st.integers(1, 60), n1=st.integers(1, 60), ratio=st.floats(0.05, 0.95), seed=st.integers(0, 99))
    def test_partition(self, n0, n1, ratio, seed):
        labels = np.array([0] * n0 + [1] * n1)
        train, test = stratified_split(labels, ratio, np.random.default_rng(seed))
        assert len(train) == round_half_up(ratio * (n0 + n1))
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(n0 + n1))
        for c, n in ((0, n0), (1, n1)):
            assert abs(np.sum(labels[train] == c) - ratio * n) <= 1 + 1e-9

    def test_unknown_class(self):
        data = load_csv(bundled_iris_path(), schema="iris")
        with pytest.raises(DomainError):
            make_pairwise_tasks(data, [(1, 4)])

    def test_same_class(self):
        data = load_csv(bundled_iris_path(), schema="iris")
        with pytest.raises(DomainError):
            make_pairwise_tasks(data, [(2, 2)])

    def test_parse_pairs(self):
        assert parse_pairs("1:2, 2:3,1:3") == [(1, 2), (2, 3), (1, 3)]
        with pytest.raises(DomainError):
            parse_pairs("1-2")


class TestManifest:
    def test_roundtrip(self, tmp_path):
        src = tmp_path / "iris.csv"
        src.write_bytes(bundled_iris_path().read_bytes())
        data = load_csv(src, schema="iris")
        task = make_pairwise_tasks(data, [(1, 3)], seed=2)[0]
        (tmp_path / "t.split.json").write_text(json.dumps(split_document(task)))
        man = task_manifest(task, src, "iris", "species", ",", "t.split.json")
        (tmp_path / "t.json").write_text(json.dumps(man))
        back = load_task(tmp_path / "t.json")
        np.testing.assert_array_equal(back.train, task.train)
        np.testing.assert_array_equal(back.rows, task.rows)
        np.testing.assert_array_equal(back.labels, task.labels)

    def test_changed_data_detected(self, tmp_path):
        src = tmp_path / "iris.csv"
        src.write_bytes(bundled_iris_path().read_bytes())
        task = make_pairwise_tasks(load_csv(src, schema="iris"), [(1, 2)])[0]
        (tmp_path / "t.split.json").write_text(json.dumps(split_document(task)))
        (tmp_path / "t.json").write_text(json.dumps(
            task_manifest(task, src, "iris", "species", ",", "t.split.json")))
        with open(src, "a") as fh:
            fh.write("5.0,3.0,1.0,0.2,Iris-setosa\n")
        with pytest.raises(IngestionError, match="changed"):
            load_task(tmp_path / "t.json")
