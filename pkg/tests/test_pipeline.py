import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from xfmap import pipeline
from xfmap.errors import BadMagicError, CountMismatchError, DataError, DimensionError, TruncatedError
from xfmap.pipeline import Dataset

from conftest import load_mnist_5k


def write_idx_pair(tmp_path, images, labels, name="d"):
    ip, lp = tmp_path / f"{name}-images.idx", tmp_path / f"{name}-labels.idx"
    pipeline.write_idx_images(ip, images)
    pipeline.write_idx_labels(lp, labels)
    return ip, lp


class TestIdx:
    def test_zero_image(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 784)), [3])
        d = pipeline.load_idx(ip, lp)
        np.testing.assert_array_equal(d.samples, np.zeros((1, 784)))
        np.testing.assert_array_equal(d.labels, [3])

    def test_header_only(self, tmp_path):
        ip = tmp_path / "empty.idx"
        ip.write_bytes(struct.pack(">IIII", 2051, 0, 28, 28))
        d = pipeline.load_idx(ip)
        assert len(d) == 0 and d.samples.shape == (0, 784)

    def test_roundtrip_bytes(self, tmp_path, rng):
        imgs = rng.integers(0, 256, (3, 784)).astype(np.uint8)
        ip, lp = write_idx_pair(tmp_path, imgs, [2, 4, 7])
        d = pipeline.load_idx(ip, lp)
        assert d.samples.astype(np.uint8).tobytes() == imgs.tobytes()
        np.testing.assert_array_equal(d.labels, [2, 4, 7])
        # and the file itself is the canonical encoding
        assert ip.read_bytes()[16:] == imgs.tobytes()

    def test_gzip(self, tmp_path, rng):
        imgs = rng.integers(0, 256, (2, 784))
        ip, lp = write_idx_pair(tmp_path, imgs, [1, 2])
        gz = tmp_path / "images.idx.gz"
        gz.write_bytes(gzip.compress(ip.read_bytes()))
        np.testing.assert_array_equal(pipeline.load_idx(gz, lp).samples, imgs)

    def test_bad_magic(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 784)), [0])
        with pytest.raises(BadMagicError):
            pipeline.load_idx(lp, lp)  # labels file given as images
        with pytest.raises(BadMagicError):
            pipeline.load_idx(ip, ip)

    def test_truncated(self, tmp_path):
        ip, _ = write_idx_pair(tmp_path, np.zeros((2, 784)), [0, 1])
        raw = ip.read_bytes()
        ip.write_bytes(raw[:-10])
        with pytest.raises(TruncatedError):
            pipeline.load_idx(ip)
        ip.write_bytes(raw[:9])
        with pytest.raises(TruncatedError):
            pipeline.load_idx(ip)

    def test_count_mismatch(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((2, 784)), [0, 1, 2])
        with pytest.raises(CountMismatchError):
            pipeline.load_idx(ip, lp)

    def test_errors_distinct(self):
        kinds = {BadMagicError, TruncatedError, CountMismatchError}
        assert len({k.__name__ for k in kinds}) == 3
        assert not any(issubclass(a, b) for a in kinds for b in kinds if a is not b)

    def test_write_rejects_non_bytes(self, tmp_path):
        with pytest.raises(DataError):
            pipeline.write_idx_images(tmp_path / "x", np.full((1, 784), 300))


class TestText:
    def test_csv_and_tsv(self, tmp_path):
        (tmp_path / "a.csv").write_text("# comment\n1,2\n3,4.5\n")
        (tmp_path / "a.tsv").write_text("1\t2\n3\t4.5\n")
        for name in ("a.csv", "a.tsv"):
            np.testing.assert_array_equal(pipeline.read_matrix(tmp_path / name), [[1, 2], [3, 4.5]])

    def test_non_numeric(self, tmp_path):
        (tmp_path / "a.csv").write_text("1,x\n")
        with pytest.raises(DataError):
            pipeline.read_matrix(tmp_path / "a.csv")

    def test_load_dataset_dispatch(self, tmp_path, rng):
        ip, lp = write_idx_pair(tmp_path, rng.integers(0, 256, (2, 784)), [5, 6])
        assert pipeline.load_dataset(ip, lp).source.startswith("idx:")
        (tmp_path / "x.csv").write_text("1,2\n3,4\n")
        (tmp_path / "y.csv").write_text("0\n1\n")
        d = pipeline.load_dataset(tmp_path / "x.csv", tmp_path / "y.csv")
        np.testing.assert_array_equal(d.labels, [0, 1])
        (tmp_path / "y3.csv").write_text("0\n1\n1\n")
        with pytest.raises(CountMismatchError):
            pipeline.load_dataset(tmp_path / "x.csv", tmp_path / "y3.csv")

    def test_fractional_labels_rejected(self, tmp_path):
        (tmp_path / "y.csv").write_text("0.5\n")
        with pytest.raises(DataError):
            pipeline.read_labels(tmp_path / "y.csv")


class TestDataset:
    def test_non_finite(self):
        with pytest.raises(DataError):
            Dataset(np.array([[np.nan]]))

    def test_label_length(self):
        with pytest.raises(DimensionError):
            Dataset(np.zeros((2, 1)), np.array([1]))


class TestScaling:
    def test_unit(self):
        d = pipeline.scale_unit(Dataset(np.array([[0.0, 255.0, 128.0]])))
        assert d.samples[0, 0] == 0.0 and d.samples[0, 1] == 1.0
        assert d.samples[0, 2] == 128 / 255
        assert d.samples[0, 2] == pytest.approx(0.50196, abs=1e-5)

    def test_unit_rejects_out_of_range(self):
        with pytest.raises(DataError):
            pipeline.scale_unit(Dataset(np.array([[256.0]])))

    def test_signed(self):
        d = pipeline.scale_signed(Dataset(np.array([[0.0, 1.0, 0.5]])))
        np.testing.assert_array_equal(d.samples, [[-1.0, 1.0, 0.0]])


class TestSubset:
    @pytest.fixture
    def labelled(self):
        y = np.array([7, 2, 4, 2, 7, 4, 2, 9, 7, 4])
        X = np.arange(10, dtype=float)[:, None]
        return Dataset(X, y, "toy")

    def test_file_order_class_major(self, labelled):
        s = pipeline.subset_by_classes(labelled, [2, 4, 7], 2, seed=0)
        np.testing.assert_array_equal(s.indices, [1, 3, 2, 5, 0, 4])
        np.testing.assert_array_equal(s.labels, [2, 2, 4, 4, 7, 7])
        np.testing.assert_array_equal(s.samples[:, 0], s.indices)

    def test_zero_per_class(self, labelled):
        s = pipeline.subset_by_classes(labelled, [2, 4, 7], 0)
        assert len(s) == 0 and s.samples.shape == (0, 1)

    def test_seeded_is_deterministic_and_sorted(self, labelled):
        a = pipeline.subset_by_classes(labelled, [2, 4, 7], 2, seed=5)
        b = pipeline.subset_by_classes(labelled, [2, 4, 7], 2, seed=5)
        np.testing.assert_array_equal(a.indices, b.indices)
        for c in (2, 4, 7):
            idx = a.indices[a.labels == c]
            assert np.all(np.diff(idx) > 0)

    def test_insufficient(self, labelled):
        with pytest.raises(DataError, match="class 9"):
            pipeline.subset_by_classes(labelled, [9], 2)

    def test_unlabelled(self):
        with pytest.raises(DataError):
            pipeline.subset_by_classes(Dataset(np.zeros((2, 1))), [0], 1)

    def test_nested_indices_refer_to_root(self, labelled):
        s1 = pipeline.subset_by_classes(labelled, [2, 7], 3, seed=0)
        s2 = pipeline.subset_by_classes(s1, [7], 1, seed=0)
        np.testing.assert_array_equal(s2.indices, [0])

    def test_selection_logged(self, labelled, caplog):
        with caplog.at_level("INFO", logger="xfmap.pipeline"):
            pipeline.subset_by_classes(labelled, [4], 1)
        assert "indices=[2]" in caplog.text

    def test_real_mnist_1500(self):
        X, y = load_mnist_5k()
        d = Dataset(X, y, "mnist_5k")
        s = pipeline.subset_by_classes(d, [2, 4, 7], 500, seed=0)
        assert len(s) == 1500
        assert np.bincount(s.labels, minlength=10)[[2, 4, 7]].tolist() == [500, 500, 500]


class TestExport:
    def test_identity_with_labels(self, tmp_path):
        p = tmp_path / "f.csv"
        pipeline.export_features([[1.0, 0.0], [0.0, 1.0]], p, labels=[0, 1])
        assert p.read_text() == "1,0,0\n0,1,1\n"

    def test_tsv_and_header(self, tmp_path):
        p = tmp_path / "f.tsv"
        pipeline.export_features([[0.5, 2.0]], p, fmt="tsv", header="xfmap 0.1.0\nkernel=linear")
        assert p.read_text() == "# xfmap 0.1.0\n# kernel=linear\n0.5\t2\n"

    def test_empty(self, tmp_path):
        p = tmp_path / "e.csv"
        pipeline.export_features(np.zeros((0, 3)), p)
        assert p.read_text() == ""
        pipeline.export_features(np.zeros((0, 3)), p, header="h")
        assert p.read_text() == "# h\n"
        M, lab = pipeline.read_features(p, labels=True)
        assert M.size == 0 and lab.size == 0

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            pipeline.export_features([[1.0]], tmp_path / "missing" / "f.csv")

    def test_bad_format(self, tmp_path):
        with pytest.raises(ValueError):
            pipeline.export_features([[1.0]], tmp_path / "f", fmt="json")

    def test_format_value(self):
        assert pipeline.format_value(-0.0) == "-0"
        assert pipeline.format_value(3.0) == "3"
        assert pipeline.format_value(0.1) == "0.1"
        assert pipeline.format_value(1e300) == "1e+300"

    @settings(max_examples=40, deadline=None)
    @given(
        arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 4)),
               elements=st.floats(allow_nan=False, allow_infinity=False)),
        st.sampled_from(["csv", "tsv"]),
    )
    def test_roundtrip_bit_exact(self, tmp_path_factory, F, fmt):
        p = tmp_path_factory.mktemp("rt") / f"f.{fmt}"
        labels = np.arange(len(F))
        pipeline.export_features(F, p, labels=labels, fmt=fmt, header="h")
        G, lab = pipeline.read_features(p, labels=True)
        assert G.tobytes() == F.tobytes()
        np.testing.assert_array_equal(lab, labels)
