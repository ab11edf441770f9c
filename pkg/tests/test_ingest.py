import io

import numpy as np
import pytest

from tadsampler.ingest import (IncidenceMatrix, ParseError, RawTrack, assemble,
                               bin_signal, binarize, parse_bedgraph,
                               serialize_bedgraph)


def track(*intervals, name="t", chrom="chr9"):
    return RawTrack(marker_name=name, chrom=chrom, intervals=tuple(intervals))


class TestParseBedgraph:
    def test_single_line(self):
        t = parse_bedgraph(io.StringIO("chr9 0 400 1.5\n"))
        assert t.intervals == ((0, 400, 1.5),)
        assert t.chrom == "chr9"

    def test_empty_stream(self):
        assert parse_bedgraph(io.StringIO("")).intervals == ()

    def test_overlap_rejected(self):
        stream = io.StringIO("chr9 0 200 1.0\nchr9 100 300 2.0\n")
        with pytest.raises(ParseError, match="line 2"):
            parse_bedgraph(stream)

    def test_bad_field_count(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_bedgraph(io.StringIO("chr9 0 200\n"))

    def test_non_numeric(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_bedgraph(io.StringIO("chr9 0 x 1.0\n"))

    def test_start_not_below_end(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_bedgraph(io.StringIO("chr9 200 200 1.0\n"))

    def test_multiple_chromosomes_rejected(self):
        stream = io.StringIO("chr9 0 200 1.0\nchr8 0 200 1.0\n")
        with pytest.raises(ParseError):
            parse_bedgraph(stream)

    def test_comment_and_track_lines_skipped(self):
        stream = io.StringIO("# c\ntrack type=bedGraph\nchr9 0 100 1.0\n")
        assert parse_bedgraph(stream).intervals == ((0, 100, 1.0),)

    def test_unsorted_input_is_sorted(self):
        stream = io.StringIO("chr9 200 300 2.0\nchr9 0 100 1.0\n")
        t = parse_bedgraph(stream)
        assert t.intervals == ((0, 100, 1.0), (200, 300, 2.0))

    def test_round_trip(self):
        t = track((0, 100, 1.5), (300, 500, 0.25))
        again = parse_bedgraph(io.StringIO(serialize_bedgraph(t)),
                               marker_name="t")
        assert again.intervals == t.intervals


class TestBinSignal:
    def test_uniform_coverage(self):
        b = bin_signal(track((0, 400, 1.0)), bin_size=200, span=(0, 400))
        assert np.allclose(b.values, [1.0, 1.0])

    def test_coverage_weighted_mean(self):
        b = bin_signal(track((0, 100, 2.0)), bin_size=200, span=(0, 200))
        assert np.allclose(b.values, [1.0])

    def test_no_intervals(self):
        b = bin_signal(track(), bin_size=200, span=(0, 600))
        assert np.allclose(b.values, [0, 0, 0])

    def test_indivisible_span(self):
        with pytest.raises(ValueError, match="divisible"):
            bin_signal(track((0, 100, 1.0)), bin_size=200, span=(0, 300))

    def test_max_aggregator(self):
        b = bin_signal(track((0, 50, 3.0), (50, 200, 1.0)), bin_size=200,
                       span=(0, 200), aggregator="max")
        assert np.allclose(b.values, [3.0])

    def test_mass_conservation(self):
        rng = np.random.default_rng(4)
        edges = np.sort(rng.choice(np.arange(1, 2000), 20, replace=False))
        intervals = [(int(edges[2 * i]), int(edges[2 * i + 1]),
                      float(rng.random())) for i in range(10)]
        t = track(*intervals)
        b = bin_signal(t, bin_size=100, span=(0, 2000))
        mass = sum(v * (e - s) for s, e, v in intervals)
        assert np.isclose(b.values.sum() * 100, mass, rtol=1e-9)


class TestBinarize:
    def test_above_threshold(self):
        b = bin_signal(track((0, 200, 5.0), (200, 400, 1.0)), bin_size=200)
        assert binarize(b, 2.0).tolist() == [1, 0]

    def test_strict_inequality(self):
        b = bin_signal(track((0, 200, 2.0)), bin_size=200)
        assert binarize(b, 2.0).tolist() == [0]
        assert binarize(b, 2.0, strict=False).tolist() == [1]

    def test_zero_signal(self):
        b = bin_signal(track(), bin_size=200, span=(0, 600))
        assert binarize(b, 0.0).tolist() == [0, 0, 0]

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(0)
        vals = rng.random(50) * 3
        b = bin_signal(track(*[(i * 10, (i + 1) * 10, v)
                               for i, v in enumerate(vals)]), bin_size=10)
        prev = binarize(b, 0.0)
        for thr in (0.5, 1.0, 2.0, 3.5):
            cur = binarize(b, thr)
            assert np.all(cur <= prev)
            prev = cur


class TestAssemble:
    def test_two_rows(self):
        m = assemble([("a", [1, 0, 1]), ("b", [0, 0, 1])])
        assert m.data.shape == (2, 3)
        assert m.marker_names == ["a", "b"]

    def test_ragged_rows(self):
        with pytest.raises(ValueError, match="ragged"):
            assemble([("a", [1, 0, 1]), ("b", [0, 0, 1, 1])])

    def test_empty_input(self):
        with pytest.raises(ValueError):
            assemble([])

    def test_duplicate_names(self):
        with pytest.raises(ValueError, match="duplicate"):
            assemble([("a", [1]), ("a", [0])])


class TestIncidenceMatrix:
    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            IncidenceMatrix(data=np.array([[2, 0]]), marker_names=["a"])

    def test_csv_round_trip(self, tmp_path):
        m = assemble([("a", [1, 0, 1]), ("b", [0, 1, 1])])
        p = tmp_path / "m.csv"
        m.to_csv(p)
        again = IncidenceMatrix.from_csv(p)
        assert np.array_equal(again.data, m.data)
        assert again.marker_names == m.marker_names

    def test_json_round_trip(self, tmp_path):
        m = assemble([("a", [1, 0]), ("b", [0, 1])])
        p = tmp_path / "m.json"
        m.to_json(p)
        again = IncidenceMatrix.from_json(p)
        assert np.array_equal(again.data, m.data)
        assert again.marker_names == m.marker_names
