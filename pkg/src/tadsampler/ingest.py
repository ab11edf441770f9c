"""bedGraph ingestion: parse signal tracks, bin at nucleosome resolution,
binarize into the marker-by-nucleosome incidence matrix.

The bedGraph format is whitespace-separated `chrom start end value` lines;
gaps between intervals mean zero signal.  One chromosome per stream.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParseError",
    "RawTrack",
    "BinnedTrack",
    "IncidenceMatrix",
    "parse_bedgraph",
    "serialize_bedgraph",
    "bin_signal",
    "binarize",
    "assemble",
]

DEFAULT_BIN_SIZE = 200  # base pairs per nucleosome


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class RawTrack:
    marker_name: str
    chrom: str
    intervals: tuple  # of (start, end, value), sorted, non-overlapping

    def span(self):
        if not self.intervals:
            return (0, 0)
        return (self.intervals[0][0], self.intervals[-1][1])


@dataclass(frozen=True)
class BinnedTrack:
    marker_name: str
    bin_size: int
    start: int
    values: np.ndarray


@dataclass
class IncidenceMatrix:
    data: np.ndarray  # (M, N) in {0, 1}
    marker_names: list = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.int8)
        if self.data.ndim != 2:
            raise ValueError("incidence data must be 2-D")
        if not np.all(np.isin(self.data, (0, 1))):
            raise ValueError("incidence entries must be 0 or 1")
        if len(self.marker_names) != self.data.shape[0]:
            raise ValueError("marker_names length must equal M")

    @property
    def M(self):
        return self.data.shape[0]

    @property
    def N(self):
        return self.data.shape[1]

    def to_csv(self, path):
        """One row per marker; first column is the marker name."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["marker"] + [f"n{j}" for j in range(self.N)])
            for name, row in zip(self.marker_names, self.data):
                w.writerow([name] + row.tolist())

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        names = [r[0] for r in rows[1:]]
        data = np.array([[int(v) for v in r[1:]] for r in rows[1:]])
        return cls(data=data, marker_names=names)

    def to_json(self, path):
        doc = {"M": self.M, "N": self.N, "marker_names": self.marker_names,
               "data": self.data.ravel(order="C").tolist()}
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        data = np.array(doc["data"]).reshape(doc["M"], doc["N"])
        return cls(data=data, marker_names=doc["marker_names"])


def parse_bedgraph(stream, marker_name="track") -> RawTrack:
    """Parse a single-chromosome bedGraph stream into a RawTrack.

    Raises ParseError naming the offending line for malformed fields,
    inverted intervals, multiple chromosomes, or overlaps.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    intervals = []
    chrom = None
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith(("#", "track", "browser")):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        c, s, e, v = parts
        try:
            start, end, value = int(s), int(e), float(v)
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric start/end/value")
        if start >= end:
            raise ParseError(f"line {lineno}: start {start} >= end {end}")
        if chrom is None:
            chrom = c
        elif c != chrom:
            raise ParseError(
                f"line {lineno}: multiple chromosomes ({chrom!r}, {c!r}); "
                "one chromosome per stream")
        intervals.append((start, end, value, lineno))
    intervals.sort(key=lambda t: t[0])
    for (s1, e1, _, _), (s2, _, _, ln) in zip(intervals, intervals[1:]):
        if s2 < e1:
            raise ParseError(f"line {ln}: interval overlap at {s2}-{e1}")
    return RawTrack(marker_name=marker_name, chrom=chrom or "",
                    intervals=tuple((s, e, v) for s, e, v, _ in intervals))


def serialize_bedgraph(track: RawTrack) -> str:
    lines = [f"{track.chrom} {s} {e} {v!r}" for s, e, v in track.intervals]
    return "\n".join(lines) + ("\n" if lines else "")


def bin_signal(track: RawTrack, bin_size=DEFAULT_BIN_SIZE, span=None,
               aggregator="mean") -> BinnedTrack:
    """Aggregate interval signal into fixed-size bins over `span`.

    `mean` is the coverage-weighted mean (uncovered base pairs count as 0),
    which conserves total mass; `max` takes the peak interval value touching
    the bin.
    """
    if bin_size <= 0:
        raise ValueError("bin_size must be > 0")
    if span is None:
        span = track.span()
    start, end = span
    if end <= start:
        raise ValueError("span end must exceed start")
    if (end - start) % bin_size:
        raise ValueError(f"span length {end - start} not divisible by "
                         f"bin_size {bin_size}")
    n_bins = (end - start) // bin_size
    values = np.zeros(n_bins)
    if aggregator not in ("mean", "max"):
        raise ValueError(f"unknown aggregator {aggregator!r}")
    for s, e, v in track.intervals:
        lo, hi = max(s, start), min(e, end)
        if lo >= hi:
            continue
        b0, b1 = (lo - start) // bin_size, (hi - 1 - start) // bin_size
        for b in range(b0, b1 + 1):
            bs = start + b * bin_size
            if aggregator == "mean":
                overlap = min(hi, bs + bin_size) - max(lo, bs)
                values[b] += v * overlap / bin_size
            else:
                values[b] = max(values[b], v)
    return BinnedTrack(marker_name=track.marker_name, bin_size=bin_size,
                       start=start, values=values)


def binarize(binned: BinnedTrack, threshold, strict=True) -> np.ndarray:
    """Mark a bin active when its value exceeds the threshold.

    Strict comparison (value > threshold) by default; `strict=False` uses >=.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if strict:
        return (binned.values > threshold).astype(np.int8)
    return (binned.values >= threshold).astype(np.int8)


def assemble(rows) -> IncidenceMatrix:
    """Stack (marker_name, binary row) pairs into an incidence matrix."""
    rows = list(rows)
    if not rows:
        raise ValueError("at least one marker row required")
    names = [name for name, _ in rows]
    if len(set(names)) != len(names):
        raise ValueError("duplicate marker names")
    lengths = {len(r) for _, r in rows}
    if len(lengths) != 1:
        raise ValueError(f"ragged rows: lengths {sorted(lengths)}")
    data = np.vstack([np.asarray(r, dtype=np.int8) for _, r in rows])
    return IncidenceMatrix(data=data, marker_names=names)
