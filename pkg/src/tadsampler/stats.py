"""Empirical moment statistics of incidence data.

These moments (mean incidence, intra-nucleosome marker co-incidence,
inter-nucleosome same-marker co-incidence at distances 1..L) are both the
learning target and the evaluation reference.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StatsSummary",
    "mean_incidence",
    "intra_corr",
    "inter_corr",
    "compute_stats",
    "stats_of_samples",
]


@dataclass
class StatsSummary:
    mu: np.ndarray          # (M,)
    rho_intra: np.ndarray   # (M, M), symmetric, diagonal = mu
    rho_inter: np.ndarray   # (M, L) for distances 1..L
    boundary: str = "periodic"

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.rho_intra = np.asarray(self.rho_intra, dtype=float)
        self.rho_inter = np.asarray(self.rho_inter, dtype=float)
        M = len(self.mu)
        if self.rho_intra.shape != (M, M):
            raise ValueError("rho_intra must be (M, M)")
        if self.rho_inter.ndim != 2 or self.rho_inter.shape[0] != M:
            raise ValueError("rho_inter must be (M, L)")

    @property
    def M(self):
        return len(self.mu)

    @property
    def L(self):
        return self.rho_inter.shape[1]

    def flatten(self):
        """All statistics as one vector: mu, strict-lower rho_intra, rho_inter."""
        tri = self.rho_intra[np.tril_indices(self.M, -1)]
        return np.concatenate([self.mu, tri, self.rho_inter.ravel()])

    def to_json(self, path):
        doc = {"boundary": self.boundary, "mu": self.mu.tolist(),
               "rho_intra": self.rho_intra.tolist(),
               "rho_inter": self.rho_inter.tolist()}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        return cls(np.asarray(doc["mu"]), np.asarray(doc["rho_intra"]),
                   np.asarray(doc["rho_inter"]), doc["boundary"])

    def to_csv(self, path):
        """Long-format export: group, index columns, value."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["group", "m1", "m2_or_l", "value"])
            for m, v in enumerate(self.mu):
                w.writerow(["mu", m, "", repr(v)])
            for m1 in range(self.M):
                for m2 in range(m1):
                    w.writerow(["rho_intra", m1, m2,
                                repr(self.rho_intra[m1, m2])])
            for m in range(self.M):
                for l in range(self.L):
                    w.writerow(["rho_inter", m, l + 1,
                                repr(self.rho_inter[m, l])])


def mean_incidence(data) -> np.ndarray:
    """mu_m = (1/N) sum_n x_m^n."""
    data = np.asarray(data, dtype=float)
    if data.shape[1] < 1:
        raise ValueError("N must be >= 1")
    return data.mean(axis=1)


def intra_corr(data) -> np.ndarray:
    """rho_{m m'} = (1/N) sum_n x_m^n x_{m'}^n (symmetric, diag = mu)."""
    data = np.asarray(data, dtype=float)
    return data @ data.T / data.shape[1]


def inter_corr(data, L, boundary="periodic", denominator="valid") -> np.ndarray:
    """rho_m^l = mean over n of x_m^n x_m^{n+l} for l = 1..L.

    Periodic wraps n + l mod N and divides by N.  Open boundaries sum the
    N - l valid terms; by default the mean divides by the term count (the
    unbiased estimator), `denominator="n"` reproduces a flat 1/N instead.
    """
    data = np.asarray(data, dtype=float)
    N = data.shape[1]
    if not 1 <= L < N:
        raise ValueError("require 1 <= L < N")
    out = np.empty((data.shape[0], L))
    for l in range(1, L + 1):
        if boundary == "periodic":
            out[:, l - 1] = (data * np.roll(data, -l, axis=1)).sum(axis=1) / N
        elif boundary == "open":
            s = (data[:, :-l] * data[:, l:]).sum(axis=1)
            denom = N if denominator == "n" else N - l
            out[:, l - 1] = s / denom
        else:
            raise ValueError(f"unknown boundary {boundary!r}")
    return out


def compute_stats(data, L, boundary="periodic", denominator="valid") -> StatsSummary:
    """All moment groups of one incidence matrix (or raw (M, N) array)."""
    data = getattr(data, "data", data)
    return StatsSummary(mu=mean_incidence(data),
                        rho_intra=intra_corr(data),
                        rho_inter=inter_corr(data, L, boundary, denominator),
                        boundary=boundary)


def stats_of_samples(states, occurrences, shape, denominator="valid") -> StatsSummary:
    """Occurrence-weighted statistics over sampled incidence matrices.

    `states` holds binary samples of length M*N in variable-index order
    (i = n*M + m); each is reshaped to (M, N) and the moments are averaged
    over both positions and samples.
    """
    states = np.asarray(states)
    occurrences = np.asarray(occurrences, dtype=float)
    if len(states) == 0:
        raise ValueError("empty sample set")
    if len(states) != len(occurrences):
        raise ValueError("states and occurrences length mismatch")
    M, N, L = shape.M, shape.N, shape.L
    weights = occurrences / occurrences.sum()
    mu = np.zeros(M)
    rho_a = np.zeros((M, M))
    rho_e = np.zeros((M, L))
    for state, wgt in zip(states, weights):
        x = np.asarray(state).reshape(N, M).T.astype(float)
        mu += wgt * mean_incidence(x)
        rho_a += wgt * intra_corr(x)
        rho_e += wgt * inter_corr(x, L, shape.boundary, denominator)
    return StatsSummary(mu=mu, rho_intra=rho_a, rho_inter=rho_e,
                        boundary=shape.boundary)
