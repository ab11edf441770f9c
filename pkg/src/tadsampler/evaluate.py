"""Agreement metrics and parameter sweeps.

R-squared is computed in log space over the flattened union of all moment
groups (statistics span orders of magnitude); structural distance to a
template state uses the (relative) Hamming count.  `sweep` re-runs the
sample-and-evaluate pipeline along one knob and tabulates both numbers per
grid point.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .embed import EmbeddingError, chain_metrics, embed_ising, find_embedding
from .model import TemplateBias, apply_bias, apply_threshold
from .sampler import (ReverseSchedule, SWEEPS_PER_MICROSECOND, sample_many)
from .stats import StatsSummary, stats_of_samples
from .topology import (cartesian_product, marker_intersection_graph,
                       nucleosome_intersection_graph)

__all__ = [
    "r2_log",
    "hamming",
    "rel_hamming",
    "EvalReport",
    "SweepContext",
    "sweep",
    "scaling_sweep",
]


def r2_log(empirical: StatsSummary, sampled: StatsSummary, epsilon=1e-4):
    """Coefficient of determination between log-statistics.

    Values are floored at epsilon before taking logs so empty statistics do
    not blow up.  Raises when the empirical statistics are all equal (zero
    total variance).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    e = np.log(np.maximum(empirical.flatten(), epsilon))
    s = np.log(np.maximum(sampled.flatten(), epsilon))
    if e.shape != s.shape:
        raise ValueError("statistics shapes differ")
    denom = ((e - e.mean()) ** 2).sum()
    if denom == 0:
        raise ValueError("degenerate empirical statistics: zero variance")
    return float(1.0 - ((e - s) ** 2).sum() / denom)


def hamming(template, state):
    """Count of disagreeing incidences: (1/2) sum (1 - A_i x_i)."""
    a = np.asarray(template)
    x = np.asarray(state)
    if a.shape != x.shape:
        raise ValueError("length mismatch")
    for arr in (a, x):
        if not np.all(np.isin(arr, (-1, 1))):
            raise ValueError("entries must be -1 or +1")
    return int(round(0.5 * (1 - a * x).sum()))


def rel_hamming(template, state, M, N):
    """Hamming distance normalized by the incidence count M*N."""
    a = np.asarray(template).ravel()
    if len(a) != M * N:
        raise ValueError("dimension mismatch")
    return hamming(a, np.asarray(state).ravel()) / (M * N)


@dataclass
class EvalReport:
    axis: str
    rows: list = field(default_factory=list)

    def values(self, key):
        return [r[key] for r in self.rows if key in r]

    def to_csv(self, path):
        keys = []
        for r in self.rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for r in self.rows:
                w.writerow([repr(r[k]) if isinstance(r.get(k), float)
                            else r.get(k, "") for k in keys])

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump({"axis": self.axis, "rows": self.rows}, fh, indent=1)


@dataclass
class SweepContext:
    """Everything a sweep needs to run the pipeline at one grid point."""

    model: object                 # logical IsingModel
    shape: object                 # ModelShape
    empirical: StatsSummary
    template: np.ndarray = None   # (M, N) in {-1,+1}
    backend: str = "sa"
    backend_params: dict = field(default_factory=dict)
    n_smpl: int = 100
    master_seed: int = 0
    epsilon: float = 1e-4
    target: object = None         # HardwareGraph, for J_C sweeps
    embedding: object = None
    t_r_ns: float = 200.0
    s_r: float = 0.4
    builder: object = None        # callable(value) -> IsingModel, for "boundary"


def _evaluate_samples(ctx, sset):
    binary = sset.binary_states()
    occ = sset.occurrences()
    sampled = stats_of_samples(binary, occ, ctx.shape)
    row = {"r2": r2_log(ctx.empirical, sampled, ctx.epsilon)}
    if ctx.template is not None:
        flat = TemplateBias(ctx.template, 0.0).flat()
        spins = 2.0 * binary - 1.0
        d = np.array([rel_hamming(flat, s, ctx.shape.M, ctx.shape.N)
                      for s in spins])
        row.update(d_mean=float((d * occ).sum() / occ.sum()),
                   d_min=float(d.min()), d_max=float(d.max()))
    return row


def _point_model_params(ctx, axis, value):
    model = ctx.model
    params = dict(ctx.backend_params)
    backend = ctx.backend
    physical = None
    extra = {}
    if axis == "f":
        model = apply_bias(model, TemplateBias(ctx.template, value))
    elif axis == "delta":
        model = apply_threshold(model, value)
        extra["edge_count"] = len(model.J)
    elif axis == "T_A":
        params["sweeps"] = max(int(value * SWEEPS_PER_MICROSECOND), 1)
    elif axis == "J_C":
        if ctx.embedding is None or ctx.target is None:
            raise ValueError("J_C sweep requires target and embedding")
        physical = embed_ising(model, ctx.embedding, ctx.target, value)
    elif axis in ("s_R", "t_R"):
        if backend != "reverse":
            backend = "reverse"
            params = {}  # forward-anneal knobs do not apply
        init = TemplateBias(ctx.template, 0.0).flat()
        rs = (ReverseSchedule(value, ctx.t_r_ns, init) if axis == "s_R"
              else ReverseSchedule(ctx.s_r, value, init))
        params["rs"] = rs
    elif axis == "boundary":
        if ctx.builder is None:
            raise ValueError("boundary sweep requires a model builder")
        model = ctx.builder(value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return model, backend, params, physical, extra


def sweep(axis, grid, ctx: SweepContext) -> EvalReport:
    """Sample-and-evaluate once per grid value along one knob.

    Pipeline failures abort only their grid point; the error message is
    recorded and the sweep continues.  Reports are deterministic given the
    master seed.
    """
    if len(grid) == 0:
        raise ValueError("empty grid")
    report = EvalReport(axis=axis)
    for idx, value in enumerate(grid):
        row = {"axis": axis, "value": value}
        try:
            model, backend, params, physical, extra = _point_model_params(
                ctx, axis, value)
            sset = sample_many(backend, model, ctx.n_smpl,
                               master_seed=(ctx.master_seed, idx),
                               params=params, physical=physical)
            row.update(_evaluate_samples(ctx, sset))
            row.update(extra)
            if physical is not None:
                row["break_rate"] = sset.mean_break_fraction()
        except Exception as exc:  # recorded, sweep continues
            row["error"] = f"{type(exc).__name__}: {exc}"
        report.rows.append(row)
    return report


def scaling_sweep(shapes, topologies, seeds, boundary="periodic",
                  max_tries=3, **embed_opts):
    """Mean/max chain lengths per (shape, topology) over embedding seeds."""
    rows = []
    for (M, N, L) in shapes:
        src = cartesian_product(marker_intersection_graph(M),
                                nucleosome_intersection_graph(N, L, boundary))
        for hw in topologies:
            means, maxes = [], []
            failures = 0
            for seed in seeds:
                try:
                    emb = find_embedding(src, hw, seed=seed,
                                         max_tries=max_tries, **embed_opts)
                except EmbeddingError:
                    failures += 1
                    continue
                cm = chain_metrics(emb, hw)
                means.append(cm.mean_length())
                maxes.append(cm.max_length())
            row = {"M": M, "N": N, "L": L, "topology": hw.kind,
                   "m": hw.m, "failures": failures}
            if means:
                row.update(
                    mean_chain=float(np.mean(means)),
                    mean_chain_std=float(np.std(means)),
                    max_chain=float(np.mean(maxes)),
                    max_chain_std=float(np.std(maxes)))
            rows.append(row)
    report = EvalReport(axis="scaling")
    report.rows = rows
    return report
