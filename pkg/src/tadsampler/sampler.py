"""Hardware-substitute annealing backends.

Three samplers stand in for the quantum processor: classical simulated
annealing, a path-integral simulated quantum annealer driven by an A(s)/B(s)
schedule, and reverse annealing from a template state.  All draw their
randomness from explicitly derived per-anneal seeds, so a sample set is a
pure function of (model, parameters, master seed).

The nominal annealing time T_A (microseconds) maps onto Metropolis sweeps
with a fixed documented factor (1 us -> 1000 sweeps); for a simulator the
wall-clock figure is only a monotone knob.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
from dataclasses import dataclass, field

import numpy as np

from .learn import _dense
from .model import IsingModel, ising_energy

__all__ = [
    "AnnealSchedule",
    "ReverseSchedule",
    "SampleRecord",
    "SampleSet",
    "simulated_anneal",
    "simulated_quantum_anneal",
    "reverse_anneal",
    "sample_many",
    "SWEEPS_PER_MICROSECOND",
    "SWEEPS_PER_NANOSECOND",
]

SWEEPS_PER_MICROSECOND = 1000.0
SWEEPS_PER_NANOSECOND = 1.0


@dataclass
class AnnealSchedule:
    """Transverse weight A(s) and problem weight B(s) on a grid of s."""

    s: np.ndarray
    A: np.ndarray
    B: np.ndarray
    total_time_us: float = 20.0

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if not (len(self.s) == len(self.A) == len(self.B)):
            raise ValueError("s, A, B must have equal length")
        if len(self.s) < 2 or self.s[0] != 0.0 or self.s[-1] != 1.0:
            raise ValueError("s must run from 0 to 1")
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("s must be strictly increasing")
        if np.any(np.diff(self.A) > 1e-12):
            raise ValueError("A(s) must be non-increasing")
        if np.any(np.diff(self.B) < -1e-12):
            raise ValueError("B(s) must be non-decreasing")

    def interp(self, s):
        return (float(np.interp(s, self.s, self.A)),
                float(np.interp(s, self.s, self.B)))

    @classmethod
    def default(cls, total_time_us=20.0):
        ref = importlib.resources.files("tadsampler") / "data/default_schedule.csv"
        with ref.open() as fh:
            return cls.from_csv(fh, total_time_us)

    @classmethod
    def from_csv(cls, fh_or_path, total_time_us=20.0):
        """Three-column CSV `s,A,B` with a header line."""
        if isinstance(fh_or_path, (str, bytes)) or hasattr(fh_or_path, "__fspath__"):
            with open(fh_or_path) as fh:
                return cls.from_csv(fh, total_time_us)
        rows = list(csv.reader(fh_or_path))
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(data[:, 0], data[:, 1], data[:, 2], total_time_us)


@dataclass
class ReverseSchedule:
    """Reversal depth s_r in (0, 1], hold/return time t_r (nanoseconds)."""

    s_r: float
    t_r_ns: float
    initial_state: np.ndarray = None

    def __post_init__(self):
        if not 0 < self.s_r <= 1:
            raise ValueError("s_r must lie in (0, 1]")
        if self.t_r_ns < 0:
            raise ValueError("t_r must be >= 0")
        if self.initial_state is not None:
            self.initial_state = np.asarray(self.initial_state, dtype=float)


@dataclass
class SampleRecord:
    state: tuple
    energy: float
    occurrences: int
    chain_break_fraction: float = 0.0


@dataclass
class SampleSet:
    records: list
    backend: str = ""
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def total_occurrences(self):
        return sum(r.occurrences for r in self.records)

    def states(self):
        return np.array([r.state for r in self.records])

    def occurrences(self):
        return np.array([r.occurrences for r in self.records])

    def energies(self):
        return np.array([r.energy for r in self.records])

    def binary_states(self):
        """States as {0,1} incidences regardless of stored convention."""
        st = self.states()
        if st.size and st.min() < 0:
            return ((st + 1) // 2).astype(int)
        return st.astype(int)

    def mean_break_fraction(self):
        occ = self.occurrences()
        fr = np.array([r.chain_break_fraction for r in self.records])
        return float((fr * occ).sum() / occ.sum())

    def beta_eff(self):
        """Effective inverse temperature: occurrence-weighted log-linear fit
        of ln(count) against energy.  None when degenerate."""
        e = self.energies()
        occ = self.occurrences().astype(float)
        if len(np.unique(e)) < 2:
            return None
        coef = np.polyfit(e, np.log(occ), 1, w=np.sqrt(occ))
        return float(-coef[0])

    def to_jsonl(self, path):
        with open(path, "w") as fh:
            for r in self.records:
                fh.write(json.dumps({
                    "state": [int(v) for v in r.state],
                    "energy": r.energy,
                    "occurrences": r.occurrences,
                    "chain_break_fraction": r.chain_break_fraction}) + "\n")

    @classmethod
    def from_jsonl(cls, path, backend=""):
        records = []
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                doc = json.loads(line)
                records.append(SampleRecord(
                    state=tuple(doc["state"]), energy=doc["energy"],
                    occurrences=doc["occurrences"],
                    chain_break_fraction=doc.get("chain_break_fraction", 0.0)))
        return cls(records=records, backend=backend)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["energy", "occurrences", "chain_break_fraction",
                        "state"])
            for r in self.records:
                w.writerow([repr(r.energy), r.occurrences,
                            repr(r.chain_break_fraction),
                            "".join("1" if v > 0 else "0" for v in r.state)])


def _local_fields(a, W, s):
    return a + W @ s


def _metropolis_sweeps(a, W, s, betas, rng):
    """Sequential single-spin Metropolis sweeps at the given temperatures.

    `betas` holds one inverse temperature per sweep; the state and its local
    fields are updated incrementally.
    """
    n = len(s)
    local = _local_fields(a, W, s)
    for beta in betas:
        for i in rng.permutation(n):
            de = -2.0 * s[i] * local[i]
            if de < 0 or rng.random() < np.exp(-beta * max(de, 0.0)):
                s[i] = -s[i]
                local += 2.0 * s[i] * W[:, i]
    return s


def simulated_anneal(model: IsingModel, sweeps=1000, beta_hot=0.1,
                     beta_cold=5.0, rng=None):
    """Classical simulated annealing under a geometric temperature ramp."""
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    a, W, _ = _dense(model)
    s = 2.0 * rng.integers(0, 2, model.num_vars) - 1.0
    betas = np.geomspace(beta_hot, beta_cold, sweeps)
    return _metropolis_sweeps(a, W, s, betas, rng)


def simulated_quantum_anneal(model: IsingModel, schedule: AnnealSchedule = None,
                             trotter_slices=8, beta=2.0, sweeps_per_point=2,
                             rng=None):
    """Path-integral Monte Carlo sweep along the annealing schedule.

    Runs `trotter_slices` coupled replicas; the inter-replica ferromagnetic
    coupling grows as A(s) shuts off while problem couplings scale with
    B(s).  Readout is the per-spin majority over replicas (ties seeded).
    """
    if trotter_slices < 2:
        raise ValueError("trotter_slices must be >= 2")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    schedule = schedule or AnnealSchedule.default()
    a, W, _ = _dense(model)
    n = model.num_vars
    P = trotter_slices
    beta_p = beta / P
    states = 2.0 * rng.integers(0, 2, (P, n)) - 1.0
    for sv in schedule.s:
        A, B = schedule.interp(sv)
        arg = np.tanh(max(beta_p * A, 1e-12))
        K = min(-0.5 / beta_p * np.log(arg), 1e3) if arg < 1 else 0.0
        for _ in range(sweeps_per_point):
            for p in range(P):
                up, dn = (p + 1) % P, (p - 1) % P
                local = _local_fields(a, W, states[p])
                for i in rng.permutation(n):
                    de = -2.0 * states[p, i] * (B / P) * local[i]
                    de += 2.0 * K * states[p, i] * (states[up, i] + states[dn, i])
                    if de < 0 or rng.random() < np.exp(-beta * max(de, 0.0)):
                        states[p, i] = -states[p, i]
                        local += 2.0 * states[p, i] * W[:, i]
    votes = states.sum(axis=0)
    out = np.where(votes > 0, 1.0, -1.0)
    ties = votes == 0
    if ties.any():
        out[ties] = 2.0 * rng.integers(0, 2, int(ties.sum())) - 1.0
    return out


def reverse_anneal(model: IsingModel, rs: ReverseSchedule, rng=None,
                   schedule: AnnealSchedule = None, n_points=16,
                   beta_base=3.0, beta_min=0.05):
    """Anneal backwards from a classical state to s_r, hold, and return.

    The couplings and fields are untouched; the effective inverse
    temperature tracks how far the problem weight is turned down,
    beta(s) = beta_base * B(s) / B(1), so exploration peaks at the reversal
    point and deeper reversals explore strictly more.  s_r = 1 performs no
    moves and returns the initial state unchanged.
    """
    if rs.initial_state is None:
        raise ValueError("reverse schedule requires an initial state")
    if len(rs.initial_state) != model.num_vars:
        raise ValueError("initial state length mismatch")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    schedule = schedule or AnnealSchedule.default()
    s = rs.initial_state.copy()
    if rs.s_r >= 1.0:
        return s
    down = np.linspace(1.0, rs.s_r, n_points, endpoint=False)[1:]
    hold = np.full(max(int(round(rs.t_r_ns * SWEEPS_PER_NANOSECOND)), 1),
                   rs.s_r)
    up = np.linspace(rs.s_r, 1.0, n_points, endpoint=False)
    path = np.concatenate([down, hold, up])
    a, W, _ = _dense(model)
    b_full = schedule.interp(1.0)[1]
    betas = np.empty(len(path))
    for k, sv in enumerate(path):
        B = schedule.interp(sv)[1]
        betas[k] = np.clip(beta_base * B / b_full, beta_min, beta_base)
    return _metropolis_sweeps(a, W, s, betas, rng)


_BACKENDS = {
    "sa": simulated_anneal,
    "sqa": simulated_quantum_anneal,
    "reverse": reverse_anneal,
}


def sample_many(backend, model: IsingModel, n_smpl, master_seed=0,
                params=None, physical=None, copy_models=None) -> SampleSet:
    """Aggregate n_smpl independent anneals into a SampleSet.

    backend: "sa", "sqa", "reverse" or a callable(model, rng=...) -> state.
    With `physical` (a PhysicalIsing), anneals run on the physical model and
    samples are unembedded with majority-vote chain-break resolution before
    aggregation.  With `copy_models` (list of (IsingModel, variable-index
    list) for a replicated cluster), every anneal yields one logical sample
    per copy.  Anneal k draws from seed (master_seed, k); identical seeds
    give identical SampleSets.
    """
    from .embed import unembed

    if n_smpl < 1:
        raise ValueError("n_smpl must be >= 1")
    params = dict(params or {})
    fn = _BACKENDS.get(backend, backend)
    if not callable(fn):
        raise ValueError(f"unknown backend {backend!r}")
    run_model = physical.model if physical is not None else model
    agg = {}

    def record(state, energy, breaks):
        key = tuple(int(v) for v in state)
        if key in agg:
            agg[key][0] += 1
            agg[key][2] += breaks
        else:
            agg[key] = [1, energy, breaks]

    base = (tuple(master_seed) if isinstance(master_seed, (tuple, list))
            else (master_seed,))
    for k in range(n_smpl):
        rng = np.random.default_rng((*base, k))
        raw = fn(run_model, rng=rng, **params)
        if physical is not None:
            logical, broken = unembed(raw, physical.embedding,
                                      rng=np.random.default_rng((*base, k, 1)))
            record(logical, ising_energy(model, logical),
                   float(broken.mean()))
        elif copy_models is not None:
            for sub_model, var_idx in copy_models:
                sub = raw[var_idx]
                record(sub, ising_energy(sub_model, sub), 0.0)
        else:
            record(raw, ising_energy(model, raw), 0.0)
    records = [SampleRecord(state=k, energy=v[1], occurrences=v[0],
                            chain_break_fraction=v[2] / v[0])
               for k, v in agg.items()]
    records.sort(key=lambda r: (r.energy, r.state))
    name = backend if isinstance(backend, str) else getattr(
        backend, "__name__", "custom")
    return SampleSet(records=records, backend=name,
                     params={"n_smpl": n_smpl, "master_seed": master_seed,
                             **{k: v for k, v in params.items()
                                if np.isscalar(v)}})
