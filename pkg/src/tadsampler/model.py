"""Cartesian QUBO/Ising objective over marker-nucleosome incidences.

The objective couples markers on one nucleosome (R), the same marker across
nucleosome distances 1..L (S), and carries a per-marker bias (q); mixed
marker/nucleosome couplings are structurally zero.  Parameters are shared
across nucleosome positions, so a model of shape [M, N, L] is described by
M + M(M-1)/2 + M*L numbers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelShape",
    "CartesianParams",
    "QuboModel",
    "IsingModel",
    "TemplateBias",
    "index_map",
    "inverse_index",
    "build_qubo",
    "qubo_energy",
    "qubo_to_ising",
    "ising_energy",
    "apply_threshold",
    "apply_bias",
    "save_model_json",
    "load_model_json",
    "write_ising_edge_list",
    "read_ising_edge_list",
]

DEFAULT_MAX_MARKERS = 12


@dataclass(frozen=True)
class ModelShape:
    M: int
    N: int
    L: int
    boundary: str = "periodic"

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.N > 1 and not 1 <= self.L < self.N:
            raise ValueError("require 1 <= L < N")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def num_vars(self):
        return self.M * self.N


@dataclass
class CartesianParams:
    """q: (M,) biases; R: (M, M) intra couplings, only m1 > m2 used;
    S: (M, L) inter couplings for distances 1..L."""

    q: np.ndarray
    R: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.S = np.asarray(self.S, dtype=float)
        M = len(self.q)
        if self.R.shape != (M, M):
            raise ValueError("R must be (M, M)")
        if self.S.ndim != 2 or self.S.shape[0] != M:
            raise ValueError("S must be (M, L)")
        for a in (self.q, self.R, self.S):
            if not np.all(np.isfinite(a)):
                raise ValueError("parameters must be finite")

    @property
    def M(self):
        return len(self.q)

    @property
    def L(self):
        return self.S.shape[1]

    @staticmethod
    def zeros(M, L):
        return CartesianParams(np.zeros(M), np.zeros((M, M)), np.zeros((M, L)))

    @staticmethod
    def random(M, L, rng, scale=0.1):
        p = CartesianParams.zeros(M, L)
        p.q = rng.uniform(-scale, scale, M)
        R = rng.uniform(-scale, scale, (M, M))
        p.R = np.tril(R, -1)
        p.S = rng.uniform(-scale, scale, (M, L))
        return p


@dataclass
class QuboModel:
    """Energy sum_i linear_i x_i + sum_{i>j} Q_ij x_i x_j over x in {0,1}^n."""

    linear: np.ndarray
    quadratic: dict
    shape: ModelShape | None = None

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float)
        for (i, j) in self.quadratic:
            if not i > j:
                raise ValueError(f"quadratic key ({i},{j}) must satisfy i > j")
            if not (0 <= j and i < self.num_vars):
                raise ValueError(f"quadratic key ({i},{j}) out of range")

    @property
    def num_vars(self):
        return len(self.linear)


@dataclass
class IsingModel:
    """Energy offset + sum_i h_i s_i + sum_{i>j} J_ij s_i s_j over s in {-1,+1}^n."""

    h: np.ndarray
    J: dict
    offset: float = 0.0
    shape: ModelShape | None = None

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        for (i, j) in self.J:
            if not i > j:
                raise ValueError(f"coupling key ({i},{j}) must satisfy i > j")
            if not (0 <= j and i < self.num_vars):
                raise ValueError(f"coupling key ({i},{j}) out of range")

    @property
    def num_vars(self):
        return len(self.h)


@dataclass
class TemplateBias:
    """Spin template A (M x N, entries +-1) and bias strength f >= 0."""

    A: np.ndarray
    f: float

    def __post_init__(self):
        self.A = np.asarray(self.A)
        if not np.all(np.isin(self.A, (-1, 1))):
            raise ValueError("template entries must be -1 or +1")
        if self.f < 0:
            raise ValueError("bias strength f must be >= 0")

    def flat(self):
        """Template on variable indices: flat[i(m, n)] = A[m, n]."""
        return self.A.ravel(order="F").astype(float)


def index_map(m, n, M):
    """Variable index of marker m on nucleosome n: i = n*M + m."""
    if not 0 <= m < M:
        raise ValueError(f"marker index {m} out of range")
    if n < 0:
        raise ValueError(f"nucleosome index {n} out of range")
    return n * M + m


def inverse_index(i, M):
    """(m, n) of variable i; inverse of index_map."""
    if i < 0:
        raise ValueError("index must be >= 0")
    return i % M, i // M


def build_qubo(shape: ModelShape, params: CartesianParams) -> QuboModel:
    """Expand shared Cartesian parameters into a full QUBO.

    Periodic wrap uses n + l mod N; when 2L >= N the wrapped and direct edges
    coincide and their weights are merged by summing (with a warning).
    """
    M, N, L = shape.M, shape.N, shape.L
    if params.M != M or params.L < L:
        raise ValueError("parameter dimensions do not match shape")
    linear = np.empty(M * N)
    for n in range(N):
        linear[n * M:(n + 1) * M] = params.q
    quadratic = {}
    merged = False

    def add(i, j, val):
        nonlocal merged
        key = (i, j) if i > j else (j, i)
        if key in quadratic:
            quadratic[key] += val
            merged = True
        else:
            quadratic[key] = val

    for n in range(N):
        for m1 in range(M):
            for m2 in range(m1):
                add(index_map(m1, n, M), index_map(m2, n, M), params.R[m1, m2])
        for l in range(1, L + 1):
            n2 = n + l
            if shape.boundary == "periodic":
                n2 %= N
                if n2 == n:
                    continue
            elif n2 >= N:
                continue
            for m in range(M):
                add(index_map(m, n, M), index_map(m, n2, M), params.S[m, l - 1])
    if merged:
        warnings.warn("2L >= N under periodic boundaries: "
                      "coinciding inter-nucleosome edges merged by summing")
    return QuboModel(linear=linear, quadratic=quadratic, shape=shape)


def qubo_energy(model: QuboModel, x) -> float:
    x = np.asarray(x)
    if len(x) != model.num_vars:
        raise ValueError("state length mismatch")
    e = float(model.linear @ x)
    for (i, j), v in model.quadratic.items():
        e += v * x[i] * x[j]
    return e


def qubo_to_ising(model: QuboModel) -> IsingModel:
    """Exact transform under x_i = (1 + s_i) / 2 (0 -> -1, 1 -> +1).

    Energies of corresponding states are identical including the constant
    offset.
    """
    n = model.num_vars
    h = model.linear / 2.0
    offset = float(model.linear.sum()) / 2.0
    J = {}
    for (i, j), v in model.quadratic.items():
        J[(i, j)] = v / 4.0
        h[i] += v / 4.0
        h[j] += v / 4.0
        offset += v / 4.0
    return IsingModel(h=h, J=J, offset=offset, shape=model.shape)


def ising_energy(model: IsingModel, s) -> float:
    s = np.asarray(s)
    if len(s) != model.num_vars:
        raise ValueError("state length mismatch")
    e = model.offset + float(model.h @ s)
    for (i, j), v in model.J.items():
        e += v * s[i] * s[j]
    return e


def apply_threshold(model: IsingModel, delta: float) -> IsingModel:
    """Drop couplings with |J| < delta; fields and offset are untouched.

    The threshold acts on Ising-form couplings (the physical qubit-qubit
    interactions), not on QUBO entries.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    J = {k: v for k, v in model.J.items() if abs(v) >= delta}
    return IsingModel(h=model.h.copy(), J=J, offset=model.offset,
                      shape=model.shape)


def apply_bias(model: IsingModel, bias: TemplateBias) -> IsingModel:
    """Shift fields toward the template: h_i <- h_i - f * A_i.

    Couplings and offset are untouched, so the bias only tilts the landscape
    toward states resembling the template.
    """
    a = bias.flat()
    if len(a) != model.num_vars:
        raise ValueError("template shape does not match model")
    return IsingModel(h=model.h - bias.f * a, J=dict(model.J),
                      offset=model.offset, shape=model.shape)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_model_json(path, shape: ModelShape, params: CartesianParams):
    M = shape.M
    doc = {
        "shape": [shape.M, shape.N, shape.L],
        "boundary": shape.boundary,
        "q": params.q.tolist(),
        "R": [float(params.R[m1, m2]) for m1 in range(M) for m2 in range(m1)],
        "S": params.S.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_model_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    M, N, L = doc["shape"]
    shape = ModelShape(M, N, L, doc["boundary"])
    R = np.zeros((M, M))
    it = iter(doc["R"])
    for m1 in range(M):
        for m2 in range(m1):
            R[m1, m2] = next(it)
    params = CartesianParams(np.asarray(doc["q"]), R, np.asarray(doc["S"]))
    return shape, params


def write_ising_edge_list(model: IsingModel, path):
    """Text export: `offset <value>` header, then `i h_i` and `i j J_ij` lines."""
    with open(path, "w") as fh:
        fh.write(f"offset {float(model.offset)!r}\n")
        for i, hi in enumerate(model.h):
            fh.write(f"{i} {float(hi)!r}\n")
        for (i, j), v in sorted(model.J.items()):
            fh.write(f"{i} {j} {float(v)!r}\n")


def read_ising_edge_list(path) -> IsingModel:
    h = {}
    J = {}
    offset = 0.0
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "offset":
                offset = float(parts[1])
            elif len(parts) == 2:
                h[int(parts[0])] = float(parts[1])
            else:
                i, j = int(parts[0]), int(parts[1])
                J[(max(i, j), min(i, j))] = float(parts[2])
    n = max(h) + 1 if h else 0
    hv = np.zeros(n)
    for i, v in h.items():
        hv[i] = v
    return IsingModel(h=hv, J=J, offset=offset)
