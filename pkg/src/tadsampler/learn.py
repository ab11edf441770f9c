"""Moment-matching parameter learning via Metropolis Boltzmann sampling.

The learner iterates: draw a batch of Boltzmann samples from the current
model, measure the same moment groups as the empirical target, and nudge
each parameter against its moment discrepancy (over-represented moments get
a larger energy penalty).  Sampling runs many independent chains in one
vectorized sweep loop.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .model import (CartesianParams, IsingModel, ModelShape, QuboModel,
                    build_qubo)

__all__ = [
    "LearnConfig",
    "LearnTrace",
    "metropolis_step",
    "boltzmann_sample",
    "sample_batch",
    "batch_moments",
    "learn_params",
]


@dataclass
class LearnConfig:
    beta: float = 1.0
    n_steps: int = 400           # Metropolis steps per sample
    n_samples: int = 200         # chains per learning iteration
    learning_rate: float = 0.3   # shared step size; per-group scale below
    group_scale: tuple = (1.0, 1.0, 1.0)   # (q, R, S) multipliers
    error_threshold: float = 0.05
    max_iters: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.beta, self.n_steps, self.n_samples, self.learning_rate,
               self.error_threshold, self.max_iters) <= 0:
            raise ValueError("all LearnConfig values must be positive")


@dataclass
class LearnTrace:
    total_error: list = field(default_factory=list)
    error_mu: list = field(default_factory=list)
    error_intra: list = field(default_factory=list)
    error_inter: list = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.total_error)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "total_error", "error_mu",
                        "error_intra", "error_inter"])
            for i in range(len(self)):
                w.writerow([i, repr(self.total_error[i]),
                            repr(self.error_mu[i]),
                            repr(self.error_intra[i]),
                            repr(self.error_inter[i])])


def _dense(model):
    """(linear a, symmetric coupling W, is_spin) for fast local fields."""
    n = model.num_vars
    W = np.zeros((n, n))
    if isinstance(model, QuboModel):
        a = model.linear.copy()
        for (i, j), v in model.quadratic.items():
            W[i, j] += v
            W[j, i] += v
        return a, W, False
    if isinstance(model, IsingModel):
        a = model.h.copy()
        for (i, j), v in model.J.items():
            W[i, j] += v
            W[j, i] += v
        return a, W, True
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _delta_e(a, W, x, i, is_spin):
    local = a[i] + W[i] @ x
    if is_spin:
        return -2.0 * x[i] * local
    return (1.0 - 2.0 * x[i]) * local


def metropolis_step(model, state, rng, beta=1.0):
    """One Metropolis update: flip a uniformly random variable with
    probability 1 if it lowers the energy, else exp(-beta * dE).

    The energy difference comes from the variable's local field, not a full
    energy re-evaluation.  The state is modified in place and returned.
    """
    a, W, is_spin = _dense(model)
    state = np.asarray(state, dtype=float)
    if len(state) != model.num_vars:
        raise ValueError("state length mismatch")
    i = int(rng.integers(model.num_vars))
    de = _delta_e(a, W, state, i, is_spin)
    if de < 0 or rng.random() < np.exp(-beta * de):
        state[i] = -state[i] if is_spin else 1.0 - state[i]
    return state


def sample_batch(model, n_chains, n_steps, rng, beta=1.0, init=None):
    """Run n_chains independent Metropolis chains for n_steps steps each.

    Chains start uniformly at random (or from `init`, shape (n_chains, n)).
    Returns the final states as an (n_chains, n) array of {0,1} or {-1,+1}.
    """
    a, W, is_spin = _dense(model)
    n = model.num_vars
    if init is None:
        states = rng.integers(0, 2, size=(n_chains, n)).astype(float)
        if is_spin:
            states = 2.0 * states - 1.0
    else:
        states = np.array(init, dtype=float)
    rows = np.arange(n_chains)
    for _ in range(n_steps):
        idx = rng.integers(n, size=n_chains)
        local = a[idx] + np.einsum("cn,cn->c", W[idx], states)
        sel = states[rows, idx]
        de = (-2.0 * sel if is_spin else 1.0 - 2.0 * sel) * local
        accept = rng.random(n_chains) < np.exp(-beta * np.maximum(de, 0.0))
        flip = rows[accept], idx[accept]
        states[flip] = -states[flip] if is_spin else 1.0 - states[flip]
    return states


def boltzmann_sample(model, cfg: LearnConfig, rng):
    """One state after cfg.n_steps Metropolis steps from a random start."""
    if cfg.n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    return sample_batch(model, 1, cfg.n_steps, rng, beta=cfg.beta)[0]


def batch_moments(states, shape: ModelShape, denominator="valid"):
    """(mu, rho_intra, rho_inter) averaged over a (C, M*N) binary batch."""
    C = len(states)
    x = np.asarray(states, dtype=float).reshape(C, shape.N, shape.M)
    x = np.swapaxes(x, 1, 2)  # (C, M, N)
    mu = x.mean(axis=(0, 2))
    rho_a = np.einsum("cmn,ckn->mk", x, x) / (C * shape.N)
    rho_e = np.empty((shape.M, shape.L))
    for l in range(1, shape.L + 1):
        if shape.boundary == "periodic":
            prod = x * np.roll(x, -l, axis=2)
            rho_e[:, l - 1] = prod.sum(axis=(0, 2)) / (C * shape.N)
        else:
            s = (x[:, :, :-l] * x[:, :, l:]).sum(axis=(0, 2))
            denom = shape.N if denominator == "n" else shape.N - l
            rho_e[:, l - 1] = s / (C * denom)
    return mu, rho_a, rho_e


def learn_params(target, shape: ModelShape, cfg: LearnConfig,
                 init_params=None, denominator="valid"):
    """Moment-match CartesianParams to a target StatsSummary.

    Stops once the summed absolute moment discrepancy drops below
    cfg.error_threshold; hitting max_iters first returns the best-seen
    parameters with trace.converged False (no exception).
    """
    if target.M != shape.M or target.L < shape.L:
        raise ValueError("target dimensions do not match shape")
    rng = np.random.default_rng(cfg.rng_seed)
    params = init_params or CartesianParams.random(shape.M, shape.L, rng)
    tril = np.tril_indices(shape.M, -1)
    t_mu = target.mu
    t_intra = target.rho_intra[tril]
    t_inter = target.rho_inter[:, :shape.L]
    trace = LearnTrace()
    lr_q, lr_r, lr_s = (cfg.learning_rate * s for s in cfg.group_scale)
    best = None
    for _ in range(cfg.max_iters):
        qubo = build_qubo(shape, params)
        states = sample_batch(qubo, cfg.n_samples, cfg.n_steps, rng,
                              beta=cfg.beta)
        mu, rho_a, rho_e = batch_moments(states, shape, denominator)
        d_mu = mu - t_mu
        d_intra = rho_a[tril] - t_intra
        d_inter = rho_e - t_inter
        e_mu = float(np.abs(d_mu).sum())
        e_intra = float(np.abs(d_intra).sum())
        e_inter = float(np.abs(d_inter).sum())
        total = e_mu + e_intra + e_inter
        trace.total_error.append(total)
        trace.error_mu.append(e_mu)
        trace.error_intra.append(e_intra)
        trace.error_inter.append(e_inter)
        if best is None or total < best[0]:
            best = (total, CartesianParams(params.q.copy(), params.R.copy(),
                                           params.S.copy()))
        if total < cfg.error_threshold:
            trace.converged = True
            break
        # over-represented moments get their energy term raised
        params.q = params.q + lr_q * d_mu
        R = params.R.copy()
        R[tril] += lr_r * d_intra
        params.R = R
        params.S = params.S + lr_s * d_inter
    if trace.converged:
        return params, trace
    return best[1], trace
