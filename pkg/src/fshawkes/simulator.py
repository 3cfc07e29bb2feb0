"""Thinning simulation of the closed-loop state/point-process system."""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from scipy.special import expit

from .basis import BasisFunction, BasisSet, basis_eval
from .core import ModelParams, Realization


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    basis: BasisSet
    T: float
    initial_state: Union[int, Literal["uniform"]] = 0
    rng_seed: int = 0

    def __post_init__(self):
        if self.params.B != self.basis.B:
            raise ValueError(f"params expect B={self.params.B} basis functions, basis has {self.basis.B}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("T must be positive")
        if self.initial_state != "uniform" and not 0 <= int(self.initial_state) < self.params.K:
            raise ValueError(f"initial_state must be 'uniform' or in [0, {self.params.K})")


def simulate(config: SimConfig, seed: int | None = None) -> Realization:
    """One realization on [0, T] by superposition thinning.

    Candidates arrive at rate sum_i lambda_bar_i, pick a dimension with
    probability proportional to lambda_bar_i and are kept with probability
    sigmoid(h_i(t, z(t))). Each accepted event is labelled with the state in
    force and then triggers a draw from the row z(t) of that dimension's
    transition matrix.
    """
    p, basis = config.params, config.basis
    rng = np.random.default_rng(config.rng_seed if seed is None else seed)
    M, K, B = p.M, p.K, p.B
    total = float(p.lambda_bar.sum())
    cum = np.cumsum(p.lambda_bar) / total
    support = basis.support_end

    if config.initial_state == "uniform":
        z = int(rng.integers(K))
    else:
        z = int(config.initial_state)

    past = [[] for _ in range(M)]
    times, dims, states = [], [], []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / total)
        if t > config.T:
            break
        i = min(int(np.searchsorted(cum, rng.uniform(), side="right")), M - 1)
        F = np.empty(M * B + 1)
        F[0] = 1.0
        for j in range(M):
            recent = np.asarray(past[j][bisect_left(past[j], t - support):], dtype=float)
            for b, f in enumerate(basis):
                F[1 + j * B + b] = basis_eval(f, t - recent, support).sum() if recent.size else 0.0
        if rng.uniform() < expit(F @ p.weights[i, z]):
            times.append(t)
            dims.append(i)
            states.append(z)
            past[i].append(t)
            z = int(rng.choice(K, p=p.transition[i, z]))
    return Realization(np.array(times), np.array(dims, dtype=int), np.array(states, dtype=int),
                       final_state=z, T=config.T, M=M, K=K)


def fixture_basis() -> BasisSet:
    """Two Beta(50, 50) densities scaled to 6, shifted by -2 and 0."""
    return BasisSet(
        functions=(BasisFunction(50.0, 50.0, 6.0, -2.0), BasisFunction(50.0, 50.0, 6.0, 0.0)),
        support_end=6.0,
    )


def fixture_params() -> ModelParams:
    # rows: [mu, w_i1b1, w_i1b2, w_i2b1, w_i2b2]
    state1 = [[1.0, 1.0, 0.5, -0.5, -0.25],
              [1.0, -0.25, -0.5, 0.5, 1.0]]
    state2 = [[0.0, 0.5, 1.0, -0.25, -0.5],
              [0.0, -0.5, -0.25, 1.0, 0.5]]
    weights = np.stack([np.array(state1), np.array(state2)], axis=1)  # (M, K, D)
    phi = np.array([[0.99, 0.01], [0.01, 0.99]])
    return ModelParams(transition=np.stack([phi, phi]), lambda_bar=np.array([2.0, 2.0]),
                       weights=weights)


def builtin_sim_fixture(seed: int = 0, T: float = 2000.0) -> SimConfig:
    """The 2-state, 2-dimensional self-exciting / mutually inhibiting benchmark."""
    return SimConfig(params=fixture_params(), basis=fixture_basis(), T=T, initial_state=0,
                     rng_seed=seed)


def fixture_run_config(seed: int = 0, T: float = 2000.0):
    """The benchmark as a RunConfig carrying the ground-truth model."""
    from .config import ModelSpec, RunConfig
    return RunConfig(basis=fixture_basis(), seed=seed,
                     model=ModelSpec(params=fixture_params(), T=T, initial_state=0))


def random_problem(M: int, K: int, B: int, n_events: int = 2000, seed: int = 0,
                   support: float = 6.0) -> tuple[Realization, SimConfig]:
    """A random weakly coupled model and a realization of roughly ``n_events``.

    Bumps Beta(5, 5) of width 2*support/(B+1) tile [0, support]; influence
    weights are N(0, 0.1^2), base activation 0, lambda_bar 2 and transition
    rows Dirichlet(2), so each dimension fires about once per unit time.
    """
    rng = np.random.default_rng(seed)
    width = 2 * support / (B + 1)
    basis = BasisSet(tuple(BasisFunction(5.0, 5.0, width, b * support / (B + 1)) for b in range(B)),
                     support)
    W = np.zeros((M, K, M * B + 1))
    W[:, :, 1:] = rng.normal(0.0, 0.1, size=(M, K, M * B))
    P = rng.dirichlet(2.0 * np.ones(K), size=(M, K))
    cfg = SimConfig(ModelParams(P, np.full(M, 2.0), W), basis, T=n_events / M, rng_seed=seed)
    return simulate(cfg), cfg
