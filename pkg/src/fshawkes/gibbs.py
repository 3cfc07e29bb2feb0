"""Augmented Gibbs sampler.

Each sweep draws, per dimension i: Polya-Gamma marks at the observed events,
the latent marked Poisson process by thinning, the transition rows, the
intensity upper bound and the per-state weight vectors. Given the observed
state path the dimensions are conditionally independent, so every dimension
runs on its own random stream and the chain is identical for any thread
count.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from ._linalg import gaussian_from_precision, sample_from_precision
from .basis import BasisSet, precompute_features
from .config import Priors
from .core import ModelParams, Realization
from .design import state_activation
from .polya_gamma import pg_sample

log = logging.getLogger(__name__)

# default integration grid density: 200,000 points for a horizon of 2,000
GRID_POINTS_PER_UNIT_TIME = 100


@dataclass
class LatentProcess:
    times: np.ndarray
    marks: np.ndarray
    features: np.ndarray
    states: np.ndarray

    @property
    def size(self) -> int:
        return int(self.times.size)

    @classmethod
    def empty(cls, D: int) -> "LatentProcess":
        return cls(np.zeros(0), np.zeros(0), np.zeros((0, D)), np.zeros(0, dtype=int))


@dataclass
class GibbsState:
    lambda_bar: np.ndarray                  # (M,)
    weights: np.ndarray                     # (M, K, D)
    transition: np.ndarray                  # (M, K, K)
    pg_marks: list = field(default_factory=list)
    latent: list = field(default_factory=list)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.transition, self.lambda_bar, self.weights)


@dataclass
class _DimData:
    """Observed events of one dimension with their features and states."""

    features: np.ndarray
    states: np.ndarray

    @property
    def n(self) -> int:
        return self.states.size


@dataclass(eq=False)
class GibbsChain:
    lambda_bar: np.ndarray      # (S, M)
    weights: np.ndarray         # (S, M, K, D)
    transition: np.ndarray      # (S, M, K, K)
    loglik: np.ndarray          # (iterations,) training log-likelihood per sweep
    n_events: int

    @property
    def n_samples(self) -> int:
        return self.lambda_bar.shape[0]

    @property
    def samples(self) -> list[ModelParams]:
        return [self.sample(s) for s in range(self.n_samples)]

    def sample(self, s: int) -> ModelParams:
        return ModelParams(self.transition[s], self.lambda_bar[s], self.weights[s])

    def posterior_mean(self) -> ModelParams:
        P = self.transition.mean(axis=0)
        return ModelParams(P / P.sum(axis=2, keepdims=True), self.lambda_bar.mean(axis=0),
                           self.weights.mean(axis=0))

    def posterior_sd(self) -> dict[str, np.ndarray]:
        return {"lambda_bar": self.lambda_bar.std(axis=0, ddof=1),
                "weights": self.weights.std(axis=0, ddof=1),
                "transition": self.transition.std(axis=0, ddof=1)}


def sample_pg_marks(rng: np.random.Generator, weights_i: np.ndarray, obs: _DimData) -> np.ndarray:
    """omega_n ~ PG(1, h_i(t_n, z(t_n))) for every observed event of one dimension."""
    if obs.n == 0:
        return np.zeros(0)
    return pg_sample(rng, state_activation(weights_i, obs.features, obs.states))


def sample_latent_process(rng: np.random.Generator, lambda_bar_i: float, weights_i: np.ndarray,
                          data: Realization, basis: BasisSet) -> LatentProcess:
    """Thinning at dominating rate lambda_bar_i with acceptance sigmoid(-h),
    then PG(1, h) marks at the kept points."""
    D = weights_i.shape[1]
    n = rng.poisson(lambda_bar_i * data.T)
    if n == 0:
        return LatentProcess.empty(D)
    cand = np.sort(rng.uniform(0.0, data.T, size=n))
    F = precompute_features(basis, data, cand)
    z = data.state_at(cand)
    h = state_activation(weights_i, F, z)
    keep = rng.uniform(size=n) < expit(-h)
    return LatentProcess(times=cand[keep], marks=pg_sample(rng, h[keep]),
                         features=F[keep], states=z[keep])


def sample_transition(rng: np.random.Generator, data: Realization, alpha) -> np.ndarray:
    """Rows phi_k^i ~ Dirichlet(s_k^i + alpha), shape (M, K, K)."""
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (data.K,))
    counts = data.transition_counts()
    out = np.empty(counts.shape)
    for i in range(data.M):
        out[i] = _dirichlet_rows(rng, counts[i] + alpha)
    return out


def _dirichlet_rows(rng: np.random.Generator, conc: np.ndarray) -> np.ndarray:
    return np.stack([rng.dirichlet(row) for row in conc])


def sample_lambda_bar(rng: np.random.Generator, n_events: int, n_latent: int, T: float) -> float:
    """lambda_bar_i ~ Gamma(shape=N_i + R_i, rate=T)."""
    shape = n_events + n_latent
    if shape < 1:
        raise ValueError("improper posterior for lambda_bar: no observed or latent points")
    return float(rng.gamma(shape, 1.0 / T))


def weight_conditional(F_obs: np.ndarray, omega_obs: np.ndarray, F_lat: np.ndarray,
                       omega_lat: np.ndarray, prior_precision: np.ndarray):
    """Gaussian conditional of one weight vector: (precision, linear term).

    precision = F^T diag(omega) F + K^-1 over observed and latent points;
    linear = F^T v with v = +1/2 at observed and -1/2 at latent points.
    """
    precision = prior_precision + (F_obs.T * omega_obs) @ F_obs + (F_lat.T * omega_lat) @ F_lat
    linear = 0.5 * F_obs.sum(axis=0) - 0.5 * F_lat.sum(axis=0)
    return precision, linear


def weight_posterior(F_obs, omega_obs, F_lat, omega_lat, prior_precision):
    """Mean and covariance of the weight conditional."""
    precision, linear = weight_conditional(F_obs, omega_obs, F_lat, omega_lat, prior_precision)
    mean, cov, _ = gaussian_from_precision(precision, linear)
    return mean, cov


def sample_weights(rng: np.random.Generator, obs: _DimData, omega_obs: np.ndarray,
                   latent: LatentProcess, K: int, prior_precision: np.ndarray) -> np.ndarray:
    """One weight vector per state, shape (K, D)."""
    D = prior_precision.shape[0]
    out = np.empty((K, D))
    for k in range(K):
        mo = obs.states == k
        ml = latent.states == k
        precision, linear = weight_conditional(obs.features[mo], omega_obs[mo],
                                               latent.features[ml], latent.marks[ml],
                                               prior_precision)
        out[k] = sample_from_precision(rng, precision, linear)
    return out


def _uniform_grid(T: float, n: int) -> tuple[np.ndarray, float]:
    step = T / n
    return (np.arange(n) + 0.5) * step, step


def run_gibbs(data: Realization, basis: BasisSet, priors: Priors = Priors(),
              iterations: int = 200, burn_in: int | None = None, thin: int = 1,
              seed: int = 0, ll_grid_points: int | None = None, threads: int = 1,
              progress: bool = False) -> GibbsChain:
    if data.n_events == 0:
        raise ValueError("cannot fit to a realization without events")
    if burn_in is None:
        burn_in = iterations // 2
    if iterations <= burn_in:
        raise ValueError("iterations must exceed burn_in")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    M, K, T = data.M, data.K, data.T
    D = M * basis.B + 1
    prior_prec = priors.prior_precision(D)
    alpha = priors.alpha_vector(K)

    F_events = precompute_features(basis, data, data.times)
    obs = [_DimData(F_events[data.dims == i], data.states[data.dims == i]) for i in range(M)]
    counts = data.transition_counts()

    if ll_grid_points is None:
        ll_grid_points = max(1000, int(round(GRID_POINTS_PER_UNIT_TIME * T)))
    grid, step = _uniform_grid(T, ll_grid_points)
    F_grid = precompute_features(basis, data, grid)
    z_grid = data.state_at(grid)

    N = data.counts()
    state = GibbsState(
        lambda_bar=np.maximum(2.0 * N / T, 1.0 / T),
        weights=np.zeros((M, K, D)),
        transition=np.full((M, K, K), 1.0 / K),
        pg_marks=[np.zeros(o.n) for o in obs],
        latent=[LatentProcess.empty(D) for _ in range(M)],
    )
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(M)]

    def sweep_dim(i: int):
        rng = streams[i]
        W_i = state.weights[i]
        marks = sample_pg_marks(rng, W_i, obs[i])
        latent = sample_latent_process(rng, state.lambda_bar[i], W_i, data, basis)
        P_i = _dirichlet_rows(rng, counts[i] + alpha)
        lam = sample_lambda_bar(rng, obs[i].n, latent.size, T)
        W_new = sample_weights(rng, obs[i], marks, latent, K, prior_prec)
        h_ev = state_activation(W_new, obs[i].features, obs[i].states)
        h_grid = state_activation(W_new, F_grid, z_grid)
        ll = obs[i].n * np.log(lam) + log_expit(h_ev).sum() - lam * step * expit(h_grid).sum()
        return marks, latent, P_i, lam, W_new, ll

    S = (iterations - burn_in) // thin
    out_lam = np.empty((S, M))
    out_W = np.empty((S, M, K, D))
    out_P = np.empty((S, M, K, K))
    trace = np.empty(iterations)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        s = 0
        for it in range(iterations):
            results = list(pool.map(sweep_dim, range(M))) if pool else [sweep_dim(i) for i in range(M)]
            ll = 0.0
            for i, (marks, latent, P_i, lam, W_new, ll_i) in enumerate(results):
                state.pg_marks[i], state.latent[i] = marks, latent
                state.transition[i], state.lambda_bar[i], state.weights[i] = P_i, lam, W_new
                ll += ll_i
            trace[it] = ll
            if it >= burn_in and (it - burn_in + 1) % thin == 0:
                out_lam[s], out_W[s], out_P[s] = state.lambda_bar, state.weights, state.transition
                s += 1
            if progress and (it + 1) % 10 == 0:
                log.info("gibbs iteration %d/%d  train LL %.3f", it + 1, iterations, ll)
    finally:
        if pool:
            pool.shutdown()
    return GibbsChain(out_lam, out_W, out_P, trace, data.n_events)
