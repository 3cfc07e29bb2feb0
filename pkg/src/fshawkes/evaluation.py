"""Likelihood, time-rescaling residuals, Q-Q data and influence curves."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import expit, log_expit

from .basis import BasisSet, basis_eval
from .core import ModelParams, Realization
from .design import Design, state_activation


@dataclass
class FitReport:
    loglik_point_process: float
    loglik_state: float
    n_events: int
    rescaled_times: dict[int, np.ndarray] = field(default_factory=dict)
    qq_points: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def loglik_total(self) -> float:
        return self.loglik_point_process + self.loglik_state

    @property
    def per_event_loglik(self) -> float:
        """Point-process log-likelihood per observed event."""
        return self.loglik_point_process / max(self.n_events, 1)

    @property
    def per_event_loglik_total(self) -> float:
        return self.loglik_total / max(self.n_events, 1)


def _design(basis, data, nodes_per_interval, design):
    if design is None:
        return Design.build(data, basis, nodes_per_interval)
    return design


def point_process_loglik(params: ModelParams, design: Design) -> np.ndarray:
    """Per-dimension point-process log-likelihood, shape (M,)."""
    data, quad = design.data, design.quad
    out = np.zeros(data.M)
    for i in range(data.M):
        m = design.event_mask(i)
        h_ev = state_activation(params.weights[i], design.event_features[m], data.states[m])
        h_nd = state_activation(params.weights[i], design.node_features, quad.states)
        lam = params.lambda_bar[i]
        out[i] = m.sum() * np.log(lam) + log_expit(h_ev).sum() - lam * quad.integrate(expit(h_nd))
    return out


def state_loglik(params: ModelParams, data: Realization) -> float:
    probs = params.transition[data.dims, data.states, data.post_states]
    if np.any(probs == 0):
        warnings.warn("observed transition has zero probability under the model", RuntimeWarning)
        return -np.inf
    return float(np.log(probs).sum())


def log_likelihood(params: ModelParams, basis: BasisSet, data: Realization,
                   nodes_per_interval: int = 20, design: Design | None = None) -> FitReport:
    """Exact-data log-likelihood, with the compensator integrated by
    per-interval Gauss-Legendre quadrature."""
    if nodes_per_interval < 2 and design is None:
        raise ValueError("need at least 2 quadrature nodes per interval")
    design = _design(basis, data, nodes_per_interval, design)
    pp = float(point_process_loglik(params, design).sum())
    return FitReport(loglik_point_process=pp, loglik_state=state_loglik(params, data),
                     n_events=data.n_events)


def rescale(params: ModelParams, basis: BasisSet, data: Realization, dim: int,
            nodes_per_interval: int = 20, design: Design | None = None) -> np.ndarray:
    """tau_n = integral of lambda_dim from 0 to each event time of ``dim``."""
    design = _design(basis, data, nodes_per_interval, design)
    quad = design.quad
    h = state_activation(params.weights[dim], design.node_features, quad.states)
    cum = quad.cumulative(params.lambda_bar[dim] * expit(h))
    t = data.times_of(dim)
    return cum[np.searchsorted(quad.boundaries, t)]


def qq_data(rescaled) -> np.ndarray:
    """(theoretical, empirical) uniform quantile pairs, shape (n, 2).

    Rescaled inter-arrival times are mapped through the Exp(1) cdf; under a
    correct model they are Uniform(0, 1).
    """
    u = uniform_residuals(rescaled)
    n = u.size
    if n == 0:
        return np.empty((0, 2))
    theo = (np.arange(1, n + 1) - 0.5) / n
    return np.column_stack([theo, np.sort(u)])


def uniform_residuals(rescaled) -> np.ndarray:
    tau = np.asarray(rescaled, dtype=float)
    if tau.size < 2:
        return np.empty(0)
    return -np.expm1(-np.diff(tau))


def ks_test(rescaled):
    """Kolmogorov-Smirnov test of the transformed residuals against U(0, 1)."""
    return stats.kstest(uniform_residuals(rescaled), "uniform")


def evaluate(params: ModelParams, basis: BasisSet, data: Realization,
             nodes_per_interval: int = 20, design: Design | None = None) -> FitReport:
    design = _design(basis, data, nodes_per_interval, design)
    report = log_likelihood(params, basis, data, design=design)
    for i in range(data.M):
        tau = rescale(params, basis, data, i, design=design)
        report.rescaled_times[i] = tau
        report.qq_points[i] = qq_data(tau)
    return report


def influence_curve(params: ModelParams, basis: BasisSet, i: int, j: int, state: int,
                    grid) -> np.ndarray:
    """f_ij^state(lag) = sum_b w_ijb^state f_b(lag) on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > basis.support_end):
        raise ValueError(f"grid must lie in [0, {basis.support_end}]")
    w = params.influence_weights()[i, state, j]
    vals = np.stack([basis_eval(f, grid, basis.support_end) for f in basis], axis=-1)
    return vals @ w
