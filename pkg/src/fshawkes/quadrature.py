"""Piecewise Gauss-Legendre quadrature over [0, T] split at every event time.

Between consecutive events both the state and the feature vector F(t) are
smooth, so a Gauss-Legendre rule per sub-interval integrates the intensity
to high accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import Realization


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray          # (Q,) ascending
    weights: np.ndarray        # (Q,)
    states: np.ndarray         # (Q,) state in force at each node
    interval: np.ndarray       # (Q,) index of the sub-interval holding each node
    boundaries: np.ndarray     # (L + 1,) sub-interval end points, 0 ... T

    @property
    def n_intervals(self) -> int:
        return self.boundaries.size - 1

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Integral from 0 to each boundary, shape (L + 1,)."""
        per = np.bincount(self.interval, self.weights * values, minlength=self.n_intervals)
        return np.concatenate(([0.0], np.cumsum(per)))


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def build_quadrature(data: Realization, nodes_per_interval: int = 100) -> Quadrature:
    if nodes_per_interval < 1:
        raise ValueError("nodes_per_interval must be >= 1")
    bounds = np.unique(np.concatenate(([0.0], data.times, [data.T])))
    a, b = bounds[:-1], bounds[1:]
    x, w = leggauss(nodes_per_interval)
    half = 0.5 * (b - a)
    nodes = (a[:, None] + half[:, None] * (x[None, :] + 1.0)).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    interval = np.repeat(np.arange(a.size), nodes_per_interval)
    return Quadrature(nodes=nodes, weights=weights, states=data.state_at(nodes),
                      interval=interval, boundaries=bounds)
