"""Feature matrices shared by likelihood evaluation and both inference routines."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, precompute_features
from .core import Realization
from .quadrature import Quadrature, build_quadrature


@dataclass(frozen=True, eq=False)
class Design:
    data: Realization
    basis: BasisSet
    event_features: np.ndarray       # (N, D), rows in global event order
    quad: Quadrature
    node_features: np.ndarray        # (Q, D)

    @classmethod
    def build(cls, data: Realization, basis: BasisSet, nodes_per_interval: int = 100) -> "Design":
        quad = build_quadrature(data, nodes_per_interval)
        return cls(
            data=data,
            basis=basis,
            event_features=precompute_features(basis, data, data.times),
            quad=quad,
            node_features=precompute_features(basis, data, quad.nodes),
        )

    @property
    def n_features(self) -> int:
        return self.event_features.shape[1]

    def event_mask(self, dim: int) -> np.ndarray:
        return self.data.dims == dim


def state_activation(W: np.ndarray, F: np.ndarray, states: np.ndarray) -> np.ndarray:
    """h(t, z(t)) for rows of F, picking the weight vector of each row's state.

    W has shape (K, D) for a single target dimension.
    """
    if F.shape[0] == 0:
        return np.zeros(0)
    return np.take_along_axis(F @ W.T, np.asarray(states)[:, None], axis=1)[:, 0]
