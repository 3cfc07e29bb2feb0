"""Domain types for state-switching Hawkes processes.

Indices are 0-based throughout the Python API (dimension ``i`` in ``[0, M)``,
state ``k`` in ``[0, K)``). The event file format is 1-based; conversion
happens in :mod:`fshawkes.io`.

The state process is left-continuous: the state label attached to an event
is the state *before* the transition triggered by that event.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from scipy.special import expit


class Event(NamedTuple):
    time: float
    dim: int
    state: int


@dataclass(frozen=True)
class StatePath:
    """Sparse piecewise-constant state path: initial state plus switches."""

    initial_state: int
    switch_times: np.ndarray
    switch_states: np.ndarray
    horizon: float

    def __post_init__(self):
        st = np.asarray(self.switch_times, dtype=float)
        ss = np.asarray(self.switch_states, dtype=int)
        if st.shape != ss.shape or st.ndim != 1:
            raise ValueError("switch_times and switch_states must be 1-D and equal length")
        if st.size and np.any(np.diff(st) <= 0):
            raise ValueError("switch times must be strictly increasing")
        if st.size and (st[0] < 0 or st[-1] > self.horizon):
            raise ValueError("switch times must lie in [0, T]")
        object.__setattr__(self, "switch_times", st)
        object.__setattr__(self, "switch_states", ss)

    def __call__(self, t):
        return state_at(self, t)


def state_at(path: StatePath, t):
    """Left-continuous evaluation of z(t); vectorised over ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > path.horizon) or np.any(~np.isfinite(t_arr)):
        raise ValueError(f"t must lie in [0, {path.horizon}]")
    # switches strictly before t have taken effect; at a switch time z(t) is the old state
    idx = np.searchsorted(path.switch_times, t_arr, side="left")
    values = np.concatenate(([path.initial_state], path.switch_states))
    out = values[idx]
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Realization:
    """Observed data: events in global time order, their pre-transition
    state labels, and the terminal state z(T).

    ``states[n]`` is z(t_n), the state in force when event ``n`` occurs. The
    state right after event ``n`` is ``states[n + 1]`` (or ``final_state`` for
    the last event).
    """

    times: np.ndarray
    dims: np.ndarray
    states: np.ndarray
    final_state: int
    T: float
    M: int
    K: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        dims = np.asarray(self.dims, dtype=int).reshape(-1)
        states = np.asarray(self.states, dtype=int).reshape(-1)
        if not (times.shape == dims.shape == states.shape):
            raise ValueError("times, dims and states must have equal length")
        if not np.isfinite(self.T) or self.T <= 0:
            raise ValueError("horizon T must be positive and finite")
        if self.M < 1 or self.K < 1:
            raise ValueError("M and K must be >= 1")
        if times.size:
            if not np.all(np.isfinite(times)) or times[0] < 0 or times[-1] > self.T:
                raise ValueError("event times must lie in [0, T]")
            if np.any(np.diff(times) < 0):
                raise ValueError("event times must be sorted ascending")
            if dims.min() < 0 or dims.max() >= self.M:
                raise ValueError(f"event dims must lie in [0, {self.M})")
            if states.min() < 0 or states.max() >= self.K:
                raise ValueError(f"state labels must lie in [0, {self.K})")
            for i in range(self.M):
                if np.any(np.diff(times[dims == i]) <= 0):
                    raise ValueError(f"duplicate event time within dimension {i}")
        if not 0 <= self.final_state < self.K:
            raise ValueError(f"final state must lie in [0, {self.K})")
        for name, arr in (("times", times), ("dims", dims), ("states", states)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "final_state", int(self.final_state))
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def from_events(cls, events: Iterable[Event], final_state: int, T: float,
                    M: int, K: int) -> "Realization":
        ev = sorted(events, key=lambda e: e.time)
        return cls(
            times=np.array([e.time for e in ev], dtype=float),
            dims=np.array([e.dim for e in ev], dtype=int),
            states=np.array([e.state for e in ev], dtype=int),
            final_state=final_state, T=T, M=M, K=K,
        )

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    def counts(self) -> np.ndarray:
        return np.bincount(self.dims, minlength=self.M)

    @property
    def post_states(self) -> np.ndarray:
        """z(t_n^+) for every event."""
        return np.append(self.states[1:], self.final_state)

    @property
    def initial_state(self) -> int:
        return int(self.states[0]) if self.states.size else self.final_state

    @property
    def state_path(self) -> StatePath:
        post = self.post_states
        changed = post != self.states
        st, ss = self.times[changed], post[changed]
        if st.size > 1:
            # simultaneous events on different dims: keep the last switch at a tied time
            keep = np.append(np.diff(st) > 0, True)
            st, ss = st[keep], ss[keep]
        return StatePath(self.initial_state, st, ss, self.T)

    def state_at(self, t):
        """z(t) for arbitrary times, left-continuous; vectorised."""
        t_arr = np.asarray(t, dtype=float)
        labels = np.append(self.states, self.final_state)
        return labels[np.searchsorted(self.times, t_arr, side="left")]

    def events(self):
        for t, i, k in zip(self.times, self.dims, self.states):
            yield Event(float(t), int(i), int(k))

    def times_of(self, dim: int) -> np.ndarray:
        return self.times[self.dims == dim]

    def transition_counts(self) -> np.ndarray:
        """``s[i, k, k']``: number of type-i events moving the state from k to k'."""
        s = np.zeros((self.M, self.K, self.K), dtype=int)
        np.add.at(s, (self.dims, self.states, self.post_states), 1)
        return s

    def __eq__(self, other):
        if not isinstance(other, Realization):
            return NotImplemented
        return (self.T == other.T and self.M == other.M and self.K == other.K
                and self.final_state == other.final_state
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.dims, other.dims)
                and np.array_equal(self.states, other.states))


@dataclass(frozen=True, eq=False)
class ModelParams:
    """theta = (transition matrices, intensity upper bounds, weights).

    ``weights[i, k]`` is the vector [mu_i^k, w_{i,1,1}^k, ..., w_{i,M,B}^k]
    ordered (source dim, basis) row-major.
    """

    transition: np.ndarray
    lambda_bar: np.ndarray
    weights: np.ndarray
    _n_basis: int = field(init=False, repr=False)

    def __post_init__(self):
        P = np.array(self.transition, dtype=float)
        lam = np.array(self.lambda_bar, dtype=float).reshape(-1)
        W = np.array(self.weights, dtype=float)
        M = lam.size
        if P.ndim != 3 or P.shape[0] != M or P.shape[1] != P.shape[2]:
            raise ValueError("transition must have shape (M, K, K)")
        K = P.shape[1]
        if W.ndim != 3 or W.shape[:2] != (M, K):
            raise ValueError("weights must have shape (M, K, M*B + 1)")
        if (W.shape[2] - 1) % M or W.shape[2] < 2:
            raise ValueError("weight vector length must be M*B + 1 with B >= 1")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1.0) > 1e-12):
            raise ValueError("transition rows must be probability vectors")
        if np.any(~(lam > 0)) or not np.all(np.isfinite(lam)):
            raise ValueError("lambda_bar entries must be positive")
        if not np.all(np.isfinite(W)):
            raise ValueError("weights must be finite")
        for name, arr in (("transition", P), ("lambda_bar", lam), ("weights", W)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_n_basis", (W.shape[2] - 1) // M)

    @property
    def M(self) -> int:
        return self.lambda_bar.size

    @property
    def K(self) -> int:
        return self.transition.shape[1]

    @property
    def B(self) -> int:
        return self._n_basis

    @property
    def n_features(self) -> int:
        return self.weights.shape[2]

    @property
    def base_activation(self) -> np.ndarray:
        """mu, shape (M, K)."""
        return self.weights[:, :, 0]

    def influence_weights(self) -> np.ndarray:
        """w_{ijb}^k as an array of shape (M, K, M, B)."""
        return self.weights[:, :, 1:].reshape(self.M, self.K, self.M, self.B)

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (np.array_equal(self.transition, other.transition)
                and np.array_equal(self.lambda_bar, other.lambda_bar)
                and np.array_equal(self.weights, other.weights))


def activation(params: ModelParams, features: np.ndarray, dim: int, state: int) -> float:
    features = np.asarray(features, dtype=float)
    w = params.weights[dim, state]
    if features.shape[-1] != w.size:
        raise ValueError(f"feature length {features.shape[-1]} != weight length {w.size}")
    return features @ w


def intensity(params: ModelParams, features: np.ndarray, dim: int, state: int) -> float:
    """lambda_bar_i * sigmoid(h_i(t, k))."""
    return params.lambda_bar[dim] * expit(activation(params, features, dim, state))
