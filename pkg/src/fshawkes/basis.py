"""Scaled, shifted Beta-density basis functions and cumulative features F(t)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betaln, xlog1py, xlogy

from .core import Realization

# rows of the feature matrix processed per block in precompute_features
_BLOCK = 100_000


@dataclass(frozen=True)
class BasisFunction:
    """Beta(alpha_shape, beta_shape) density rescaled to [shift, shift + scale]."""

    alpha_shape: float
    beta_shape: float
    scale: float
    shift: float = 0.0

    def __post_init__(self):
        for name in ("alpha_shape", "beta_shape", "scale"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if not np.isfinite(self.shift):
            raise ValueError("shift must be finite")


@dataclass(frozen=True)
class BasisSet:
    functions: tuple[BasisFunction, ...]
    support_end: float

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if len(self.functions) < 1:
            raise ValueError("a basis set needs at least one function")
        if not (np.isfinite(self.support_end) and self.support_end > 0):
            raise ValueError("support_end (T_f) must be positive")
        for f in self.functions:
            lo, hi = effective_support(f, self.support_end)
            if lo >= hi:
                raise ValueError(f"{f} has empty support inside [0, {self.support_end}]")

    @property
    def B(self) -> int:
        return len(self.functions)

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __call__(self, lag) -> np.ndarray:
        """Evaluate every basis at ``lag``; result has a trailing axis of size B."""
        lag = np.asarray(lag, dtype=float)
        return np.stack([basis_eval(f, lag, self.support_end) for f in self.functions], axis=-1)


def effective_support(f: BasisFunction, support_end: float | None = None) -> tuple[float, float]:
    hi = f.shift + f.scale
    if support_end is not None:
        hi = min(hi, support_end)
    return max(0.0, f.shift), hi


def basis_eval(f: BasisFunction, lag, support_end: float | None = None):
    """Scaled Beta density at ``lag``; zero outside the effective support.

    The part of the raw support below lag 0 (negative shifts) is clipped, not
    renormalised.
    """
    lag = np.asarray(lag, dtype=float)
    if not np.all(np.isfinite(lag)):
        raise ValueError("lag must be finite")
    lo, hi = effective_support(f, support_end)
    x = (lag - f.shift) / f.scale
    inside = (lag >= lo) & (lag <= hi)
    xc = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (xlogy(f.alpha_shape - 1.0, xc) + xlog1py(f.beta_shape - 1.0, -xc)
                  - betaln(f.alpha_shape, f.beta_shape) - np.log(f.scale))
        out = np.where(inside, np.exp(logpdf), 0.0)
    return float(out) if out.ndim == 0 else out


def _dim_times(events: Realization) -> list[np.ndarray]:
    return [events.times_of(j) for j in range(events.M)]


def cumulative_features(basis: BasisSet, events: Realization, t: float) -> np.ndarray:
    """F(t) = [1, F_11(t), ..., F_MB(t)] with F_jb(t) = sum_{t_n^j < t} f_b(t - t_n^j)."""
    if not 0 <= t <= events.T:
        raise ValueError(f"t={t} outside [0, {events.T}]")
    out = [1.0]
    for tj in _dim_times(events):
        lag = t - tj[(tj < t) & (t - tj <= basis.support_end)]
        for f in basis:
            out.append(float(np.sum(basis_eval(f, lag, basis.support_end))))
    return np.array(out)


def precompute_features(basis: BasisSet, events: Realization, times: Sequence[float]) -> np.ndarray:
    """Feature matrix of shape (len(times), M*B + 1).

    Each row only sees the events in the window (t - T_f, t) -- found by
    binary search -- so the cost is proportional to the number of
    (time, in-window event) pairs rather than len(times) * N.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size > 1 and np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted ascending")
    if times.size and (times[0] < 0 or times[-1] > events.T):
        raise ValueError(f"times must lie in [0, {events.T}]")
    B = basis.B
    F = np.zeros((times.size, events.M * B + 1))
    F[:, 0] = 1.0
    for j, tj in enumerate(_dim_times(events)):
        if tj.size == 0:
            continue
        for start in range(0, times.size, _BLOCK):
            t = times[start:start + _BLOCK]
            lo = np.searchsorted(tj, t - basis.support_end, side="left")
            hi = np.searchsorted(tj, t, side="left")
            n_pairs = hi - lo
            total = int(n_pairs.sum())
            if total == 0:
                continue
            rows = np.repeat(np.arange(t.size), n_pairs)
            offsets = np.cumsum(n_pairs) - n_pairs
            ev = np.arange(total) - np.repeat(offsets, n_pairs) + np.repeat(lo, n_pairs)
            lag = t[rows] - tj[ev]
            for b, f in enumerate(basis):
                vals = basis_eval(f, lag, basis.support_end)
                F[start:start + t.size, 1 + j * B + b] = np.bincount(rows, vals, minlength=t.size)
    return F
