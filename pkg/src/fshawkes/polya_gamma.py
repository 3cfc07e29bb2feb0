"""Polya-Gamma PG(b, c): exact PG(1, c) sampling, moments, density and the
logistic augmentation kernel g(omega, x).

The sampler draws J*(1, c/2) with Devroye's alternating-series
accept/reject scheme and returns J*/4. Proposals are a truncated exponential
on (t, inf) and a truncated inverse Gaussian on (0, t), with t = 0.64.
"""
from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr

_TRUNC = 0.64
_LOG2 = np.log(2.0)


def pg_mean(b, c):
    """E[omega] for omega ~ PG(b, c): b / (2c) * tanh(c / 2), b/4 at c = 0."""
    b = np.asarray(b, dtype=float)
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-6
    safe = np.where(small, 1.0, c)
    # Taylor: tanh(c/2)/(2c) = 1/4 - c^2/48 + O(c^4)
    out = np.where(small, b * (0.25 - c * c / 48.0), b / (2.0 * safe) * np.tanh(safe / 2.0))
    return float(out) if out.ndim == 0 else out


def g_kernel(omega, x):
    """x/2 - x^2 omega / 2 - log 2, so that sigmoid(x) = E_{PG(1,0)}[exp(g)]."""
    omega = np.asarray(omega, dtype=float)
    x = np.asarray(x, dtype=float)
    out = x / 2.0 - x * x * omega / 2.0 - _LOG2
    return float(out) if out.ndim == 0 else out


def pg_density(omega, c=0.0, n_terms: int = 60):
    """Density of PG(1, c) at ``omega`` by its alternating series.

    PG(1, c) is PG(1, 0) tilted by cosh(c/2) exp(-c^2 omega / 2), and
    PG(1, 0) is J*(1)/4 with J*(1) density sum_n (-1)^n a_n(x).
    """
    omega = np.asarray(omega, dtype=float)
    c = float(c)
    x = 4.0 * omega
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    jstar = np.zeros_like(xp)
    for n in range(n_terms):
        jstar += (-1.0) ** n * _a_coef(n, xp)
    tilt = np.cosh(c / 2.0) * np.exp(-c * c * omega[pos] / 2.0)
    out[pos] = 4.0 * jstar * tilt
    return float(out) if out.ndim == 0 else out


def _a_coef(n: int, x: np.ndarray) -> np.ndarray:
    """n-th coefficient of the J*(1) density series, piecewise in x."""
    k = n + 0.5
    xs = np.maximum(x, 1e-300)
    left = np.exp(np.log(np.pi * k) + 1.5 * np.log(2.0 / (np.pi * xs)) - 2.0 * k * k / xs)
    right = np.pi * k * np.exp(-k * k * np.pi ** 2 * x / 2.0)
    return np.where(x > _TRUNC, right, left)


def _truncated_levy(rng: np.random.Generator, size: int) -> np.ndarray:
    """Draws with density proportional to x^{-3/2} exp(-1/(2x)) on (0, t)."""
    out = np.empty(size)
    todo = np.arange(size)
    while todo.size:
        e1 = rng.standard_exponential(todo.size)
        e2 = rng.standard_exponential(todo.size)
        ok = e1 * e1 <= 2.0 * e2 / _TRUNC
        idx = todo[ok]
        out[idx] = _TRUNC / (1.0 + _TRUNC * e1[ok]) ** 2
        todo = todo[~ok]
    return out


def _truncated_igauss(rng: np.random.Generator, z: np.ndarray) -> np.ndarray:
    """Inverse Gaussian IG(mean=1/z, shape=1) truncated to (0, t)."""
    out = np.empty(z.size)
    mu = np.where(z > 0, 1.0 / np.maximum(z, 1e-300), np.inf)
    big = mu > _TRUNC

    # mean beyond the truncation point: Levy proposal tilted by exp(-z^2 x / 2)
    todo = np.flatnonzero(big)
    while todo.size:
        x = _truncated_levy(rng, todo.size)
        ok = rng.uniform(size=todo.size) <= np.exp(-0.5 * z[todo] ** 2 * x)
        out[todo[ok]] = x[ok]
        todo = todo[~ok]

    # otherwise plain IG draws (Michael-Schucany-Haas) rejected until below t
    todo = np.flatnonzero(~big)
    while todo.size:
        m = mu[todo]
        y = rng.standard_normal(todo.size) ** 2
        x = m + 0.5 * m * m * y - 0.5 * m * np.sqrt(4.0 * m * y + (m * y) ** 2)
        flip = rng.uniform(size=todo.size) > m / (m + x)
        x = np.where(flip, m * m / x, x)
        ok = x < _TRUNC
        out[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def _proposal_left_prob(z: np.ndarray) -> np.ndarray:
    """Probability of proposing from the left (IG) piece."""
    K = np.pi ** 2 / 8.0 + z * z / 2.0
    log_p = np.log(np.pi / (2.0 * K)) - K * _TRUNC
    rt = np.sqrt(1.0 / _TRUNC)
    # q = 2 exp(-z) * IG-cdf(t), expanded to avoid exp(2z) overflow
    log_q = _LOG2 + np.logaddexp(-z + log_ndtr(rt * (_TRUNC * z - 1.0)),
                                 z + log_ndtr(-rt * (_TRUNC * z + 1.0)))
    return 1.0 / (1.0 + np.exp(log_p - log_q))


def _sample_jstar(rng: np.random.Generator, z: np.ndarray) -> np.ndarray:
    out = np.empty(z.size)
    K = np.pi ** 2 / 8.0 + z * z / 2.0
    left_prob = _proposal_left_prob(z)
    todo = np.arange(z.size)
    while todo.size:
        zt = z[todo]
        left = rng.uniform(size=todo.size) < left_prob[todo]
        x = np.empty(todo.size)
        n_right = int((~left).sum())
        x[~left] = _TRUNC + rng.standard_exponential(n_right) / K[todo][~left]
        if left.any():
            x[left] = _truncated_igauss(rng, zt[left])
        s = _a_coef(0, x)
        y = rng.uniform(size=todo.size) * s
        accepted = np.zeros(todo.size, dtype=bool)
        undecided = np.ones(todo.size, dtype=bool)
        n = 0
        while undecided.any():
            n += 1
            a = _a_coef(n, x)
            if n % 2:
                s = s - a
                hit = undecided & (y <= s)
                accepted |= hit
                undecided &= ~hit
            else:
                s = s + a
                undecided &= ~(y > s)
        out[todo[accepted]] = x[accepted]
        todo = todo[~accepted]
    return out


def pg_sample(rng: np.random.Generator, c):
    """Exact draw(s) from PG(1, c); returns the same shape as ``c``."""
    c_arr = np.asarray(c, dtype=float)
    z = np.abs(c_arr.reshape(-1)) / 2.0
    if z.size == 0:
        return np.empty(c_arr.shape)
    draws = _sample_jstar(rng, z) / 4.0
    return float(draws[0]) if c_arr.ndim == 0 else draws.reshape(c_arr.shape)
