import numpy as np
import pytest
from hypothesis import strategies as st

from fshawkes import BasisFunction, BasisSet, ModelParams, Realization, builtin_sim_fixture, simulate


@st.composite
def realizations(draw, max_events=30, max_M=3, max_K=3, T=10.0):
    """Random valid realizations; event times are distinct."""
    M = draw(st.integers(1, max_M))
    K = draw(st.integers(1, max_K))
    n = draw(st.integers(0, max_events))
    # times on a fine lattice so sub-intervals are never denormal
    ticks = draw(st.lists(st.integers(0, 99_999), min_size=n, max_size=n, unique=True))
    times = np.sort(np.array(ticks, dtype=float)) * (T / 100_000)
    dims = np.array(draw(st.lists(st.integers(0, M - 1), min_size=n, max_size=n)), dtype=int)
    states = np.array(draw(st.lists(st.integers(0, K - 1), min_size=n, max_size=n)), dtype=int)
    final = draw(st.integers(0, K - 1))
    return Realization(times, dims, states, final_state=final, T=T, M=M, K=K)


@st.composite
def basis_sets(draw, max_B=3):
    B = draw(st.integers(1, max_B))
    T_f = draw(st.floats(1.0, 5.0))
    fs = []
    for _ in range(B):
        a = draw(st.floats(1.0, 20.0))
        b = draw(st.floats(1.0, 20.0))
        scale = draw(st.floats(0.5, 4.0))
        shift = draw(st.floats(-0.4 * scale, T_f - 0.2))
        fs.append(BasisFunction(a, b, scale, shift))
    return BasisSet(tuple(fs), T_f)


def constant_params(M, K, B, mu, lam):
    """Weights zero except the base activation."""
    W = np.zeros((M, K, M * B + 1))
    W[:, :, 0] = mu
    P = np.full((M, K, K), 1.0 / K)
    return ModelParams(P, np.full(M, float(lam)), W)


def random_params(rng, M, K, B, scale=0.5, lam=1.5):
    W = rng.normal(0.0, scale, size=(M, K, M * B + 1))
    P = rng.dirichlet(np.ones(K), size=(M, K))
    return ModelParams(P, np.full(M, lam), W)


@pytest.fixture(scope="session")
def small_basis():
    return BasisSet((BasisFunction(2.0, 3.0, 2.0, 0.0), BasisFunction(3.0, 2.0, 2.0, 0.5)), 2.5)


@pytest.fixture(scope="session")
def short_fixture():
    """The benchmark model on a short horizon (a few hundred events)."""
    cfg = builtin_sim_fixture(seed=11, T=200.0)
    return cfg, simulate(cfg)
