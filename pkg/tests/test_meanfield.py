import numpy as np
import pytest
from scipy import integrate
from scipy.special import digamma

from fshawkes import ModelParams, Priors, Realization, SimConfig, run_gibbs, run_meanfield, simulate
from fshawkes.design import Design
from fshawkes.meanfield import (_Problem, expected_log_lambda, latent_mass, latent_rate,
                                tilted_scale, transition_posterior, update_lambda_factor)
from fshawkes.polya_gamma import g_kernel, pg_density, pg_mean
from fshawkes.quadrature import gauss_legendre

# omega grid for the PG(1, 0) density; tail mass beyond 8 is below 1e-30
OMEGA = np.linspace(0.0, 8.0, 16001)
PG0 = pg_density(OMEGA, 0.0)


def omega_integral(values):
    return integrate.simpson(values, x=OMEGA, axis=-1)


def test_tilted_scale_is_second_moment():
    rng = np.random.default_rng(0)
    D = 3
    A = rng.normal(size=(D, D))
    cov = A @ A.T / D
    mean = rng.normal(size=D)
    F = rng.normal(size=(5, D))
    h_bar, h_tilde = tilted_scale(mean, cov, F)
    draws = rng.multivariate_normal(mean, cov, size=400_000) @ F.T
    np.testing.assert_allclose(h_bar, draws.mean(axis=0), atol=0.01)
    np.testing.assert_allclose(h_tilde ** 2, (draws ** 2).mean(axis=0), rtol=0.01)


def test_latent_rate_matches_omega_grid():
    # exp(E log lambda) * int exp(E g(omega, -h)) PG(omega | 1, 0) d omega
    ell = expected_log_lambda(40.0, 10.0)
    for h_bar, h_tilde in [(0.0, 0.0), (1.3, 1.5), (-2.0, 2.4), (0.5, 4.0)]:
        Eg = g_kernel(OMEGA, 0.0) - h_bar / 2 - h_tilde ** 2 * OMEGA / 2
        oracle = np.exp(ell) * omega_integral(np.exp(Eg) * PG0)
        assert latent_rate(ell, h_bar, h_tilde) == pytest.approx(oracle, rel=1e-6)
        # and the omega marks under that intensity have the tilted PG mean
        mark_mean = omega_integral(OMEGA * np.exp(Eg) * PG0) / omega_integral(np.exp(Eg) * PG0)
        assert mark_mean == pytest.approx(pg_mean(1.0, h_tilde), rel=1e-6)


def test_latent_mass_matches_two_dimensional_grid():
    # h_bar(t), h_tilde(t) vary in time; R is a double integral over (t, omega)
    ell = expected_log_lambda(25.0, 5.0)
    a, b = 0.3, 2.1
    h_bar_fn = lambda t: np.sin(3 * t) - 0.2
    h_tilde_fn = lambda t: np.sqrt(h_bar_fn(t) ** 2 + 0.5 + 0.3 * t)
    t_grid = np.linspace(a, b, 2001)
    Eg = (g_kernel(OMEGA[None, :], 0.0) - h_bar_fn(t_grid)[:, None] / 2
          - h_tilde_fn(t_grid)[:, None] ** 2 * OMEGA[None, :] / 2)
    oracle = integrate.simpson(np.exp(ell) * omega_integral(np.exp(Eg) * PG0), x=t_grid)
    x, w = gauss_legendre(a, b, 30)
    got = latent_mass(w, latent_rate(ell, h_bar_fn(x), h_tilde_fn(x)))
    assert abs(got - oracle) / oracle < 1e-4


def test_expected_log_lambda_and_gamma_factor():
    assert expected_log_lambda(7.0, 3.0) == pytest.approx(digamma(7.0) - np.log(3.0))
    assert update_lambda_factor(12, 3.5, 4.0) == (15.5, 4.0)


def test_transition_posterior_counts():
    data = Realization(np.arange(1.0, 5.0), np.array([0, 0, 1, 0]), np.array([0, 1, 1, 0]),
                       final_state=0, T=5.0, M=2, K=2)
    d = transition_posterior(data, [1.0, 2.0])
    # dim 1 moves 0->1, 1->1, 0->0; dim 2 moves 1->0
    np.testing.assert_array_equal(d[0], [[1 + 1, 2 + 1], [1, 2 + 1]])
    np.testing.assert_array_equal(d[1], [[1, 2], [1 + 1, 2]])


@pytest.fixture(scope="module")
def toy(small_basis):
    rng = np.random.default_rng(0)
    W = rng.normal(0, 0.4, size=(2, 2, 5))
    P = np.array([[[0.9, 0.1], [0.2, 0.8]], [[0.7, 0.3], [0.4, 0.6]]])
    data = simulate(SimConfig(ModelParams(P, np.array([2.0, 1.5]), W), small_basis, T=80.0), seed=3)
    return data


def test_converges_to_fixed_point(toy, small_basis):
    design = Design.build(toy, small_basis, 30)
    mf = run_meanfield(toy, small_basis, design=design, max_iterations=500, tol=1e-10)
    assert mf.converged
    problem = _Problem(design)
    prior = Priors().prior_precision(5)
    for i in range(2):
        r = problem.update_dim(i, mf.gamma_shape[i], mf.weight_mean[i], mf.weight_cov[i], prior)
        np.testing.assert_allclose(r.mean, mf.weight_mean[i], atol=1e-5)
        assert r.latent_mass == pytest.approx(mf.latent_mass[i], rel=1e-5)
    np.testing.assert_allclose(mf.gamma_shape, toy.counts() + mf.latent_mass)
    assert mf.gamma_rate == toy.T


def test_thread_invariant(toy, small_basis):
    a = run_meanfield(toy, small_basis, nodes_per_interval=10, max_iterations=15)
    b = run_meanfield(toy, small_basis, nodes_per_interval=10, max_iterations=15, threads=2)
    np.testing.assert_array_equal(a.weight_mean, b.weight_mean)
    np.testing.assert_array_equal(a.loglik, b.loglik)


def test_agrees_with_gibbs_on_small_problem(toy, small_basis):
    mf = run_meanfield(toy, small_basis, nodes_per_interval=30)
    ch = run_gibbs(toy, small_basis, iterations=1000, seed=0)
    pm, sd = ch.posterior_mean(), ch.posterior_sd()
    assert np.all(np.abs(mf.lambda_bar_mean() - pm.lambda_bar) < 2 * sd["lambda_bar"])
    assert np.all(np.abs(mf.weight_mean - pm.weights) < 2 * sd["weights"] + 0.05)
    np.testing.assert_allclose(mf.transition_mean(), pm.transition, atol=0.03)


def test_empty_dimension_stays_proper(small_basis):
    data = Realization(np.array([1.0, 2.5, 4.0]), np.zeros(3, dtype=int), np.zeros(3, dtype=int),
                       final_state=0, T=6.0, M=2, K=1)
    mf = run_meanfield(data, small_basis, nodes_per_interval=10)
    assert np.all(np.isfinite(mf.weight_mean)) and np.all(mf.gamma_shape > 0)
    assert mf.latent_mass[1] >= 1e-8
    # with the 1/lambda prior and no events the latent mass collapses to its floor,
    # lambda_bar shrinks towards 0 and the weights carry no information beyond the prior
    assert mf.lambda_bar_mean()[1] < 1e-3
    np.testing.assert_allclose(mf.weight_mean[1], 0.0, atol=1e-3)


def test_unvisited_state_keeps_prior(small_basis):
    data = Realization(np.array([1.0, 2.5]), np.array([0, 1]), np.array([0, 0]), 0, 4.0, M=2, K=2)
    mf = run_meanfield(data, small_basis, Priors(sigma2=0.3), nodes_per_interval=10)
    np.testing.assert_allclose(mf.weight_mean[:, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(mf.weight_cov[:, 1], np.broadcast_to(0.3 * np.eye(5), (2, 5, 5)))


def test_draws_have_factor_moments(toy, small_basis):
    mf = run_meanfield(toy, small_basis, nodes_per_interval=10)
    d = mf.draw(np.random.default_rng(1), 20000)
    np.testing.assert_allclose(d["lambda_bar"].mean(axis=0), mf.lambda_bar_mean(), rtol=0.01)
    np.testing.assert_allclose(d["lambda_bar"].std(axis=0), mf.lambda_bar_sd(), rtol=0.03)
    np.testing.assert_allclose(d["weights"].std(axis=0), mf.weight_sd(), rtol=0.03)
    np.testing.assert_allclose(d["transition"].mean(axis=0), mf.transition_mean(), atol=0.01)


def test_rejects_zero_iterations(toy, small_basis):
    with pytest.raises(ValueError):
        run_meanfield(toy, small_basis, max_iterations=0)
