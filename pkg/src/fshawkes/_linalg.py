import numpy as np
from scipy.linalg import cho_solve, solve_triangular


def jittered_cholesky(A: np.ndarray, start: float = 1e-10, growth: float = 10.0,
                      max_jitter: float = 1e-4) -> np.ndarray:
    """Lower Cholesky factor of A, adding diagonal jitter only if needed."""
    A = 0.5 * (A + A.T)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.mean(np.abs(np.diag(A)))), 1.0)
    jitter = start
    while jitter <= max_jitter:
        try:
            return np.linalg.cholesky(A + jitter * scale * np.eye(A.shape[0]))
        except np.linalg.LinAlgError:
            jitter *= growth
    raise np.linalg.LinAlgError(f"matrix not positive definite even with jitter {max_jitter:g}")


def gaussian_from_precision(precision: np.ndarray, linear: np.ndarray):
    """Mean, covariance and Cholesky factor of N(P^-1 b, P^-1)."""
    L = jittered_cholesky(precision)
    mean = cho_solve((L, True), linear)
    Linv = solve_triangular(L, np.eye(L.shape[0]), lower=True)
    cov = Linv.T @ Linv
    return mean, cov, L


def sample_from_precision(rng: np.random.Generator, precision: np.ndarray,
                          linear: np.ndarray) -> np.ndarray:
    """One draw from N(P^-1 b, P^-1) using the Cholesky factor of P."""
    L = jittered_cholesky(precision)
    mean = cho_solve((L, True), linear)
    # if P = L L^T then L^-T e has covariance P^-1
    return mean + solve_triangular(L.T, rng.standard_normal(L.shape[0]), lower=False)
