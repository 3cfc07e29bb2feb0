"""State-switching Hawkes processes with sigmoid-link intensities.

Simulation by thinning, Polya-Gamma augmented Gibbs sampling, mean-field
variational inference and time-rescaling goodness of fit.
"""
from .basis import BasisFunction, BasisSet, basis_eval, cumulative_features, precompute_features
from .config import ModelSpec, Priors, RunConfig, SolverConfig
from .core import Event, ModelParams, Realization, StatePath, activation, intensity, state_at
from .evaluation import (FitReport, evaluate, influence_curve, ks_test, log_likelihood, qq_data,
                         rescale)
from .gibbs import GibbsChain, run_gibbs
from .io import Posterior, load_events, load_posterior, save_events, save_posterior
from .meanfield import MFState, run_meanfield
from .polya_gamma import g_kernel, pg_density, pg_mean, pg_sample
from .simulator import SimConfig, builtin_sim_fixture, fixture_run_config, simulate

__version__ = "0.1.0"

__all__ = [
    "BasisFunction", "BasisSet", "basis_eval", "cumulative_features", "precompute_features",
    "ModelSpec", "Priors", "RunConfig", "SolverConfig",
    "Event", "ModelParams", "Realization", "StatePath", "activation", "intensity", "state_at",
    "FitReport", "evaluate", "influence_curve", "ks_test", "log_likelihood", "qq_data", "rescale",
    "GibbsChain", "run_gibbs", "Posterior", "load_events", "load_posterior", "save_events",
    "save_posterior", "MFState", "run_meanfield", "g_kernel", "pg_density", "pg_mean",
    "pg_sample", "SimConfig", "builtin_sim_fixture", "fixture_run_config", "simulate",
]
