"""Run configuration: basis declarations, priors, solver budgets.

Configs are JSON documents. A config may also carry a ``model`` section
(ground-truth parameters plus horizon) used by the ``simulate`` command.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from .basis import BasisFunction, BasisSet
from .core import ModelParams


@dataclass(frozen=True)
class Priors:
    """Dirichlet concentration (scalar or length-K) and weight prior variance sigma^2."""

    alpha: Any = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if np.any(~(a > 0)):
            raise ValueError("Dirichlet alpha entries must be positive")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    def alpha_vector(self, K: int) -> np.ndarray:
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if a.size == 1:
            return np.full(K, float(a[0]))
        if a.size != K:
            raise ValueError(f"alpha has {a.size} entries, expected {K}")
        return a

    def prior_precision(self, D: int) -> np.ndarray:
        return np.eye(D) / self.sigma2


@dataclass(frozen=True)
class SolverConfig:
    iterations: int = 200
    burn_in: Optional[int] = None
    thin: int = 1
    nodes_per_interval: int = 100
    tol: float = 1e-6
    ll_grid_points: Optional[int] = None
    draws: int = 100
    eval_nodes_per_interval: int = 20


@dataclass(frozen=True)
class ModelSpec:
    params: ModelParams
    T: float
    initial_state: Any = 0


@dataclass(frozen=True)
class RunConfig:
    basis: BasisSet
    priors: Priors = field(default_factory=Priors)
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    model: Optional[ModelSpec] = None

    def to_dict(self) -> dict:
        d = {
            "basis": {
                "support_end": float(self.basis.support_end),
                "functions": [{k: float(v) for k, v in asdict(f).items()} for f in self.basis],
            },
            "priors": {"alpha": _floats(self.priors.alpha), "sigma2": float(self.priors.sigma2)},
            "solver": asdict(self.solver),
            "seed": int(self.seed),
        }
        if self.model is not None:
            p = self.model.params
            d["model"] = {
                "T": float(self.model.T),
                "initial_state": (self.model.initial_state if self.model.initial_state == "uniform"
                                  else int(self.model.initial_state) + 1),
                "lambda_bar": p.lambda_bar.tolist(),
                "transition": p.transition.tolist(),
                "weights": p.weights.tolist(),
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        b = d["basis"]
        basis = BasisSet(
            functions=tuple(BasisFunction(float(f["alpha_shape"]), float(f["beta_shape"]),
                                          float(f["scale"]), float(f.get("shift", 0.0)))
                            for f in b["functions"]),
            support_end=float(b["support_end"]),
        )
        pr = d.get("priors", {})
        priors = Priors(alpha=_floats(pr.get("alpha", 1.0)), sigma2=float(pr.get("sigma2", 1.0)))
        solver = SolverConfig(**d.get("solver", {}))
        model = None
        if d.get("model") is not None:
            m = d["model"]
            init = m.get("initial_state", 1)
            model = ModelSpec(
                params=ModelParams(np.array(m["transition"], dtype=float),
                                   np.array(m["lambda_bar"], dtype=float),
                                   np.array(m["weights"], dtype=float)),
                T=float(m["T"]),
                initial_state=init if init == "uniform" else int(init) - 1,
            )
        return cls(basis=basis, priors=priors, solver=solver, seed=int(d.get("seed", 0)), model=model)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form; numerically equal values hash equal."""
        canon = json.dumps(_canonical(self.to_dict()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _floats(x):
    a = np.asarray(x, dtype=float)
    return float(a) if a.ndim == 0 else a.tolist()


def _canonical(x):
    if isinstance(x, dict):
        return {k: _canonical(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_canonical(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    return float(x)
