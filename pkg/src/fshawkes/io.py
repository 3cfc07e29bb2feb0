"""Plain-text file formats.

Event file (CSV, 1-based dims and states)::

    # fshawkes events v1
    # M=2
    # K=2
    time,dim,state
    0.8341,1,1
    ...
    2000.0,end,2

``state`` is the state in force when the event happens, i.e. *before* the
transition it triggers. The final ``end`` record carries the horizon T in the
time column and the terminal state z(T).

Posterior file: ``# key=value`` metadata lines (values are JSON), then a CSV
table with one row per posterior draw. Columns are ``lambda_bar.i``,
``transition.i.k.l`` and ``w.i.k.d`` (i, k, l 1-based; d is the 0-based
feature index, 0 being the base activation mu).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np

from .core import ModelParams, Realization
from .gibbs import GibbsChain
from .meanfield import MFState

PathLike = Union[str, Path]

EVENTS_MAGIC = "# fshawkes events v1"
POSTERIOR_MAGIC = "# fshawkes posterior v1"


class EventFileError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_events(data: Realization, fh: TextIO) -> None:
    fh.write(f"{EVENTS_MAGIC}\n# M={data.M}\n# K={data.K}\n")
    fh.write("time,dim,state\n")
    for t, i, k in zip(data.times, data.dims, data.states):
        fh.write(f"{_fmt(t)},{i + 1},{k + 1}\n")
    fh.write(f"{_fmt(data.T)},end,{data.final_state + 1}\n")


def save_events(data: Realization, path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        dump_events(data, fh)


def parse_events(fh: TextIO, M: Optional[int] = None, K: Optional[int] = None) -> Realization:
    meta = {}
    times, dims, states = [], [], []
    end = None
    header_seen = False
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                meta[key.strip()] = val.strip()
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["time", "dim", "state"]:
                raise EventFileError(f"line {lineno}: expected header 'time,dim,state'")
            header_seen = True
            continue
        if end is not None:
            raise EventFileError(f"line {lineno}: data after the end record")
        fields = [c.strip() for c in line.split(",")]
        if len(fields) != 3:
            raise EventFileError(f"line {lineno}: expected 3 fields, got {len(fields)}")
        try:
            t = float(fields[0])
            k = int(fields[2])
        except ValueError as exc:
            raise EventFileError(f"line {lineno}: {exc}") from None
        if fields[1] == "end":
            end = (lineno, t, k)
            continue
        try:
            i = int(fields[1])
        except ValueError:
            raise EventFileError(f"line {lineno}: bad dimension {fields[1]!r}") from None
        if i < 1 or k < 1:
            raise EventFileError(f"line {lineno}: dims and states are 1-based")
        if times and t < times[-1]:
            raise EventFileError(f"line {lineno}: event times must be non-decreasing")
        times.append(t)
        dims.append(i - 1)
        states.append(k - 1)
    if not header_seen:
        raise EventFileError("missing header 'time,dim,state'")
    if end is None:
        raise EventFileError("missing end record carrying T and z(T)")
    end_line, T, zT = end
    M = M or int(meta.get("M", max(dims, default=0) + 1))
    K = K or int(meta.get("K", max(states + [zT - 1]) + 1))
    for n, (i, k) in enumerate(zip(dims, states)):
        if i >= M:
            raise EventFileError(f"event {n + 1}: dimension {i + 1} exceeds M={M}")
        if k >= K:
            raise EventFileError(f"event {n + 1}: unknown state {k + 1} (K={K})")
    if not 1 <= zT <= K:
        raise EventFileError(f"line {end_line}: unknown final state {zT} (K={K})")
    if times and times[-1] > T:
        raise EventFileError(f"line {end_line}: horizon T={T} precedes the last event")
    try:
        return Realization(np.array(times, dtype=float), np.array(dims, dtype=int),
                           np.array(states, dtype=int), final_state=zT - 1, T=T, M=M, K=K)
    except ValueError as exc:
        raise EventFileError(str(exc)) from None


def load_events(path: PathLike, M: Optional[int] = None, K: Optional[int] = None) -> Realization:
    with open(path, newline="") as fh:
        return parse_events(fh, M=M, K=K)


# --- posterior files -------------------------------------------------------

@dataclass(eq=False)
class Posterior:
    kind: str                       # "gibbs" or "meanfield"
    lambda_bar: np.ndarray          # (S, M)
    transition: np.ndarray          # (S, M, K, K)
    weights: np.ndarray             # (S, M, K, D)
    loglik: np.ndarray
    config_hash: str = ""
    n_events: int = 0
    meanfield: Optional[MFState] = None

    @property
    def n_samples(self) -> int:
        return self.lambda_bar.shape[0]

    def mean_params(self) -> ModelParams:
        if self.meanfield is not None:
            return self.meanfield.mean_params()
        P = self.transition.mean(axis=0)
        return ModelParams(P / P.sum(axis=2, keepdims=True), self.lambda_bar.mean(axis=0),
                           self.weights.mean(axis=0))

    def sample(self, s: int) -> ModelParams:
        return ModelParams(self.transition[s], self.lambda_bar[s], self.weights[s])


def posterior_from_chain(chain: GibbsChain, config_hash: str = "") -> Posterior:
    return Posterior("gibbs", chain.lambda_bar, chain.transition, chain.weights, chain.loglik,
                     config_hash, chain.n_events)


def posterior_from_meanfield(state: MFState, rng: np.random.Generator, draws: int = 100,
                             config_hash: str = "") -> Posterior:
    d = state.draw(rng, draws)
    return Posterior("meanfield", d["lambda_bar"], d["transition"], d["weights"], state.loglik,
                     config_hash, state.n_events, meanfield=state)


def _columns(M: int, K: int, D: int) -> list[str]:
    cols = [f"lambda_bar.{i + 1}" for i in range(M)]
    cols += [f"transition.{i + 1}.{k + 1}.{l + 1}" for i in range(M) for k in range(K) for l in range(K)]
    cols += [f"w.{i + 1}.{k + 1}.{d}" for i in range(M) for k in range(K) for d in range(D)]
    return cols


def dump_posterior(post: Posterior, fh: TextIO) -> None:
    S, M, K, D = post.weights.shape
    meta = {
        "kind": post.kind, "M": M, "K": K, "D": D, "n_samples": S,
        "n_events": int(post.n_events), "config_hash": post.config_hash,
        "loglik": [float(x) for x in post.loglik],
    }
    if post.meanfield is not None:
        mf = post.meanfield
        meta["factors"] = {
            "gamma_shape": mf.gamma_shape.tolist(),
            "gamma_rate": float(mf.gamma_rate),
            "weight_mean": mf.weight_mean.tolist(),
            "weight_cov": mf.weight_cov.tolist(),
            "dirichlet": mf.dirichlet.tolist(),
            "latent_mass": mf.latent_mass.tolist(),
            "converged": bool(mf.converged),
        }
    fh.write(POSTERIOR_MAGIC + "\n")
    for key, val in meta.items():
        fh.write(f"# {key}={json.dumps(val)}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["sample"] + _columns(M, K, D))
    flat = np.hstack([post.lambda_bar, post.transition.reshape(S, -1), post.weights.reshape(S, -1)])
    for s in range(S):
        writer.writerow([s] + [_fmt(x) for x in flat[s]])


def as_posterior(obj, config_hash: str = "", draws: int = 100, seed: int = 0) -> Posterior:
    """Wrap a GibbsChain or MFState (a Posterior passes through)."""
    if isinstance(obj, Posterior):
        return obj
    if isinstance(obj, GibbsChain):
        return posterior_from_chain(obj, config_hash)
    if isinstance(obj, MFState):
        return posterior_from_meanfield(obj, np.random.default_rng(seed), draws, config_hash)
    raise TypeError(f"cannot serialize {type(obj).__name__} as a posterior")


def save_posterior(obj, path: PathLike, config_hash: str = "", draws: int = 100,
                   seed: int = 0) -> None:
    post = as_posterior(obj, config_hash, draws, seed)
    with open(path, "w", newline="") as fh:
        dump_posterior(post, fh)


def parse_posterior(fh: TextIO) -> Posterior:
    meta = {}
    rows = []
    for raw in fh:
        line = raw.rstrip("\n")
        if line.startswith("#"):
            key, sep, val = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = json.loads(val)
            continue
        if line.strip():
            rows.append(line)
    for key in ("kind", "M", "K", "D", "n_samples"):
        if key not in meta:
            raise ValueError(f"posterior file lacks '{key}' metadata")
    M, K, D, S = meta["M"], meta["K"], meta["D"], meta["n_samples"]
    table = list(csv.reader(io.StringIO("\n".join(rows))))
    if not table or table[0] != ["sample"] + _columns(M, K, D):
        raise ValueError("posterior table header does not match metadata")
    values = np.array([[float(x) for x in r[1:]] for r in table[1:]], dtype=float).reshape(-1, M + M * K * K + M * K * D)
    if values.shape[0] != S:
        raise ValueError(f"expected {S} samples, found {values.shape[0]}")
    lam = values[:, :M]
    P = values[:, M:M + M * K * K].reshape(S, M, K, K)
    W = values[:, M + M * K * K:].reshape(S, M, K, D)
    mf = None
    if "factors" in meta:
        f = meta["factors"]
        mf = MFState(gamma_shape=np.array(f["gamma_shape"], dtype=float),
                     gamma_rate=float(f["gamma_rate"]),
                     weight_mean=np.array(f["weight_mean"], dtype=float).reshape(M, K, D),
                     weight_cov=np.array(f["weight_cov"], dtype=float).reshape(M, K, D, D),
                     dirichlet=np.array(f["dirichlet"], dtype=float).reshape(M, K, K),
                     latent_mass=np.array(f["latent_mass"], dtype=float),
                     loglik=np.array(meta.get("loglik", []), dtype=float),
                     n_events=int(meta.get("n_events", 0)),
                     converged=bool(f.get("converged", False)))
    return Posterior(meta["kind"], lam, P, W, np.array(meta.get("loglik", []), dtype=float),
                     meta.get("config_hash", ""), int(meta.get("n_events", 0)), mf)


def load_posterior(path: PathLike) -> Posterior:
    with open(path, newline="") as fh:
        return parse_posterior(fh)
