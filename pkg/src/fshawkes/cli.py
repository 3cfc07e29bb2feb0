"""Command-line entry point.

    fshawkes fixture   --out cfg.json
    fshawkes simulate  --config cfg.json --out events.csv
    fshawkes fit-mf    --config cfg.json --events events.csv --out post.txt
    fshawkes fit-gibbs --config cfg.json --events events.csv --out post.txt --threads 2
    fshawkes evaluate  --config cfg.json --events test.csv --posterior post.txt --out report.csv
    fshawkes qq        --config cfg.json --events test.csv --posterior post.txt --out qq.csv

A path of ``-`` (or omitting ``--out``) means stdin/stdout. Exit status is 0
on success, 2 on usage or input-file errors and 1 on numerical failures.
"""
from __future__ import annotations

import argparse
import contextlib
import dataclasses
import io
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig
from .evaluation import evaluate, ks_test
from .gibbs import run_gibbs
from .io import (EventFileError, dump_events, dump_posterior, parse_events, parse_posterior,
                 posterior_from_chain, posterior_from_meanfield)
from .meanfield import run_meanfield
from .simulator import SimConfig, fixture_run_config, simulate

log = logging.getLogger("fshawkes")


class InputError(Exception):
    """Bad input file or inconsistent arguments (exit status 2)."""


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        # build in memory so a failed run leaves no partial file behind
        buf = io.StringIO()
        yield buf
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _load_config(args) -> RunConfig:
    if args.config is None:
        raise InputError("--config is required for this command")
    try:
        cfg = RunConfig.from_json(_read_text(args.config))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid config {args.config}: {exc}") from None
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    overrides = {k: getattr(args, k) for k in ("iterations", "nodes_per_interval", "burn_in")
                 if getattr(args, k, None) is not None}
    if overrides:
        cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, **overrides))
    return cfg


def _load_events(path: str, cfg: RunConfig):
    if path is None:
        raise InputError("--events is required for this command")
    try:
        data = parse_events(io.StringIO(_read_text(path)))
    except EventFileError as exc:
        raise InputError(f"{path}: {exc}") from None
    if cfg.model is not None and cfg.model.params.M != data.M:
        raise InputError(f"{path}: file has M={data.M}, config model has M={cfg.model.params.M}")
    return data


def _params_for(args, cfg: RunConfig, data):
    if args.posterior is not None:
        try:
            post = parse_posterior(io.StringIO(_read_text(args.posterior)))
        except (KeyError, ValueError) as exc:
            raise InputError(f"invalid posterior file {args.posterior}: {exc}") from None
        if post.config_hash and post.config_hash != cfg.config_hash():
            log.warning("posterior was fitted under a different config (hash %s)", post.config_hash[:12])
        params = post.mean_params()
    elif cfg.model is not None:
        params = cfg.model.params
    else:
        raise InputError("need --posterior or a config with a model section")
    if params.M != data.M or params.K < data.K or params.B != cfg.basis.B:
        raise InputError("parameter shapes do not match the events/basis")
    return params


def _num(x) -> str:
    return str(x) if isinstance(x, (int, np.integer)) else repr(float(x))


def cmd_fixture(args) -> int:
    cfg = fixture_run_config(seed=0 if args.seed is None else args.seed,
                             T=2000.0 if args.T is None else args.T)
    with _output(args.out) as fh:
        fh.write(cfg.to_json() + "\n")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    if cfg.model is None:
        raise InputError("config has no model section to simulate from")
    m = cfg.model
    sim = SimConfig(params=m.params, basis=cfg.basis, T=m.T if args.T is None else args.T,
                    initial_state=m.initial_state, rng_seed=cfg.seed)
    data = simulate(sim)
    with _output(args.out) as fh:
        dump_events(data, fh)
    log.info("simulated %d events on [0, %g]", data.n_events, sim.T)
    return 0


def cmd_fit_gibbs(args) -> int:
    cfg = _load_config(args)
    data = _load_events(args.events, cfg)
    s = cfg.solver
    chain = run_gibbs(data, cfg.basis, cfg.priors, iterations=s.iterations, burn_in=s.burn_in,
                      thin=s.thin, seed=cfg.seed, ll_grid_points=s.ll_grid_points,
                      threads=args.threads, progress=args.verbose)
    with _output(args.out) as fh:
        dump_posterior(posterior_from_chain(chain, cfg.config_hash()), fh)
    return 0


def cmd_fit_mf(args) -> int:
    cfg = _load_config(args)
    data = _load_events(args.events, cfg)
    s = cfg.solver
    state = run_meanfield(data, cfg.basis, cfg.priors, max_iterations=s.iterations, tol=s.tol,
                          nodes_per_interval=s.nodes_per_interval, threads=args.threads,
                          progress=args.verbose)
    if not state.converged:
        log.warning("mean-field stopped at the iteration cap without meeting tol=%g", s.tol)
    post = posterior_from_meanfield(state, np.random.default_rng(cfg.seed), s.draws,
                                    cfg.config_hash())
    with _output(args.out) as fh:
        dump_posterior(post, fh)
    return 0


def _report(args):
    cfg = _load_config(args)
    data = _load_events(args.events, cfg)
    params = _params_for(args, cfg, data)
    return data, evaluate(params, cfg.basis, data, cfg.solver.eval_nodes_per_interval)


def cmd_evaluate(args) -> int:
    data, rep = _report(args)
    rows = [
        ("n_events", data.n_events),
        ("loglik_point_process", rep.loglik_point_process),
        ("loglik_state", rep.loglik_state),
        ("loglik_total", rep.loglik_total),
        ("per_event_loglik", rep.per_event_loglik),
        ("per_event_loglik_total", rep.per_event_loglik_total),
    ]
    for i in range(data.M):
        tau = rep.rescaled_times[i]
        if tau.size >= 3:
            ks = ks_test(tau)
            rows += [(f"ks_statistic.{i + 1}", ks.statistic), (f"ks_pvalue.{i + 1}", ks.pvalue)]
    with _output(args.out) as fh:
        fh.write("metric,value\n")
        for name, val in rows:
            fh.write(f"{name},{_num(val)}\n")
    return 0


def cmd_qq(args) -> int:
    data, rep = _report(args)
    with _output(args.out) as fh:
        fh.write("dim,theoretical,empirical\n")
        for i in range(data.M):
            for th, em in rep.qq_points[i]:
                fh.write(f"{i + 1},{_num(th)},{_num(em)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")
    common.add_argument("--config", default=None, help="JSON run config ('-' for stdin)")
    common.add_argument("--out", default=None, help="output path ('-' or omitted for stdout)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    fit = argparse.ArgumentParser(add_help=False)
    fit.add_argument("--events", default=None, help="event CSV ('-' for stdin)")
    fit.add_argument("--threads", type=int, default=1, help="worker threads over dimensions")
    fit.add_argument("--iterations", type=int, default=None)
    fit.add_argument("--nodes-per-interval", dest="nodes_per_interval", type=int, default=None)

    ev = argparse.ArgumentParser(add_help=False)
    ev.add_argument("--events", default=None, help="event CSV ('-' for stdin)")
    ev.add_argument("--posterior", default=None,
                    help="posterior file; without it the config's model section is evaluated")

    parser = argparse.ArgumentParser(prog="fshawkes", description="State-switching Hawkes processes: simulate, fit, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("fixture", parents=[common], help="emit the simulation benchmark config")
    p.add_argument("--T", type=float, default=None, help="horizon (default 2000)")
    p.set_defaults(func=cmd_fixture)
    p = sub.add_parser("simulate", parents=[common], help="simulate events from a config model")
    p.add_argument("--T", type=float, default=None, help="override the model horizon")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("fit-gibbs", parents=[common, fit], help="Gibbs sampler")
    p.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p.set_defaults(func=cmd_fit_gibbs)
    p = sub.add_parser("fit-mf", parents=[common, fit], help="mean-field variational inference")
    p.set_defaults(func=cmd_fit_mf)
    p = sub.add_parser("evaluate", parents=[common, ev], help="log-likelihood and KS summary")
    p.set_defaults(func=cmd_evaluate)
    p = sub.add_parser("qq", parents=[common, ev], help="Q-Q points of rescaled interarrivals")
    p.set_defaults(func=cmd_qq)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if getattr(args, "threads", 1) < 1:
        print("fshawkes: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except InputError as exc:
        print(f"fshawkes: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"fshawkes: numerical failure: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return 0
    except OSError as exc:
        print(f"fshawkes: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
