"""Command-line entry point: simulate, fit, deconvolve, diagnose, sweep."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .core import ModeLattice
from .deconvolve import WeightFunction, deconvolve
from .estimate import FitConfig, SingularGram, fit_mle
from .experiment import ConfigError, ExperimentConfig, emit, run_sweep
from .metrics import decoupling_error_t1, e_norm, rate_exponent, x_norm
from .rng import derive_seed
from .simulate import InitialLaw, simulate_ips, simulate_reference_flow

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_SINGULAR = 4


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def cmd_simulate(args) -> int:
    model = io.load_model(args.model)
    init = InitialLaw.parse(args.init)
    data = simulate_ips(model, args.n, args.t, args.steps, init, args.seed)
    io.save_trajectory(data, args.out)
    if args.flow_out:
        n_ref = args.n_ref or 16 * args.n
        k = args.flow_k if args.flow_k is not None else max(model.kf, 1)
        seed = args.flow_seed if args.flow_seed is not None else derive_seed(args.seed, 1)
        flow, ens = simulate_reference_flow(model, n_ref, args.t, args.steps, init,
                                            ModeLattice(model.dim, k), seed, keep_positions=True)
        io.save_flow(flow, args.flow_out, ens)
    return EXIT_OK


def cmd_fit(args) -> int:
    data = io.load_trajectory(args.traj)
    cfg = FitConfig(args.kg, args.kf, args.lam, args.sobolev, args.jitter)
    try:
        model = fit_mle(data, cfg)
    except SingularGram as err:
        print(f"singular Gram matrix: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    io.save_model(model, args.out)
    return EXIT_OK


def cmd_deconvolve(args) -> int:
    bhat = io.load_model(args.model_hat)
    flow, _ = io.load_flow(args.flow)
    w = WeightFunction.make(args.weight, flow.m, flow.T)
    rep = deconvolve(bhat, flow, w, K=args.k, n=args.n, alpha=args.alpha,
                     lb_error_l2=args.lb_error, h1_budget=args.h1_budget)
    _write_json(args.out, rep.to_dict())
    return EXIT_OK


def cmd_diagnose(args) -> int:
    data = io.load_trajectory(args.traj)
    model = io.load_model(args.model)
    flow, ens = io.load_flow(args.flow)
    doc = {"t1": decoupling_error_t1(data, model, flow),
           "rate_exponent": rate_exponent(args.alpha, model.dim)}
    delta = model - io.load_model(args.truth) if args.truth else model
    x = x_norm(delta, data, flow)
    e = e_norm(delta, flow, ens) if ens is not None else None
    doc.update(x_norm=x, e_norm=e, gap=None if e is None else abs(x * x - e * e))
    _write_json(args.out, doc)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    result = run_sweep(config, jobs=args.jobs)
    emit(result, args.out, timing=not args.no_timing)
    print(json.dumps(result.summary()))
    return EXIT_PARTIAL if result.n_failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ipsdrift", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate particles (and optionally a reference flow)")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=1024)
    s.add_argument("--init", default="wrapped_gaussian:0.5:0.1")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--flow-out")
    s.add_argument("--n-ref", type=int)
    s.add_argument("--flow-k", type=int)
    s.add_argument("--flow-seed", type=int)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="maximum-likelihood drift fit")
    f.add_argument("--traj", required=True)
    f.add_argument("--kg", type=int, default=4)
    f.add_argument("--kf", type=int, default=4)
    f.add_argument("--lambda", dest="lam", type=float, default=0.0)
    f.add_argument("--sobolev", type=float, default=0.0)
    f.add_argument("--jitter", type=float, default=0.0)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    d = sub.add_parser("deconvolve", help="recover the interaction kernel from a fitted drift")
    d.add_argument("--model-hat", required=True)
    d.add_argument("--flow", required=True)
    d.add_argument("--weight", choices=["cosine", "haar"], default="cosine")
    d.add_argument("--k", type=int)
    d.add_argument("--n", type=int, help="sample size, enables the eta_N report")
    d.add_argument("--alpha", type=float, default=2.0)
    d.add_argument("--lb-error", type=float, default=0.0)
    d.add_argument("--h1-budget", type=float)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_deconvolve)

    g = sub.add_parser("diagnose", help="decoupling error and norm comparison")
    g.add_argument("--traj", required=True)
    g.add_argument("--model", required=True)
    g.add_argument("--flow", required=True)
    g.add_argument("--truth", help="norms are of model - truth (default: of model)")
    g.add_argument("--alpha", type=float, default=2.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_diagnose)

    w = sub.add_parser("sweep", help="N-sweep with replicates")
    w.add_argument("--config", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--seed", type=int)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--no-timing", action="store_true", help="zero wall_ms for byte-stable output")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
