"""Command-line front end.

Exit codes: 0 success (all acceptance flags true), 1 an experiment flag
failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .common import format_float
from .experiments import ExperimentConfig, run_experiment
from .hawkes import (EventStream, FlatProfile, TabulatedProfile, price_path,
                     rescale_price, simulate_hawkes, simulate_metaorder, soe_fit)
from .heston import simulate_hyper_rough, simulate_rough_heston
from .impact import analytic_mi, macroscopic_mi, mc_mi
from .kernels import (EXPONENTIAL, POWER_LAW, KernelSpec, MarketParams,
                      mittag_rate, schedule)
from .mittag import ml_e
from .riccati import h_linear, h_plateau, solve_volterra_riccati


def _profile(name: str):
    if name == "flat":
        return FlatProfile()
    return TabulatedProfile.from_csv(name)


def _kernel(args) -> KernelSpec:
    if getattr(args, "family", "power") == "exp":
        return KernelSpec(EXPONENTIAL)
    return KernelSpec(POWER_LAW, alpha=args.alpha)


def _market(args, spec) -> MarketParams:
    if args.aT is not None:
        muT = args.muT if args.muT is not None else args.delta / ((1 - args.aT) * args.T)
        return MarketParams(T=args.T, aT=args.aT, muT=muT, K=args.K,
                            delta=args.delta, gamma=args.gamma)
    return schedule(args.T, spec, args.K, args.delta, args.gamma)


def _cmd_ml(args) -> int:
    print(format_float(ml_e(args.alpha, args.beta, args.z)))
    return 0


def _cmd_simulate(args) -> int:
    spec = _kernel(args)
    params = _market(args, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    profile = _profile(args.profile)
    soe = soe_fit(spec, args.soe_terms, args.T) if args.engine == "soe" else None
    for rep in range(args.reps):
        flow = simulate_hawkes(params, spec, args.T, (args.seed, rep),
                               engine_name=args.engine, soe=soe)
        stream = flow
        if params.gamma > 0:
            meta = simulate_metaorder(params, profile, args.T, (args.seed, rep))
            stream = EventStream.merge(flow, meta)
        stream.to_csv(out / f"events_rep{rep:04d}.csv")
        if args.price_points > 0:
            grid = np.linspace(0.0, args.T, args.price_points)
            path = rescale_price(price_path(stream, spec, params, grid), params)
            path.to_csv(out / f"price_rep{rep:04d}.csv")
    print(f"wrote {args.reps} replication(s) to {out}")
    return 0


def _cmd_impact(args) -> int:
    spec = _kernel(args)
    profile = _profile(args.profile)
    grid = np.linspace(0.0, args.t_max, args.grid_points)
    if args.mode == "limit":
        curve = macroscopic_mi(args.alpha, args.K, args.gamma, profile, grid)
    else:
        params = _market(args, spec)
        if args.mode == "analytic":
            curve = analytic_mi(params, spec, profile, grid)
        else:
            curve = mc_mi(params, spec, profile, grid, args.reps, args.seed,
                          engine_name=args.engine, noise=args.noise)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curve.to_csv(out / "impact.csv")
    if args.alpha == 0.5:
        macroscopic_mi(0.5, args.K, args.gamma, profile, grid).to_csv(out / "figure1.csv")
    print(f"wrote impact curve to {out / 'impact.csv'}")
    return 0


def _cmd_riccati(args) -> int:
    kind, _, spec = args.h.partition(":")
    u = float(spec.split("=", 1)[1]) if spec else 0.5
    if kind == "linear":
        h = h_linear(u)
    elif kind == "plateau":
        h = h_plateau(u)
    else:
        raise ValueError(f"unknown test function {args.h!r}; use linear:u=… or plateau:u=…")
    lam = args.lam if args.lam is not None else mittag_rate(args.K, args.alpha)
    grid = np.linspace(0.0, args.tmax, args.steps + 1)
    sol = solve_volterra_riccati(h, args.alpha, lam, args.delta, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sol.to_csv(out / "riccati.csv")
    print(f"wrote Riccati solution ({sol.iterations} iterations) to {out / 'riccati.csv'}")
    return 0


def _cmd_heston(args) -> int:
    lam = args.lam if args.lam is not None else mittag_rate(args.K, args.alpha)
    grid = np.linspace(0.0, 1.0, args.steps + 1)
    sim = simulate_rough_heston if args.alpha > 0.5 else simulate_hyper_rough
    vp, pp = sim(args.alpha, lam, args.delta, grid, args.seed, n_paths=args.paths)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(min(args.paths, args.max_files)):
        vp.to_csv(out / f"variance_path{i:03d}.csv", path_index=i)
        pp.to_csv(out / f"price_path{i:03d}.csv", path_index=i)
    summary = {
        "regime": vp.meta["regime"], "lam": lam,
        "mean_X1": float(vp.X[:, -1].mean()),
        "var_price1": float(pp.price[:, -1].var()),
        "clamped_fraction": vp.clamped_fraction,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(f"wrote {min(args.paths, args.max_files)} path file(s) to {out}")
    return 0


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    artifact = run_experiment(config)
    flags = artifact.summary.get("flags", {})
    for name, ok in sorted(flags.items()):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return 0 if artifact.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawkes-impact",
        description="Nearly unstable order-flow simulation, metaorder impact "
                    "curves, and rough Heston scaling limits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml", help="Mittag-Leffler debug evaluation")
    mlsub = p.add_subparsers(dest="ml_command", required=True)
    pe = mlsub.add_parser("eval")
    pe.add_argument("--alpha", type=float, required=True)
    pe.add_argument("--beta", type=float, required=True)
    pe.add_argument("--z", type=float, required=True)
    pe.set_defaults(fn=_cmd_ml)

    p = sub.add_parser("simulate", help="simulate order flow and price paths")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--family", choices=["power", "exp"], default="power")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--aT", type=float, default=None,
                   help="branching ratio; omit to derive it from the schedule")
    p.add_argument("--muT", type=float, default=None)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--profile", default="flat", help="flat or a CSV of (u,f) knots")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--engine", choices=["exact", "soe"], default="exact")
    p.add_argument("--soe-terms", type=int, default=16)
    p.add_argument("--price-points", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("impact", help="impact curves: analytic, MC, or limit")
    p.add_argument("--mode", choices=["analytic", "mc", "limit"], required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--family", choices=["power"], default="power")
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--T", type=float, default=1e4)
    p.add_argument("--aT", type=float, default=None)
    p.add_argument("--muT", type=float, default=None)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--profile", default="flat")
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--engine", choices=["exact", "soe"], default="exact")
    p.add_argument("--noise", choices=["paired", "full"], default="paired")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_impact)

    p = sub.add_parser("riccati", help="Volterra Riccati characteristic functional")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--h", default="linear:u=0.5")
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=2048)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_riccati)

    p = sub.add_parser("heston", help="rough / hyper-rough limit paths")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-files", type=int, default=16)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_heston)

    p = sub.add_parser("run", help="run a canonical experiment from JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "impact" and args.mode == "mc" and args.seed is None:
        parser.error("--seed is required in mc mode")
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
