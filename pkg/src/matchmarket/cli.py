"""Command-line entry point: ``matchmarket <command> ...``.

Exit codes: 0 success, 1 replay mismatch, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

from .config import ExperimentConfig, load_config, parse_lambda, parse_spec
from .errors import ConfigError, DataError, MatchMarketError

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3


def _add_run_options(p, many):
    p.add_argument("--config", help="TOML experiment file")
    p.add_argument("--n", type=int, help="number of agents")
    p.add_argument("--steps", type=int, help="number of steps T")
    p.add_argument("--offdiag", help="affinity law, e.g. gaussian:0:1 or uniform:0:1")
    p.add_argument("--diag", help="self-utility law (defaults to --offdiag)")
    p.add_argument("--policy", choices=["none", "fixed", "heterogeneous", "adaptive"])
    p.add_argument("--sigma-lambda", type=float)
    if many:
        p.add_argument("--lambdas", nargs="+", help="thresholds; 'none' for no marriage")
        p.add_argument("--seeds", nargs="+", type=int)
        p.add_argument("--output-dir")
        p.add_argument("--workers", type=int)
        p.add_argument("--analytic", action="store_true", default=None,
                       help="also write the mean-field tables")
    else:
        p.add_argument("--lambda", dest="lam", help="threshold; 'none' for no marriage")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="CSV path (default: stdout)")


def _config(args, many):
    over = {
        "n": args.n, "steps": args.steps, "policy": args.policy,
        "sigma_lambda": args.sigma_lambda,
        "offdiag": parse_spec(args.offdiag, "--offdiag") if args.offdiag else None,
        "diag": parse_spec(args.diag, "--diag") if args.diag else None,
    }
    if many:
        over.update(lambdas=[parse_lambda(v, "--lambdas") for v in args.lambdas] if args.lambdas else None,
                    seeds=args.seeds, output_dir=args.output_dir, workers=args.workers,
                    analytic=args.analytic)
    else:
        over.update(lambdas=[parse_lambda(args.lam, "--lambda")] if args.lam is not None else None,
                    seeds=[args.seed] if args.seed is not None else None)
    base = load_config(args.config) if args.config else ExperimentConfig()
    cfg = base.with_overrides(**over)
    if over.get("lambdas") and cfg.policy == "none":
        lam = [parse_lambda(v) for v in cfg.lambdas]
        if any(math.isfinite(v) for v in lam) and args.policy is None:
            cfg = cfg.with_overrides(policy="fixed")
    return cfg


def cmd_simulate(args):
    from .sweep import TRAJECTORY_HEADER, provenance_line, trajectory_rows

    cfg = _config(args, many=False)
    label, policy = cfg.policies()[0]
    seed = cfg.seeds[0]
    lines = [provenance_line(cfg), TRAJECTORY_HEADER, *trajectory_rows(cfg, label, policy, seed)]
    text = "\n".join(lines) + "\n"
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"--out: cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args):
    from .sweep import run_sweep

    cfg = _config(args, many=True)
    res = run_sweep(cfg)
    print(f"wrote {len(res.files)} files to {res.output_dir} (manifest {res.manifest.name})")
    return EXIT_OK


def _q(x):
    return str(x) if isinstance(x, Fraction) else f"{x:.12g}"


def cmd_analytic(args):
    from .analytic import ModelSpec, evolve, stationary_moment

    spec = parse_spec(args.offdiag, "--offdiag")
    diag = parse_spec(args.diag, "--diag") if args.diag else spec
    model = ModelSpec(spec, diag)
    states = evolve(model, args.steps, n_max=args.n_max)
    cols = ["t", "b", "r"] + [f"m{n}" for n in range(1, args.n_max + 1)]
    print(",".join(cols))
    for s in states:
        vals = [s.b, s.r, *s.population_moments[1:]]
        print(",".join([str(s.t)] + [_q(v) for v in vals]))
        if args.decimal and s.exact:
            print(",".join([f"# {s.t}"] + [f"{float(v):.12g}" for v in vals]))
    if args.lam is not None:
        lam = parse_lambda(args.lam, "--lambda")
        print("n,stationary_moment")
        for n in range(args.n_max + 1):
            print(f"{n},{_q(stationary_moment(n, lam, model))}")
    return EXIT_OK


def cmd_stable(args):
    import numpy as np

    from .model import RngStream, build_affinity
    from .stable import BipartiteInstance, gale_shapley, random_bipartition

    spec = parse_spec(args.offdiag, "--offdiag")
    print("seed,u_gs,proposer_mean,reviewer_mean,proposals")
    vals = []
    for seed in args.seeds:
        rng = RngStream(seed)
        A = build_affinity(args.n, spec, spec, rng)
        p, r = random_bipartition(args.n, rng)
        m = gale_shapley(BipartiteInstance(p, r, A))
        vals.append(m.u_gs)
        print(f"{seed},{m.u_gs:.12g},{m.proposer_mean:.12g},{m.reviewer_mean:.12g},{m.proposals}")
    print(f"# mean u_gs over {len(vals)} matrices: {np.mean(vals):.12g}")
    return EXIT_OK


def cmd_fit(args):
    from .fit import curves_from_summary, fit_cohorts, format_report
    from .realdata import ingest_marriage_series, load_bundled_series
    from .sweep import read_summary, run_sweep

    series = ingest_marriage_series(args.data) if args.data else load_bundled_series()
    if args.summary:
        try:
            summary = read_summary(args.summary)
        except (OSError, ValueError, IndexError) as exc:
            raise DataError(f"cannot read summary {args.summary}: {exc}") from None
    else:
        if not args.config:
            raise ConfigError("fit needs --summary or --config")
        res = run_sweep(load_config(args.config))
        summary = read_summary(res.output_dir / "summary.csv")
    print(format_report(fit_cohorts(curves_from_summary(summary), series)))
    return EXIT_OK


def cmd_replay(args):
    from .sweep import replay

    bad = replay(args.manifest, args.output_dir)
    if bad:
        print("mismatch: " + ", ".join(bad))
        return EXIT_MISMATCH
    print("all files reproduced byte for byte")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="matchmarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one trajectory as CSV")
    _add_run_options(p, many=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="all (threshold, seed) cells, files and manifest")
    _add_run_options(p, many=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analytic", help="mean-field evolution and long-run moments")
    p.add_argument("--offdiag", default="uniform:0:1")
    p.add_argument("--diag")
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--lambda", dest="lam", help="also print long-run married moments")
    p.add_argument("--decimal", action="store_true", help="add decimal renderings")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("stable-baseline", help="Gale-Shapley on random equal splits")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--offdiag", default="gaussian:0:1")
    p.add_argument("--seeds", nargs="+", type=int, default=[0])
    p.set_defaults(func=cmd_stable)

    p = sub.add_parser("fit", help="fit threshold curves to cohort data")
    p.add_argument("--data", help="cohort,age_years,share_married CSV (default: bundled)")
    p.add_argument("--summary", help="summary.csv of a finished sweep")
    p.add_argument("--config", help="run this sweep first")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MatchMarketError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
