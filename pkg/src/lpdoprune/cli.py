"""Command-line harness: ``lpdo gen|prune|riemann|inject|fit|verify``.

Exit codes: 0 pass, 1 invariant failure, 2 usage error, 3 I/O error.
Every command accepts ``--config FILE`` (JSON, keys as in ExperimentConfig);
explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import bundle as bundle_io
from . import harness
from .fit import DegenerateModelError
from .harness import ExperimentConfig, VerificationError

EXIT_PASS = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _base_config(args) -> ExperimentConfig:
    config = harness.load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for field in dataclasses.fields(ExperimentConfig):
        value = getattr(args, field.name, None)
        if value is not None:
            overrides[field.name] = value
    if overrides:
        config = ExperimentConfig.from_dict({**config.to_dict(), **overrides})
    return config


def _add_config_flags(p: argparse.ArgumentParser, *names: str):
    p.add_argument("--config", help="JSON config file (flags override it)")
    flags = {
        "kind": lambda: p.add_argument(
            "--kind", choices=("optimal", "pure", "subopt"), default=None
        ),
        "n_sites": lambda: p.add_argument(
            "--n", dest="n_sites", type=int, default=None, help="number of sites"
        ),
        "chi_max": lambda: p.add_argument("--chi-max", dest="chi_max", type=int, default=None),
        "cutoffs": lambda: p.add_argument(
            "--lambdas",
            dest="cutoffs",
            type=lambda s: tuple(float(x) for x in s.split(",")),
            default=None,
            help="comma-separated truncation cutoffs",
        ),
        "n_sweeps": lambda: p.add_argument("--sweeps", dest="n_sweeps", type=int, default=None),
        "objective": lambda: p.add_argument(
            "--objective", choices=("renyi2", "von_neumann"), default=None
        ),
        "n_iter": lambda: p.add_argument("--n-iter", dest="n_iter", type=int, default=None),
        "fd_step": lambda: p.add_argument("--fd-step", dest="fd_step", type=float, default=None),
        "grad_tol": lambda: p.add_argument(
            "--grad-tol", dest="grad_tol", type=float, default=None
        ),
        "n_restarts": lambda: p.add_argument(
            "--restarts", dest="n_restarts", type=int, default=None
        ),
        "gamma_dephasing": lambda: p.add_argument(
            "--gamma-d", dest="gamma_dephasing", type=float, default=None
        ),
        "gamma_bitflip": lambda: p.add_argument(
            "--gamma-b", dest="gamma_bitflip", type=float, default=None
        ),
        "base_seed": lambda: p.add_argument("--seed", dest="base_seed", type=int, default=None),
        "bundle_path": lambda: p.add_argument(
            "--bundle", dest="bundle_path", default=None, help="input bundle file"
        ),
        "csv_path": lambda: p.add_argument(
            "--csv", dest="csv_path", default=None, help="output CSV file"
        ),
    }
    for name in names:
        flags[name]()


def _cmd_gen(args) -> int:
    config = _base_config(args)
    chain = harness.build_state(config)
    if args.out:
        bundle_io.save_bundle(chain, args.out)
        print(f"wrote {args.out}")
    print(harness.chain_profile(chain))
    return EXIT_PASS


def _cmd_prune(args) -> int:
    config = _base_config(args)
    if not config.bundle_path:
        raise SystemExit("prune: --bundle (or bundle_path in config) is required")
    text = harness.run_prune_grid(config)
    if not config.csv_path:
        sys.stdout.write(text)
    else:
        print(f"wrote {config.csv_path}")
    return EXIT_PASS


def _cmd_riemann(args) -> int:
    config = _base_config(args)
    if not config.bundle_path:
        raise SystemExit("riemann: --bundle (or bundle_path in config) is required")
    text = harness.run_riemann_grid(config)
    if not config.csv_path:
        sys.stdout.write(text)
    else:
        print(f"wrote {config.csv_path}")
    return EXIT_PASS


def _cmd_inject(args) -> int:
    ok = harness.inject_report(
        n_sites=args.n_sites,
        gate_name=args.u,
        cutoff=args.cutoff,
        seed=args.seed,
        site=args.site,
    )
    return EXIT_PASS if ok else EXIT_INVARIANT


def _cmd_fit(args) -> int:
    filters = {}
    for spec in args.filter or []:
        if "=" not in spec:
            raise SystemExit(f"fit: bad --filter {spec!r}, expected col=value")
        col, _, value = spec.partition("=")
        filters[col] = value
    result, n_points = harness.fit_from_csv(args.input, args.x_col, args.y_col, filters)
    print(
        f"f(x) = alpha + beta*exp(-gamma*x) on {n_points} points\n"
        f"alpha = {result.alpha!r} +- {result.se_alpha:.3e}\n"
        f"beta  = {result.beta!r} +- {result.se_beta:.3e}\n"
        f"gamma = {result.gamma!r} +- {result.se_gamma:.3e}\n"
        f"residual_norm = {result.residual_norm!r} converged = {result.converged} "
        f"({result.n_iter} iterations)"
    )
    if args.out:
        harness.write_csv(
            args.out,
            harness.FIT_COLUMNS,
            [harness.fit_row(result, args.x_col, args.y_col, n_points)],
        )
        print(f"wrote {args.out}")
    return EXIT_PASS if result.converged else EXIT_INVARIANT


def _cmd_verify(args) -> int:
    ok = harness.verify_report(args.bundle_a, args.bundle_b)
    return EXIT_PASS if ok else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpdo",
        description="Purified-chain experiment harness: generate states, prune "
        "bonds, optimize kraus isometries, verify against the dense oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a state bundle")
    _add_config_flags(
        p, "kind", "n_sites", "chi_max", "base_seed", "gamma_dephasing", "gamma_bitflip"
    )
    p.add_argument("--out", help="bundle file to write")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("prune", help="truncation sweeps over a cutoff grid")
    _add_config_flags(p, "bundle_path", "cutoffs", "n_sweeps", "chi_max", "base_seed", "csv_path")
    p.set_defaults(fn=_cmd_prune)

    p = sub.add_parser("riemann", help="kraus-isometry optimization sweeps")
    _add_config_flags(
        p,
        "bundle_path",
        "cutoffs",
        "n_sweeps",
        "chi_max",
        "base_seed",
        "csv_path",
        "objective",
        "n_iter",
        "fd_step",
        "grad_tol",
        "n_restarts",
    )
    p.set_defaults(fn=_cmd_riemann)

    p = sub.add_parser("inject", help="gate + analytic kraus disentangler demo")
    p.add_argument("--n", dest="n_sites", type=int, default=4)
    p.add_argument("--u", default="cnot", help="identity|cnot|swap|random2")
    p.add_argument("--cutoff", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--site", type=int, default=None, help="left site of the pair")
    p.set_defaults(fn=_cmd_inject)

    p = sub.add_parser("fit", help="exponential fit of CSV columns")
    p.add_argument("--input", required=True, help="CSV produced by prune/riemann")
    p.add_argument("--x-col", default="sweep")
    p.add_argument("--y-col", default="chi_mean")
    p.add_argument("--filter", action="append", help="col=value row filter (repeatable)")
    p.add_argument("--out", help="write a one-row fit CSV")
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("verify", help="cross-check two bundles")
    p.add_argument("bundle_a")
    p.add_argument("bundle_b")
    p.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, bundle_io.BundleFormatError) as exc:
        print(f"lpdo: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (VerificationError, DegenerateModelError) as exc:
        print(f"lpdo: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"lpdo: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
