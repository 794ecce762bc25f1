"""Command line entry points.

simulate    run a parameter sweep and write aggregate.csv
gen-network generate one contact network and save its edge list
estimate-k  fit the dispersion of secondary-infection counts from a run

simulate starts from the workstation-sized default profile; a config file
(flat key = value lines, commas for lists) and then explicit flags override
it. --dump-config prints the effective configuration and exits, and feeding
that dump back in reproduces the same sweep.
"""

import argparse
import sys
from dataclasses import replace

from .epidemic import read_secondary_counts
from .errors import ParameterError
from .harness import (
    ExperimentSpec,
    dump_config,
    load_config,
    load_preset,
    run_experiment,
)
from .metrics import estimate_dispersion
from .netgen import (
    KIND_ER,
    KIND_GAMMA,
    KIND_SUPERSPREADING,
    NETWORK_KINDS,
    derive_degree_distribution,
    generate_er_network,
    generate_gamma_infectiousness_network,
    generate_superspreading_network,
    network_stats,
    save_network,
)


def _int_list(text):
    return tuple(int(v.strip()) for v in text.split(","))


def _str_list(text):
    return tuple(v.strip() for v in text.split(","))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="epitrace",
        description="Stochastic epidemics on contact networks with test-and-trace",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a parameter sweep")
    sim.add_argument("--config", help="config file with key = value lines")
    sim.add_argument("--strategy", type=_str_list, help="testing strategy (comma list)")
    sim.add_argument(
        "--daily-tests", type=_int_list, help="daily test budget (comma list)"
    )
    sim.add_argument("--preset", help="disease preset name")
    sim.add_argument("--n", type=_int_list, help="population size (comma list)")
    sim.add_argument("--seed", type=int, help="base seed")
    sim.add_argument("--parallel", type=int, help="worker processes")
    sim.add_argument(
        "--emit-trajectories",
        action="store_true",
        default=None,
        help="write per-run trajectory CSVs",
    )
    sim.add_argument("--out", help="output directory")
    sim.add_argument(
        "--dump-config",
        action="store_true",
        help="print the effective configuration and exit",
    )

    gen = sub.add_parser("gen-network", help="generate one contact network")
    gen.add_argument("--kind", default=KIND_SUPERSPREADING, choices=NETWORK_KINDS)
    gen.add_argument("--k", type=float, help="dispersion / shape parameter")
    gen.add_argument("--r0", type=float, required=True)
    gen.add_argument("--beta", type=float, required=True)
    gen.add_argument("--gamma", type=float, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="edge list output path")

    est = sub.add_parser("estimate-k", help="dispersion of secondary infections")
    est.add_argument(
        "--trajectory",
        required=True,
        help="trajectory CSV (or its .infections.csv sibling)",
    )
    est.add_argument("--first-m", type=int, default=100)
    return parser


def _cmd_simulate(args):
    spec = ExperimentSpec.desk_profile()
    if args.config:
        spec = load_config(args.config, base=spec)
    if args.preset:
        p = load_preset(args.preset)
        spec = replace(
            spec,
            model=(p.model,),
            R0=(p.R0,),
            beta=(p.beta,),
            gamma=(p.gamma,),
            kappa=(p.kappa,),
            p_H=(p.p_H,),
            k=(p.k,),
        )
    overrides = {}
    if args.strategy is not None:
        overrides["strategy"] = args.strategy
    if args.daily_tests is not None:
        overrides["daily_tests"] = args.daily_tests
    if args.n is not None:
        overrides["N"] = args.n
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.parallel is not None:
        overrides["parallel"] = args.parallel
    if args.emit_trajectories is not None:
        overrides["emit_trajectories"] = args.emit_trajectories
    if args.out is not None:
        overrides["output_dir"] = args.out
    if overrides:
        spec = replace(spec, **overrides)

    if args.dump_config:
        sys.stdout.write(dump_config(spec))
        return 0

    result = run_experiment(spec)
    print(f"aggregate: {result.aggregate_path}")
    print(f"runs completed: {result.runs_completed}")
    if result.failures:
        print(f"failures: {len(result.failures)} (see failures.txt)", file=sys.stderr)
        return 1
    return 0


def _cmd_gen_network(args):
    if args.kind == KIND_SUPERSPREADING:
        if args.k is None:
            raise ParameterError("--k is required for superspreading networks")
        dist = derive_degree_distribution(args.k, args.r0, args.beta, args.gamma)
        net = generate_superspreading_network(dist, args.n, args.seed)
    elif args.kind == KIND_ER:
        net = generate_er_network(args.r0, args.beta, args.gamma, args.n, args.seed)
    elif args.kind == KIND_GAMMA:
        if args.k is None:
            raise ParameterError("--k is required for gamma_infectiousness networks")
        net = generate_gamma_infectiousness_network(
            args.k, args.r0, args.beta, args.gamma, args.n, args.seed
        )
    else:
        raise ParameterError(f"unknown kind {args.kind!r}")
    path = save_network(net, args.out)
    stats = network_stats(net)
    print(
        f"wrote {path}: {net.node_count} nodes, {net.edge_count} edges, "
        f"mean degree {stats.empirical_mean_degree:.3f}"
    )
    return 0


def _cmd_estimate_k(args):
    counts = read_secondary_counts(args.trajectory)
    if args.first_m <= 0:
        raise ParameterError("--first-m must be positive")
    sample = counts[: args.first_m]
    est = estimate_dispersion(sample)
    print(f"k_hat={est.k_hat!r}")
    print(f"mean_hat={est.mean_hat!r}")
    print(f"sample_size={est.sample_size}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "gen-network":
            return _cmd_gen_network(args)
        if args.command == "estimate-k":
            return _cmd_estimate_k(args)
        parser.error(f"unknown command {args.command!r}")
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
