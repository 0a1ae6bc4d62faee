"""``optw``: analyze theories, verify invariant suites, run composite and teleportation scenarios."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import suites
from .config import using_tolerances
from .io import load_scenario, load_states, load_theory, theory_to_dict, ZOO_HELP
from .report import _plain

FORMATS = ("text", "tsv", "json")


def _seed(value):
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return seed


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None,
                        help="RNG seed (PCG64); falls back to $OPTW_SEED, then 0")
    common.add_argument("--tol", type=float, default=None,
                        help="feasibility tolerance (default 1e-9)")
    common.add_argument("--cutoff", type=int, default=None,
                        help="largest subset size searched by rank/dimension routines")
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--jobs", type=int, default=1, help="worker threads")
    common.add_argument("-o", "--output", default=None, help="write the report here")

    p = argparse.ArgumentParser(prog="optw", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    theory_help = f"theory JSON file or zoo spec ({ZOO_HELP})"
    sub.add_parser("analyze", parents=[common], help="dimensions, chaotic state, witnesses") \
        .add_argument("theory", help=theory_help)
    v = sub.add_parser("verify", parents=[common], help="randomized invariant suite")
    v.add_argument("theory", help=theory_help)
    v.add_argument("--samples", type=int, default=40, help="random draws per check")
    sub.add_parser("composite", parents=[common], help="bipartite scenario checks") \
        .add_argument("scenario")
    t = sub.add_parser("teleport", parents=[common], help="teleportation scenario")
    t.add_argument("scenario")
    t.add_argument("--table", action="store_true", help="also print the per-target table")
    d = sub.add_parser("distance", parents=[common], help="pairwise distance matrix")
    d.add_argument("theory", help=theory_help)
    d.add_argument("--states", required=True, help="JSON list of state specs")
    e = sub.add_parser("export", parents=[common], help="write a theory as JSON")
    e.add_argument("theory", help=theory_help)
    return p


def _config(args):
    seed = args.seed
    if seed is None:
        seed = _seed(os.environ.get("OPTW_SEED", 0))
    return suites.RunConfig(seed=seed, cutoff=args.cutoff, jobs=max(1, args.jobs),
                            samples=getattr(args, "samples", 40))


def _emit(text, args):
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _matrix_text(D, fmt):
    D = np.asarray(D, dtype=float)
    if fmt == "json":
        return json.dumps({"distances": _plain(D)}, indent=2, sort_keys=True) + "\n"
    sep = "\t" if fmt == "tsv" else "  "
    return "".join(sep.join(f"{x:.10g}" for x in row) + "\n" for row in D)


def cmd_analyze(theory, cfg=None):
    return suites.analyze(load_theory(theory), cfg or suites.RunConfig())


def cmd_verify(theory, cfg=None):
    return suites.verify(load_theory(theory), cfg or suites.RunConfig())


def cmd_composite(scenario, cfg=None):
    return suites.composite_report(load_scenario(scenario), cfg or suites.RunConfig())


def cmd_teleport(scenario, cfg=None):
    """A :class:`suites.TeleportRun`: the report and the per-target table."""
    return suites.teleport_report(load_scenario(scenario), cfg or suites.RunConfig())


def cmd_distance(theory, states, cfg=None):
    """Distance matrix of the states listed in the JSON file ``states``."""
    cfg = cfg or suites.RunConfig()
    T = load_theory(theory).theory
    return suites.distance_report(T, load_states(T, states, suites.check_rng(cfg, "distance states")),
                                  cfg)


def run(args):
    cfg = _config(args)
    overrides = {} if args.tol is None else {"feasibility": args.tol}
    with using_tolerances(**overrides):
        if args.command == "analyze":
            rep = cmd_analyze(args.theory, cfg)
        elif args.command == "verify":
            rep = cmd_verify(args.theory, cfg)
        elif args.command == "composite":
            rep = cmd_composite(args.scenario, cfg)
        elif args.command == "teleport":
            res = cmd_teleport(args.scenario, cfg)
            text = res.report.render(args.format)
            if args.table:
                text += "target\toutcome\tprobability\tdistance\n" + "".join(
                    f"{t}\t{lab}\t{p:.15g}\t{dist:.6g}\n" for t, lab, p, dist in res.table)
            _emit(text, args)
            return res.report.exit_code
        elif args.command == "distance":
            _emit(_matrix_text(cmd_distance(args.theory, args.states, cfg), args.format), args)
            return 0
        elif args.command == "export":
            tf = load_theory(args.theory)
            d = theory_to_dict(tf.theory, tf.observables, tf.instruments)
            _emit(json.dumps(d, indent=2, sort_keys=True) + "\n", args)
            return 0
    _emit(rep.render(args.format), args)
    return rep.exit_code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (OSError, ValueError, KeyError) as e:
        print(f"optw: error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
