"""Command-line entry point.

Exit codes: 0 success, 1 a run or check failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..oracle import cooperative_benchmark, stackelberg_equilibrium
from ..scenario import ScenarioError
from .checks import run_checks
from .config import OUTPUT_ENV, ConfigError, load_config
from .experiment import run_experiment

log = logging.getLogger("femtolearn")


def _csv(text, cast):
    try:
        return [cast(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}") from None


def _apply_cli(cfg, args):
    if args.seeds:
        cfg = cfg.with_overrides(seeds=_csv(args.seeds, int))
    if args.regimes:
        cfg = cfg.with_overrides(regimes=_csv(args.regimes, str))
    if args.episodes is not None:
        cfg = cfg.with_value("learning", "num_episodes", args.episodes)
    if args.no_traces:
        cfg = cfg.with_overrides(write_traces=False)
    if args.sweep:
        name, _, values = args.sweep.partition("=")
        if not values:
            raise ConfigError("--sweep expects name=v1,v2,...")
        cfg = cfg.with_sweep(name.strip(), _csv(values, float))
    return cfg


def cmd_simulate(args):
    cfg = _apply_cli(load_config(args.config), args)
    report = run_experiment(cfg, out_dir=args.out, log=log.info)
    print(f"wrote {len(report.files)} files to {report.output_dir}")
    print((report.output_dir / "summary.txt").read_text(), end="")
    if not report.ok:
        for f in report.failures:
            print(f"FAILED: {f}", file=sys.stderr)
        return 1
    return 0


def cmd_oracle(args):
    cfg = load_config(args.config)
    seeds = _csv(args.seeds, int) if args.seeds else cfg.seeds
    selector = cfg.section("experiment")["ne_selector"]
    for seed in seeds:
        sc, active = cfg.scenario(seed)
        print(f"== seed {seed}" + ("" if active else " (femtocells switched off by the power mask)"))
        rep = stackelberg_equilibrium(sc, selector, strict=False)
        print(rep.summary(sc))
        co = cooperative_benchmark(sc)
        print(f"Cooperative benchmark: actions {list(co.actions)}, utilities "
              + ", ".join(f"{u:.6g}" for u in co.utilities))
        print("  per-user maximum: " + ", ".join(f"{u:.6g}" for u in co.per_user_max))
    return 0


def cmd_check(args):
    return 0 if run_checks(seed=args.seed) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="femtolearn", description=(
        "Leader/follower power-control learning in a two-tier femtocell uplink."))
    p.add_argument("-v", "--verbose", action="store_true", help="log every finished run")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the configured experiment and write CSV results")
    sim.add_argument("--config", help="experiment TOML (defaults to the standard setup)")
    sim.add_argument("--out", help=f"output directory (default: config, then ${OUTPUT_ENV}, then ./results)")
    sim.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2")
    sim.add_argument("--regimes", help="comma-separated subset of rlhpa1,rlhpa2,noncoop,oracle,cooperative")
    sim.add_argument("--sweep", help="parameter sweep, e.g. leader_min_sinr_db=1,3,5")
    sim.add_argument("--episodes", type=int, help="number of leader episodes K")
    sim.add_argument("--no-traces", action="store_true", help="skip the per-slot trace CSVs")
    sim.set_defaults(func=cmd_simulate)

    orc = sub.add_parser("oracle", help="print the Stackelberg equilibrium and cooperative benchmark")
    orc.add_argument("--config")
    orc.add_argument("--seeds")
    orc.set_defaults(func=cmd_oracle)

    chk = sub.add_parser("check", help="run the numerical self-checks")
    chk.add_argument("--seed", type=int, default=0)
    chk.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, OSError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
