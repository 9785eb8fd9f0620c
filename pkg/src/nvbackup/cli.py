"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import runner
from .config import ScheduleSpec, TraceSource, load_config
from .errors import ConfigError, NVBackupError
from .schedule import fixed_schedule, random_schedule
from .strategies import aliveness_profile
from .trace import LOCALITIES, SyntheticProfile, footprint, gen_synthetic_trace, interval_access_counts, load_trace, save_trace

log = logging.getLogger("nvbackup")

EXIT_CONFIG = 2
EXIT_DATA = 3


def _csv_numbers(kind):
    def parse(text):
        try:
            return [kind(float(x)) if kind is int else kind(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
    return parse


def cmd_analyze(args) -> int:
    trace = load_trace(args.trace)
    fp = footprint(trace)
    out = {"trace": str(args.trace), "n_events": len(trace), "last_cycle": trace.last_cycle,
           "footprint": asdict(fp)}
    if args.n_prog or args.failure_prob:
        if args.n_prog:
            sched = fixed_schedule(trace.last_cycle, args.n_prog)
        else:
            sched = random_schedule(trace.last_cycle, args.failure_prob, args.seed)
        counts = interval_access_counts(trace, sched)
        prof = aliveness_profile(trace, sched)
        out["intervals"] = [
            {"interval": i, "n_load": c.n_load, "n_store": c.n_store,
             "alive_fraction": round(a, 6), "alive_modified_fraction": round(m, 6)}
            for i, (c, a, m) in enumerate(zip(counts, prof.alive_fraction, prof.alive_and_modified_fraction))
        ]
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "trace", None):
        changes["traces"] = tuple(TraceSource(Path(p).stem, path=Path(p).resolve()) for p in args.trace)
    if getattr(args, "out", None):
        changes["output_dir"] = Path(args.out).resolve()
    if getattr(args, "jobs", None):
        changes["jobs"] = args.jobs
    cfg = replace(cfg, **changes) if changes else cfg
    if cfg.output_dir is None:
        raise ConfigError("no output directory: set [output] dir or pass --out")
    return cfg


def cmd_simulate(args) -> int:
    cfg = _config(args)
    result = runner.run_experiment(cfg)
    log.info("wrote %d backup rows to %s", len(result.backup_rows), cfg.output_dir)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.n_prog:
        rows = runner.sweep_interval_lengths(cfg, args.n_prog, args.block_size)
        runner.write_table(out / "sweep_interval.csv", rows)
        specs = [ScheduleSpec("fixed", n) for n in args.n_prog]
    else:
        if not cfg.failure_prob:
            raise ConfigError("sweep needs --n-prog or [schedule] failure_prob")
        rows = runner.sweep_seeds(cfg, args.block_size)
        runner.write_table(out / "sweep_seeds.csv", rows)
        specs = [s for s in cfg.schedule_specs() if s.kind == "random"]
    runner.run_experiment(cfg, specs)
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    rows = runner.compare_architectures(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner.write_table(out / "compare.csv", rows)
    runner.run_experiment(cfg)
    return 0


def cmd_gen_trace(args) -> int:
    try:
        profile = SyntheticProfile(
            n_events=args.n_events,
            addr_range_words=args.addr_range_words,
            store_fraction=args.store_fraction,
            locality=args.locality,
            base_addr=args.base_addr,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    trace = gen_synthetic_trace(profile, args.seed)
    save_trace(trace, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvbackup", description="Trace-driven backup strategy simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="footprint and per-interval statistics of one trace")
    a.add_argument("trace")
    g = a.add_mutually_exclusive_group()
    g.add_argument("--n-prog", type=int, help="fixed interval length in cycles")
    g.add_argument("--failure-prob", type=float, help="per-cycle failure probability")
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_analyze)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run an experiment config"),
        ("sweep", cmd_sweep, "interval-length or seed sweep"),
        ("compare", cmd_compare, "architecture energy comparison"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config")
        s.add_argument("--trace", action="append", help="replace the config's traces")
        s.add_argument("--out", help="output directory")
        s.add_argument("--jobs", type=int)
        if name == "sweep":
            s.add_argument("--n-prog", type=_csv_numbers(int), help="comma separated interval lengths")
            s.add_argument("--block-size", type=int, default=None)
        s.set_defaults(func=func)

    t = sub.add_parser("gen-trace", help="write a synthetic trace")
    t.add_argument("-o", "--output", required=True)
    t.add_argument("--n-events", type=int, default=10000)
    t.add_argument("--addr-range-words", type=int, default=1024)
    t.add_argument("--store-fraction", type=float, default=0.3)
    t.add_argument("--locality", choices=LOCALITIES, default="uniform")
    t.add_argument("--base-addr", type=lambda x: int(x, 0), default=0x10000)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_gen_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except NVBackupError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
