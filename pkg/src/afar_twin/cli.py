"""Command-line front end.

Subcommands: ``run`` (one episode), ``bench`` (strategies x locations x
seeds), ``plot-data`` (CSV series from a flight log) and ``replay`` (re-score
a log).  Settings come from an optional TOML file; flags override it.  Every
output file goes under ``--out-dir``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import describe_keys, load_config
from .harness import (ConfigError, FlightLog, LogError, ScoreReport, error_series, export_geojson,
                      radio_map_from_log, run_benchmark, run_episode, score_from_meta)

log = logging.getLogger("afar_twin")

RUN_FILES = ("flight_log.csv", "trajectory.geojson", "score.txt")
BENCH_FILES = ("bench_summary.csv", "bench_table.txt")
PLOT_FILES = ("error_vs_time.csv", "radio_map.csv")


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def score_text(report: ScoreReport) -> str:
    return (
        f"strategy          {report.strategy}\n"
        f"location          {report.location or '-'}\n"
        f"seed              {report.seed}\n"
        f"fast error (m)    {report.fast_error_m:.2f}\n"
        f"final error (m)   {report.final_error_m:.2f}\n"
        f"fast estimate     {report.fast_estimate.lat:.7f}, {report.fast_estimate.lon:.7f}\n"
        f"final estimate    {report.final_estimate.lat:.7f}, {report.final_estimate.lon:.7f}\n"
        f"distance flown    {report.distance_flown_m:.1f} m\n"
        f"samples accepted  {report.samples_accepted}\n"
        f"samples rejected  {report.samples_rejected}\n"
    )


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _overrides(args) -> dict:
    ov = {"seed": getattr(args, "seed", None), "strategy": getattr(args, "strategy", None),
          "channel_profile": getattr(args, "channel_profile", None), "seeds": getattr(args, "seeds", None)}
    if getattr(args, "strategies", None) is not None:
        ov["strategies"] = _csv_list(args.strategies)
    return ov


def cmd_run(args) -> int:
    cfg, _, _ = load_config(args.config, _overrides(args), require_rover=True)
    report, flight_log = run_episode(cfg)
    out = _out_dir(args)
    flight_log.write(out / RUN_FILES[0])
    (out / RUN_FILES[1]).write_text(json.dumps(export_geojson(flight_log, report, cfg.rover_pos), indent=1) + "\n")
    text = score_text(report)
    (out / RUN_FILES[2]).write_text(text)
    if not args.quiet:
        print(text, end="")
    return 0


def cmd_bench(args) -> int:
    cfg, bench, sparams = load_config(args.config, _overrides(args), require_rover=False)

    def progress(key, result):
        if not args.quiet:
            err = result[1]
            print(f"{key[0]} {key[1]} seed {key[2]}: "
                  + (err or f"final {result[0].final_error_m:.1f} m"), file=sys.stderr)

    report = run_benchmark(cfg, bench.locations, bench.seeds, bench.strategies, bench.workers,
                           progress, params_by_strategy=sparams)
    out = _out_dir(args)
    (out / BENCH_FILES[0]).write_text(report.summary_csv())
    table = report.table_text()
    (out / BENCH_FILES[1]).write_text(table)
    if not args.quiet:
        print(table, end="")
    if report.failures:
        for f in report.failures:
            print(f"failed: {f}", file=sys.stderr)
        return 1
    return 0


def cmd_plot_data(args) -> int:
    flight_log = FlightLog.read(args.log)
    out = _out_dir(args)
    lines = ["t,error_m,marker"] + [f"{t:.9g},{e:.9g},{m}" for t, e, m in error_series(flight_log)]
    (out / PLOT_FILES[0]).write_text("\n".join(lines) + "\n")
    grid = radio_map_from_log(flight_log)
    if grid is None:
        print(f"no radio map: strategy {flight_log.meta.get('strategy', '?')!r} does not build one",
              file=sys.stderr)
    else:
        grid.to_csv(out / PLOT_FILES[1])
    return 0


def cmd_replay(args) -> int:
    report = score_from_meta(FlightLog.read(args.log))
    if not args.quiet:
        print(score_text(report), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    epilog = ("Precedence: built-in defaults < config file < command-line flags.\n\n"
              "Config keys and defaults:\n" + describe_keys())
    fmt = argparse.RawDescriptionHelpFormatter
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for every output file (default: .)")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    cfg_opts = argparse.ArgumentParser(add_help=False)
    cfg_opts.add_argument("--config", help="TOML configuration file")
    cfg_opts.add_argument("--seed", type=int, help="override the master seed")
    cfg_opts.add_argument("--strategy", help="override the strategy")
    cfg_opts.add_argument("--channel-profile", help="override the channel profile")

    parser = argparse.ArgumentParser(prog="afar-twin", description=__doc__, epilog=epilog, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common, cfg_opts], epilog=epilog, formatter_class=fmt,
                       help="fly one episode; writes " + ", ".join(RUN_FILES))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", parents=[common, cfg_opts], epilog=epilog, formatter_class=fmt,
                       help="benchmark strategies over locations and seeds; writes " + ", ".join(BENCH_FILES))
    p.add_argument("--seeds", type=_positive_int, help="number of seeds, run as 0..N-1")
    p.add_argument("--strategies", help="comma-separated strategy names")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot-data", parents=[common], formatter_class=fmt,
                       help="error-vs-time CSV and, for GP strategies, a radio-map CSV from a flight log")
    p.add_argument("log", help="flight log CSV written by 'run'")
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("replay", parents=[common], formatter_class=fmt,
                       help="re-score a flight log from its own header")
    p.add_argument("log", help="flight log CSV written by 'run'")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LogError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
