"""Command-line surface.

Verbs: ``simulate`` (scenario -> log + truth), ``run`` (log -> timeline +
metrics), ``sweep`` (axis grid -> table), ``eval`` (timeline + truth ->
error metrics). Every configuration key can live in a key=value file
passed with --config and can be overridden by a flag of the same name.
Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys

from . import configfile, logio
from .errors import ConfigError, DataError
from .metrics import error_timeline
from .replay import SweepSpec, run_events, run_sweep
from .simulate import generate_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(self._fail(message))

    @staticmethod
    def _fail(message):
        print(f"error: {message}", file=sys.stderr)
        return 1


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    for key, (kind, _) in configfile.CONFIG_KEYS.items():
        flag = "--" + key.replace("_", "-")
        if kind == "bool":
            parser.add_argument(flag, dest=key, default=None,
                                metavar="BOOL", help=argparse.SUPPRESS)
        else:
            parser.add_argument(flag, dest=key, default=None, help=argparse.SUPPRESS)


def _resolved(args) -> configfile.ResolvedConfig:
    file_values = configfile.load_kv(args.config) if args.config else {}
    overrides = {}
    for key in configfile.CONFIG_KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            overrides[key] = configfile.coerce(key, str(raw))
    return configfile.resolve(file_values, overrides)


def _cmd_simulate(args) -> int:
    cfg = _resolved(args)
    truth, events = generate_scenario(cfg.scenario())
    priors = sorted(truth.pose_map_at_start().items())
    logio.write_event_log(args.out_log, priors, events)
    if args.out_truth:
        logio.write_truth(args.out_truth, truth)
    logio.write_metrics(args.out_log + ".meta",
                        {"config_hash": cfg.hash(), **_flat(cfg)})
    print(f"wrote {len(events)} events for {cfg['n_users']} users "
          f"(config {cfg.hash()})")
    return 0


def _cmd_run(args) -> int:
    cfg = _resolved(args)
    priors, events = logio.read_event_log(args.log)
    timeline, engine = run_events(
        priors, events, cfg.filter(), cfg.kde(),
        init_shift=cfg["init_shift"], imu_only=cfg["imu_only"],
        config_hash=cfg.hash())
    logio.write_timeline(args.out_timeline, timeline)
    logio.write_metrics(args.out_timeline + ".meta",
                        {"config_hash": cfg.hash(), **_flat(cfg)})
    summary = {"config_hash": cfg.hash(), "events": len(events),
               "dropped_observations": engine.dropped_observations}
    if args.truth:
        truth = logio.read_truth(args.truth)
        errors = error_timeline(timeline, truth)
        summary["mean_rmse"] = repr(float(errors[:, 1].mean()))
        summary["final_rmse"] = repr(float(errors[-1, 1]))
        if args.out_errors:
            logio.write_error_timeline(args.out_errors, errors, cfg.hash())
    if args.out_metrics:
        logio.write_metrics(args.out_metrics, summary)
    for key in ("mean_rmse", "final_rmse"):
        if key in summary:
            print(f"{key}={summary[key]}")
    print(f"wrote {args.out_timeline} (config {cfg.hash()})")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _resolved(args)
    try:
        grid = tuple(float(v) for v in args.grid.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad grid {args.grid!r}: {exc}") from exc
    spec = SweepSpec(args.axis, grid, args.seeds)
    rows = run_sweep(spec, cfg.scenario(), cfg.filter(), cfg.kde(),
                     init_shift=cfg["init_shift"], imu_only=cfg["imu_only"])
    logio.write_sweep(args.out, rows, cfg.hash())
    if args.gnuplot:
        logio.write_gnuplot(args.gnuplot,
                            ["value", "mean_rmse", "std_rmse", "median_update_s"],
                            [(r.value, r.mean_rmse, r.std_rmse, r.median_update_s)
                             for r in rows])
    for r in rows:
        print(f"{r.axis}={r.value:g} mean_rmse={r.mean_rmse:.4f} "
              f"std={r.std_rmse:.4f} median_update={r.median_update_s * 1e3:.2f}ms")
    return 0


def _cmd_eval(args) -> int:
    timeline = logio.read_timeline(args.timeline)
    truth = logio.read_truth(args.truth)
    errors = error_timeline(timeline, truth)
    if args.out_errors:
        logio.write_error_timeline(args.out_errors, errors, timeline.config_hash)
    if args.gnuplot:
        logio.write_gnuplot(args.gnuplot, ["t", "rmse"],
                            [(float(t), float(r)) for t, r in errors])
    summary = {"mean_rmse": repr(float(errors[:, 1].mean())),
               "final_rmse": repr(float(errors[-1, 1])),
               "max_rmse": repr(float(errors[:, 1].max()))}
    if args.out_metrics:
        logio.write_metrics(args.out_metrics, summary)
    for key, value in summary.items():
        print(f"{key}={value}")
    return 0


def _flat(cfg: configfile.ResolvedConfig) -> dict:
    return {k: configfile._render(v) for k, v in sorted(cfg.values.items())}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="peerloc",
                     description="Relative positioning from inertial and ranging logs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic event log and truth")
    _add_config_flags(p)
    p.add_argument("--out-log", required=True)
    p.add_argument("--out-truth")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("run", help="replay an event log through the fusion engine")
    _add_config_flags(p)
    p.add_argument("--log", required=True)
    p.add_argument("--truth")
    p.add_argument("--out-timeline", required=True)
    p.add_argument("--out-errors")
    p.add_argument("--out-metrics")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="repeat runs across a parameter grid")
    _add_config_flags(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--gnuplot")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("eval", help="score a timeline against ground truth")
    p.add_argument("--timeline", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out-errors")
    p.add_argument("--out-metrics")
    p.add_argument("--gnuplot")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
