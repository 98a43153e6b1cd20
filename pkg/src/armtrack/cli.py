"""Command line interface.

Subcommands:
  run       simulate one config, write log.csv / metrics.json / traces
  compare   run several configs on the same trajectory, tabulate metrics
  sweep     rerun one config over a list of values for a single key
  validate  run the model property suite

Exit codes: 0 success, 1 validation failure, 2 config error,
3 singularity abort, 4 divergence abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config import (ConfigError, apply_overrides, bundled_names,
                     config_from_mapping, config_to_text, load_mapping,
                     parse_value)
from .sim import (DivergenceAbort, ExperimentConfig, SimLog, SimulationAbort,
                  SingularityAbort, run_experiment)

# Column order of log.csv.  Kept stable so downstream tooling can rely on it.
CSV_COLUMNS = ("t,q1,q2,dq1,dq2,x1,x2,xd1,xd2,ex1,ex2,s1,s2,tau1,tau2,"
               "ak1,ak2,ak3,ad1,ad2,ad3,ad4,V1,cond_Jhat")


def _fmt(value: float) -> str:
    # 17 significant digits round-trips a double exactly.
    return f"{value:.17g}"


def _log_rows(log: SimLog):
    for i in range(len(log)):
        yield np.concatenate((
            [log.t[i]], log.q[i], log.dq[i], log.x[i], log.x_d[i],
            log.x_err[i], log.s[i], log.tau[i], log.a_k_hat[i],
            log.a_d_hat[i], [log.v1[i], log.cond_jhat[i]]))


def write_log_csv(log: SimLog, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_COLUMNS + "\n")
        for row in _log_rows(log):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_trace_csv(path: Path, header: str, columns: list[np.ndarray]) -> None:
    data = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in data:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _metrics_payload(cfg: ExperimentConfig, log: SimLog) -> dict:
    metrics = analysis.compute_metrics(log)
    payload = {"label": cfg.label or cfg.mode, "mode": cfg.mode}
    payload.update(metrics.as_dict())
    return payload


def write_outputs(cfg: ExperimentConfig, log: SimLog, out_dir: Path) -> dict:
    """Write the full output bundle for one run; returns the metrics dict."""
    out_dir.mkdir(parents=True, exist_ok=True)
    write_log_csv(log, out_dir / "log.csv")
    (out_dir / "config.cfg").write_text(config_to_text(cfg))
    payload = _metrics_payload(cfg, log)
    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if len(log):
        err_norm = np.linalg.norm(log.x_err, axis=1)
        write_trace_csv(out_dir / "error_trace.csv", "t,ex1,ex2,err_norm",
                        [log.t, log.x_err[:, 0], log.x_err[:, 1], err_norm])
        write_trace_csv(out_dir / "torque_trace.csv", "t,tau1,tau2",
                        [log.t, log.tau[:, 0], log.tau[:, 1]])
    return payload


def _execute(cfg: ExperimentConfig, out_dir: Path, quiet: bool) -> tuple[dict, int]:
    """Run one config, write outputs (partial log included on abort)."""
    code = 0
    try:
        log = run_experiment(cfg)
    except SingularityAbort as exc:
        log, code = exc.log, 3
    except DivergenceAbort as exc:
        log, code = exc.log, 4
    payload = write_outputs(cfg, log, out_dir)
    if not quiet:
        label = payload["label"]
        if code == 0:
            print(f"{label}: completed t_end={cfg.t_end:g}s  "
                  f"steady_state_error={payload['steady_state_error']:.6g} m  "
                  f"settling_time={payload['settling_time']:.4g} s  "
                  f"-> {out_dir}")
        else:
            print(f"{label}: ABORTED ({log.abort_reason}) after "
                  f"{len(log)} ticks -> {out_dir}", file=sys.stderr)
    return payload, code


_METRIC_TABLE = (
    ("steady_state_error", "sse[m]"),
    ("settling_time", "settle[s]"),
    ("fitted_decay_rate", "rate[1/s]"),
    ("max_torque", "tau_max"),
    ("v1_max_uptick", "V1_up"),
    ("v2_max_uptick", "V2_up"),
    ("s_squared_integral", "int_s2"),
)


def _print_table(rows: list[dict], key_field: str, quiet: bool) -> None:
    if quiet:
        return
    width = max(len(str(r[key_field])) for r in rows) + 2
    header = f"{key_field:<{width}}" + "".join(f"{h:>14}" for _, h in _METRIC_TABLE)
    print(header)
    for r in rows:
        cells = "".join(f"{r[k]:>14.6g}" for k, _ in _METRIC_TABLE)
        print(f"{str(r[key_field]):<{width}}" + cells)


def _write_table_csv(rows: list[dict], key_field: str, path: Path) -> None:
    fields = [key_field, "mode", "completed"] + [k for k, _ in _METRIC_TABLE]
    with open(path, "w") as fh:
        fh.write(",".join(fields) + "\n")
        for r in rows:
            fh.write(",".join(str(r[f]) for f in fields) + "\n")


def cmd_run(args) -> int:
    cfg = config_from_mapping(*_mapped(args.config, args.set))
    out_dir = Path(args.out) if args.out else Path("runs") / (cfg.label or cfg.mode)
    _, code = _execute(cfg, out_dir, args.quiet)
    return code


def _mapped(spec: str, overrides: list[str]) -> tuple[dict, str]:
    mapping, source = load_mapping(spec)
    if overrides:
        mapping = apply_overrides(mapping, overrides)
    return mapping, source


def cmd_compare(args) -> int:
    if len(args.config) < 2:
        raise ConfigError("compare needs at least two --config arguments")
    configs = [config_from_mapping(*_mapped(spec, args.set)) for spec in args.config]
    first = configs[0].trajectory
    for cfg in configs[1:]:
        tr = cfg.trajectory
        if not (np.array_equal(tr.center, first.center)
                and tr.radius == first.radius
                and tr.angular_frequency == first.angular_frequency):
            raise ConfigError(
                f"compare requires identical trajectories; {cfg.label or cfg.mode} "
                f"differs from {configs[0].label or configs[0].mode}")
    if not args.quiet:
        _note_gain_differences(configs)
    out_root = Path(args.out) if args.out else Path("runs") / "compare"
    labels = _unique_labels(configs)
    rows, code = [], 0
    for cfg, label in zip(configs, labels):
        payload, rc = _execute(cfg, out_root / label, args.quiet)
        payload["label"] = label
        rows.append(payload)
        code = code or rc
    _print_table(rows, "label", args.quiet)
    _write_table_csv(rows, "label", out_root / "compare.csv")
    return code


def _unique_labels(configs: list[ExperimentConfig]) -> list[str]:
    seen: dict[str, int] = {}
    labels = []
    for cfg in configs:
        base = cfg.label or cfg.mode
        n = seen.get(base, 0)
        seen[base] = n + 1
        labels.append(base if n == 0 else f"{base}_{n + 1}")
    return labels


_GAIN_FIELDS = ("k", "alpha", "beta", "gamma_d", "gamma_k", "lambda_c")


def _note_gain_differences(configs: list[ExperimentConfig]) -> None:
    differing = []
    for field in _GAIN_FIELDS:
        first = getattr(configs[0].gains, field)
        if any(not np.array_equal(getattr(c.gains, field), first)
               for c in configs[1:]):
            differing.append(field)
    if differing:
        print(f"note: configs differ in gains: {', '.join(differing)}; "
              f"metrics compare controller families, not identical tunings")


def cmd_sweep(args) -> int:
    mapping, source = _mapped(args.config, args.set)
    values = [parse_value(v.strip()) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs a nonempty comma-separated --values list")
    out_root = Path(args.out) if args.out else Path("runs") / "sweep"
    rows, code = [], 0
    for value in values:
        cfg = config_from_mapping(apply_overrides(mapping, [f"{args.key}={value}"]),
                                  source)
        payload, rc = _execute(cfg, out_root / f"{args.key}={value}", args.quiet)
        payload[args.key] = value
        rows.append(payload)
        code = code or rc
    _print_table(rows, args.key, args.quiet)
    _write_table_csv(rows, args.key, out_root / "sweep.csv")
    return code


def cmd_validate(args) -> int:
    checks = analysis.run_property_suite()
    failed = False
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        failed = failed or not check.passed
        print(f"{status} {check.name}: value={check.max_residual:.3e} "
              f"tol={check.tolerance:.3e} ({check.elapsed:.2f}s)")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armtrack",
        description="Simulation workbench for adaptive task-space tracking "
                    "on a planar two-link arm.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_action="store"):
        if config_action is not None:
            p.add_argument("--config", required=True, action=config_action,
                           help="config file path or bundled name "
                                f"({', '.join(bundled_names())})")
        p.add_argument("--out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress and summary output")

    p_run = sub.add_parser("run", help="simulate one experiment config")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run several configs on one trajectory")
    common(p_cmp, config_action="append")
    p_cmp.set_defaults(func=cmd_compare)

    p_swp = sub.add_parser("sweep",
                           help="rerun one config over values of a single key")
    common(p_swp)
    p_swp.add_argument("--key", required=True, help="dotted config key to vary")
    p_swp.add_argument("--values", required=True,
                       help="comma-separated list of values")
    p_swp.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run the model property suite")
    p_val.add_argument("--quiet", action="store_true",
                       help="accepted for symmetry; validate always prints")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationAbort as exc:  # pragma: no cover - aborts handled per run
        print(f"aborted: {exc}", file=sys.stderr)
        return 3 if isinstance(exc, SingularityAbort) else 4


if __name__ == "__main__":
    sys.exit(main())
