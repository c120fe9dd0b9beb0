"""Command-line experiment runner.

Configuration comes from an optional flat key=value text file plus flags
(flags win).  Recognized keys mirror the flags and the fixed experiment
parameters::

    sweep = interval | snr | paths | users
    values = 0.5, 0.25, 0.125        # comma separated, sorted
    trials = 100
    seed = 0
    systems = FC, PC, MMA, FPA
    out = results.csv
    trace = trace.jsonl
    n_select = 4          users = 4         paths = 6
    snr_db = 10           interval = 0.25   layout = linear | planar
    panel_rows = 1        panel_cols = 4
    wavelength = 1.0      power = 1.0
    workers = 1           plot_script = 1

Exit status is 0 on success and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import (ExperimentConfig, SWEEPS, SYSTEMS, emit_csv,
                          run_experiment, write_plot_script)

_INT_KEYS = {"trials", "seed", "n_select", "users", "paths",
             "panel_rows", "panel_cols", "workers"}
_FLOAT_KEYS = {"snr_db", "interval", "wavelength", "power"}
_BOOL_KEYS = {"plot_script"}


def load_config_file(path: str) -> dict:
    """Parse a flat key = value file; '#' starts a comment, blanks ignored."""
    out: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key] = value
    return out


def _coerce(key: str, value):
    if not isinstance(value, str):
        return value
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _BOOL_KEYS:
        return value.strip().lower() in ("1", "true", "yes", "on")
    if key == "values":
        return tuple(float(v) for v in value.split(",") if v.strip())
    if key == "systems":
        return tuple(s.strip().upper() for s in value.split(",") if s.strip())
    return value


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        raw.update(load_config_file(args.config))
    for key in ("sweep", "values", "trials", "seed", "systems", "out", "trace"):
        flag = getattr(args, key)
        if flag is not None:
            raw[key] = flag
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: _coerce(k, v) for k, v in raw.items()}
    return ExperimentConfig(**kwargs)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="emarray",
        description="Sweep multiuser sum-rate over antenna architectures")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--sweep", choices=SWEEPS, default=None)
    parser.add_argument("--values", default=None,
                        help="comma-separated sweep values (sorted)")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--systems", default=None,
                        help=f"comma-separated subset of {','.join(SYSTEMS)}")
    parser.add_argument("--out", default=None, help="results CSV path")
    parser.add_argument("--trace", default=None, help="per-trial trace (JSONL)")
    args = parser.parse_args(argv)

    try:
        config = build_config(args)
    except (ValueError, OSError) as exc:
        print(f"emarray: config error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run_experiment(config)
    except (ValueError, RuntimeError) as exc:
        print(f"emarray: {exc}", file=sys.stderr)
        return 2

    if config.trace:
        with open(config.trace, "w") as fh:
            for row in result.trace_rows:
                fh.write(json.dumps(row) + "\n")

    if config.out:
        emit_csv(result.rows, config.out)
        if config.plot_script:
            write_plot_script(config.out, str(config.out) + ".plot.py", config.sweep)
    else:
        print(",".join(("system", "sweep_value", "mean_rate", "stderr",
                        "trials", "failures", "wall_ms")))
        for r in result.rows:
            print(f"{r.system},{r.sweep_value:.6g},{r.mean_rate:.6g},"
                  f"{r.stderr:.6g},{r.trials},{r.failures},{r.wall_ms:.6g}")
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
