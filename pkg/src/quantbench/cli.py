"""Command-line entry point: ``quantbench bench | sweep | transform | fetch-data``.

Exit codes: 0 success, 1 error, 2 partial grid (only with --allow-partial).
Machine-readable output goes to files; stdout is for humans.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import bench, report
from . import transforms as tf
from .errors import CellError, ConfigError, QuantBenchError
from .io import read_config, read_matrix_csv, save_params, write_matrix_csv

log = logging.getLogger("quantbench")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2
SEED_ENV = "QUANTBENCH_SEED"


def _config_epilog() -> str:
    width = max(len(k) for k in bench.CONFIG_KEYS)
    lines = ["config keys (TOML or JSON):"]
    lines += [f"  {k.ljust(width)}  {v}" for k, v in bench.CONFIG_KEYS.items()]
    lines.append(f"\nenvironment: {SEED_ENV} overrides split_seed (a --seed flag wins over both)")
    return "\n".join(lines)


def _load_config(args) -> bench.ExperimentConfig:
    cfg = read_config(args.config)
    changes = {}
    if os.environ.get(SEED_ENV):
        try:
            changes["split_seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer", key="split_seed") from None
    for flag, key in (("seed", "split_seed"), ("repetitions", "timing_repetitions"),
                      ("dataset", "dataset"), ("target_column", "target_column"),
                      ("test_fraction", "test_fraction")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[key] = value
    if "dataset" in changes:
        changes["dataset"] = str(Path(changes["dataset"]).resolve())
        changes.setdefault("name", "")
    return cfg.with_(**changes) if changes else cfg


def _fail(stage: str, exc: Exception) -> int:
    if isinstance(exc, CellError):
        print(f"error: {exc}", file=sys.stderr)
    else:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
    return EXIT_ERROR


def cmd_bench(args) -> int:
    stage = "config"
    try:
        cfg = _load_config(args)
        stage = "load"
        data = bench.load_dataset(cfg)
        stage = "grid"
        results = bench.run_grid(cfg, allow_partial=args.allow_partial, dataset=data)
        stage = "report"
        paths = report.write_report(results, args.out, config=cfg)
    except QuantBenchError as exc:
        return _fail(stage, exc)
    print(report.render_table(results, footer=False), end="")
    print(f"wrote {', '.join(sorted(p.name for p in paths.values()))} to {args.out}")
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"error: {r.error}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def cmd_sweep(args) -> int:
    stage = "config"
    try:
        cfg = _load_config(args)
        stage = "load"
        data = bench.load_dataset(cfg)
        stage = "sweep"
        tech = bench.Technique.parse(args.technique)
        values = args.quantiles if tech is bench.Technique.QUANTILE else args.values
        if not values:
            raise ConfigError(f"no sweep values given for {tech.value}")
        param = bench.sweep_parameter(cfg, tech)
        results = bench.sweep(cfg, tech, values, dataset=data)
        stage = "report"
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"sweep_{tech.label}.csv"
        path.write_text(report.rows_to_csv(report.sweep_rows(param, results),
                                           report.SWEEP_COLUMNS), encoding="utf-8")
    except (QuantBenchError, ValueError) as exc:
        return _fail(stage, exc)
    for v, r in results:
        print(f"{param}={v:<6} {r.precision.value}  accuracy {report.fmt_acc(r.accuracy)}%  "
              f"fit {report.fmt_time(r.fit_time_s)} s")
    print(f"wrote {path}")
    return EXIT_OK


_TRANSFORM_PARAMS = {"n_quantiles": int, "n_bins": int, "decimals": int, "n_levels": int,
                     "round_mode": str}


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _TRANSFORM_PARAMS:
            raise ConfigError(f"bad --params entry {pair!r}; keys: {', '.join(_TRANSFORM_PARAMS)}",
                              key=key or None)
        try:
            out[key] = _TRANSFORM_PARAMS[key](value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}", key=key) from None
    return out


def cmd_transform(args) -> int:
    stage = "params"
    try:
        p = _parse_params(args.params)
        stage = "load"
        x, names, extra, dropped = read_matrix_csv(args.input, args.target_column)
        stage = "transform"
        if args.technique == "qt":
            params = tf.fit_quantile(x, p.get("n_quantiles", tf.DEFAULT_N_QUANTILES))
            out = tf.apply_quantile(params, x)
        elif args.technique == "kbins":
            params = tf.fit_bins(x, p.get("n_bins", tf.DEFAULT_N_BINS))
            out = tf.apply_bins(params, x)
        else:
            params = tf.fit_round(x, p.get("decimals", tf.DEFAULT_DECIMALS),
                                  p.get("n_levels", tf.DEFAULT_N_LEVELS))
            mode = p.get("round_mode", "decimals")
            if mode not in bench.ROUND_MODES:
                raise ConfigError(f"round_mode must be one of {bench.ROUND_MODES}", key="round_mode")
            out = (tf.level_quantize(params, x) if mode == "levels"
                   else tf.round_quantize(x, params.decimals))
        stage = "write"
        write_matrix_csv(args.output, out, names, args.target_column, extra)
        params_path = Path(str(args.output) + ".params.json")
        save_params(params, params_path)
    except (QuantBenchError, OSError) as exc:
        return _fail(stage, exc)
    print(f"{args.technique}: {out.rows}x{out.cols} written to {args.output}"
          f" ({dropped} rows dropped); params in {params_path}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    from . import datasets

    try:
        paths = datasets.fetch_all(Path(args.out) if args.out else None)
    except (QuantBenchError, OSError) as exc:
        return _fail("fetch", exc)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantbench",
        description="Benchmark quantization and 64->32-bit casts around logistic regression.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter

    def config_args(p):
        p.add_argument("--config", required=True, help="experiment config (.toml or .json)")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="override split_seed")
        p.add_argument("--repetitions", type=int, help="override timing_repetitions")
        p.add_argument("--dataset", help="override dataset")
        p.add_argument("--target-column", help="override target_column")
        p.add_argument("--test-fraction", type=float, help="override test_fraction")

    p = sub.add_parser("bench", help="run the technique x precision grid",
                       epilog=_config_epilog(), formatter_class=fmt)
    config_args(p)
    p.add_argument("--allow-partial", action="store_true",
                   help="keep going past failing cells (exit code 2 if any failed)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="accuracy as a function of a transform's resolution",
                       epilog=_config_epilog(), formatter_class=fmt)
    config_args(p)
    p.add_argument("--quantiles", type=_int_list, help="n_quantiles values, e.g. 10,50,100")
    p.add_argument("--technique", default="qt", help="technique to sweep (default qt)")
    p.add_argument("--values", type=_int_list,
                   help="parameter values when sweeping a technique other than qt")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "transform", help="fit and apply a single transform to a CSV",
        epilog="params: n_quantiles (qt, default 100), n_bins (kbins, default 10), "
               "decimals (round, default 4), n_levels (round, default 4096), "
               "round_mode (round: decimals|levels)",
        formatter_class=fmt)
    p.add_argument("--technique", required=True, choices=("qt", "round", "kbins"))
    p.add_argument("--in", dest="input", required=True, help="input CSV with a header row")
    p.add_argument("--out", dest="output", required=True, help="output CSV")
    p.add_argument("--target-column", help="column copied through untransformed")
    p.add_argument("--params", nargs="*", metavar="KEY=VALUE", help="transform parameters")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("fetch-data", help="download the WDBC and heart-disease CSVs")
    p.add_argument("--out", help="target directory (default: $QUANTBENCH_DATA or "
                                 "~/.cache/quantbench)")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
