"""Batch command-line interface.

Subcommands::

    depthcause aggregate   --subsidies subsidies.csv [--output curves.csv]
    depthcause depth       --input curves.csv --method mbd|fm|ed [--replicate M] [--seed S]
    depthcause replicate   --input curves.csv --m 500 [--seed S] [--sigma-zero]
    depthcause baseline    --outcomes outcomes.csv --nc 7 --reps 1000 [--seed S]
    depthcause median-diff --input curves.csv --method mbd [--alpha A | --quantile Q] [--tau T]
    depthcause pipeline    (--subsidies subsidies.csv | --curves curves.csv)
                           --outcomes outcomes.csv [--config run.conf] [--outdir DIR]

Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate analysis.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import hashlib
import io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data_model import (
    DepthMethod,
    FunctionalSample,
    aggregate_h,
    format_float,
    load_outcomes,
    load_subsidies,
    read_curves,
    write_curves,
)
from .errors import DataError, DegenerateAnalysisError
from .functional_depth import causal_strength, functional_depth, median_difference
from .multivariate_depth import default_directions, depth_ranks
from .pipeline import (
    FUNCTIONAL_METHODS,
    PipelineConfig,
    Replication,
    SplitMode,
    fit_lines,
    replicate_sample,
    run_baseline,
    run_pipeline,
    split_groups,
)
from .rank_tests import STATISTIC_CONVENTION
from .stats_core import RandomStream

log = logging.getLogger("depthcause")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3
SEED_ENV = "DEPTHCAUSE_SEED"

# FM depths never fall below 1/2, so a 0.5 threshold would leave C empty
METHOD_DEFAULTS = {DepthMethod.FM: {"alpha": 0.75}}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# -- configuration ---------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}
_EXTRA_KEYS = {"methods", "workers"}


def _coerce(key: str, text: str):
    name = key.split(".", 1)[-1]
    if name == "methods":
        return [DepthMethod.parse(m) for m in text.replace(" ", "").split(",") if m]
    if name == "workers":
        return int(text)
    default = _FIELDS[name].default
    if isinstance(default, bool):
        low = text.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError(f"expected a boolean, got {text!r}")
        return low in ("true", "yes", "1")
    if isinstance(default, DepthMethod):
        return DepthMethod.parse(text)
    if isinstance(default, SplitMode):
        return SplitMode(text.lower())
    if isinstance(default, Replication):
        return Replication(text.lower())
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def _check_key(key: str) -> None:
    if "." in key:
        prefix, name = key.split(".", 1)
        DepthMethod.parse(prefix)
        if name not in _FIELDS or name == "depth_method":
            raise ValueError(f"unknown key {key!r}")
    elif key not in _FIELDS and key not in _EXTRA_KEYS:
        raise ValueError(f"unknown key {key!r}")


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        try:
            _check_key(key)
            values[key] = _coerce(key, value)
        except ValueError as exc:
            raise UsageError(f"config line {lineno}: {exc}") from None
    return values


def build_configs(settings: dict) -> tuple[list[PipelineConfig], int]:
    """One :class:`PipelineConfig` per requested method, plus the worker count."""
    methods = settings.get("methods", list(FUNCTIONAL_METHODS))
    if "depth_method" in settings and "methods" not in settings:
        methods = [settings["depth_method"]]
    workers = int(settings.get("workers", 1))
    base = {k: v for k, v in settings.items() if k in _FIELDS and k != "depth_method"}
    configs = []
    for method in methods:
        kwargs = dict(base)
        for name, value in METHOD_DEFAULTS.get(method, {}).items():
            kwargs.setdefault(name, value)
        prefix = method.value + "."
        kwargs.update({k[len(prefix):]: v for k, v in settings.items() if k.startswith(prefix)})
        try:
            configs.append(PipelineConfig(depth_method=method, **kwargs))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid configuration for {method.value}: {exc}") from None
    if not configs:
        raise UsageError("no depth methods requested")
    return configs, workers


def config_echo(cfg: PipelineConfig) -> str:
    parts = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if hasattr(value, "value"):
            value = value.value
        elif isinstance(value, float):
            value = format_float(value)
        parts.append(f"{f.name}={value}")
    return ";".join(parts)


# -- output helpers --------------------------------------------------------

def digest(path) -> str:
    """64-bit BLAKE2b content hash, hex encoded."""
    h = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch
           else dt.datetime.now(dt.timezone.utc))
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def _csv_text(rows, comments=()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, output) -> None:
    if output is None or str(output) == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _fmt(x) -> str:
    return format_float(x)


def _by_name(units):
    return sorted(range(len(units)), key=lambda i: units[i].name)


# -- subcommands -----------------------------------------------------------

def cmd_aggregate(args) -> int:
    sample = aggregate_h(load_subsidies(args.subsidies))
    buf = io.StringIO()
    write_curves(sample, buf)
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def _seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def cmd_depth(args) -> int:
    sample = read_curves(args.input)
    method = DepthMethod.parse(args.method)
    if method not in FUNCTIONAL_METHODS:
        raise UsageError(f"unknown method {args.method!r}")
    if args.replicate:
        if args.replicate < 2:
            raise UsageError("--replicate needs at least 2 points")
        seed = _seed(args)
        fits = fit_lines(sample, args.scale)
        total = np.zeros(sample.n)
        for j in range(args.reps):
            rep = replicate_sample(sample, fits, args.replicate, RandomStream(seed, (0, 0, j)))
            total += functional_depth(rep, method).values
        values = total / args.reps
    else:
        values = functional_depth(sample, method).values
    rows = [["unit", "depth"]]
    rows += [[sample.units[i].name, _fmt(values[i])] for i in _by_name(sample.units)]
    _emit(_csv_text(rows), args.output)
    return EXIT_OK


def cmd_replicate(args) -> int:
    sample = read_curves(args.input)
    if args.m < 1:
        raise UsageError("--m must be positive")
    if sample.m < 2:
        raise DataError("replication needs at least two observed time points")
    fits = fit_lines(sample, args.scale)
    if args.sigma_zero:
        fits = [dataclasses.replace(f, sigma=0.0) for f in fits]
    rep = replicate_sample(sample, fits, args.m, RandomStream(_seed(args), (0, 0, 0)))
    buf = io.StringIO()
    write_curves(rep, buf)
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_baseline(args) -> int:
    outcomes = load_outcomes(args.outcomes)
    if not 1 <= args.nc < outcomes.n:
        raise UsageError(f"--nc must lie in [1, {outcomes.n - 1}]")
    if args.reps < 1:
        raise UsageError("--reps must be positive")
    seed = _seed(args)
    dirs = default_directions(outcomes.points.shape[1], args.direction_count, seed)
    ranks = depth_ranks(outcomes, dirs)
    mean, sd = run_baseline(outcomes, args.nc, args.reps, RandomStream(seed, (1,)), ranks=ranks)
    null_mean = args.nc * (outcomes.n + 1) / 2.0
    rows = [["mean", "sd", "null_mean"], [_fmt(mean), _fmt(sd), _fmt(null_mean)]]
    _emit(_csv_text(rows, [STATISTIC_CONVENTION]), args.output)
    return EXIT_OK


def cmd_median_diff(args) -> int:
    sample = read_curves(args.input)
    method = DepthMethod.parse(args.method)
    kwargs = {"depth_method": method}
    if args.quantile is not None:
        kwargs.update(split_mode=SplitMode.QUANTILE, quantile=args.quantile)
    else:
        alpha = args.alpha if args.alpha is not None else METHOD_DEFAULTS.get(method, {}).get("alpha", 0.5)
        kwargs["alpha"] = alpha
    try:
        cfg = PipelineConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.tau < 0:
        raise UsageError("--tau must be non-negative")
    split = split_groups(functional_depth(sample, method), cfg)
    md = median_difference(sample.subset(split.F), sample.subset(split.C), method)
    strength = causal_strength(md, args.tau)
    comments = [
        f"method = {method.value}",
        f"n_f = {len(split.F)}",
        f"n_c = {len(split.C)}",
        f"sup_norm = {_fmt(md.sup_norm)}",
        f"l2_norm = {_fmt(md.l2_norm)}",
        f"tau = {_fmt(args.tau)}",
        f"strength = {_fmt(strength)}",
    ]
    rows = [["t", "diff"]] + [[_fmt(t), _fmt(d)] for t, d in zip(md.grid, md.diff)]
    _emit(_csv_text(rows, comments), args.output)
    return EXIT_OK


def _load_functional(args) -> tuple[FunctionalSample, Path]:
    if args.subsidies:
        return aggregate_h(load_subsidies(args.subsidies)), Path(args.subsidies)
    return read_curves(args.curves), Path(args.curves)


def cmd_pipeline(args) -> int:
    settings = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc.strerror or exc}") from None
        settings.update(parse_config_text(text))
    settings.setdefault("seed", _default_seed())
    for item in args.set or []:
        settings.update(parse_config_text(item))
    if args.seed is not None:
        settings["seed"] = args.seed
    if args.methods:
        settings.update(parse_config_text(f"methods = {args.methods}"))
    if args.workers is not None:
        settings["workers"] = args.workers
    configs, workers = build_configs(settings)

    started = _timestamp()
    functional, treatment_path = _load_functional(args)
    outcomes = load_outcomes(args.outcomes)
    reports = [run_pipeline(functional, outcomes, cfg, workers=workers) for cfg in configs]
    finished = _timestamp()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    inputs = {treatment_path.name: digest(treatment_path), Path(args.outcomes).name: digest(args.outcomes)}
    header = [
        f"depthcause {__version__}",
        f"statistic: {STATISTIC_CONVENTION}",
        f"seed: {configs[0].seed}",
        "inputs: " + " ".join(f"{k}={v}" for k, v in inputs.items()),
    ] + [f"config[{cfg.depth_method.value}]: {config_echo(cfg)}" for cfg in configs]

    names = [r.method.value for r in reports]
    table = [["split_type"] + [f"{n}_{stat}" for n in names for stat in ("mean", "sd")]]
    table.append(["outlyingness"] + [_fmt(v) for r in reports for v in (r.grand_mean_w, r.sd_of_means)])
    table.append(["random"] + [_fmt(v) for r in reports for v in (r.baseline_mean_w, r.baseline_sd)])
    (outdir / "report.csv").write_text(_csv_text(table, header), encoding="utf-8")

    summary = [[
        "method", "n_f", "n_c", "null_mean", "grand_mean_w", "sd_of_means", "baseline_mean_w",
        "baseline_sd", "p_value", "sup_norm", "l2_norm", "strength", "modal_split_share",
    ]]
    for r in reports:
        md = r.median_difference
        summary.append([
            r.method.value, len(r.split.F), len(r.split.C), _fmt(r.null_mean), _fmt(r.grand_mean_w),
            _fmt(r.sd_of_means), _fmt(r.baseline_mean_w), _fmt(r.baseline_sd), _fmt(r.p_value),
            _fmt(md.sup_norm), _fmt(md.l2_norm), _fmt(r.strength), _fmt(r.modal_split_share),
        ])
    (outdir / "summary.csv").write_text(_csv_text(summary, header), encoding="utf-8")

    units = functional.units
    table_methods = list(reports[0].depth_table)
    depth_rows = [["unit"] + [m.value for m in table_methods]]
    for i in _by_name(units):
        depth_rows.append([units[i].name] + [_fmt(reports[0].depth_table[m].values[i]) for m in table_methods])
    (outdir / "depths.csv").write_text(_csv_text(depth_rows), encoding="utf-8")

    split_rows = [["unit", "method", "group"]]
    for i in _by_name(units):
        for r in reports:
            split_rows.append([units[i].name, r.method.value, r.split.labels()[i]])
    (outdir / "split.csv").write_text(_csv_text(split_rows), encoding="utf-8")

    manifest = header + [f"started: {started}", f"finished: {finished}", f"workers: {workers}"]
    (outdir / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    log.info("wrote report.csv, summary.csv, depths.csv, split.csv, manifest.txt to %s", outdir)
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depthcause", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("aggregate", help="per-capita subsidy curves from subsidies.csv")
    p.add_argument("--subsidies", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("depth", help="functional depth table")
    p.add_argument("--input", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--replicate", type=int, metavar="M")
    p.add_argument("--reps", type=int, default=100, help="replications averaged with --replicate")
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", choices=("mad", "sd"), default="mad")
    p.add_argument("--output")
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("replicate", help="simulate long series from deepest-line fits")
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma-zero", action="store_true", help="drop the noise term")
    p.add_argument("--scale", choices=("mad", "sd"), default="mad")
    p.add_argument("--output")
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("baseline", help="rank sums of randomly drawn groups")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--nc", type=int, required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--direction-count", type=int, default=10_000)
    p.add_argument("--output")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("median-diff", help="difference of functional medians of F and C")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="mbd")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--alpha", type=float)
    group.add_argument("--quantile", type=float)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_median_diff)

    p = sub.add_parser("pipeline", help="full Monte Carlo procedure")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--subsidies")
    src.add_argument("--curves")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config value")
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="comma-separated depth methods")
    p.add_argument("--workers", type=int)
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s: %(message)s", level=logging.WARNING)
    logging.captureWarnings(True)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        return args.func(args)
    except UsageError as exc:
        print(f"depthcause: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateAnalysisError as exc:
        print(f"depthcause: degenerate analysis: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DataError as exc:
        print(f"depthcause: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"depthcause: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
