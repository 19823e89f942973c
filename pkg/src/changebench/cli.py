"""Command-line workbench.

Subcommands:
  run      full experiment grid over one or more metric CSVs, with reports
  select   run a single feature-selection method and print the chosen set
  compare  pairwise statistical comparison from an existing results.json
  synth    generate a synthetic labeled metric CSV with planted signal

Exit codes: 0 success, 1 usage/config error, 2 data validation error,
3 grid completed with failed cells.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .dataset import (
    CANONICAL_METRICS,
    DEFAULT_LABEL_COLUMN,
    canonical_metric,
    load_csv,
    summarize,
    synthesize,
    write_csv,
)
from .errors import ChangebenchError, ConfigError, DatasetError
from .grid import ALL_CLASSIFIER_KINDS, run_grid
from .reports import compute_comparisons, emit_reports, load_results
from .selection import FEATURE_SET_LABELS, compute_feature_set
from .stats import pairwise_bonferroni

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class UsageError(Exception):
    pass


def _csv_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="changebench",
                     description="Change-proneness prediction workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment grid and emit reports")
    run.add_argument("--data", nargs="+", required=True,
                     help="metric CSV files and/or directories of them")
    run.add_argument("--label-column", default=DEFAULT_LABEL_COLUMN)
    run.add_argument("--out", required=True, help="output directory for reports")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--folds", type=int, default=None)
    run.add_argument("--feature-sets", default=None,
                     help=f"comma list from {','.join(FEATURE_SET_LABELS)}")
    run.add_argument("--classifiers", default=None,
                     help="comma list of classifier kinds (default: all 21)")
    run.add_argument("--nested", action="store_true",
                     help="rerun feature selection inside each training fold")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--config", default=None, help="flat key=value config file")
    run.add_argument("--no-figures", action="store_true",
                     help="skip matplotlib figure rendering")
    run.add_argument("--no-cache", action="store_true",
                     help="disable the on-disk cell cache")

    select = sub.add_parser("select", help="print one method's selected metrics")
    select.add_argument("--data", required=True)
    select.add_argument("--label-column", default=DEFAULT_LABEL_COLUMN)
    select.add_argument("--method", required=True,
                        help="pfst, am, fr1..fr5, or fs1..fs5")
    select.add_argument("--seed", type=int, default=0)
    select.add_argument("--config", default=None)

    compare = sub.add_parser("compare", help="pairwise tests from a results.json")
    compare.add_argument("--results", required=True)
    compare.add_argument("--axis", choices=("classifiers", "feature-sets"),
                         default="classifiers")
    compare.add_argument("--measure", choices=("accuracy", "f_measure"),
                         default="accuracy")

    synth = sub.add_parser("synth", help="generate a synthetic metric CSV")
    synth.add_argument("--rows", type=int, required=True)
    synth.add_argument("--informative", required=True,
                       help="comma list of metric names carrying signal")
    synth.add_argument("--noise", default=None,
                       help="comma list of noise metrics (default: the rest)")
    synth.add_argument("--separation", type=float, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    return parser


def _collect_data_files(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found = sorted(p.glob("*.csv"))
            if not found:
                raise DatasetError(f"no CSV files in directory {p}")
            files.extend(found)
        elif p.exists():
            files.append(p)
        else:
            raise DatasetError(f"missing file: {p}")
    if not files:
        raise DatasetError("no input data files")
    return files


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.folds is not None:
        cfg = dataclasses.replace(cfg, folds=args.folds)
    feature_sets = _csv_list(args.feature_sets) if args.feature_sets else None
    if feature_sets:
        feature_sets = [f.upper() for f in feature_sets]
    classifiers = _csv_list(args.classifiers) if args.classifiers else None
    if classifiers:
        classifiers = [c.upper() for c in classifiers]

    datasets = [load_csv(path, label_column=args.label_column)
                for path in _collect_data_files(args.data)]
    out_dir = Path(args.out)
    cache_dir = None if args.no_cache else out_dir / "cache"
    grid = run_grid(datasets, cfg, seed=args.seed, feature_sets=feature_sets,
                    classifiers=classifiers, jobs=args.jobs,
                    cache_dir=cache_dir, nested=args.nested)
    comparisons = compute_comparisons(grid)
    written = emit_reports(grid, out_dir, comparisons,
                           render_figures=not args.no_figures)
    print(f"evaluated {len(grid.records)} cells over {len(datasets)} dataset(s); "
          f"{len(grid.failures)} failed")
    for ds in datasets:
        s = summarize(ds)
        print(f"  {ds.id}: {s.n_classes} classes, {s.n_changed} changed ({s.pct_changed}%)")
    print(f"wrote {len(written)} report files to {out_dir}")
    if grid.failures:
        for failure in grid.failures[:10]:
            print(f"  failed: {failure.dataset_id}/{failure.feature_set_label}/"
                  f"{failure.classifier_kind}: {failure.error}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_select(args) -> int:
    cfg = load_config(args.config)
    method = args.method.upper()
    if method not in FEATURE_SET_LABELS:
        raise ConfigError(f"unknown method {args.method!r}; "
                          f"choose from {', '.join(FEATURE_SET_LABELS)}")
    ds = load_csv(args.data, label_column=args.label_column)
    result = compute_feature_set(method, ds, cfg, seed=args.seed)
    fs = result.feature_set
    print(f"{fs.label}: {len(fs.members)} of {ds.n_metrics} metrics")
    for member in fs.members:
        note = fs.provenance.get(member, "")
        print(f"  {member}" + (f"  ({note})" if note else ""))
    return EXIT_OK


def _cmd_compare(args) -> int:
    payload = load_results(args.results)
    records = payload["records"]
    if not records:
        raise ChangebenchError("results.json holds no records to compare")
    if args.axis == "classifiers":
        methods = payload.get("classifier_kinds") or list(ALL_CLASSIFIER_KINDS)
        key_of = lambda r: (r.dataset_id, r.feature_set_label)
        method_of = lambda r: r.classifier_kind
    else:
        methods = payload.get("feature_set_labels") or list(FEATURE_SET_LABELS)
        key_of = lambda r: (r.dataset_id, r.classifier_kind)
        method_of = lambda r: r.feature_set_label
    value_of = (lambda r: r.accuracy) if args.measure == "accuracy" else (lambda r: r.f_measure)
    scores: dict = {m: {} for m in methods}
    for r in records:
        if method_of(r) in scores:
            scores[method_of(r)][key_of(r)] = value_of(r)
    complete = set.intersection(*(set(v) for v in scores.values()))
    scores = {m: {k: v[k] for k in complete} for m, v in scores.items()}
    report = pairwise_bonferroni(scores, measure=args.measure)
    print(f"{args.axis} ({args.measure}): {len(report.methods)} methods, "
          f"{len(complete)} paired observations each")
    print(f"pairs={report.n_pairs} cutoff={report.cutoff:.7f} "
          f"significant={report.significant_pair_count()}")
    mean_rank = sorted(
        ((report.mean_difference[i].sum() / (len(report.methods) - 1), m)
         for i, m in enumerate(report.methods)),
        reverse=True)
    print("mean difference vs the field (positive is better):")
    for value, method in mean_rank:
        print(f"  {method:<12} {value:+.2f}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    informative = [canonical_metric(m) for m in _csv_list(args.informative)]
    if args.noise is not None:
        noise = [canonical_metric(m) for m in _csv_list(args.noise)]
    else:
        noise = [m for m in CANONICAL_METRICS if m not in informative]
    ds = synthesize(args.rows, informative, noise, args.separation, args.seed,
                    id=Path(args.out).stem)
    write_csv(ds, args.out)
    s = summarize(ds)
    print(f"wrote {args.out}: {s.n_classes} rows, {s.n_changed} changed "
          f"({s.pct_changed}%), {ds.n_metrics} metrics "
          f"({len(informative)} informative)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "select":
            return _cmd_select(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "synth":
            return _cmd_synth(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ChangebenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
