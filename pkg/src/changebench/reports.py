"""Report emission.

Writes the delimited outputs (descriptive-statistics summaries per classifier
and per feature set, pairwise p-value grids, mean-difference matrices,
selection traces, PCA loadings, box-plot data) plus one machine-readable
``results.json``; optionally renders matplotlib figures alongside them.
Every file carries the config hash and seed on a leading comment line.
"""

from __future__ import annotations

import csv
import datetime
import json
from pathlib import Path

from .dataset import DatasetSummary, canonical_order
from .errors import ChangebenchError
from .grid import ExperimentGrid, compare_classifiers, compare_feature_sets, record_from_json
from .stats import PairwiseTestReport, descriptive, pairwise_report_from_json

SUMMARY_STAT_COLUMNS = ("min", "max", "mean", "median", "std_dev", "q1", "q3")


def _stamp(grid: ExperimentGrid) -> str:
    return f"config_hash={grid.config_hash} seed={grid.seed}"


def _write_csv(path: Path, header, rows, comment: str) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def summary_header(method_column: str) -> list[str]:
    cols = [method_column]
    for measure in ("accuracy", "fmeasure"):
        cols.extend(f"{measure}_{stat}" for stat in SUMMARY_STAT_COLUMNS)
    return cols


def _summary_rows(methods, observations_by_measure):
    rows = []
    for method in methods:
        acc = list(observations_by_measure["accuracy"][method].values())
        fme = list(observations_by_measure["f_measure"][method].values())
        if not acc:
            continue
        row = [method]
        for values in (acc, fme):
            d = descriptive(values)
            row.extend(repr(getattr(d, stat)) for stat in SUMMARY_STAT_COLUMNS)
        rows.append(row)
    return rows


def _write_matrix(path: Path, methods, matrix, comment: str) -> None:
    header = ["method"] + list(methods)
    rows = [[m] + [repr(float(v)) for v in matrix[i]] for i, m in enumerate(methods)]
    _write_csv(path, header, rows, comment)


def _write_boxplot_data(path: Path, scores: dict, comment: str) -> None:
    methods = list(scores)
    keys = sorted(next(iter(scores.values())).keys()) if methods else []
    header = ["observation"] + methods
    rows = [[":".join(map(str, key))] + [repr(float(scores[m][key])) for m in methods]
            for key in keys]
    _write_csv(path, header, rows, comment)


def compute_comparisons(grid: ExperimentGrid) -> dict:
    """Both pairwise stages; an axis with fewer than 2 methods, an empty grid,
    or no complete paired observations is skipped rather than raised."""
    from .errors import StatsError

    comparisons: dict = {}
    if grid.records:
        if len(grid.classifier_kinds) >= 2:
            try:
                comparisons["classifiers"] = compare_classifiers(grid)
            except StatsError:
                pass
        if len(grid.feature_set_labels) >= 2:
            try:
                comparisons["feature-sets"] = compare_feature_sets(grid)
            except StatsError:
                pass
    return comparisons


def emit_reports(grid: ExperimentGrid, out_dir, comparisons: dict | None = None,
                 render_figures: bool = True) -> list[Path]:
    """Write every report file; returns the list of paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _stamp(grid)
    written: list[Path] = []
    if comparisons is None:
        comparisons = compute_comparisons(grid)

    # descriptive summaries: one row per classifier / per feature set
    for axis, methods, name in (
        ("classifiers", grid.classifier_kinds, "classifier_performance_summary.csv"),
        ("feature-sets", grid.feature_set_labels, "feature_set_performance_summary.csv"),
    ):
        observations = {m: grid.observations(axis, m) for m in ("accuracy", "f_measure")}
        label = "classifier" if axis == "classifiers" else "feature_set"
        path = out / name
        _write_csv(path, summary_header(label),
                   _summary_rows(methods, observations) if grid.records else [],
                   stamp)
        written.append(path)

        # box-plot data files: one column of raw observations per method
        for measure, short in (("accuracy", "accuracy"), ("f_measure", "fmeasure")):
            data_path = out / f"boxplot_{short}_by_{label}.csv"
            if grid.records:
                _write_boxplot_data(data_path, observations[measure], stamp)
            else:
                _write_csv(data_path, ["observation"] + list(methods), [], stamp)
            written.append(data_path)

    # significance grids and mean-difference matrices
    for axis, prefix in (("classifiers", "classifier"), ("feature-sets", "feature_set")):
        if axis not in comparisons:
            continue
        for measure, short in (("accuracy", "accuracy"), ("f_measure", "fmeasure")):
            report: PairwiseTestReport = comparisons[axis][measure]
            extra = f"{stamp} cutoff={report.cutoff!r} n_pairs={report.n_pairs}"
            p_path = out / f"{prefix}_pairwise_pvalues_{short}.csv"
            _write_matrix(p_path, report.methods, report.p_values, extra)
            md_path = out / f"{prefix}_mean_difference_{short}.csv"
            _write_matrix(md_path, report.methods, report.mean_difference, extra)
            written.extend([p_path, md_path])

    # selection outputs: member lists, PFST traces and grids, PCA loadings
    member_rows = []
    for (ds_id, label), selection in grid.feature_sets.items():
        fs = selection.feature_set
        member_rows.append([ds_id, label, str(len(fs.members)), ";".join(fs.members)])
    members_path = out / "feature_set_members.csv"
    _write_csv(members_path, ["dataset", "feature_set", "n_members", "members"],
               member_rows, stamp)
    written.append(members_path)

    for (ds_id, label), selection in grid.feature_sets.items():
        if label == "PFST" and selection.pfst_trace is not None:
            trace = selection.pfst_trace
            trace_path = out / f"pfst_trace_{ds_id}.json"
            trace_path.write_text(
                json.dumps({"stamp": stamp, **trace.to_json()}, indent=2, sort_keys=True)
                + "\n", encoding="utf-8")
            written.append(trace_path)
            grid_path = out / f"pfst_selection_grid_{ds_id}.csv"
            ds_columns = canonical_order(trace.stage1_p_values.keys())
            rows = []
            for metric in ds_columns:
                s1, s2, s3, s4 = trace.stage_membership(metric)
                rows.append([metric, int(s1), int(s2), int(s3), int(s4)])
            _write_csv(grid_path,
                       ["metric", "rank_test", "ulr", "correlation", "stepwise"],
                       rows, stamp)
            written.append(grid_path)
        if label == "FR5" and selection.pca_loadings is not None:
            pca_path = out / f"pca_loadings_{ds_id}.csv"
            selection.pca_loadings.write_csv(pca_path, comment=stamp)
            written.append(pca_path)

    results_path = out / "results.json"
    results_path.write_text(results_json_text(grid, comparisons), encoding="utf-8")
    written.append(results_path)

    if render_figures:
        from .figures import render_report_figures

        written.extend(render_report_figures(grid, comparisons, out))
    return written


def results_json_text(grid: ExperimentGrid, comparisons: dict) -> str:
    payload = {
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": grid.seed,
        "nested": grid.nested,
        "config": grid.config.to_flat_dict(),
        "config_hash": grid.config_hash,
        "feature_set_labels": list(grid.feature_set_labels),
        "classifier_kinds": list(grid.classifier_kinds),
        "datasets": {
            ds_id: {"n_classes": s.n_classes, "n_changed": s.n_changed,
                    "pct_changed": s.pct_changed}
            for ds_id, s in grid.summaries.items()
        },
        "feature_sets": {
            f"{ds_id}/{label}": {
                "members": list(sel.feature_set.members),
                "provenance": dict(sel.feature_set.provenance),
                "diagnostics": sel.diagnostics,
            }
            for (ds_id, label), sel in grid.feature_sets.items()
        },
        "records": [r.to_json() for r in grid.records],
        "failures": [f.to_json() for f in grid.failures],
        "comparisons": {
            axis: {measure: report.to_json() for measure, report in by_measure.items()}
            for axis, by_measure in comparisons.items()
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def load_results(path) -> dict:
    """Round-trip loader for results.json; records and pairwise reports come
    back as their dataclass forms."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if "records" not in payload or "config_hash" not in payload:
        raise ChangebenchError(f"{path}: not a results.json file")
    payload["records"] = [record_from_json(r) for r in payload["records"]]
    payload["comparisons"] = {
        axis: {measure: pairwise_report_from_json(rep)
               for measure, rep in by_measure.items()}
        for axis, by_measure in payload.get("comparisons", {}).items()
    }
    payload["dataset_summaries"] = {
        ds_id: DatasetSummary(d["n_classes"], d["n_changed"], d["pct_changed"])
        for ds_id, d in payload.get("datasets", {}).items()
    }
    return payload
