"""``permforge`` command line: extract -> vectorize -> analyze/reduce -> train/evaluate/grid."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import classifiers, evaluation
from .catalog import default_catalog
from .dataset import (
    SynthConfig,
    default_profile,
    generate_synthetic,
    load_csv,
    read_labels,
    save_csv,
    vectorize_with_report,
)
from .errors import PermforgeError
from .features import class_frequency, column_variances, pearson_correlation
from .manifest import ManifestInfo, detect_format, parse_manifest
from .serialize import load_model, save_model

log = logging.getLogger("permforge")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
LABEL_DIRS = {"malware": 1, "benign": 0}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file or directory: {path}")
    return p


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------ extract


def _iter_inputs(paths):
    for raw in paths:
        root = _existing(raw)
        if root.is_dir():
            for f in sorted(p for p in root.rglob("*") if p.is_file()):
                yield root, f
        else:
            yield root.parent, root


def _dir_label(rel: Path) -> int | None:
    for part in rel.parts[:-1]:
        if part.lower() in LABEL_DIRS:
            return LABEL_DIRS[part.lower()]
    return None


def cmd_extract(args) -> int:
    records, skipped = [], []
    for root, path in _iter_inputs(args.inputs):
        rel = path.relative_to(root)
        try:
            data = path.read_bytes()
            fmt = detect_format(data)
            info = parse_manifest(data)
        except (PermforgeError, OSError) as exc:
            skipped.append({"path": str(path), "error": str(exc)})
            continue
        rec = {
            "row_id": rel.as_posix(),
            "package": info.package_name,
            "permissions": sorted(info.requested_permissions),
            "format": fmt.value,
        }
        label = _dir_label(rel)
        if label is not None:
            rec["label"] = label
        records.append(rec)
    if skipped:
        log.warning("skipped %d corrupt or unrecognised inputs", len(skipped))
    summary = {"records": len(records), "skipped": len(skipped), "skipped_files": skipped}
    if not records:
        raise DataError("no parseable manifests among the inputs")
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------- vectorize


def _read_records(path):
    out = []
    with open(_existing(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return out


def cmd_vectorize(args) -> int:
    records = _read_records(args.records)
    labels_map = read_labels(_existing(args.labels)) if args.labels else {}
    catalog = default_catalog(args.catalog)
    manifests, labels, rows = [], [], []
    for rec in records:
        rid = rec["row_id"]
        label = labels_map.get(rid, rec.get("label"))
        if label is None:
            raise DataError(f"no label for row {rid!r}; pass --labels or use malware/ and benign/ directories")
        manifests.append(ManifestInfo(rec.get("package"), frozenset(rec.get("permissions", [])), rec.get("format")))
        labels.append(int(label))
        rows.append(rid)
    m, ignored = vectorize_with_report(manifests, labels, catalog, rows)
    save_csv(m, args.out)
    print(json.dumps({"rows": m.n_rows, "features": m.n_features, "ignored_permissions": sum(ignored.values()),
                      "ignored_distinct": len(ignored)}, sort_keys=True))
    return EXIT_OK


# ------------------------------------------------------------------ analyze


def cmd_analyze(args) -> int:
    m = load_csv(_existing(args.matrix))
    if len(np.unique(m.labels)) < 2:
        raise DataError("analysis needs both classes present")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    freq = class_frequency(m)
    with open(out / "frequency.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "malware", "benign"])
        for name, a, b in zip(m.feature_names, freq.malware, freq.benign):
            w.writerow([name, repr(float(a)), repr(float(b))])

    var = column_variances(m)
    with open(out / "variance.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "variance"])
        for j in np.argsort(-var, kind="stable"):
            w.writerow([m.feature_names[j], repr(float(var[j]))])

    forest = classifiers.fit(classifiers.RandomForestConfig(n_trees=args.n_trees), m, args.seed)
    imp = classifiers.rf_feature_importance(forest)
    malicious = m.values[m.labels == 1]
    varying = malicious.min(axis=0) != malicious.max(axis=0)
    ranked = [int(j) for j in np.argsort(-imp, kind="stable") if varying[j]][: args.top]
    with open(out / "importance.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "importance"])
        for j in np.argsort(-imp, kind="stable"):
            w.writerow([m.feature_names[j], repr(float(imp[j]))])
    corr = pearson_correlation(m, ranked, row_filter=1)
    with open(out / "correlation.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        names = [m.feature_names[j] for j in ranked]
        w.writerow(["feature", *names])
        for name, row in zip(names, corr):
            w.writerow([name, *(repr(float(v)) for v in row)])
    print(json.dumps({"features": m.n_features, "correlation_size": len(ranked),
                      "never_used": int(np.sum((freq.malware == 0) & (freq.benign == 0)))}, sort_keys=True))
    return EXIT_OK


# ------------------------------------------------------------ reduce / train


def _reduction_name(args) -> str:
    method = (args.method or "").lower()
    if method == "ae":
        method = (args.arch or "ae1l").lower()
    if not method and args.arch and args.arch.lower().startswith("ae"):
        method = args.arch.lower()
    if method not in ("vt", "pca", "ae1l", "ae3l"):
        raise UsageError("reduce needs --method vt|pca|ae (with --arch ae1l|ae3l) or --method ae1l|ae3l")
    return method


def cmd_reduce(args) -> int:
    m = load_csv(_existing(args.matrix))
    kind = _reduction_name(args)
    model = evaluation.fit_reduction(kind, m, args.seed, args.threshold, args.components)
    reduced = model.apply(m)
    save_csv(reduced, args.out)
    if args.model_out:
        save_model(model, args.model_out)
    print(json.dumps({"reduction": kind.upper(), "rows": reduced.n_rows, "features": reduced.n_features},
                     sort_keys=True))
    return EXIT_OK


def _classifier_config(args):
    name = args.classifier.lower()
    if name == "dnn":
        name = (args.arch or "dnn2l").lower()
        if not name.startswith("dnn"):
            raise UsageError("--arch for a DNN must be dnn2l, dnn4l or dnn7l")
    try:
        return classifiers.default_config(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_train(args) -> int:
    m = load_csv(_existing(args.matrix))
    if args.reduction_model:
        m = load_model(_existing(args.reduction_model)).apply(m)
    cfg = _classifier_config(args)
    model = classifiers.fit(cfg, m, args.seed)
    save_model(model, args.out)
    summary = {"classifier": cfg.kind, "rows": m.n_rows, "features": m.n_features}
    if getattr(model, "oob_score", None) is not None:
        summary["oob_score"] = model.oob_score
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    m = load_csv(_existing(args.matrix))
    if args.reduction_model:
        m = load_model(_existing(args.reduction_model)).apply(m)
    model = load_model(_existing(args.model))
    scores = classifiers.predict_scores(model, m)
    counts, met, auc = evaluation.evaluate_scores(m.labels, scores, args.decision_threshold)
    frac = lambda v: None if v is None else float(v)
    result = {
        "accuracy": frac(met.accuracy), "tpr": frac(met.tpr), "tnr": frac(met.tnr), "auc": auc,
        "tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn, "rows": m.n_rows,
    }
    _write_json(args.out, result)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


# --------------------------------------------------------------------- grid


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        with open(_existing(path), encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"bad grid config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise DataError("grid config must be a JSON object")
    return cfg


def cmd_grid(args) -> int:
    m = load_csv(_existing(args.matrix))
    cfg = _load_config(args.config)

    def pick(flag, key, default):
        return flag if flag is not None else cfg.get(key, default)

    overrides = {}
    for name, params in cfg.get("classifier_configs", {}).items():
        base = classifiers.default_config(name)
        fields = classifiers.config_to_dict(base)
        fields.update(params)
        overrides[name] = classifiers.config_from_dict(fields)
    reports = evaluation.run_grid(
        m,
        cfg.get("reductions", evaluation.REDUCTIONS),
        cfg.get("classifiers", classifiers.CLASSIFIER_KINDS),
        ratio=pick(args.ratio, "ratio", 0.8),
        seed=pick(args.seed, "seed", 0),
        timing_runs=pick(args.timing_runs, "timing_runs", 3),
        threshold=pick(args.threshold, "threshold", 0.10),
        components=pick(args.components, "components", 16),
        configs=overrides,
        ae_options=cfg.get("autoencoder"),
        progress=lambda r: log.info("%s/%s acc=%.3f auc=%s", r.reduction, r.classifier, r.accuracy, r.auc),
    )
    evaluation.write_report_csv(reports, args.out)
    if args.table:
        Path(args.table).write_text(evaluation.format_table(reports), encoding="utf-8")
    print(json.dumps({"reports": len(reports)}, sort_keys=True))
    return EXIT_OK


# -------------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    catalog = default_catalog(args.catalog)
    if args.profile:
        prof = load_csv_profile(_existing(args.profile), catalog)
    else:
        prof = default_profile(catalog)
    if args.profile_out:
        with open(args.profile_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", "benign", "malware"])
            for name, b, mw in zip(catalog.names, *prof):
                w.writerow([name, repr(float(b)), repr(float(mw))])
    m = generate_synthetic(SynthConfig(args.n_per_class, prof, args.seed), catalog)
    save_csv(m, args.out)
    print(json.dumps({"rows": m.n_rows, "features": m.n_features}, sort_keys=True))
    return EXIT_OK


def load_csv_profile(path, catalog):
    """Read a ``feature,benign,malware`` profile; unlisted features default to 0."""
    benign = np.zeros(len(catalog))
    malware = np.zeros(len(catalog))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"feature", "benign", "malware"} <= set(reader.fieldnames):
            raise DataError("profile needs columns feature,benign,malware")
        for rec in reader:
            j = catalog.index_of(rec["feature"])
            if j is None:
                raise DataError(f"profile names unknown feature {rec['feature']!r}")
            benign[j] = float(rec["benign"])
            malware[j] = float(rec["malware"])
    return benign, malware


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="permforge", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", required=True, help="output path")
        return sp

    sp = add("extract", cmd_extract, "parse APKs / manifests into JSON-lines permission records")
    sp.add_argument("inputs", nargs="+")

    sp = add("vectorize", cmd_vectorize, "turn permission records into a binary matrix CSV")
    sp.add_argument("records")
    sp.add_argument("--labels")
    sp.add_argument("--catalog")

    sp = add("analyze", cmd_analyze, "frequency, variance and correlation tables")
    sp.add_argument("matrix")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--top", type=int, default=15)
    sp.add_argument("--n-trees", type=int, default=100)

    sp = add("reduce", cmd_reduce, "fit a feature reduction and write the reduced matrix")
    sp.add_argument("matrix")
    sp.add_argument("--method", choices=["vt", "pca", "ae", "ae1l", "ae3l"])
    sp.add_argument("--arch", choices=["ae1l", "ae3l", "dnn2l", "dnn4l", "dnn7l"])
    sp.add_argument("--threshold", type=float, default=0.10)
    sp.add_argument("--components", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--model-out")

    sp = add("train", cmd_train, "fit one classifier")
    sp.add_argument("matrix")
    sp.add_argument("--classifier", required=True,
                    choices=["dt", "rf", "knn", "svm", "adaboost", "dnn", "dnn2l", "dnn4l", "dnn7l"])
    sp.add_argument("--arch", choices=["ae1l", "ae3l", "dnn2l", "dnn4l", "dnn7l"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reduction-model")

    sp = add("evaluate", cmd_evaluate, "score a saved classifier on a matrix")
    sp.add_argument("matrix")
    sp.add_argument("--model", required=True)
    sp.add_argument("--reduction-model")
    sp.add_argument("--decision-threshold", type=float, default=0.5)

    sp = add("grid", cmd_grid, "evaluate the reduction x classifier grid")
    sp.add_argument("matrix")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--ratio", type=float)
    sp.add_argument("--timing-runs", type=int)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--components", type=int)
    sp.add_argument("--table", help="also write a plain-text summary table here")

    sp = add("synth", cmd_synth, "generate a synthetic labeled matrix")
    sp.add_argument("--n-per-class", type=int, default=1250)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--catalog")
    sp.add_argument("--profile", help="feature,benign,malware CSV overriding the default profile")
    sp.add_argument("--profile-out", help="write the class-probability profile used")
    return p


def _error_path(args) -> Path | None:
    out = getattr(args, "out", None)
    if not out:
        return None
    out = Path(out)
    return out / "error.json" if out.is_dir() or getattr(args, "command", None) == "analyze" else out


def main(argv=None) -> int:
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        code, exc_obj = EXIT_USAGE, exc
        if args is None:
            parser.print_usage(sys.stderr)
    except (DataError, PermforgeError, ValueError, KeyError, OSError) as exc:
        code, exc_obj = EXIT_DATA, exc
    except Exception as exc:  # noqa: BLE001
        code, exc_obj = EXIT_INTERNAL, exc
        traceback.print_exc()
    err = {"error": type(exc_obj).__name__, "message": str(exc_obj), "exit_code": code}
    print(f"permforge: error: {exc_obj}", file=sys.stderr)
    path = _error_path(args) if args is not None else None
    if path is not None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            _write_json(path, err)
        except OSError:
            pass
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
