"""``opstage`` command-line entry point.

Exit status: 0 on success, 2 on invalid input, 3 on numerical failure.
Machine-readable results go to stdout or the named output files; diagnostics
go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from . import harness, wbls
from .dataio import encode_labels, read_features_csv, read_labels_csv, write_features_csv, write_labels_csv
from .errors import NumericError, ValidationError
from .glcm import DEFAULT_LEVELS, feature_matrix, quantize_image
from .pgm import read_pgm, write_pgm
from .staging import stage_document

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def _read_json(path):
    try:
        text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _emit(doc):
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def cmd_synth(args):
    specs = harness.parse_class_specs(_read_json(args.spec))
    names = harness.class_names_of(specs)
    corpus = harness.generate_synthetic(specs, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = []
    for i, (img, _) in enumerate(corpus):
        ident = f"img{i:05d}"
        write_pgm(out / f"{ident}.pgm", img.pixels, img.levels - 1, binary=not args.ascii)
        ids.append(ident)
    labels = [names[k] for _, k in corpus]
    write_labels_csv(out / "labels.csv", ids, labels)
    counts = Counter(labels)
    _emit({"images": len(ids), "class_counts": {n: counts[n] for n in names}, "seed": args.seed})


def cmd_extract(args):
    labels = read_labels_csv(args.labels)
    img_dir = Path(args.images)
    if not img_dir.is_dir():
        raise ValidationError(f"{img_dir} is not a directory")
    on_disk = {p.stem for p in img_dir.glob("*.pgm")}
    unlabeled = sorted(on_disk - set(labels))
    if unlabeled:
        raise ValidationError(f"images without a label row: {', '.join(unlabeled[:5])}")
    images = []
    for ident in labels:
        path = img_dir / f"{ident}.pgm"
        if not path.exists():
            raise ValidationError(f"labels list {ident!r} but {path} does not exist")
        raw, max_value = read_pgm(path)
        try:
            images.append(quantize_image(raw, max_value, args.levels))
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    try:
        X = feature_matrix(images, workers=args.workers)
    except ValidationError as exc:
        raise ValidationError(f"feature extraction failed: {exc}") from None
    write_features_csv(args.out, list(labels), list(labels.values()), X)
    _emit({"rows": len(images), "levels": args.levels})


def cmd_train(args):
    _, labels, X = read_features_csv(args.features)
    y, names = encode_labels(labels)
    hyper = wbls.WblsHyperParams(
        feature_nodes=args.feature_nodes,
        enhancement_nodes=args.enh_nodes,
        lam=args.lam,
        seed=args.seed,
        weighted=not args.unweighted,
    )
    model = wbls.train(X, y, hyper, class_names=names)
    wbls.save_model(model, args.out)
    pred, _ = wbls.predict(model, X)
    _emit({"samples": len(y), "classes": list(names), "train_accuracy": harness.accuracy(pred, y)})


def cmd_predict(args):
    model = wbls.load_model(args.model)
    ids, labels, X = read_features_csv(args.features)
    pred, scores = wbls.predict(model, X)
    names = [str(c) for c in model.class_names]
    with open(args.out, "w") as fh:
        fh.write(",".join(["id", "label", "predicted"] + [f"score_{n}" for n in names]) + "\n")
        for ident, lbl, k, row in zip(ids, labels, pred, scores):
            fh.write(",".join([ident, lbl, names[k]] + [f"{v:.17g}" for v in row]) + "\n")
    summary = {"rows": len(ids), "accuracy": None}
    if ids and all(lbl in names for lbl in labels):
        truth, _ = encode_labels(labels, names)
        summary["accuracy"] = harness.accuracy(pred, truth)
    _emit(summary)


def cmd_stage(args):
    try:
        text = sys.stdin.read() if args.assessment == "-" else Path(args.assessment).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {args.assessment}: {exc.strerror}") from None
    print(stage_document(text))


def cmd_experiment(args):
    config_path = Path(args.config)
    config = harness.ExperimentConfig.from_dict(_read_json(config_path), base_dir=config_path.parent)
    report = harness.run_experiment(config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(harness.report_json(report))
    (out / "summary.csv").write_text(harness.report_csv(report))
    _emit({
        "repeats": len(report["records"]),
        "failed_repeats": report["failed_repeats"],
        "aggregates": report["aggregates"],
    })


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="opstage", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic PGM texture corpus", formatter_class=fmt)
    p.add_argument("--spec", required=True, help="JSON list of class specs (or {'classes': [...]})")
    p.add_argument("--out-dir", required=True, help="directory for PGM files and labels.csv")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--ascii", action="store_true", help="write P2 instead of P5")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="compute 16 GLCM features per image", formatter_class=fmt)
    p.add_argument("--images", required=True, help="directory of <id>.pgm files")
    p.add_argument("--labels", required=True, help="id,label CSV")
    p.add_argument("--levels", type=int, default=DEFAULT_LEVELS, help="gray levels N after quantization")
    p.add_argument("--out", required=True, help="feature CSV to write")
    p.add_argument("--workers", type=int, default=1, help="feature extraction threads")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit a weighted broad learning system", formatter_class=fmt)
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--out", required=True, help="model JSON to write")
    p.add_argument("--feature-nodes", type=int, default=10, help="feature layer width")
    p.add_argument("--enh-nodes", type=int, default=10, help="enhancement layer width")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3, help="ridge regularizer")
    p.add_argument("--seed", type=int, default=0, help="random map seed")
    p.add_argument("--unweighted", action="store_true", help="disable class weighting (ablation)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify a feature CSV with a saved model", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--out", required=True, help="predictions CSV to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("stage", help="final stage from six sub-region levels", formatter_class=fmt)
    p.add_argument("--assessment", required=True, help="assessment JSON file, or - for stdin")
    p.set_defaults(func=cmd_stage)

    p = sub.add_parser("experiment", help="run the repeated split/balance protocol", formatter_class=fmt)
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out-dir", required=True, help="directory for report.json and summary.csv")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except NumericError as exc:
        print(f"opstage {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationError as exc:
        print(f"opstage {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"opstage {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
