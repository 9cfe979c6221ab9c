"""Command-line entry point: ``prepare``, ``train``, ``evaluate``, ``compare``.

Exit codes: 0 success, 1 usage error, 2 missing or invalid input,
3 numerical failure (non-finite loss).
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checkpoint
from .data import (
    Standardizer,
    features_from_windows,
    load_feature_csv,
    load_series_csv,
    sniff_csv_kind,
    split_dataset,
    synthesize_dataset,
    window_series,
    write_feature_csv,
)
from .errors import ConfigError, ParseError, ShapeError
from .metrics import (
    compute_metrics,
    confusion,
    format_key_values,
    format_table,
    parse_key_values,
    predict_class,
    use_color,
)
from .models import QaeQubitClassifier, QaeQuditClassifier
from .training import (
    GRAD_MODES,
    MODEL_KINDS,
    NumericalError,
    TrainConfig,
    train_batched_qae,
    train_dense_nn,
    train_qae,
    train_vqc,
)

log = logging.getLogger("quditvqc")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

MODEL_LABELS = {
    "qae-qudit": "QAE-Qudit",
    "dense-nn": "Classic NN",
    "qudit-raw": "Qudit",
    "qae-qubits": "QAE-Qubits",
}

DEFAULTS = {
    "seed": 0,
    "epochs": 200,
    "qae_epochs": None,
    "batch_size": 32,
    "lr": 0.01,
    "layers": None,
    "perm_seed": 0,
    "grad_mode": "analytic",
    "init_scale": 0.1,
    "readout": "first9",
    "train_encoder": False,
    "decoder_hidden": [],
    "rows_per_class": 100,
    "window": 10,
    "stride": 1,
    "fraction": 0.8,
}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _settings(args):
    """Defaults, overlaid by ``--config``, overlaid by explicit flags."""
    out = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg = _read_json(args.config)
        if not isinstance(cfg, dict):
            raise InputError(f"{args.config}: config must be a JSON object")
        unknown = set(cfg) - set(DEFAULTS) - {"model", "data", "out"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        out.update(cfg)
    for key in ("model", "data", "out", "seed", "epochs", "batch_size", "lr", "layers", "perm_seed", "grad_mode"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _seeds(root, names):
    children = np.random.SeedSequence(int(root)).spawn(len(names))
    return {n: int(c.generate_state(1)[0]) for n, c in zip(names, children)}


# -- prepare -----------------------------------------------------------------

def _load_source(source, settings):
    if source is None:
        raise UsageError("--data is required")
    if source == "synthetic" or source.startswith("synthetic:"):
        rows = settings["rows_per_class"]
        if ":" in source:
            try:
                rows = int(source.split(":", 1)[1])
            except ValueError:
                raise UsageError(f"bad synthetic source {source!r}; use synthetic[:ROWS_PER_CLASS]") from None
        seeds = _seeds(settings["seed"], ["data", "split"])
        ds = synthesize_dataset(seeds["data"], rows)
        return ds, {"source": "synthetic", "rows_per_class": rows, "data_seed": seeds["data"]}
    path = Path(source)
    if path.is_dir():
        raise UsageError(f"{source} is a directory; prepare expects a CSV file or 'synthetic'")
    if sniff_csv_kind(path) == "series":
        result = window_series(load_series_csv(path), settings["window"], settings["stride"])
        ds = features_from_windows(result.windows)
        return ds, {
            "source": str(path),
            "windows": len(result),
            "window": settings["window"],
            "stride": settings["stride"],
            "skipped_segments": result.skipped_segments,
        }
    return load_feature_csv(path), {"source": str(path)}


def cmd_prepare(args):
    settings = _settings(args)
    out = Path(settings.get("out") or ".")
    ds, info = _load_source(settings.get("data"), settings)
    split_seed = _seeds(settings["seed"], ["data", "split"])["split"]
    if len(ds):
        train, test = split_dataset(ds, settings["fraction"], split_seed)
    else:
        train = test = ds
    out.mkdir(parents=True, exist_ok=True)
    write_feature_csv(train, out / "train.csv")
    write_feature_csv(test, out / "test.csv")
    manifest = {
        "seed": int(settings["seed"]),
        "split_seed": split_seed,
        "fraction": settings["fraction"],
        "train_rows": len(train),
        "test_rows": len(test),
        "train_class_counts": train.class_counts.tolist(),
        "test_class_counts": test.class_counts.tolist(),
        "warnings": int(info.get("skipped_segments", 0)),
        **info,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {len(train)} train / {len(test)} test rows to {out}")
    if manifest["warnings"]:
        print(f"warning: {manifest['warnings']} label segment(s) shorter than the window were skipped", file=sys.stderr)
    return EXIT_OK


# -- train -------------------------------------------------------------------

def _load_split(source, split):
    if source is None:
        raise UsageError("--data is required")
    path = Path(source)
    if path.is_dir():
        path = path / f"{split}.csv"
    if not path.exists():
        raise InputError(f"{path}: file not found")
    return load_feature_csv(path)


def _train_config(settings, seed, epochs=None):
    return TrainConfig(
        lr=float(settings["lr"]),
        epochs=int(settings["epochs"] if epochs is None else epochs),
        batch_size=int(settings["batch_size"]),
        seed=seed,
        grad_mode=settings["grad_mode"],
        init_scale=float(settings["init_scale"]),
    )


def run_training(train, settings):
    """Fit the configured model on a dataset. Returns ``(files, reports, n_params)``.

    ``files`` maps checkpoint file name to the object to store in it.
    """
    kind = settings.get("model")
    if kind not in MODEL_KINDS:
        raise UsageError(f"--model must be one of {', '.join(MODEL_KINDS)}")
    seeds = _seeds(settings["seed"], ["front", "model"])
    scaler = Standardizer.fit(train.X) if len(train) else None
    if scaler is None:
        raise InputError("training data is empty")
    X = scaler.transform(train.X)
    qae_epochs = settings["qae_epochs"]
    files = {"scaler.ckpt": scaler}
    reports = []
    if kind == "qae-qudit":
        qae, rep = train_qae(X, _train_config(settings, seeds["front"], qae_epochs))
        reports.append(rep)
        model, rep = train_vqc(X, train.y, _train_config(settings, seeds["model"]), kind, qae=qae,
                               layers=settings["layers"], train_encoder=bool(settings["train_encoder"]))
        files.update({"qae.ckpt": model.qae, "vqc.ckpt": model.vqc})
    elif kind == "qae-qubits":
        bqae, rep = train_batched_qae(X, _train_config(settings, seeds["front"], qae_epochs),
                                      tuple(settings["decoder_hidden"]))
        reports.append(rep)
        model, rep = train_vqc(X, train.y, _train_config(settings, seeds["model"]), kind, qae=bqae,
                               layers=settings["layers"], readout=settings["readout"],
                               train_encoder=bool(settings["train_encoder"]))
        files.update({"qae.ckpt": model.qae, "vqc.ckpt": model.vqc})
    elif kind == "qudit-raw":
        model, rep = train_vqc(X, train.y, _train_config(settings, seeds["model"]), kind,
                               layers=settings["layers"], perm_seed=settings["perm_seed"])
        files["vqc.ckpt"] = model
    else:
        model, rep = train_dense_nn(X, train.y, _train_config(settings, seeds["model"]))
        files["model.ckpt"] = model
    reports.append(rep)
    return files, reports, model.n_params


def cmd_train(args):
    settings = _settings(args)
    if settings.get("model") not in MODEL_KINDS:
        raise UsageError(f"--model must be one of {', '.join(MODEL_KINDS)}")
    if settings["grad_mode"] not in GRAD_MODES:
        raise UsageError(f"--grad-mode must be one of {', '.join(GRAD_MODES)}")
    train = _load_split(settings.get("data"), "train")
    out = Path(settings.get("out") or "run")
    files, reports, n_params = run_training(train, settings)
    out.mkdir(parents=True, exist_ok=True)
    for name, obj in files.items():
        checkpoint.save_model(out / name, obj)
    for rep in reports:
        (out / f"train_{rep.stage}.txt").write_text(rep.to_text(), encoding="utf-8", newline="\n")
    run = {
        "model": settings["model"],
        "n_params": n_params,
        "checkpoints": sorted(files),
        "features": int(train.X.shape[1]),
        "train_rows": len(train),
        "settings": {k: settings[k] for k in sorted(settings) if k not in ("out", "data")},
    }
    _write_json(out / "run.json", run)
    timing = {rep.stage: round(rep.duration, 3) for rep in reports}
    _write_json(out / "timing.json", timing)
    for rep in reports:
        log.info("%s: final loss %.6f after %d epochs (%.1fs)", rep.stage, rep.final_loss, len(rep.losses), rep.duration)
    print(f"trained {settings['model']} ({n_params} weights) -> {out}")
    return EXIT_OK


# -- evaluate ----------------------------------------------------------------

def load_run(run_dir):
    run_dir = Path(run_dir)
    run = _read_json(run_dir / "run.json")
    try:
        objs = {name: checkpoint.load_model(run_dir / name) for name in run["checkpoints"]}
    except KeyError as exc:
        raise InputError(f"{run_dir / 'run.json'}: missing field {exc}") from None
    kind = run["model"]
    if kind == "qae-qudit":
        model = QaeQuditClassifier(objs["qae.ckpt"], objs["vqc.ckpt"])
    elif kind == "qae-qubits":
        model = QaeQubitClassifier(objs["qae.ckpt"], objs["vqc.ckpt"])
    elif kind == "qudit-raw":
        model = objs["vqc.ckpt"]
    elif kind == "dense-nn":
        model = objs["model.ckpt"]
    else:
        raise InputError(f"{run_dir}: unknown model kind {kind!r}")
    return run, objs["scaler.ckpt"], model


def evaluate_model(model, scaler, ds):
    if ds.X.shape[1] != scaler.mean.size:
        raise ShapeError(f"data has {ds.X.shape[1]} features but the checkpoint expects {scaler.mean.size}")
    if not len(ds):
        raise InputError("evaluation data is empty")
    probs = model.predict_proba(scaler.transform(ds.X))
    return compute_metrics(confusion(predict_class(probs), ds.y))


def cmd_evaluate(args):
    settings = _settings(args)
    out = Path(settings.get("out") or "run")
    run, scaler, model = load_run(out)
    ds = _load_split(settings.get("data"), "test")
    report = evaluate_model(model, scaler, ds)
    table = format_table(report)
    header = f"model: {run['model']}  weights: {run['n_params']}\n"
    (out / "metrics.txt").write_text(header + table, encoding="utf-8", newline="\n")
    (out / "metrics.kv").write_text(
        f"model = {run['model']}\nweights = {run['n_params']}\n" + format_key_values(report),
        encoding="utf-8",
        newline="\n",
    )
    sys.stdout.write(header + format_table(report, color=use_color()))
    return EXIT_OK


# -- compare -----------------------------------------------------------------

def format_comparison(rows, color=False):
    head = f"{'Model':<14}{'Precision':>10}{'Recall':>10}{'F1':>10}{'Accuracy':>10}{'# weights':>11}"
    lines = [f"\033[1m{head}\033[0m" if color else head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{MODEL_LABELS.get(r['model'], r['model']):<14}{r['precision']:>10.2f}{r['recall']:>10.2f}"
            f"{r['f1']:>10.2f}{r['accuracy']:>10.2f}{r['weights']:>11,d}"
        )
    return "\n".join(lines) + "\n"


def collect_runs(run_dirs):
    rows = []
    for d in run_dirs:
        path = Path(d) / "metrics.kv"
        if not path.is_file():
            raise InputError(f"{path}: not found (run 'evaluate' first)")
        kv = parse_key_values(path.read_text(encoding="utf-8"))
        try:
            rows.append({
                "model": kv["model"],
                "precision": float(kv["macro_precision"]),
                "recall": float(kv["macro_recall"]),
                "f1": float(kv["macro_f1"]),
                "accuracy": float(kv["accuracy"]),
                "weights": int(kv["weights"]),
            })
        except (KeyError, ValueError) as exc:
            raise InputError(f"{path}: malformed metrics file ({exc})") from None
    order = {k: i for i, k in enumerate(MODEL_LABELS)}
    return sorted(rows, key=lambda r: order.get(r["model"], len(order)))


def cmd_compare(args):
    if len(args.runs) < 2:
        raise UsageError("compare needs at least two run directories")
    rows = collect_runs(args.runs)
    if args.out:
        Path(args.out).write_text(format_comparison(rows), encoding="utf-8", newline="\n")
    sys.stdout.write(format_comparison(rows, color=use_color()))
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="quditvqc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *flags):
        p.add_argument("--config", help="JSON file with settings; flags override it")
        p.add_argument("--out", help="output directory")
        p.add_argument("--data", help="data source")
        if "seed" in flags:
            p.add_argument("--seed", type=int, help="root seed (default 0)")

    p = sub.add_parser("prepare", help="window, extract features and split into train/test CSVs")
    common(p, "seed")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a model on prepared data")
    common(p, "seed")
    p.add_argument("--model", help=f"one of: {', '.join(MODEL_KINDS)}")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--layers", type=int, help="circuit layers (L for qudit models, m for qae-qubits)")
    p.add_argument("--perm-seed", dest="perm_seed", type=int, help="generator permutation seed for qudit-raw")
    p.add_argument("--grad-mode", dest="grad_mode", choices=GRAD_MODES)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained run on the test split")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="tabulate macro metrics of several evaluated runs")
    p.add_argument("runs", nargs="*", help="run directories")
    p.add_argument("--out", help="also write the table to this file")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"quditvqc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"quditvqc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ParseError, ShapeError, ConfigError, ValueError, OSError) as exc:
        print(f"quditvqc: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
