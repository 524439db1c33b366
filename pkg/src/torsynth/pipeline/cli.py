"""Command line: ``torsynth <subcommand> [--config FILE] [--seed N] [--output-dir DIR]``.

Stages communicate through files in the output directory:

    mkdata      desk dataset CSV (``--out``)
    preprocess  train.csv, test.csv (+ .meta.json sidecars)
    generate    models/gen_<method>.json, synthetic_<method>.csv
    train       models/clf_<tag>.json for every configured cell
    evaluate    metrics.json, roc_<tag>.csv, confusion_<tag>.csv
    audit       audit.json (fidelity, membership inference, hygiene)
    run         the whole pipeline in one process, plus the full report

Exit status: 0 success, 2 configuration error, 3 stage failure.
"""
import argparse
import json
import os
import sys
from dataclasses import replace

from .. import dataset as D
from ..classifiers import model_from_dict as classifier_from_dict
from ..generators import TrainLog, save_model
from ..hygiene import LeakageError, verify_no_leak
from .config import GENERATORS, ConfigError, ExperimentConfig, load_config
from .desk import make_desk_dataset
from .experiment import (_K_GENERATE, _K_MIX, StageError, assemble_training_set, audit_synthetic,
                         cell_tag, evaluate_classifier, preprocess, run_experiment, stage_seed,
                         synthesize, train_classifier, train_generator)
from .report import _clean

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3


def _out(cfg, *parts):
    return os.path.join(cfg.output_dir, *parts)


def _need(path, stage):
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path} is missing; run '{stage}' first")
    return path


def _dump(obj, path):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)


def cmd_mkdata(cfg, args):
    d = cfg.desk
    ds = make_desk_dataset(d.n_per_class, d.n_features, d.class_separation,
                           args.seed if args.seed is not None else d.seed)
    out = args.out or _out(cfg, "desk.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    D.save_csv(ds, out, cfg.label_column)
    print(f"wrote {ds.n_rows} rows x {ds.n_features} features to {out}")


def cmd_preprocess(cfg, args):
    train, test = preprocess(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    D.save_csv(train, _out(cfg, "train.csv"), cfg.label_column)
    D.save_csv(test, _out(cfg, "test.csv"), cfg.label_column)
    print(f"train {train.n_rows} rows, test {test.n_rows} rows, {train.n_features} features")


def _load_split(cfg, side):
    return D.load_dataset(_need(_out(cfg, f"{side}.csv"), "preprocess"), cfg.label_column)


def cmd_generate(cfg, args):
    train = _load_split(cfg, "train")
    n_synth = int(round(cfg.synthetic_ratio * train.n_rows))
    _mkdirs(cfg)
    for method in cfg.generators:
        model, log, seconds, peak = train_generator(method, train, cfg)
        save_model(model, _out(cfg, "models", f"gen_{method}.json"), TrainLog(log))
        synth = synthesize(model, n_synth, stage_seed(cfg.seed, _K_GENERATE,
                                                      GENERATORS.index(method)))
        D.save_csv(synth, _out(cfg, f"synthetic_{method}.csv"), cfg.label_column)
        print(f"{method}: trained in {seconds:.2f}s (peak {peak} bytes), {synth.n_rows} rows")


def _mkdirs(cfg):
    os.makedirs(_out(cfg, "models"), exist_ok=True)


def _load_synthetic(cfg, method):
    return D.load_dataset(_need(_out(cfg, f"synthetic_{method}.csv"), "generate"),
                          cfg.label_column)


def _cells(cfg):
    for data_config in cfg.data_configs:
        for method in ([None] if data_config == "real_only" else cfg.generators):
            for clf in cfg.classifiers:
                yield data_config, method, clf


def cmd_train(cfg, args):
    train = _load_split(cfg, "train")
    _mkdirs(cfg)
    for data_config, method, clf in _cells(cfg):
        synth = None if method is None else _load_synthetic(cfg, method)
        ds = assemble_training_set(data_config, train, synth,
                                   stage_seed(cfg.seed, _K_MIX, GENERATORS.index(method or "smote")))
        model = train_classifier(clf, ds, cfg)
        tag = cell_tag(data_config, clf, method)
        _dump(model.to_dict(), _out(cfg, "models", f"clf_{tag}.json"))
        print(f"{tag}: trained on {ds.n_rows} rows")


def cmd_evaluate(cfg, args):
    test = _load_split(cfg, "test")
    results = {}
    for data_config, method, clf in _cells(cfg):
        tag = cell_tag(data_config, clf, method)
        with open(_need(_out(cfg, "models", f"clf_{tag}.json"), "train"), encoding="utf-8") as fh:
            model = classifier_from_dict(json.load(fh))
        rep, cm, roc = evaluate_classifier(model, test)
        roc.to_csv(_out(cfg, f"roc_{tag}.csv"))
        grid = cm.as_grid()
        with open(_out(cfg, f"confusion_{tag}.csv"), "w", encoding="utf-8") as fh:
            fh.write("true_label,pred_0,pred_1\n")
            fh.write(f"0,{grid[0][0]},{grid[0][1]}\n1,{grid[1][0]},{grid[1][1]}\n")
        results[tag] = {"metrics": rep.to_dict(), "confusion": cm.to_dict(), "roc_auc": roc.auc}
        print(f"{tag}: accuracy {rep.accuracy:.4f}, AUC {roc.auc:.4f}")
    _dump(results, _out(cfg, "metrics.json"))


def cmd_audit(cfg, args):
    train, test = _load_split(cfg, "train"), _load_split(cfg, "test")
    records = [{"path": "train.csv", "tags": sorted(train.tags), "rows": train.n_rows,
                "features": train.features}]
    out = {"generators": {}}
    for method in cfg.generators:
        path = _out(cfg, f"synthetic_{method}.csv")
        if not os.path.exists(path):
            continue
        synth = _load_synthetic(cfg, method)
        records.append({"path": os.path.basename(path), "tags": sorted(synth.tags),
                        "rows": synth.n_rows, "features": synth.features})
        fidelity, mia = audit_synthetic(method, train, test, synth, cfg)
        out["generators"][method] = {"fidelity": fidelity.to_dict(), "mia": mia.to_dict()}
        print(f"{method}: mean JS {fidelity.mean:.4f}, MIA AUC {mia.auc:.4f} ({mia.verdict})")
    problems = verify_no_leak(records, test)
    out["hygiene"] = {"checked": [r["path"] for r in records], "problems": problems}
    _dump(out, _out(cfg, "audit.json"))
    if problems:
        raise LeakageError("; ".join(problems))
    print(f"hygiene: {len(records)} training inputs checked, no test rows found")


def cmd_run(cfg, args):
    rep = run_experiment(cfg)
    print(f"report written to {cfg.output_dir} ({len(rep.cells)} evaluations)")


HELP = {"mkdata": "write the desk dataset as CSV",
        "preprocess": "clean, balance, split, select and normalize",
        "generate": "train generators and write synthetic sets",
        "train": "train detectors for every data configuration",
        "evaluate": "score detectors on the real test split",
        "audit": "fidelity, membership inference and hygiene checks",
        "run": "full pipeline and trade-off report"}

COMMANDS = {"mkdata": cmd_mkdata, "preprocess": cmd_preprocess, "generate": cmd_generate,
            "train": cmd_train, "evaluate": cmd_evaluate, "audit": cmd_audit, "run": cmd_run}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="torsynth", description="Synthetic flow data for Tor detection: privacy, utility, "
                                     "fidelity trade-off experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="experiment JSON (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--output-dir", help="override config output_dir")
        if name == "mkdata":
            p.add_argument("--out", help="CSV path (default <output_dir>/desk.csv)")
    return parser


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None and args.command != "mkdata":
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        changes["seed"] = args.seed
    if args.output_dir:
        changes["output_dir"] = args.output_dir
    if changes:
        cfg = replace(cfg, **changes)
    if cfg.input is not None and args.command in ("preprocess", "run") \
            and not os.path.exists(cfg.input):
        raise ConfigError(f"input file {cfg.input} does not exist")
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except Exception as exc:
        print(f"error: stage '{args.command}' failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
