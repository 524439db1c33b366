"""End-to-end experiment: preprocess, synthesize, train detectors, evaluate, audit.

Every random choice draws from a seed derived from ``config.seed`` and a
fixed per-stage key, so a run is reproducible and adding or removing a
generator from the grid does not perturb the others. Classifiers are always
scored on the real held-out split, whatever they were trained on.
"""
from dataclasses import dataclass, field

import numpy as np

from .. import dataset as D
from .._random import make_rng
from ..classifiers import gbt_train, rf_train
from ..dataset import concat
from ..generators import gan_train, smote_fit, vae_train
from ..generators.smote import SmoteConfig
from ..hygiene import LeakageError, audit, verify_no_leak
from ..metrics import class_balance, confusion, js_divergence, report_from_confusion, roc_auc
from ..privacy import mia_evaluate
from .config import CLASSIFIERS, GENERATORS
from .desk import make_desk_dataset
from .instrument import measure

# stage keys for seed derivation
_K_DOWNSAMPLE, _K_SPLIT, _K_GEN_TRAIN, _K_GENERATE, _K_MIA, _K_CLF, _K_MIX = 1, 2, 10, 20, 30, 40, 50


def stage_seed(master, *keys):
    """A 32-bit seed derived from the master seed and a stage key path."""
    return int(make_rng(master, *keys).integers(0, 2**32))


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class GeneratorResult:
    method: str
    train_seconds: float
    peak_bytes: int
    generation_seconds: float
    n_synthetic: int
    balance: dict
    fidelity: object  # FidelityReport
    mia: object  # MiaResult
    train_log: list = field(default_factory=list)
    synthetic: object = None  # FlowDataset, not serialized

    def to_dict(self):
        return {"method": self.method, "train_seconds": self.train_seconds,
                "peak_bytes": self.peak_bytes, "generation_seconds": self.generation_seconds,
                "n_synthetic": self.n_synthetic,
                "balance": {str(k): v for k, v in self.balance.items()},
                "fidelity": self.fidelity.to_dict(), "mia": self.mia.to_dict(),
                "train_log": self.train_log}


@dataclass
class CellResult:
    """One (data configuration x generator x classifier) evaluation on the real test split."""
    tag: str
    data_config: str
    generator: str  # None for real_only
    classifier: str
    n_train: int
    report: object  # ClassificationReport
    confusion: object  # ConfusionMatrix
    roc: object  # RocCurve
    train_seconds: float
    peak_bytes: int

    @property
    def auc(self):
        return self.roc.auc

    def to_dict(self):
        return {"tag": self.tag, "data_config": self.data_config, "generator": self.generator,
                "classifier": self.classifier, "n_train": self.n_train,
                "metrics": self.report.to_dict(), "confusion": self.confusion.to_dict(),
                "roc_auc": self.roc.auc, "train_seconds": self.train_seconds,
                "peak_bytes": self.peak_bytes}


@dataclass
class TradeoffReport:
    config: dict
    status: str = "running"
    failed_stage: str = None
    error: str = None
    data: dict = field(default_factory=dict)
    generators: dict = field(default_factory=dict)  # method -> GeneratorResult
    cells: list = field(default_factory=list)
    hygiene: dict = field(default_factory=dict)

    def cell(self, data_config, classifier, generator=None):
        for c in self.cells:
            if (c.data_config, c.classifier, c.generator) == (data_config, classifier, generator):
                return c
        raise KeyError((data_config, classifier, generator))

    def to_dict(self):
        return {"status": self.status, "failed_stage": self.failed_stage, "error": self.error,
                "config": self.config, "data": self.data,
                "generators": [self.generators[m].to_dict() for m in sorted(
                    self.generators, key=GENERATORS.index)],
                "cells": [c.to_dict() for c in self.cells], "hygiene": self.hygiene}


def cell_tag(data_config, classifier, generator=None):
    return "_".join(p for p in (data_config, generator, classifier) if p)


# -- stages ---------------------------------------------------------------

def load_input(cfg):
    if cfg.input is None:
        d = cfg.desk
        return make_desk_dataset(d.n_per_class, d.n_features, d.class_separation, d.seed)
    return D.load_csv(cfg.input, cfg.label_column)


def preprocess(cfg, ds=None):
    """Cleaning and balancing on the full table, then split; selection and scaling fit on train only."""
    p = cfg.preprocess
    ds = load_input(cfg) if ds is None else ds
    if p.dedup:
        ds = D.remove_duplicates(ds)
    if p.impute:
        ds = D.impute_missing(ds)
    if p.balance:
        ds = D.balance_downsample(ds, stage_seed(cfg.seed, _K_DOWNSAMPLE))
    train, test = D.split(ds, D.SplitSpec(p.test_fraction, stage_seed(cfg.seed, _K_SPLIT),
                                          p.stratified))
    if p.select:
        stats = D.compute_feature_stats(train)
        train = D.select_middle_correlation(train, stats, p.band_low, p.band_high,
                                            p.target_count)
        test = D.select_features(test, train.feature_names)
    train = D.normalize_minmax(train)
    test = D.apply_normalization(test, train.norm_params)
    return train, test


def train_generator(method, train, cfg):
    """Fit one generator; returns ``(model, log_records, seconds, peak_bytes)``."""
    prm = dict(cfg.generator_params[method])
    seed = stage_seed(cfg.seed, _K_GEN_TRAIN, GENERATORS.index(method))
    if method == "smote":
        def fit():
            return smote_fit(train, SmoteConfig(prm["k_neighbors"], seed)), None
    elif method == "vae":
        prm["hidden_sizes"] = tuple(prm["hidden_sizes"])

        def fit():
            return vae_train(train, seed=seed, **prm)
    else:
        prm["hidden_sizes"] = tuple(prm["hidden_sizes"])

        def fit():
            return gan_train(train, seed=seed, **prm)
    (model, log), seconds, peak = measure(fit)
    return model, ([] if log is None else log.to_list()), seconds, peak


def synthesize(model, n_rows, seed):
    """``n_rows`` synthetic rows, half of each class (class 0 takes the odd row)."""
    n1 = n_rows // 2
    return concat([model.generate(0, n_rows - n1, seed), model.generate(1, n1, seed)],
                  op="synthesize", params={"n_rows": int(n_rows), "seed": int(seed)})


def assemble_training_set(data_config, train, synth, seed):
    if data_config == "real_only":
        return train
    if data_config == "synthetic_only":
        return synth
    mixed = concat([train, synth], op="combine", params={"seed": int(seed)})
    order = make_rng(seed).permutation(mixed.n_rows)
    return mixed.take(order, "shuffle", {"seed": int(seed)})


def train_classifier(name, train, cfg):
    prm = cfg.classifier_params[name]
    seed = stage_seed(cfg.seed, _K_CLF, CLASSIFIERS.index(name))
    if name == "random_forest":
        return rf_train(train, seed=seed, **prm)
    return gbt_train(train, seed=seed, **prm)


def evaluate_classifier(model, test):
    """(ClassificationReport, ConfusionMatrix, RocCurve) on ``test``."""
    proba = model.predict_proba(test.features)
    cm = confusion(test.labels, (proba >= 0.5).astype(np.int64))
    return report_from_confusion(cm), cm, roc_auc(test.labels, proba)


def audit_synthetic(method, train, test, synth, cfg):
    """Fidelity against the real held-out rows and the distance attack on the synthetic set."""
    ev = cfg.evaluation
    fidelity = js_divergence(test, synth, ev.bins)
    n_members = min(train.n_rows, ev.mia_members or test.n_rows)
    rng = make_rng(cfg.seed, _K_MIA, GENERATORS.index(method))
    members = train.take(np.sort(rng.choice(train.n_rows, n_members, replace=False)),
                         "mia_members", {"n": int(n_members)})
    mia = mia_evaluate(members, test, synth, ev.bootstrap_resamples,
                       stage_seed(cfg.seed, _K_MIA, GENERATORS.index(method), 1),
                       ev.protected_below, ev.severe_from)
    return fidelity, mia


# -- orchestration --------------------------------------------------------

def run_experiment(cfg, write=True):
    """Run the whole grid; writes the report to ``cfg.output_dir`` when ``write``.

    A failing stage marks the report failed (and still writes it), then
    raises :class:`StageError` naming the stage.
    """
    from .report import emit_report

    rep = TradeoffReport(config=cfg.to_dict())
    stage = "preprocess"
    try:
        with audit() as records:
            train, test = preprocess(cfg)
            rep.data = {"n_train": train.n_rows, "n_test": test.n_rows,
                        "train_class_counts": list(train.class_counts()),
                        "test_class_counts": list(test.class_counts()),
                        "feature_names": list(train.feature_names)}
            need_synth = any(c != "real_only" for c in cfg.data_configs)
            n_synth = int(round(cfg.synthetic_ratio * train.n_rows))
            for method in (cfg.generators if need_synth else ()):
                stage = f"generate:{method}"
                model, log, seconds, peak = train_generator(method, train, cfg)
                synth, gen_seconds, _ = measure(lambda: synthesize(
                    model, n_synth, stage_seed(cfg.seed, _K_GENERATE, GENERATORS.index(method))))
                stage = f"audit:{method}"
                fidelity, mia = audit_synthetic(method, train, test, synth, cfg)
                rep.generators[method] = GeneratorResult(
                    method, seconds, peak, gen_seconds, synth.n_rows, class_balance(synth),
                    fidelity, mia, log, synth)
            for data_config in cfg.data_configs:
                sources = [None] if data_config == "real_only" else list(cfg.generators)
                for method in sources:
                    synth = None if method is None else rep.generators[method].synthetic
                    mix_seed = stage_seed(cfg.seed, _K_MIX, GENERATORS.index(method or "smote"))
                    ds = assemble_training_set(data_config, train, synth, mix_seed)
                    for clf in cfg.classifiers:
                        stage = f"train:{cell_tag(data_config, clf, method)}"
                        model, seconds, peak = measure(lambda: train_classifier(clf, ds, cfg))
                        stage = f"evaluate:{cell_tag(data_config, clf, method)}"
                        creport, cm, roc = evaluate_classifier(model, test)
                        rep.cells.append(CellResult(
                            cell_tag(data_config, clf, method), data_config, method, clf,
                            ds.n_rows, creport, cm, roc, seconds, peak))
            stage = "hygiene"
            problems = verify_no_leak(records, test)
            rep.hygiene = {"training_calls": [{"path": r["path"], "tags": r["tags"],
                                               "rows": r["rows"]} for r in records],
                           "problems": problems}
            if problems:
                raise LeakageError("; ".join(problems))
        rep.status = "complete"
    except Exception as exc:
        rep.status, rep.failed_stage, rep.error = "failed", stage, f"{type(exc).__name__}: {exc}"
        if write:
            try:
                emit_report(rep, cfg.output_dir)
            except OSError:
                pass
        raise StageError(stage, exc) from exc
    if write:
        stage = "report"
        try:
            emit_report(rep, cfg.output_dir)
        except OSError as exc:
            raise StageError(stage, exc) from exc
    return rep
