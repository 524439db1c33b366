"""Classification metrics, ROC/AUC, class balance and per-feature Jensen-Shannon fidelity.

Label 1 (Tor/abnormal) is the positive class throughout.
"""
import csv
from dataclasses import asdict, dataclass

import numpy as np


def _binary(name, values):
    arr = np.asarray(values).reshape(-1)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self):
        return self.tn + self.fp + self.fn + self.tp

    def as_grid(self):
        """Rows are true labels, columns predicted labels (0 first)."""
        return [[self.tn, self.fp], [self.fn, self.tp]]

    def to_dict(self):
        return asdict(self)


def confusion(y_true, y_pred):
    y_true = _binary("y_true", y_true)
    y_pred = _binary("y_pred", y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.size} labels vs {y_pred.size} predictions")
    return ConfusionMatrix(
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
    )


def _ratio(num, den):
    return num / den if den else 0.0


def _f1(p, r):
    return 2.0 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    precision: tuple  # per class (0, 1)
    recall: tuple
    f1: tuple
    support: tuple
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def report_from_confusion(cm):
    """Every metric of the report, derived from the four confusion counts alone."""
    if cm.total == 0:
        raise ValueError("cannot report on an empty evaluation set")
    prec1, rec1 = _ratio(cm.tp, cm.tp + cm.fp), _ratio(cm.tp, cm.tp + cm.fn)
    prec0, rec0 = _ratio(cm.tn, cm.tn + cm.fn), _ratio(cm.tn, cm.tn + cm.fp)
    f0, f1 = _f1(prec0, rec0), _f1(prec1, rec1)
    return ClassificationReport(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=(prec0, prec1),
        recall=(rec0, rec1),
        f1=(f0, f1),
        support=(cm.tn + cm.fp, cm.fn + cm.tp),
        macro_precision=(prec0 + prec1) / 2.0,
        macro_recall=(rec0 + rec1) / 2.0,
        macro_f1=(f0 + f1) / 2.0,
    )


def report(y_true, y_pred):
    return report_from_confusion(confusion(y_true, y_pred))


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # first entry is +inf (the empty-prediction point)
    auc: float

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["fpr", "tpr", "threshold"])
            for f, t, th in zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()):
                w.writerow([repr(f), repr(t), repr(th)])


def roc_auc(y_true, scores):
    """ROC curve with one point per distinct score, and its trapezoidal area.

    Thresholds sweep the distinct scores from high to low; a row is called
    positive when its score is >= the threshold, so tied scores move
    together and contribute half-credit to the area.
    """
    y = _binary("y_true", y_true)
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC AUC is undefined when y_true holds a single class")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), y.size - 1]
    tps = np.cumsum(y_sorted)[last_of_group]
    fps = (last_of_group + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    thresholds = np.r_[np.inf, s_sorted[last_of_group]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


def class_balance(ds):
    """Fraction of rows per label, e.g. ``{0: 0.5, 1: 0.5}``."""
    labels = ds.labels if hasattr(ds, "labels") else np.asarray(ds)
    if labels.size == 0:
        raise ValueError("class balance of an empty dataset is undefined")
    n1 = int(np.sum(labels == 1))
    return {0: (labels.size - n1) / labels.size, 1: n1 / labels.size}


@dataclass(frozen=True)
class FidelityReport:
    per_feature: dict  # feature name -> JS divergence (bits)
    mean: float
    bins: int

    def to_dict(self):
        return {"per_feature": dict(self.per_feature), "mean": self.mean, "bins": self.bins}


def js_from_histograms(p, q):
    """Base-2 Jensen-Shannon divergence of two (unnormalised) histograms; in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)

    def kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(a[nz] / m[nz])))

    return min(1.0, max(0.0, 0.5 * kl(p) + 0.5 * kl(q)))


def js_divergence(real, synth, bins=50):
    """Per-feature JS divergence between two datasets.

    Each feature is histogrammed over the pooled min-max range of both
    samples into ``bins`` equal-width bins; one pseudo-count is added to
    every bin before normalising.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if real.n_features != synth.n_features:
        raise ValueError("datasets differ in feature count")
    if real.n_rows == 0 or synth.n_rows == 0:
        raise ValueError("JS divergence needs non-empty datasets")
    per_feature = {}
    for j, name in enumerate(real.feature_names):
        a, b = real.features[:, j], synth.features[:, j]
        lo = min(a.min(), b.min())
        hi = max(a.max(), b.max())
        if hi <= lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        ha = np.histogram(a, edges)[0] + 1.0
        hb = np.histogram(b, edges)[0] + 1.0
        per_feature[name] = js_from_histograms(ha, hb)
    return FidelityReport(per_feature, float(np.mean(list(per_feature.values()))), int(bins))
