"""Flow-record datasets and the preprocessing chain applied before synthesis.

A :class:`FlowDataset` is an immutable bundle of a float64 feature matrix,
binary labels (0 = normal, 1 = Tor/abnormal) and column metadata. Every
preprocessing function returns a new dataset and appends one entry to its
``provenance`` chain, so an emitted CSV can always be traced back to the
operations (and seeds) that produced it.
"""
import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._random import make_rng

MISSING_SENTINELS = frozenset({"", "NaN", "nan"})


class DatasetError(ValueError):
    pass


class CsvParseError(DatasetError):
    """Raised for a malformed cell; carries the 1-based file line and the column name."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True, eq=False)
class FlowDataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list
    norm_params: np.ndarray | None = None
    provenance: tuple = ()
    tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 1 and features.size == 0:
            features = features.reshape(0, len(self.feature_names))
        if features.ndim != 2:
            raise DatasetError("features must be a 2-D array")
        labels = np.asarray(self.labels)
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise DatasetError("labels must be 0 or 1")
        labels = labels.astype(np.int64).reshape(-1)
        if labels.shape[0] != features.shape[0]:
            raise DatasetError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        names = [str(n) for n in self.feature_names]
        if len(names) != features.shape[1]:
            raise DatasetError(
                f"{features.shape[1]} feature columns but {len(names)} names")
        norm = self.norm_params
        if norm is not None:
            norm = np.asarray(norm, dtype=np.float64).reshape(-1, 2)
            if norm.shape[0] != features.shape[1]:
                raise DatasetError("norm_params must hold one (min, max) pair per feature")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "norm_params", norm)
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "tags", frozenset(self.tags))

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def nbytes(self):
        return self.features.nbytes + self.labels.nbytes

    def class_counts(self):
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def derive(self, op, params=None, **changes):
        """Copy with ``changes`` applied and ``op`` appended to the provenance chain."""
        entry = {"op": op, "params": dict(params or {})}
        return replace(self, provenance=self.provenance + (entry,), **changes)

    def take(self, index, op="take", params=None):
        index = np.asarray(index, dtype=np.int64)
        return self.derive(op, params, features=self.features[index],
                           labels=self.labels[index])

    def with_tags(self, *tags):
        return replace(self, tags=self.tags | set(tags))


def concat(datasets, op="concat", params=None):
    """Row-wise concatenation; tags are unioned so test-split ancestry survives merging."""
    datasets = list(datasets)
    if not datasets:
        raise DatasetError("nothing to concatenate")
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.feature_names != first.feature_names:
            raise DatasetError("cannot concatenate datasets with different feature columns")
    tags = frozenset().union(*(ds.tags for ds in datasets))
    prov = first.provenance + ({"op": op, "params": dict(params or {}),
                                "parts": [list(ds.provenance) for ds in datasets[1:]]},)
    return FlowDataset(
        features=np.vstack([ds.features for ds in datasets]),
        labels=np.concatenate([ds.labels for ds in datasets]),
        feature_names=first.feature_names,
        norm_params=first.norm_params,
        provenance=prov,
        tags=tags,
    )


# --------------------------------------------------------------------------- I/O

def _parse_cell(text, line, column):
    if text in MISSING_SENTINELS:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise CsvParseError(f"non-numeric cell {text!r}", line, column) from None
    if not math.isfinite(value):
        raise CsvParseError(f"non-finite cell {text!r}", line, column)
    return value


def load_csv(path, label_column="label"):
    """Read a header-first CSV of numeric flow features plus a 0/1 label column.

    Empty cells, ``NaN`` and ``nan`` load as missing values (NaN); any other
    non-numeric text raises :class:`CsvParseError` naming the line and column.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such dataset file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvParseError("empty file, header row missing") from None
        if label_column not in header:
            raise CsvParseError(f"label column {label_column!r} not in header", 1)
        label_idx = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise CsvParseError(
                    f"expected {len(header)} cells, got {len(record)}", line_no)
            raw = record[label_idx].strip()
            try:
                label = float(raw)
            except ValueError:
                label = None
            if label not in (0.0, 1.0):
                raise CsvParseError(f"label {raw!r} is not 0 or 1", line_no, label_column)
            labels.append(int(label))
            rows.append([_parse_cell(record[i].strip(), line_no, header[i])
                         for i in range(len(header)) if i != label_idx])
    features = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return FlowDataset(features, np.array(labels, dtype=np.int64), names,
                       provenance=({"op": "load_csv",
                                    "params": {"path": str(path), "label_column": label_column}},),
                       tags={"real"})


def sidecar_path(csv_path):
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + ".meta.json")


def save_csv(ds, path, label_column="label", sidecar=True):
    """Write ``ds`` as CSV (label last) and, optionally, its JSON metadata sidecar."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + [label_column])
        for row, label in zip(ds.features.tolist(), ds.labels.tolist()):
            writer.writerow([repr(v) for v in row] + [label])
    if sidecar:
        meta = {
            "format_version": 1,
            "feature_names": ds.feature_names,
            "label_column": label_column,
            "norm_params": None if ds.norm_params is None else ds.norm_params.tolist(),
            "provenance": list(ds.provenance),
            "tags": sorted(ds.tags),
        }
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return path


def load_dataset(path, label_column="label"):
    """:func:`load_csv` plus whatever the sidecar recorded (norm params, provenance, tags)."""
    ds = load_csv(path, label_column)
    meta_file = sidecar_path(path)
    if not meta_file.is_file():
        return ds
    meta = json.loads(meta_file.read_text(encoding="utf-8"))
    if meta.get("feature_names", ds.feature_names) != ds.feature_names:
        raise DatasetError(f"sidecar {meta_file} does not match the CSV header")
    return replace(ds,
                   norm_params=meta.get("norm_params"),
                   provenance=tuple(meta.get("provenance", ())) + ds.provenance,
                   tags=frozenset(meta.get("tags", ())) | ds.tags)


# ------------------------------------------------------------------ preprocessing

def remove_duplicates(ds):
    """Drop exact repeats of (feature vector, label), keeping first occurrences in order."""
    # +0.0 folds -0.0 onto 0.0 so the byte keys agree with float equality
    keyed = np.column_stack([ds.features + 0.0, ds.labels.astype(np.float64)])
    seen = set()
    keep = []
    for i, row in enumerate(keyed):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return ds.take(keep, "remove_duplicates", {"removed": ds.n_rows - len(keep)})


def impute_missing(ds):
    """Fill NaNs with the column median; columns with no observed value are dropped."""
    features = ds.features
    missing = np.isnan(features)
    if not missing.any():
        return ds.derive("impute_missing", {"filled": 0, "dropped": []})
    all_missing = missing.all(axis=0) if ds.n_rows else np.zeros(ds.n_features, bool)
    keep = np.flatnonzero(~all_missing)
    features = features[:, keep].copy()
    missing = missing[:, keep]
    medians = np.array([np.median(col[~m]) for col, m in zip(features.T, missing.T)])
    rows, cols = np.nonzero(missing)
    features[rows, cols] = medians[cols]
    dropped = [ds.feature_names[i] for i in np.flatnonzero(all_missing)]
    norm = None if ds.norm_params is None else ds.norm_params[keep]
    return ds.derive("impute_missing", {"filled": int(rows.size), "dropped": dropped},
                     features=features, feature_names=[ds.feature_names[i] for i in keep],
                     norm_params=norm)


@dataclass(frozen=True)
class FeatureStats:
    name: str
    min: float
    max: float
    mean: float
    variance: float
    pearson_corr_with_label: float


def pearson(x, y):
    """Pearson correlation; 0.0 whenever either series has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def compute_feature_stats(ds):
    if ds.n_rows == 0:
        raise DatasetError("cannot compute statistics of an empty dataset")
    if np.isnan(ds.features).any():
        raise DatasetError("impute missing values before computing statistics")
    stats = []
    for j, name in enumerate(ds.feature_names):
        col = ds.features[:, j]
        mean = float(col.mean())
        lo, hi = float(col.min()), float(col.max())
        stats.append(FeatureStats(
            name=name, min=lo, max=hi,
            mean=min(hi, max(lo, mean)),  # guards last-ulp drift on constant columns
            variance=float(col.var()),
            pearson_corr_with_label=pearson(col, ds.labels),
        ))
    return stats


def select_middle_correlation(ds, stats, band_low=0.05, band_high=0.75, target_count=None):
    """Keep features whose |Pearson r| with the label lies in [band_low, band_high].

    With ``target_count`` set and more candidates than that, the features
    closest to the band midpoint win (ties by column index). Surviving
    columns keep their original order.
    """
    if not 0.0 <= band_low < band_high <= 1.0:
        raise ValueError(f"need 0 <= band_low < band_high <= 1, got [{band_low}, {band_high}]")
    if len(stats) != ds.n_features:
        raise ValueError("one FeatureStats entry per feature required")
    by_name = {s.name: s for s in stats}
    corr = np.array([abs(by_name[n].pearson_corr_with_label) for n in ds.feature_names])
    candidates = [j for j in range(ds.n_features) if band_low <= corr[j] <= band_high]
    if target_count is not None and len(candidates) > target_count:
        mid = 0.5 * (band_low + band_high)
        candidates = sorted(candidates, key=lambda j: (abs(corr[j] - mid), j))[:target_count]
        candidates.sort()
    if not candidates:
        raise DatasetError(f"no feature has |corr| within [{band_low}, {band_high}]")
    keep = np.array(candidates, dtype=np.int64)
    norm = None if ds.norm_params is None else ds.norm_params[keep]
    return ds.derive(
        "select_middle_correlation",
        {"band_low": band_low, "band_high": band_high, "target_count": target_count},
        features=ds.features[:, keep], feature_names=[ds.feature_names[j] for j in keep],
        norm_params=norm)


def select_features(ds, names):
    """Project ``ds`` onto the named columns (used to mirror a selection onto held-out data)."""
    index = [ds.feature_names.index(n) for n in names]
    norm = None if ds.norm_params is None else ds.norm_params[index]
    return ds.derive("select_features", {"names": list(names)},
                     features=ds.features[:, index], feature_names=list(names),
                     norm_params=norm)


def _scale(features, params):
    lo, hi = params[:, 0], params[:, 1]
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = (features - lo) / safe
    out[:, span <= 0] = 0.0
    return out


def normalize_minmax(ds):
    """Fit per-feature min/max on ``ds`` and map it onto [0, 1]; constant columns become 0."""
    if np.isnan(ds.features).any():
        raise DatasetError("impute missing values before normalizing")
    if ds.n_rows == 0:
        params = np.zeros((ds.n_features, 2))
    else:
        params = np.column_stack([ds.features.min(axis=0), ds.features.max(axis=0)])
    out = np.clip(_scale(ds.features, params), 0.0, 1.0)
    return ds.derive("normalize_minmax", {"fit": True}, features=out, norm_params=params)


def apply_normalization(ds, norm_params):
    """Scale held-out data with train-fitted (min, max) pairs. No clipping: 12 on [0, 10] gives 1.2."""
    params = np.asarray(norm_params, dtype=np.float64).reshape(-1, 2)
    if params.shape[0] != ds.n_features:
        raise ValueError("norm_params do not match the feature count")
    return ds.derive("normalize_minmax", {"fit": False},
                     features=_scale(ds.features, params), norm_params=params)


def balance_downsample(ds, seed):
    """Subsample the majority class without replacement down to the minority count."""
    idx0 = np.flatnonzero(ds.labels == 0)
    idx1 = np.flatnonzero(ds.labels == 1)
    if idx0.size == 0 or idx1.size == 0:
        raise DatasetError("both classes must be present to balance")
    rng = make_rng(seed)
    n = min(idx0.size, idx1.size)
    keep0 = idx0 if idx0.size == n else rng.choice(idx0, size=n, replace=False)
    keep1 = idx1 if idx1.size == n else rng.choice(idx1, size=n, replace=False)
    keep = np.concatenate([keep0, keep1])
    keep = keep[rng.permutation(keep.size)]
    return ds.take(keep, "balance_downsample", {"seed": int(seed), "per_class": int(n)})


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie strictly in (0, 1), got {self.test_fraction}")


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def split(ds, spec=SplitSpec()):
    """Seeded (optionally stratified) train/test partition; both sides keep input row order."""
    rng = make_rng(spec.seed)
    groups = [np.flatnonzero(ds.labels == c) for c in (0, 1)] if spec.stratified \
        else [np.arange(ds.n_rows)]
    test_parts = []
    for group in groups:
        if group.size == 0:
            continue
        n_test = _round_half_up(group.size * spec.test_fraction)
        if n_test == 0 or n_test == group.size:
            raise DatasetError(
                f"test_fraction {spec.test_fraction} leaves an empty side for a group of "
                f"{group.size} rows")
        test_parts.append(group[rng.permutation(group.size)[:n_test]])
    is_test = np.zeros(ds.n_rows, dtype=bool)
    is_test[np.concatenate(test_parts)] = True
    params = {"test_fraction": spec.test_fraction, "seed": spec.seed,
              "stratified": spec.stratified}
    train = ds.take(np.flatnonzero(~is_test), "split", dict(params, side="train"))
    test = ds.take(np.flatnonzero(is_test), "split", dict(params, side="test"))
    return train.with_tags("split:train"), test.with_tags("split:test")
