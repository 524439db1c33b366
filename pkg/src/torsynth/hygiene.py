"""Test-split hygiene.

:func:`split` tags its held-out side ``split:test``; tags survive slicing and
concatenation. Every training entry point calls :func:`assert_trainable`, which
refuses such data and, when an :func:`audit` block is active, records what
was trained on so the pipeline can prove afterwards that no held-out row was
ever seen by a generator or classifier.
"""
import contextvars
from contextlib import contextmanager

import numpy as np

_audit = contextvars.ContextVar("torsynth_training_audit", default=None)


class LeakageError(RuntimeError):
    pass


def assert_trainable(ds, path):
    if "split:test" in ds.tags:
        raise LeakageError(f"{path}: a dataset derived from the test split reached training")
    log = _audit.get()
    if log is not None:
        log.append({"path": path, "tags": sorted(ds.tags), "rows": ds.n_rows,
                    "features": ds.features})


@contextmanager
def audit():
    """Collect one record per training call made inside the block."""
    records = []
    token = _audit.set(records)
    try:
        yield records
    finally:
        _audit.reset(token)


def _row_keys(features):
    features = np.ascontiguousarray(features + 0.0)
    return {row.tobytes() for row in features}


def verify_no_leak(records, test_ds):
    """Check tags and row content of every audited training set against ``test_ds``.

    Returns a list of human-readable violations (empty when clean).
    """
    test_keys = _row_keys(test_ds.features)
    problems = []
    for rec in records:
        if "split:test" in rec["tags"]:
            problems.append(f"{rec['path']}: carries the split:test tag")
        shared = test_keys & _row_keys(rec["features"])
        if shared:
            problems.append(f"{rec['path']}: {len(shared)} rows identical to test rows")
    return problems
