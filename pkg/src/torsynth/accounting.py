"""Allocation accounting for the memory column of the trade-off report.

Training code registers the large arrays it holds (datasets, parameters,
optimizer moments, activation tapes, distance blocks) while they are live.
The ledger keeps the running total and its peak. Nothing is measured from the
OS, so the numbers are identical across platforms and runs.
"""
import contextvars
from contextlib import contextmanager

_current = contextvars.ContextVar("torsynth_memory_ledger", default=None)


class MemoryLedger:
    def __init__(self):
        self.live = 0
        self.peak = 0

    def alloc(self, nbytes):
        self.live += int(nbytes)
        self.peak = max(self.peak, self.live)

    def free(self, nbytes):
        self.live -= int(nbytes)


def _nbytes(objs):
    total = 0
    for obj in objs:
        if obj is None:
            continue
        if isinstance(obj, int):
            total += obj
        elif isinstance(obj, (list, tuple)):
            total += _nbytes(obj)
        else:
            total += obj.nbytes
    return total


@contextmanager
def tracking():
    """Activate a fresh ledger for the enclosed block and yield it."""
    ledger = MemoryLedger()
    token = _current.set(ledger)
    try:
        yield ledger
    finally:
        _current.reset(token)


@contextmanager
def live(*objs):
    """Count ``objs`` (arrays, nested lists of arrays, objects with ``nbytes`` or raw ints) as live."""
    ledger = _current.get()
    if ledger is None:
        yield
        return
    n = _nbytes(objs)
    ledger.alloc(n)
    try:
        yield
    finally:
        ledger.free(n)


def note(*objs):
    """Register a transient allocation: bumps the peak without staying live."""
    ledger = _current.get()
    if ledger is not None:
        n = _nbytes(objs)
        ledger.alloc(n)
        ledger.free(n)
