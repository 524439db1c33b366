"""Wall-clock and allocation-accounted memory for one pipeline stage.

Peak bytes is the largest sum of live array bytes the stage registered with
:mod:`torsynth.accounting` (datasets, parameters, optimizer moments, tapes,
scratch blocks). It is an estimate of working-set size, not OS RSS.
"""
import time

from .. import accounting


def measure(thunk):
    """Run ``thunk()``; return ``(value, seconds, peak_bytes)``."""
    with accounting.tracking() as ledger:
        start = time.perf_counter()
        value = thunk()
        seconds = time.perf_counter() - start
    return value, max(0.0, seconds), ledger.peak


def timing_and_memory(thunk):
    """``(seconds, peak_bytes)`` for one call of ``thunk``."""
    _, seconds, peak = measure(thunk)
    return seconds, peak
