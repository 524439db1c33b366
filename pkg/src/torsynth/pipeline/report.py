"""Write a TradeoffReport as JSON, CSV tables and a Markdown summary.

Files: ``report.json``, ``table1.csv`` (detector metrics per configuration),
``table2.csv`` (privacy), ``table3.csv`` (attack operating point),
``table4.csv`` (trade-off per generator), ``roc_<tag>.csv``,
``confusion_<tag>.csv``, ``balance_<tag>.csv`` and ``report.md``.
"""
import csv
import json
import math
import os

import numpy as np

from ..privacy import AT_SEVERE_RISK, PROTECTED
from .config import GENERATORS

TABLE1 = ["tag", "data_config", "generator", "classifier", "n_train", "accuracy", "precision",
          "recall", "f1", "macro_f1", "roc_auc", "train_seconds"]
TABLE2 = ["method", "mia_auc", "ci_low", "ci_high", "attack_accuracy", "attack_precision",
          "attack_recall", "verdict"]
TABLE3 = ["method", "threshold", "attack_accuracy", "attack_precision", "attack_recall",
          "n_members", "n_nonmembers"]
TABLE4 = ["method", "privacy_auc", "accuracy", "js_div", "train_seconds", "peak_bytes",
          "generation_seconds", "verdict", "balance_score"]


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            values = [row.get(h) for h in header] if isinstance(row, dict) else row
            w.writerow([_fmt(v) for v in values])


def _utility_accuracy(rep, method):
    """Mean test accuracy of detectors trained on this generator's data.

    Synthetic-only cells are preferred; combined cells are the fallback.
    """
    for config in ("synthetic_only", "combined"):
        accs = [c.report.accuracy for c in rep.cells
                if c.generator == method and c.data_config == config]
        if accs:
            return float(np.mean(accs))
    return None


def balance_score(verdict, accuracy_rank, fidelity_rank):
    """Free-text trade-off label (non-normative heuristic).

    Severe privacy risk is "Unbalanced" whatever the utility; a protected
    generator whose accuracy and fidelity ranks agree is "EXCELLENT"; all
    else is "Moderate".
    """
    if verdict == AT_SEVERE_RISK:
        return "Unbalanced"
    if verdict == PROTECTED and accuracy_rank == fidelity_rank:
        return "EXCELLENT"
    return "Moderate"


def table4_rows(rep):
    methods = [m for m in GENERATORS if m in rep.generators]
    acc = {m: _utility_accuracy(rep, m) for m in methods}
    js = {m: rep.generators[m].fidelity.mean for m in methods}
    acc_rank = {m: i for i, m in enumerate(sorted(
        methods, key=lambda m: (-(acc[m] if acc[m] is not None else -1.0), GENERATORS.index(m))))}
    js_rank = {m: i for i, m in enumerate(sorted(methods, key=lambda m: (js[m],
                                                                         GENERATORS.index(m))))}
    rows = []
    for m in methods:
        g = rep.generators[m]
        rows.append({"method": m, "privacy_auc": g.mia.auc, "accuracy": acc[m],
                     "js_div": js[m], "train_seconds": g.train_seconds,
                     "peak_bytes": g.peak_bytes, "generation_seconds": g.generation_seconds,
                     "verdict": g.mia.verdict,
                     "balance_score": balance_score(g.mia.verdict, acc_rank[m], js_rank[m])})
    return rows


def table1_rows(rep):
    return [{"tag": c.tag, "data_config": c.data_config, "generator": c.generator or "real",
             "classifier": c.classifier, "n_train": c.n_train,
             "accuracy": c.report.accuracy, "precision": c.report.precision[1],
             "recall": c.report.recall[1], "f1": c.report.f1[1],
             "macro_f1": c.report.macro_f1, "roc_auc": c.roc.auc,
             "train_seconds": c.train_seconds} for c in rep.cells]


def _md_table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for r in rows:
        cells = []
        for h in header:
            v = r.get(h)
            cells.append(f"{v:.4f}" if isinstance(v, float) else _fmt(v))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)


def render_markdown(rep):
    t2 = [rep.generators[m].mia.table_row(m) for m in GENERATORS if m in rep.generators]
    t3 = [dict(rep.generators[m].mia.to_dict(), method=m)
          for m in GENERATORS if m in rep.generators]
    parts = [f"# Trade-off report\n\nstatus: {rep.status}"]
    if rep.failed_stage:
        parts.append(f"failed stage: `{rep.failed_stage}` ({rep.error})")
    if rep.data:
        parts.append(f"train rows: {rep.data['n_train']}, test rows: {rep.data['n_test']}, "
                     f"features: {len(rep.data['feature_names'])}")
    parts += ["## Table 1: detector metrics on the real test split",
              _md_table(TABLE1, table1_rows(rep)),
              "## Table 2: membership inference", _md_table(TABLE2, t2),
              "## Table 3: attack operating point", _md_table(TABLE3, t3),
              "## Table 4: privacy, utility, fidelity and cost", _md_table(TABLE4, table4_rows(rep)),
              "The balance score is a heuristic label, not a normative measure."]
    if rep.hygiene:
        n = len(rep.hygiene.get("training_calls", []))
        problems = rep.hygiene.get("problems", [])
        parts.append(f"## Hygiene\n\n{n} training calls audited; "
                     + ("no test rows reached training." if not problems
                        else "violations: " + "; ".join(problems)))
    return "\n\n".join(parts) + "\n"


def emit_report(rep, out_dir):
    """Write every report artifact into ``out_dir``; returns the list of paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    with open(path("report.json"), "w", encoding="utf-8") as fh:
        json.dump(_clean(rep.to_dict()), fh, indent=2, sort_keys=True, allow_nan=False)
    _write_csv(path("table1.csv"), TABLE1, table1_rows(rep))
    methods = [m for m in GENERATORS if m in rep.generators]
    _write_csv(path("table2.csv"), TABLE2, [rep.generators[m].mia.table_row(m) for m in methods])
    _write_csv(path("table3.csv"), TABLE3, [dict(rep.generators[m].mia.to_dict(), method=m)
                                            for m in methods])
    _write_csv(path("table4.csv"), TABLE4, table4_rows(rep))
    for c in rep.cells:
        c.roc.to_csv(path(f"roc_{c.tag}.csv"))
        grid = c.confusion.as_grid()
        _write_csv(path(f"confusion_{c.tag}.csv"), ["true_label", "pred_0", "pred_1"],
                   [[0, *grid[0]], [1, *grid[1]]])
    balances = []
    if rep.data:
        n0, n1 = rep.data["train_class_counts"]
        balances.append(("real_train", n0, n1))
    for m in methods:
        syn = rep.generators[m]
        n1 = int(round(syn.balance[1] * syn.n_synthetic))
        balances.append((f"synthetic_{m}", syn.n_synthetic - n1, n1))
    for tag, n0, n1 in balances:
        total = n0 + n1
        _write_csv(path(f"balance_{tag}.csv"), ["label", "count", "fraction"],
                   [[0, n0, n0 / total], [1, n1, n1 / total]])
    with open(path("report.md"), "w", encoding="utf-8") as fh:
        fh.write(render_markdown(rep))
    return written
