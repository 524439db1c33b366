"""Membership-inference evaluation of synthetic data.

The attacker sees only the synthetic set. For each candidate real record it
measures the Euclidean distance to the closest synthetic row; a generator
that memorised its training rows leaves synthetic points sitting on top of
them, so small distances are evidence of membership. Scores are negated
distances (higher means "member").
"""
from dataclasses import asdict, dataclass

import numpy as np

from . import accounting
from ._random import make_rng
from .metrics import roc_auc

PROTECTED = "PROTECTED"
AT_RISK = "AT RISK"
AT_SEVERE_RISK = "AT SEVERE RISK"

# AUC cut points: below PROTECTED_BELOW is protected, at or above SEVERE_FROM is severe
PROTECTED_BELOW = 0.65
SEVERE_FROM = 0.80

_BLOCK = 256


def privacy_verdict(auc, protected_below=PROTECTED_BELOW, severe_from=SEVERE_FROM):
    if not 0.0 <= auc <= 1.0:
        raise ValueError(f"AUC must lie in [0, 1], got {auc}")
    if auc < protected_below:
        return PROTECTED
    if auc >= severe_from:
        return AT_SEVERE_RISK
    return AT_RISK


def mia_scores(members, nonmembers, synth):
    """Attack scores ``-min_s ||q - s||`` for members then non-members.

    Returns ``(member_scores, nonmember_scores)``.
    """
    if synth.n_rows == 0:
        raise ValueError("synthetic set is empty")
    return (-nearest_distances(members.features, synth.features),
            -nearest_distances(nonmembers.features, synth.features))


def nearest_distances(queries, reference):
    """Euclidean distance from each query row to its closest reference row.

    The Gram-matrix expansion shortlists candidates; the reported distance is
    ``||q - s||`` evaluated directly, so an exact copy scores exactly 0.
    """
    q = np.asarray(queries, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    if r.shape[0] == 0:
        raise ValueError("reference (synthetic) set is empty")
    if q.shape[1] != r.shape[1]:
        raise ValueError("query and synthetic rows differ in feature count")
    r_sq = np.einsum("ij,ij->i", r, r)
    out = np.empty(q.shape[0])
    for start in range(0, q.shape[0], _BLOCK):
        block = q[start:start + _BLOCK]
        d2 = np.einsum("ij,ij->i", block, block)[:, None] + r_sq[None, :] - 2.0 * block @ r.T
        accounting.note(d2)
        # shortlist a few candidates to absorb rounding in the expansion
        k = min(4, r.shape[0])
        cand = np.argpartition(d2, k - 1, axis=1)[:, :k]
        diff = block[:, None, :] - r[cand]
        out[start:start + _BLOCK] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1)
    return out


@dataclass(frozen=True)
class MiaResult:
    auc: float
    ci_low: float
    ci_high: float
    threshold: float
    attack_accuracy: float
    attack_precision: float
    attack_recall: float
    verdict: str
    n_members: int
    n_nonmembers: int
    bootstrap_resamples: int
    seed: int

    def to_dict(self):
        return asdict(self)

    def table_row(self, method):
        """The flat row written to the privacy tables."""
        return {"method": method, "mia_auc": self.auc, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "attack_accuracy": self.attack_accuracy,
                "attack_precision": self.attack_precision, "attack_recall": self.attack_recall,
                "verdict": self.verdict}


def youden_threshold(curve):
    """Threshold maximising TPR - FPR; ties go to the lower threshold."""
    j = curve.tpr - curve.fpr
    best = np.flatnonzero(j == j.max())
    # thresholds run high -> low along the curve, so the last tie is the lowest
    return float(curve.thresholds[best[-1]])


def mia_evaluate(members, nonmembers, synth, bootstrap_resamples=1000, seed=0,
                 protected_below=PROTECTED_BELOW, severe_from=SEVERE_FROM):
    """Run the distance attack and summarise it as AUC, bootstrap CI, operating point and verdict."""
    if bootstrap_resamples < 100:
        raise ValueError("at least 100 bootstrap resamples are required for a 95% interval")
    if members.n_rows == 0 or nonmembers.n_rows == 0:
        raise ValueError("member and non-member query sets must both be non-empty")
    s_mem, s_non = mia_scores(members, nonmembers, synth)
    return evaluate_scores(s_mem, s_non, bootstrap_resamples, seed, protected_below, severe_from)


def evaluate_scores(member_scores, nonmember_scores, bootstrap_resamples=1000, seed=0,
                    protected_below=PROTECTED_BELOW, severe_from=SEVERE_FROM):
    """Attack summary from precomputed scores (any attack that ranks members higher)."""
    s_mem = np.asarray(member_scores, dtype=np.float64)
    s_non = np.asarray(nonmember_scores, dtype=np.float64)
    scores = np.r_[s_mem, s_non]
    truth = np.r_[np.ones(s_mem.size, dtype=np.int64), np.zeros(s_non.size, dtype=np.int64)]
    curve = roc_auc(truth, scores)

    rng = make_rng(seed)
    n = scores.size
    boot = []
    for _ in range(bootstrap_resamples):
        idx = rng.integers(0, n, size=n)
        t = truth[idx]
        if t.min() == t.max():
            continue
        boot.append(roc_auc(t, scores[idx]).auc)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    # a percentile interval can miss the point estimate on tiny or degenerate samples
    lo, hi = min(lo, curve.auc), max(hi, curve.auc)

    thr = youden_threshold(curve)
    pred = (scores >= thr).astype(np.int64)
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    tn = int(np.sum((pred == 0) & (truth == 0)))
    return MiaResult(
        auc=curve.auc, ci_low=float(lo), ci_high=float(hi), threshold=thr,
        attack_accuracy=(tp + tn) / n,
        attack_precision=tp / (tp + fp) if tp + fp else 0.0,
        attack_recall=tp / (tp + fn) if tp + fn else 0.0,
        verdict=privacy_verdict(curve.auc, protected_below, severe_from),
        n_members=int(s_mem.size), n_nonmembers=int(s_non.size),
        bootstrap_resamples=int(bootstrap_resamples), seed=int(seed),
    )
