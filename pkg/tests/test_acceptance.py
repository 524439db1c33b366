"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria that the implementation does not meet are left failing on purpose;
run ``pytest tests/test_acceptance.py -s`` to watch the lines as they come, or
read the "acceptance criteria" section of the terminal summary.
"""
import json
import math
import os

import numpy as np
import pytest

from torsynth.classifiers import gbt_train, rf_train
from torsynth.dataset import concat
from torsynth.generators import (SmoteConfig, gan_train, generate_balanced, smote_fit,
                                 smote_generate, vae_train)
from torsynth.generators.gan import (build_gan, discriminator_loss, discriminator_step,
                                     generator_loss)
from torsynth.generators.vae import kl_divergence
from torsynth.hygiene import LeakageError
from torsynth.metrics import class_balance, report, roc_auc
from torsynth.netcore import AdamState, backward, forward, init_net, ACTIVATIONS
from torsynth.pipeline import ExperimentConfig, make_desk_dataset, preprocess, run_experiment
from torsynth.pipeline.experiment import synthesize
from torsynth.privacy import AT_SEVERE_RISK, PROTECTED, mia_evaluate, privacy_verdict
from conftest import record_criterion
from oracles import best_segment_residual, numeric_param_grads, pair_counting_auc, relative_error

SEEDS = range(5)
METHODS = ("smote", "vae", "gan")
CLASSIFIERS = ("random_forest", "boosted_trees")


@pytest.fixture(scope="module")
def desk_runs(tmp_path_factory):
    """Default-configuration runs on the desk dataset, one per seed (seed 0 is written)."""
    out = tmp_path_factory.mktemp("desk_run")
    runs = {}
    for seed in SEEDS:
        cfg = ExperimentConfig(seed=seed, output_dir=str(out / f"seed{seed}"))
        runs[seed] = run_experiment(cfg, write=(seed == 0))
    return runs


@pytest.fixture(scope="module")
def desk_split():
    return preprocess(ExperimentConfig())


def test_criterion_01_gradient_correctness():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(25):
        depth = int(rng.integers(1, 4))
        sizes = [int(v) for v in rng.integers(1, 6, size=depth + 1)]
        acts = [str(a) for a in rng.choice(ACTIVATIONS, size=depth)]
        net = init_net(sizes, acts, seed=trial)
        for layer in net.layers:
            layer.bias[:] = rng.uniform(-0.5, 0.5, layer.bias.shape)
        x = rng.normal(size=(3, sizes[0]))
        up = rng.normal(size=(3, sizes[-1]))
        grads, _ = backward(net, forward(net, x)[1], up)
        worst = max(worst, relative_error(grads, numeric_param_grads(net, x, up)))
    ok = record_criterion(1, "backprop vs central differences on 25 nets", worst < 1e-4,
                          f"worst relative error {worst:.2e}")
    assert ok


def test_criterion_02_auc_correctness():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 501))
        y = rng.integers(0, 2, n)
        y[:2] = (0, 1)
        s = np.round(rng.normal(size=n), 1)  # coarse rounding forces ties
        worst = max(worst, abs(roc_auc(y, s).auc - pair_counting_auc(y, s)))
    hand = roc_auc([1, 1, 0, 0], [0.4, 0.8, 0.1, 0.5]).auc
    ok = record_criterion(2, "AUC equals pair counting; hand case 0.75",
                          worst < 1e-9 and hand == 0.75, f"max diff {worst:.1e}, hand {hand}")
    assert ok


def test_criterion_03_metrics_parity():
    r = report([0, 0, 1, 1], [0, 1, 1, 1])
    got = (r.accuracy, r.precision[1], r.recall[1], r.f1[1])
    ok = record_criterion(3, "hand-case report exact", got == (0.75, 2 / 3, 1.0, 0.8),
                          f"accuracy, precision1, recall1, f1 = {got}")
    assert ok


def test_criterion_04_smote_geometry(desk_split):
    train, _ = desk_split
    minority = train.take(np.flatnonzero(train.labels == 1)[:200])
    majority = train.take(np.flatnonzero(train.labels == 0)[:20])
    ds = concat([minority, majority])
    out = smote_generate(ds, 1, 25, SmoteConfig(5, 11))
    rows = minority.features
    worst = max(best_segment_residual(s, rows) for s in out.features)
    ok = record_criterion(4, "SMOTE rows are convex combinations of two class rows",
                          worst < 1e-9 and (out.labels == 1).all(),
                          f"worst residual {worst:.1e} over 25 samples, 200-row class")
    assert ok


def test_criterion_05_vae_analytics(desk_runs):
    kl0 = float(kl_divergence(np.zeros((1, 1)), np.zeros((1, 1)))[0])
    kl1 = float(kl_divergence(np.ones((1, 1)), np.zeros((1, 1)))[0])
    total = np.array([r["total"] for r in desk_runs[0].generators["vae"].train_log])
    smooth = np.convolve(total, np.ones(5) / 5, mode="valid")
    ok = record_criterion(5, "KL values and decreasing VAE loss",
                          abs(kl0) < 1e-12 and abs(kl1 - 0.5) < 1e-12 and smooth[-1] < smooth[0],
                          f"KL(0,0)={kl0}, KL(1,0)={kl1}, smoothed loss {smooth[0]:.4f} -> "
                          f"{smooth[-1]:.4f}")
    assert ok


def test_criterion_06_gan_analytics():
    half = np.full(16, 0.5)
    d0, g0 = discriminator_loss(half, half), generator_loss(half)
    rng = np.random.default_rng(0)
    model = build_gan(4, noise_dim=3, hidden_sizes=(8,), seed=3)
    x_real = 0.8 + 0.1 * rng.random((32, 4))
    x_fake = 0.1 * rng.random((32, 4))
    y = np.r_[np.zeros(16, int), np.ones(16, int)]
    state = AdamState.for_net(model.discriminator, 1e-2)
    before = discriminator_step(model, x_real, y, x_fake, y, state)
    after = discriminator_step(model, x_real, y, x_fake, y, state)
    ln2 = math.log(2)
    ok = record_criterion(6, "D=0.5 gives ln 2; one D step lowers D loss",
                          abs(d0 - ln2) < 1e-9 and abs(g0 - ln2) < 1e-9 and after < before,
                          f"D {d0:.12f}, G {g0:.12f}, D loss {before:.4f} -> {after:.4f}")
    assert ok


def test_criterion_07_class_balance(desk_split):
    train, _ = desk_split
    models = {"smote": smote_fit(train),
              "vae": vae_train(train, epochs=10)[0],
              "gan": gan_train(train, epochs=10)[0]}
    balances = {m: class_balance(generate_balanced(model, 500, 3))
                for m, model in models.items()}
    counts = {m: tuple(generate_balanced(model, 500, 3).class_counts())
              for m, model in models.items()}
    ok = record_criterion(7, "500+500 request gives exactly 50/50",
                          all(b == {0: 0.5, 1: 0.5} for b in balances.values())
                          and all(c == (500, 500) for c in counts.values()),
                          f"counts {counts}")
    assert ok


def test_criterion_08_utility_parity(desk_runs):
    gaps, real = [], []
    for seed, rep in desk_runs.items():
        for clf in CLASSIFIERS:
            base = rep.cell("real_only", clf).report.accuracy
            real.append(base)
            for m in METHODS:
                acc = rep.cell("synthetic_only", clf, m).report.accuracy
                gaps.append((base - acc, m, clf, seed))
    worst = max(gaps)
    by_method = {m: max(g for g, mm, _, _ in gaps if mm == m) for m in METHODS}
    ok = record_criterion(8, "synthetic-only within 3 points of real; real >= 95%",
                          worst[0] <= 0.03 and min(real) >= 0.95,
                          f"min real {min(real):.4f}; worst gap per method "
                          + ", ".join(f"{m} {100 * g:.2f}pt" for m, g in by_method.items()))
    assert ok


def _memorizing_gan_auc(seed):
    train, test = preprocess(ExperimentConfig(seed=seed))
    rng = np.random.default_rng(seed)
    idx = np.r_[rng.choice(np.flatnonzero(train.labels == 0), 8, replace=False),
                rng.choice(np.flatnonzero(train.labels == 1), 8, replace=False)]
    members = train.take(np.sort(idx))
    # many epochs on 16 rows: the generator collapses onto its training records
    model, _ = gan_train(members, epochs=2000, batch_size=16, learning_rate=1e-3, seed=seed)
    synth = synthesize(model, 1000, seed)
    return mia_evaluate(members, test, synth, 200, seed)


def test_criterion_09_privacy_ordering(desk_runs):
    memo = [_memorizing_gan_auc(s) for s in SEEDS]
    smote = [rep.generators["smote"].mia for rep in desk_runs.values()]
    vae = [rep.generators["vae"].mia for rep in desk_runs.values()]
    memo_ok = all(r.auc >= 0.80 and r.verdict == AT_SEVERE_RISK for r in memo)
    smote_ok = all(r.auc < 0.65 and r.verdict == PROTECTED for r in smote)
    vae_ok = all(r.auc < 0.65 and r.verdict == PROTECTED for r in vae)

    def span(rs):
        return f"{min(r.auc for r in rs):.3f}-{max(r.auc for r in rs):.3f}"

    ok = record_criterion(9, "memorizing GAN severe, SMOTE and VAE protected over 5 seeds",
                          memo_ok and smote_ok and vae_ok,
                          f"GAN-memorizing {span(memo)} ({'ok' if memo_ok else 'no'}), "
                          f"SMOTE {span(smote)} ({'ok' if smote_ok else 'no'}), "
                          f"VAE {span(vae)} ({'ok' if vae_ok else 'no'})")
    assert ok


def test_criterion_10_mia_calibration():
    memo, obliv = [], []
    for seed in range(20):
        ds = make_desk_dataset(seed=100 + seed)
        idx = np.random.default_rng(seed).permutation(ds.n_rows)
        members, nonmembers, fresh = (ds.take(idx[k * 1000:(k + 1) * 1000]) for k in range(3))
        memo.append(mia_evaluate(members, nonmembers, members, 100, seed).auc)
        obliv.append(mia_evaluate(members, nonmembers, fresh, 100, seed).auc)
    ok = record_criterion(10, "memorizing AUC >= 0.95, oblivious in [0.45, 0.55] on 20 seeds",
                          min(memo) >= 0.95 and all(0.45 <= a <= 0.55 for a in obliv)
                          and all(m > o for m, o in zip(memo, obliv)),
                          f"memorizing min {min(memo):.3f}, oblivious "
                          f"{min(obliv):.3f}-{max(obliv):.3f}")
    assert ok


def test_criterion_11_verdict_function():
    got = [privacy_verdict(a) for a in (0.588, 0.612, 0.824)]
    ok = record_criterion(11, "reference AUCs map to their verdicts",
                          got == [PROTECTED, PROTECTED, AT_SEVERE_RISK], f"{got}")
    assert ok


def test_criterion_12_fidelity_ordering(desk_runs):
    rows, hits = [], 0
    for seed, rep in desk_runs.items():
        js = {m: rep.generators[m].fidelity.mean for m in METHODS}
        hit = js["gan"] <= js["vae"] <= js["smote"]
        hits += hit
        rows.append(f"s{seed}: gan {js['gan']:.4f} vae {js['vae']:.4f} smote {js['smote']:.4f}")
    ok = record_criterion(12, "JS(GAN) <= JS(VAE) <= JS(SMOTE) in >= 4 of 5 seeds", hits >= 4,
                          f"{hits}/5; " + "; ".join(rows))
    assert ok


def test_criterion_13_cost_ordering(desk_runs):
    time_ok = mem_ok = True
    for rep in desk_runs.values():
        g = rep.generators
        time_ok &= g["smote"].train_seconds < g["vae"].train_seconds < g["gan"].train_seconds
        mem_ok &= g["smote"].peak_bytes < g["vae"].peak_bytes < g["gan"].peak_bytes
    g = desk_runs[0].generators
    ok = record_criterion(13, "SMOTE < VAE < GAN in time and memory", time_ok and mem_ok,
                          "seed 0: seconds " + " / ".join(f"{g[m].train_seconds:.2f}"
                                                          for m in METHODS)
                          + ", bytes " + " / ".join(str(g[m].peak_bytes) for m in METHODS))
    assert ok


def _strip(obj):
    if isinstance(obj, dict):
        return {k: _strip(v) for k, v in obj.items()
                if not k.endswith("seconds") and k != "output_dir"}
    if isinstance(obj, list):
        return [_strip(v) for v in obj]
    return obj


def _read_outputs(out):
    files = {}
    for name in sorted(os.listdir(out)):
        with open(os.path.join(out, name), encoding="utf-8") as fh:
            text = fh.read()
        if name.endswith(".json"):
            files[name] = _strip(json.loads(text))
        elif name.endswith(".csv"):
            lines = [line.split(",") for line in text.splitlines()]
            keep = [i for i, h in enumerate(lines[0]) if not h.endswith("seconds")]
            files[name] = [[row[i] for i in keep] for row in lines]
    return files


def test_criterion_14_determinism(desk_runs, tmp_path):
    first_dir = desk_runs[0].config["output_dir"]
    run_experiment(ExperimentConfig(seed=0, output_dir=str(tmp_path)))
    a, b = _read_outputs(first_dir), _read_outputs(str(tmp_path))
    differing = sorted(n for n in a.keys() | b.keys() if a.get(n) != b.get(n))
    ok = record_criterion(14, "two seeded runs give identical JSON and CSVs (timing excluded)",
                          not differing and len(a) > 10,
                          f"{len(a)} files compared, differing: {differing or 'none'}")
    assert ok


def test_criterion_15_hygiene(desk_runs, desk_split):
    problems, calls = [], 0
    for rep in desk_runs.values():
        problems += rep.hygiene["problems"]
        calls += len(rep.hygiene["training_calls"])
        problems += [c["path"] for c in rep.hygiene["training_calls"]
                     if "split:test" in c["tags"]]
    _, test = desk_split
    refused = 0
    for trainer in (smote_fit, lambda d: vae_train(d, epochs=1), lambda d: gan_train(d, epochs=1),
                    lambda d: rf_train(d, n_trees=1), lambda d: gbt_train(d, n_rounds=1)):
        try:
            trainer(test)
        except LeakageError:
            refused += 1
    ok = record_criterion(15, "test split reached no training path",
                          not problems and refused == 5 and calls > 0,
                          f"{calls} audited training calls, {len(problems)} problems, "
                          f"{refused}/5 trainers refuse the test split")
    assert ok
