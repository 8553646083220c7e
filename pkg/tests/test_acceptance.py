"""Acceptance criteria.  Each test records one PASS/FAIL line, repeated in the
terminal summary under "acceptance criteria".

Instance generators use fixed seeds chosen before any result was seen.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np

from oracles import (
    auc_pair_count,
    best_medoid_cost,
    best_two_partition_hamming,
    finite_difference_grad,
    single_linkage_merges,
)
from zsldx.cluster import gmm_fit, kernels, kmeans_fit, kmodes_fit, linkage_tree, pam_fit
from zsldx.ingest import ablation_cohort, planted_cohort, save_embeddings
from zsldx.metrics import f1_from, roc_auc
from zsldx.pipeline import PipelineConfig, run_ablation, run_zsl
from zsldx.segeval import FocalParams, focal_loss, seg_metrics
from zsldx.siamese import _batch_loss, contrastive_grad


def test_c01_f1_identity_against_published_rows(verdict):
    zsl = f1_from(0.8094, 0.8463)
    pam = f1_from(0.8166, 0.8396)
    ok = abs(zsl - 0.8274) <= 1e-4 and abs(pam - 0.8279) <= 1e-4
    verdict(1, "f1 identity on published rows", ok, f"zsl {zsl:.6f} vs 0.8274, pam {pam:.6f} vs 0.8279")


def test_c02_gradient_oracle(verdict):
    rng = np.random.default_rng(0)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(100):
        d, p, n = (int(v) for v in rng.integers(1, 7, size=3))
        W = rng.normal(size=(p, d))
        x1, x2 = rng.normal(size=(n, d)), rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        m = float(rng.uniform(0.5, 4.0))
        G = contrastive_grad(W, x1, x2, y, m)
        FD = finite_difference_grad(lambda V: _batch_loss(V, x1, x2, y, m), W, step=1e-5)
        den = max(np.linalg.norm(G), np.linalg.norm(FD), 1e-12)
        worst = max(worst, float(np.linalg.norm(G - FD) / den))
    secs = time.perf_counter() - t0
    verdict(2, "contrastive gradient vs central differences", worst < 1e-4 and secs < 10,
            f"100 instances, worst relative error {worst:.2e}, {secs:.1f}s")


def _points(rng, n, d):
    if rng.random() < 0.5:
        return rng.integers(0, 4, size=(n, d)).astype(float)  # many exact ties
    return rng.normal(size=(n, d))


def _agg_single_linkage():
    rng = np.random.default_rng(0)
    bad = 0
    for _ in range(200):
        n, d = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        X = _points(rng, n, d)
        want = single_linkage_merges(X.tolist())
        for backend in kernels.available_backends():
            got = linkage_tree(X, "single", backend=backend).merges
            same = all((a, b, c) == (a2, b2, c2) and math.isclose(h, h2, rel_tol=1e-12, abs_tol=1e-12)
                       for (a, b, h, c), (a2, b2, h2, c2) in zip(got, want))
            bad += not same
    return bad == 0, f"agg: 200 instances n<=8 on {'+'.join(kernels.available_backends())}, {bad} mismatches"


def _pam_exhaustive():
    rng = np.random.default_rng(0)
    misses = []
    for i in range(100):
        k = int(rng.integers(1, 4))
        n = int(rng.integers(k, 11))
        X = rng.normal(size=(n, 2))
        got = pam_fit(X, k).cost_or_loglik
        best = best_medoid_cost(X.tolist(), k)
        if not math.isclose(got, best, rel_tol=1e-12, abs_tol=1e-12):
            misses.append((i, n, k, round(got - best, 6)))
    return not misses, f"pam: 100 instances n<=10 k<=3, {len(misses)} above optimum {misses}"


def _kmodes_exhaustive():
    rng = np.random.default_rng(0)
    misses = []
    for i in range(100):
        n, d = int(rng.integers(2, 9)), int(rng.integers(2, 7))
        B = rng.integers(0, 2, size=(n, d))
        got = kmodes_fit(B, 2, seed=0).cost_or_loglik
        best = best_two_partition_hamming(B.tolist())
        if got != best:
            misses.append((i, n, d, got - best))
    return not misses, f"kmodes: 100 instances n<=8, {len(misses)} above optimum {misses}"


def test_c03_clustering_oracles(verdict):
    t0 = time.perf_counter()
    parts = [_agg_single_linkage(), _pam_exhaustive(), _kmodes_exhaustive()]
    secs = time.perf_counter() - t0
    ok = all(p[0] for p in parts) and secs < 60
    verdict(3, "clustering vs exhaustive oracles", ok,
            "; ".join(("ok " if p[0] else "MISS ") + p[1] for p in parts) + f"; {secs:.1f}s")


def _blobs(rng):
    k = int(rng.integers(2, 6))
    centers = rng.normal(size=(k, 3)) * float(rng.uniform(0.5, 6))
    return np.vstack([c + rng.normal(size=(int(rng.integers(5, 40)), 3)) for c in centers])


def test_c04_monotone_traces(verdict):
    rng = np.random.default_rng(0)
    worst_km, worst_gmm = 0.0, 0.0
    t0 = time.perf_counter()
    for seed in range(100):
        X = _blobs(rng)
        k = int(rng.integers(1, 6))
        km = np.array(kmeans_fit(X, k, seed=seed).extra["objective_trace"])
        worst_km = max(worst_km, float(np.max(np.diff(km), initial=0.0)))
        ll = np.array(gmm_fit(X, k, seed=seed).extra["model"].log_likelihood_trace)
        worst_gmm = max(worst_gmm, float(np.max(-np.diff(ll), initial=0.0)))
    secs = time.perf_counter() - t0
    ok = worst_km <= 1e-9 and worst_gmm <= 1e-9 and secs < 30
    verdict(4, "kmeans objective non-increasing, gmm log-likelihood non-decreasing", ok,
            f"100 runs each, worst kmeans rise {worst_km:.1e}, worst gmm drop {worst_gmm:.1e}, {secs:.1f}s")


def test_c05_auc_oracle(verdict):
    rng = np.random.default_rng(0)
    cases = [([0.3] * 10, [0, 1] * 5), ([0.9, 0.8, 0.7, 0.2, 0.1], [1, 1, 1, 0, 0])]
    while len(cases) < 500:
        n = int(rng.integers(2, 51))
        y = rng.integers(0, 2, size=n)
        y[rng.choice(n, size=2, replace=False)] = [0, 1]
        kind = rng.integers(3)
        s = rng.random(n) if kind == 0 else rng.integers(0, 5, size=n) / 4.0
        if kind == 2:
            s = np.where(y == 1, 1.0 + rng.random(n), rng.random(n))
        cases.append((s.tolist(), y.tolist()))
    bad = sum(roc_auc(s, y) != auc_pair_count(s, y) for s, y in cases)
    tied, separated = roc_auc(*cases[0]), roc_auc(*cases[1])
    ok = bad == 0 and tied == 0.5 and separated == 1.0
    verdict(5, "rank AUC equals pair counting", ok,
            f"500 sets n<=50, {bad} mismatches, all-tied {tied}, separated {separated}")


def test_c06_focal_identities(verdict):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        truth = rng.integers(0, 2, size=(5, 6))
        prob = rng.uniform(1e-3, 1 - 1e-3, size=(5, 6))
        bce = float(np.mean(-(truth * np.log(prob) + (1 - truth) * np.log(1 - prob))))
        worst = max(worst, abs(focal_loss(truth, prob, FocalParams(alpha=0.5, gamma=0.0)) - bce / 2))
    params = FocalParams(alpha=0.25, gamma=2.0)
    pos = focal_loss([[1]], [[0.5]], params)
    neg = focal_loss([[0]], [[0.5]], params)
    ok = worst <= 1e-10 and abs(pos - 0.043321) <= 1e-6 and abs(neg - 0.129963) <= 1e-6
    verdict(6, "focal loss identities and single-pixel values", ok,
            f"half-BCE gap {worst:.1e}; positive {pos:.7f} vs 0.043321 (|diff| {abs(pos - 0.043321):.1e}); "
            f"negative {neg:.7f} vs 0.129963 (|diff| {abs(neg - 0.129963):.1e}); "
            f"0.75*0.25*ln2 = {0.75 * 0.25 * math.log(2):.7f}")


def test_c07_segmentation_hand_count(verdict):
    hand = seg_metrics(np.array([[1, 0], [0, 0]]), np.array([[1, 1], [0, 0]]))
    m = np.array([[1, 0], [0, 1]])
    ident = seg_metrics(m, m)
    ok = hand == (7 / 12, 0.75, 0.75) and ident == (1.0, 1.0, 1.0)
    verdict(7, "segmentation metrics hand count", ok, f"hand {hand}, identity {ident}")


def _planted_config(seed):
    return PipelineConfig.from_dict({"embeddings_path": "-", "target_class": "target",
                                     "control_class": "control", "seed": seed})


def test_c08_end_to_end_zero_shot(verdict):
    t0 = time.perf_counter()
    proxy_ok = 0
    acc = {"agg": [], "kmeans": []}
    for seed in range(100):
        emb, info = planted_cohort(60, 8, 6.0, seed=seed)
        for algorithm in acc:
            cfg = _planted_config(seed).replace(clustering={"algorithm": algorithm})
            report, _ = run_zsl(cfg, emb=emb)
            acc[algorithm].append(report["results"][0]["metrics"]["accuracy"])
        proxy_ok += report["proxy_class"] == info["proxy"]
    secs = time.perf_counter() - t0
    lo = {a: min(v) for a, v in acc.items()}
    ok = proxy_ok >= 95 and all(v >= 0.95 for v in lo.values()) and secs < 300
    verdict(8, "end-to-end zero-shot on planted cohorts", ok,
            f"proxy correct {proxy_ok}/100, min accuracy agg {lo['agg']:.4f} kmeans {lo['kmeans']:.4f}, "
            f"{secs:.0f}s")


def test_c09_cli_determinism(verdict, tmp_path):
    emb, _ = planted_cohort(40, 8, 6.0, seed=3)
    save_embeddings(emb, tmp_path / "emb.csv")
    (tmp_path / "run.json").write_text(json.dumps({
        "embeddings_path": "emb.csv", "target_class": "target", "control_class": "control",
        "seed": 11, "output_dir": "out"}))
    outputs = []
    t0 = time.perf_counter()
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-m", "zsldx", "zsl", "--config", str(tmp_path / "run.json")],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append((tmp_path / "out" / "report.json").read_bytes())
        (tmp_path / "out" / "report.json").unlink()
    secs = time.perf_counter() - t0
    verdict(9, "zsl --config run.json twice gives byte-identical report",
            outputs[0] == outputs[1] and secs < 60, f"{len(outputs[0])} bytes, {secs:.1f}s")


def test_c10_ablation_ordering(verdict):
    emb, info = ablation_cohort(60, 4, 4, 6.0, seed=0)
    cfg = PipelineConfig.from_dict({"embeddings_path": "-", "target_class": "target",
                                    "control_class": "control", "lesion_dims": info["lesion_dims"]})
    evals, _ = run_ablation(cfg, emb=emb)
    a = {m: e.accuracy for m, e in evals.items()}
    ok = a["full"] >= max(a["siamese_only"], a["segmentation_only"])
    verdict(10, "full >= each single-stage ablation mode", ok,
            ", ".join(f"{m} {v:.4f}" for m, v in a.items()))
