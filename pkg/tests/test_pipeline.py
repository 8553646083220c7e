import json

import numpy as np
import pytest

from zsldx.cluster import ALGORITHMS
from zsldx.errors import ConfigError, DataError, StageError
from zsldx.ingest import EmbeddingSet, ablation_cohort, planted_cohort, save_embeddings, synth_cohort
from zsldx.pipeline import (
    PipelineConfig,
    compare_clusterers,
    derive_seed,
    dumps,
    run_ablation,
    run_zsl,
    table_csv,
    write_report,
)

FAST = {"epochs": 20, "pairs_per_cell": 60}


def config(**kw):
    base = {"embeddings_path": "emb.csv", "target_class": "target", "control_class": "control",
            "similarity": FAST}
    base.update(kw)
    return PipelineConfig.from_dict(base)


def test_planted_proxy_is_found():
    for seed in range(5):
        emb, info = planted_cohort(40, 8, 6.0, seed=seed)
        report, _ = run_zsl(config(seed=seed), emb=emb)
        assert report["proxy_class"] == info["proxy"]
        assert report["proxy_source"] == "siamese"
        assert report["results"][0]["metrics"]["accuracy"] >= 0.95


def test_report_shape_and_ranges():
    emb, _ = planted_cohort(30, 8, 6.0, seed=1)
    report, timings = run_zsl(config(), emb=emb)
    assert report["schema"] == 1 and report["mode"] == "full"
    assert report["n_train"] == 30 + 30 and report["n_eval"] == 30 + 30
    sim = report["similarity"]
    assert sim["class_names"] == sorted(emb.classes())
    for row in report["results"]:
        m = row["metrics"]
        for key in ("accuracy", "precision", "recall", "f1", "auc"):
            assert 0.0 <= m[key] <= 1.0
    assert "train_head" in timings and "cluster:agg" in timings
    json.loads(dumps(report))


def test_run_deterministic():
    emb, _ = planted_cohort(30, 8, 6.0, seed=2)
    a, _ = run_zsl(config(seed=3), emb=emb)
    b, _ = run_zsl(config(seed=3), emb=emb)
    assert dumps(a) == dumps(b)


def test_target_never_enters_head_training():
    emb, _ = planted_cohort(30, 8, 6.0, seed=4)
    tgt = emb.indices_of("target")
    moved = emb.vectors.copy()
    moved[tgt] = np.random.default_rng(0).normal(size=(len(tgt), emb.dimension)) * 50
    other = EmbeddingSet(emb.dimension, emb.ids, emb.labels, moved)
    a, _ = run_zsl(config(), emb=emb)
    b, _ = run_zsl(config(), emb=other)
    names = a["similarity"]["class_names"]
    keep = [i for i, n in enumerate(names) if n != "target"]
    va, vb = np.array(a["similarity"]["values"]), np.array(b["similarity"]["values"])
    assert np.array_equal(va[np.ix_(keep, keep)], vb[np.ix_(keep, keep)])


def test_target_record_order_does_not_change_proxy():
    emb, info = planted_cohort(30, 8, 6.0, seed=5)
    order = np.arange(len(emb))
    tgt = emb.indices_of("target")
    order[tgt] = tgt[::-1]
    shuffled = emb.select(order)
    a, _ = run_zsl(config(), emb=emb)
    b, _ = run_zsl(config(), emb=shuffled)
    assert a["proxy_class"] == b["proxy_class"] == info["proxy"]


def test_compare_rows_and_hashes():
    emb, _ = planted_cohort(40, 8, 6.0, seed=6)
    report, _ = compare_clusterers(config(), list(ALGORITHMS), emb=emb)
    assert [r["algorithm"] for r in report["results"]] == list(ALGORITHMS)
    assert len({r["input_sha256"] for r in report["results"]}) == 1
    for r in report["results"]:
        if r["algorithm"] in ("kmeans", "agg", "pam", "kmedoids", "clara"):
            assert r["metrics"]["accuracy"] >= 0.95
    seeds = {r["seed"] for r in report["results"]}
    assert len(seeds) == len(ALGORITHMS)


def test_compare_single_equals_zsl():
    emb, _ = planted_cohort(30, 8, 6.0, seed=7)
    cfg = config(clustering={"algorithm": "kmeans"})
    a, _ = compare_clusterers(cfg, ["kmeans"], emb=emb)
    b, _ = run_zsl(cfg, emb=emb)
    assert dumps(a) == dumps(b)


def test_algorithm_seed_independent_of_list_order():
    emb, _ = planted_cohort(30, 8, 6.0, seed=8)
    a, _ = compare_clusterers(config(), ["kmeans", "gmm"], emb=emb)
    b, _ = compare_clusterers(config(), ["gmm", "kmeans"], emb=emb)
    assert a["results"][0] == b["results"][1]


def test_overlapping_cohort_is_chance_level():
    base = synth_cohort(4, 200, 8, 0.0, seed=9)
    rename = {"c0": "target", "c1": "control", "c2": "k0", "c3": "k1"}
    emb = base.with_labels([rename[l] for l in base.labels])
    report, _ = compare_clusterers(config(), list(ALGORITHMS), emb=emb)
    for r in report["results"]:
        assert 0.4 <= r["metrics"]["accuracy"] <= 0.6, r["algorithm"]


def test_ablation_modes():
    emb, info = ablation_cohort(60, 4, 4, 6.0, seed=0)
    cfg = config(lesion_dims=info["lesion_dims"])
    evals, reports = run_ablation(cfg, emb=emb)
    assert set(evals) == {"full", "siamese_only", "segmentation_only"}
    assert reports["segmentation_only"]["proxy_source"] == "random"
    assert reports["segmentation_only"]["similarity"] is None
    assert reports["siamese_only"]["feature_dims"] == list(range(8))
    assert reports["full"]["feature_dims"] == [0, 1, 2, 3]
    assert reports["full"]["proxy_class"] == info["proxy"]
    again, _ = run_ablation(cfg, emb=emb)
    assert {m: e.to_dict() for m, e in evals.items()} == {m: e.to_dict() for m, e in again.items()}


def test_empty_lesion_dims_is_error():
    emb, _ = ablation_cohort(20, 2, 2, 6.0, seed=0)
    with pytest.raises(StageError, match="features"):
        run_zsl(config(lesion_dims=[]), emb=emb)
    with pytest.raises(StageError):
        run_zsl(config(lesion_dims=[99]), emb=emb)


def test_missing_target_is_stage_error():
    emb, _ = planted_cohort(20, 4, 6.0, seed=0)
    with pytest.raises(StageError, match=r"\[validate\]"):
        run_zsl(config(target_class="nope"), emb=emb)


@pytest.mark.parametrize(
    "change",
    [
        {"bogus": 1},
        {"schema": 2},
        {"ablation": "half"},
        {"clustering": {"algorithm": "dbscan"}},
        {"clustering": {"k": 3}},
        {"similarity": {"lr": 0.1}},
        {"control_class": "target"},
        {"control_holdout": 1.0},
    ],
)
def test_config_rejects(change):
    with pytest.raises(ConfigError):
        config(**change)


def test_config_missing_required():
    with pytest.raises(ConfigError, match="target_class"):
        PipelineConfig.from_dict({"embeddings_path": "x", "control_class": "c"})


def test_config_load_resolves_relative_paths(tmp_path):
    emb, _ = planted_cohort(20, 4, 6.0, seed=0)
    save_embeddings(emb, tmp_path / "emb.csv")
    (tmp_path / "run.json").write_text(json.dumps(
        {"embeddings_path": "emb.csv", "target_class": "target", "control_class": "control",
         "similarity": FAST}))
    cfg = PipelineConfig.load(tmp_path / "run.json")
    report, _ = run_zsl(cfg)
    assert report["config"]["embeddings_path"] == "emb.csv"
    assert cfg.replace(seed=4).seed == 4


def test_unknown_algorithm_in_compare():
    emb, _ = planted_cohort(20, 4, 6.0, seed=0)
    with pytest.raises(ConfigError):
        compare_clusterers(config(), ["kmeans", "dbscan"], emb=emb)


def test_derive_seed_stable():
    assert derive_seed(0, "agg") == derive_seed(0, "agg")
    assert derive_seed(0, "agg") != derive_seed(0, "pam")
    assert derive_seed(1, "agg") != derive_seed(0, "agg")
    assert 0 <= derive_seed(5, "x") < 2 ** 63


def test_write_report_and_table(tmp_path):
    emb, _ = planted_cohort(20, 4, 6.0, seed=0)
    report, timings = compare_clusterers(config(), ["kmeans", "agg"], emb=emb)
    write_report(report, tmp_path / "out" / "report.json", timings)
    assert json.loads((tmp_path / "out" / "report.json").read_text()) == report
    assert "load" in json.loads((tmp_path / "out" / "timings.json").read_text())
    lines = table_csv(report["results"]).splitlines()
    assert lines[0] == "algorithm,accuracy,precision,recall,f1,auc"
    assert [l.split(",")[0] for l in lines[1:]] == ["kmeans", "agg"]
    assert all(len(v.split(".")[1]) == 4 for v in lines[1].split(",")[1:])


def test_small_control_class_rejected():
    emb = EmbeddingSet(1, ["a", "b", "c", "d", "e", "f", "g"],
                       ["target", "control", "k0", "k0", "k1", "k1", "target"],
                       [[0.0], [5.0], [0.1], [0.2], [9.0], [9.1], [0.05]])
    with pytest.raises(StageError, match="split"):
        run_zsl(config(ablation="segmentation_only"), emb=emb)


def test_data_error_type_is_preserved():
    emb, _ = planted_cohort(20, 4, 6.0, seed=0)
    with pytest.raises(StageError) as info:
        run_zsl(config(control_class="missing"), emb=emb)
    assert isinstance(info.value.cause, DataError)
