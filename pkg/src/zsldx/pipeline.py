"""Zero-shot diagnosis pipeline: proxy selection, clustering, out-of-sample evaluation.

Stages for a target class that has no labeled training data:

1. train a Siamese head on every non-target class;
2. score a class similarity matrix, the target's row zero-shot;
3. pick the known class most similar to the target as its proxy;
4. cluster proxy + control records (k = 2) and map clusters to labels;
5. assign held-out target + control records to the frozen clusters and score.

``lesion_dims`` restricts clustering to a coordinate subset, standing in
for lesion-derived features.  Ablation modes switch stages off.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import cluster
from .errors import ConfigError, DataError, StageError
from .ingest import EmbeddingSet, load_embeddings
from .metrics import EvalReport, cluster_scores, evaluate
from .siamese import SimilarityMatrix, TrainConfig, most_similar, similarity_matrix, train_head

MODES = ("full", "siamese_only", "segmentation_only")
SCHEMA_VERSION = 1

__all__ = [
    "MODES",
    "PipelineConfig",
    "ClusteringConfig",
    "SimilarityConfig",
    "derive_seed",
    "run_zsl",
    "compare_clusterers",
    "run_ablation",
    "write_report",
    "table_csv",
]


def _strict(cls, obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return obj


@dataclass(frozen=True)
class SimilarityConfig:
    margin: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 32
    projected_dim: int | None = None
    seed: int | None = None
    standardize: bool = True
    scorer_steps: int = 500
    scorer_learning_rate: float = 0.5
    pairs_per_cell: int = 200

    def train_config(self, master_seed: int) -> TrainConfig:
        kw = {f.name: getattr(self, f.name) for f in fields(TrainConfig) if f.name != "seed"}
        return TrainConfig(seed=master_seed if self.seed is None else self.seed, **kw)


@dataclass(frozen=True)
class ClusteringConfig:
    algorithm: str = "agg"
    k: int = 2
    seed: int | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineConfig:
    embeddings_path: str
    target_class: str
    control_class: str
    schema: int = SCHEMA_VERSION
    seed: int = 0
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    ablation: str = "full"
    lesion_dims: list | None = None
    control_holdout: float = 0.5
    output_dir: str = "."
    base_dir: str = field(default=".", compare=False, repr=False)

    def __post_init__(self):
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {self.schema!r}; expected {SCHEMA_VERSION}")
        if self.ablation not in MODES:
            raise ConfigError(f"ablation must be one of {MODES}, got {self.ablation!r}")
        if self.clustering.algorithm not in cluster.ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.clustering.algorithm!r}")
        if self.clustering.k != 2:
            raise ConfigError("the pipeline clusters into k = 2 (diseased vs control)")
        if self.target_class == self.control_class:
            raise ConfigError("target_class and control_class must differ")
        if not 0 < self.control_holdout < 1:
            raise ConfigError("control_holdout must be in (0, 1)")
        if self.lesion_dims is not None and any(int(d) != d or d < 0 for d in self.lesion_dims):
            raise ConfigError("lesion_dims must be non-negative integers")

    @classmethod
    def from_dict(cls, obj: dict, base_dir: str = ".") -> "PipelineConfig":
        obj = dict(_strict(cls, obj, "config"))
        obj.pop("base_dir", None)
        for key in ("embeddings_path", "target_class", "control_class"):
            if key not in obj:
                raise ConfigError(f"config is missing {key!r}")
        try:
            sim = SimilarityConfig(**_strict(SimilarityConfig, obj.pop("similarity", {}), "similarity"))
            clu = ClusteringConfig(**_strict(ClusteringConfig, obj.pop("clustering", {}), "clustering"))
            return cls(similarity=sim, clustering=clu, base_dir=base_dir, **obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(obj, base_dir=os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("base_dir")
        return out

    def replace(self, **changes) -> "PipelineConfig":
        obj = self.to_dict()
        for key, value in changes.items():
            if key in ("similarity", "clustering"):
                obj[key] = {**obj[key], **value}
            else:
                obj[key] = value
        return PipelineConfig.from_dict(obj, base_dir=self.base_dir)

    def resolve(self, path) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    @property
    def cluster_seed(self) -> int:
        return self.seed if self.clustering.seed is None else self.clustering.seed


def derive_seed(master: int, name: str) -> int:
    """Stable per-name seed; independent of run order and Python hashing."""
    digest = hashlib.sha256(f"{master}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DataError, ConfigError, ValueError) as exc:
        raise StageError(name, exc) from exc


@dataclass
class _Prepared:
    mode: str
    proxy: str
    proxy_source: str
    matrix: SimilarityMatrix | None
    dims: list
    X_train: np.ndarray
    y_train: np.ndarray
    X_eval: np.ndarray
    y_eval: np.ndarray
    timings: dict


def _roles(config: PipelineConfig, emb: EmbeddingSet):
    classes = emb.classes()
    for role, name in (("target", config.target_class), ("control", config.control_class)):
        if name not in classes:
            raise DataError(f"{role} class {name!r} not found; have {classes}")
    candidates = [c for c in classes if c not in (config.target_class, config.control_class)]
    if not candidates:
        raise DataError("need at least one known class besides target and control")
    return candidates


def _feature_dims(config: PipelineConfig, mode: str, d: int) -> list:
    if mode == "siamese_only" or config.lesion_dims is None:
        return list(range(d))
    dims = [int(v) for v in config.lesion_dims]
    if not dims:
        raise DataError(f"mode {mode!r} needs a non-empty lesion_dims")
    if max(dims) >= d:
        raise DataError(f"lesion_dims out of range for dimension {d}")
    return dims


def _prepare(config: PipelineConfig, emb: EmbeddingSet, mode: str) -> _Prepared:
    timings = {}
    candidates = _stage("validate", _roles, config, emb)
    target, control = config.target_class, config.control_class

    matrix = None
    t0 = time.perf_counter()
    if mode == "segmentation_only":
        rng = np.random.default_rng(derive_seed(config.seed, "random-proxy"))
        proxy = candidates[int(rng.integers(len(candidates)))]
        source = "random"
    else:
        known = [i for i, lab in enumerate(emb.labels) if lab is not None and lab != target]
        tc = config.similarity.train_config(config.seed)
        head = _stage("train-head", train_head, emb.select(known), tc)
        timings["train_head"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        matrix = _stage("similarity", similarity_matrix, head, emb,
                        config.similarity.pairs_per_cell, tc.seed)
        proxy = _stage("select-proxy", most_similar, matrix, target, exclude=(control,))
        source = "siamese"
    timings["proxy"] = time.perf_counter() - t0

    dims = _stage("features", _feature_dims, config, mode, emb.dimension)
    X = emb.vectors[:, dims]
    ctrl = emb.indices_of(control)
    rng = np.random.default_rng(derive_seed(config.seed, "control-split"))
    ctrl = ctrl[rng.permutation(len(ctrl))]
    n_hold = int(round(len(ctrl) * config.control_holdout))
    if n_hold < 1 or n_hold >= len(ctrl):
        raise StageError("split", DataError(f"control class too small to split ({len(ctrl)} records)"))
    ctrl_eval, ctrl_train = np.sort(ctrl[:n_hold]), np.sort(ctrl[n_hold:])
    prox = emb.indices_of(proxy)
    tgt = emb.indices_of(target)

    train_idx = np.concatenate([prox, ctrl_train])
    eval_idx = np.concatenate([tgt, ctrl_eval])
    y_train = np.concatenate([np.ones(len(prox), int), np.zeros(len(ctrl_train), int)])
    y_eval = np.concatenate([np.ones(len(tgt), int), np.zeros(len(ctrl_eval), int)])
    return _Prepared(mode, proxy, source, matrix, dims, X[train_idx], y_train,
                     X[eval_idx], y_eval, timings)


def _input_hash(prep: _Prepared) -> str:
    h = hashlib.sha256()
    for arr in (prep.X_train, prep.y_train, prep.X_eval, prep.y_eval):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def _evaluate_algorithm(config: PipelineConfig, prep: _Prepared, algorithm: str):
    params = dict(config.clustering.params) if algorithm == config.clustering.algorithm else {}
    seed = derive_seed(config.cluster_seed, algorithm)
    digest = _input_hash(prep)
    t0 = time.perf_counter()
    model = _stage(f"cluster:{algorithm}", cluster.fit_clusterer, algorithm, prep.X_train,
                   k=config.clustering.k, seed=seed, **params)
    mapping, _ = cluster.map_clusters(model.assignment, prep.y_train.tolist())
    pos_c = mapping.index(1)
    neg_c = mapping.index(0)
    dist = model.center_distances(prep.X_eval)
    pred = np.where(np.argmin(dist, axis=1) == pos_c, 1, 0)
    scores = cluster_scores(dist[:, neg_c], dist[:, pos_c])
    report = evaluate(prep.y_eval, pred, scores)
    row = {
        "algorithm": algorithm,
        "seed": seed,
        "params": model.params,
        "input_sha256": digest,
        "cost_or_loglik": float(model.cost_or_loglik),
        "cluster_labels": {"positive": int(pos_c), "negative": int(neg_c)},
        "metrics": report.to_dict(),
    }
    return row, report, time.perf_counter() - t0


def _report(config, prep, rows):
    return {
        "schema": SCHEMA_VERSION,
        "mode": prep.mode,
        "config": config.to_dict(),
        "target_class": config.target_class,
        "control_class": config.control_class,
        "proxy_class": prep.proxy,
        "proxy_source": prep.proxy_source,
        "similarity": None if prep.matrix is None else prep.matrix.to_dict(),
        "feature_dims": prep.dims,
        "n_train": int(prep.X_train.shape[0]),
        "n_eval": int(prep.X_eval.shape[0]),
        "results": rows,
    }


def compare_clusterers(config: PipelineConfig, algorithms, emb: EmbeddingSet | None = None, mode: str | None = None):
    """Run every algorithm on identical prepared inputs.

    Returns ``(report, timings)``.  ``report["results"]`` has one row per
    algorithm in the order given; each carries a hash of its inputs.
    """
    algorithms = list(algorithms)
    for name in algorithms:
        if name not in cluster.ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}; choose from {', '.join(cluster.ALGORITHMS)}")
    if not algorithms:
        raise ConfigError("no algorithms given")
    t0 = time.perf_counter()
    if emb is None:
        emb = _stage("load", load_embeddings, config.resolve(config.embeddings_path))
    timings = {"load": time.perf_counter() - t0}
    prep = _prepare(config, emb, mode or config.ablation)
    timings.update(prep.timings)
    rows = []
    for name in algorithms:
        row, _, secs = _evaluate_algorithm(config, prep, name)
        rows.append(row)
        timings[f"cluster:{name}"] = secs
    return _report(config, prep, rows), timings


def run_zsl(config: PipelineConfig, emb: EmbeddingSet | None = None):
    """Full pipeline with the configured algorithm and mode; ``(report, timings)``."""
    return compare_clusterers(config, [config.clustering.algorithm], emb=emb)


def run_ablation(config: PipelineConfig, emb: EmbeddingSet | None = None):
    """Configured algorithm under all three modes.

    Returns ``({mode: EvalReport}, {mode: report})``.
    """
    if emb is None:
        emb = _stage("load", load_embeddings, config.resolve(config.embeddings_path))
    evals, reports = {}, {}
    for mode in ("segmentation_only", "siamese_only", "full"):
        report, _ = compare_clusterers(config, [config.clustering.algorithm], emb=emb, mode=mode)
        reports[mode] = report
        evals[mode] = EvalReport.from_dict(report["results"][0]["metrics"])
    return evals, reports


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_report(report: dict, path, timings: dict | None = None) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(report))
    if timings is not None:
        tpath = os.path.join(os.path.dirname(os.path.abspath(path)), "timings.json")
        with open(tpath, "w", encoding="utf-8") as fh:
            fh.write(dumps(timings))


TABLE_COLUMNS = ("accuracy", "precision", "recall", "f1", "auc")


def table_csv(rows, key="algorithm") -> str:
    """Flat ``algorithm,accuracy,precision,recall,f1,auc`` table, four decimals."""
    lines = [",".join((key,) + TABLE_COLUMNS)]
    for row in rows:
        m = row["metrics"]
        vals = ["" if m[c] is None else f"{m[c]:.4f}" for c in TABLE_COLUMNS]
        lines.append(",".join([str(row[key])] + vals))
    return "\n".join(lines) + "\n"
