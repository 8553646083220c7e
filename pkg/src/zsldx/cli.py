"""Command line entry point: ``zsldx <subcommand> ...``.

Exit status: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import cluster, pipeline
from .errors import ConfigError, DataError, StageError
from .ingest import ablation_cohort, load_embeddings, planted_cohort, save_embeddings, synth_cohort
from .segeval import FocalParams, evaluate_manifest
from .siamese import SiameseHead, TrainConfig, most_similar, similarity_matrix, train_head

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(obj):
    sys.stdout.write(pipeline.dumps(obj))


# ---------------------------------------------------------------- subcommands


def cmd_synth(args):
    if args.kind == "lattice":
        emb = synth_cohort(args.classes, args.per_class, args.dim, args.separation, args.seed)
        info = {"classes": emb.classes()}
    elif args.kind == "planted":
        emb, info = planted_cohort(args.per_class, args.dim, args.separation, args.seed,
                                   n_candidates=args.candidates)
    else:
        nuisance = args.nuisance_dim if args.nuisance_dim is not None else args.dim
        emb, info = ablation_cohort(args.per_class, args.dim, nuisance, args.separation, args.seed,
                                    n_candidates=args.candidates)
    save_embeddings(emb, args.out)
    _emit({"path": args.out, "records": len(emb), "dimension": emb.dimension, **info})


def _train_config(args) -> TrainConfig:
    base = {}
    seed = 0
    if args.config:
        cfg = pipeline.PipelineConfig.load(args.config)
        base = {k: v for k, v in cfg.to_dict()["similarity"].items() if k != "pairs_per_cell"}
        seed = cfg.seed if cfg.similarity.seed is None else cfg.similarity.seed
        base.pop("seed", None)
    overrides = {
        "margin": args.margin,
        "learning_rate": args.lr,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "projected_dim": args.projected_dim,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed is not None:
        seed = args.seed
    return TrainConfig(seed=seed, **base)


def cmd_train_head(args):
    emb = load_embeddings(args.input)
    keep = [i for i, lab in enumerate(emb.labels) if lab is not None and lab not in set(args.exclude)]
    head = train_head(emb.select(keep), _train_config(args))
    head.save(args.out)
    _emit({"path": args.out, "projected_dim": head.projected_dim, "input_dim": head.input_dim,
           "trained_on": emb.select(keep).classes()})


def cmd_similarity(args):
    head = SiameseHead.load(args.head)
    emb = load_embeddings(args.input)
    matrix = similarity_matrix(head, emb, args.pairs_per_cell, args.seed)
    out = matrix.to_dict()
    if args.target:
        out["target"] = args.target
        out["most_similar"] = most_similar(matrix, args.target, exclude=args.exclude)
    _emit(out)


def cmd_cluster(args):
    emb = load_embeddings(args.input)
    params = {}
    if args.max_iter is not None:
        params["max_iter"] = args.max_iter
    if args.algorithm == "agg":
        params["linkage"] = args.linkage
    if args.algorithm == "clara":
        if args.sample_size is not None:
            params["sample_size"] = args.sample_size
        params["n_samples"] = args.n_samples
    if args.algorithm == "kmodes":
        params["n_init"] = args.n_init
    result = cluster.fit_clusterer(args.algorithm, emb, k=args.k, seed=args.seed, **params)
    _emit(result.to_dict())


def _load_config(args) -> pipeline.PipelineConfig:
    cfg = pipeline.PipelineConfig.load(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "output_dir", None) is not None:
        changes["output_dir"] = args.output_dir
    if getattr(args, "mode", None) is not None:
        changes["ablation"] = args.mode
    if getattr(args, "target", None) is not None:
        changes["target_class"] = args.target
    if getattr(args, "algorithm", None) is not None:
        changes["clustering"] = {"algorithm": args.algorithm}
    return cfg.replace(**changes) if changes else cfg


def _out_dir(cfg):
    path = cfg.resolve(cfg.output_dir)
    os.makedirs(path, exist_ok=True)
    return path


def cmd_zsl(args):
    cfg = _load_config(args)
    report, timings = pipeline.run_zsl(cfg)
    out = _out_dir(cfg)
    pipeline.write_report(report, os.path.join(out, "report.json"), timings)
    with open(os.path.join(out, "results.csv"), "w", encoding="utf-8") as fh:
        fh.write(pipeline.table_csv(report["results"]))
    _emit({"report": os.path.join(out, "report.json"), "proxy_class": report["proxy_class"],
           "metrics": report["results"][0]["metrics"]})


def cmd_compare(args):
    cfg = _load_config(args)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    report, timings = pipeline.compare_clusterers(cfg, algorithms)
    out = _out_dir(cfg)
    pipeline.write_report(report, os.path.join(out, "compare.json"), timings)
    table = pipeline.table_csv(report["results"])
    with open(os.path.join(out, "compare.csv"), "w", encoding="utf-8") as fh:
        fh.write(table)
    sys.stdout.write(table)


def cmd_ablate(args):
    cfg = _load_config(args)
    evals, reports = pipeline.run_ablation(cfg)
    rows = [{"mode": m, "proxy_class": reports[m]["proxy_class"], "metrics": e.to_dict()}
            for m, e in evals.items()]
    out = _out_dir(cfg)
    with open(os.path.join(out, "ablation.json"), "w", encoding="utf-8") as fh:
        fh.write(pipeline.dumps({"algorithm": cfg.clustering.algorithm, "rows": rows}))
    sys.stdout.write(pipeline.table_csv(rows, key="mode"))


def cmd_seg_eval(args):
    result = evaluate_manifest(args.manifest, args.threshold, FocalParams(args.alpha, args.gamma))
    _emit(result)


def cmd_report(args):
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read report {args.input}: {exc}") from None
    if "results" in obj:
        rows, key = obj["results"], "algorithm"
    elif "rows" in obj:
        rows, key = obj["rows"], "mode"
    else:
        raise DataError("not a run, comparison or ablation report")
    if args.format == "csv":
        sys.stdout.write(pipeline.table_csv(rows, key=key))
        return
    if "proxy_class" in obj:
        print(f"target {obj['target_class']}  proxy {obj['proxy_class']} ({obj['proxy_source']})  mode {obj['mode']}")
    header = f"{key:<18}" + "".join(f"{c:>11}" for c in pipeline.TABLE_COLUMNS)
    print(header)
    for row in rows:
        m = row["metrics"]
        cells = "".join(f"{'-' if m[c] is None else format(m[c], '.4f'):>11}" for c in pipeline.TABLE_COLUMNS)
        print(f"{str(row[key]):<18}{cells}")


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zsldx", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("synth", help="write a seeded synthetic cohort CSV")
    s.add_argument("--kind", choices=("lattice", "planted", "ablation"), default="lattice")
    s.add_argument("--classes", type=int, default=4, help="lattice: number of classes")
    s.add_argument("--per-class", type=int, default=50)
    s.add_argument("--dim", type=int, default=8, help="dimension (ablation: lesion dimensions)")
    s.add_argument("--nuisance-dim", type=int, help="ablation: nuisance dimensions (default --dim)")
    s.add_argument("--candidates", type=int, default=2, help="planted/ablation: known disease classes")
    s.add_argument("--separation", type=float, default=6.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train-head", help="train a Siamese head, write JSON")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="take training settings from a run config")
    s.add_argument("--exclude", action="append", default=[], metavar="CLASS",
                   help="hold a class out of training (repeatable)")
    s.add_argument("--margin", type=float)
    s.add_argument("--lr", type=float)
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--projected-dim", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train_head)

    s = sub.add_parser("similarity", help="class similarity matrix from a trained head")
    s.add_argument("--head", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--pairs-per-cell", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target", help="also report the most similar class to this one")
    s.add_argument("--exclude", action="append", default=[], metavar="CLASS")
    s.set_defaults(func=cmd_similarity)

    s = sub.add_parser("cluster", help="fit one clustering algorithm, JSON to stdout")
    s.add_argument("--algorithm", choices=cluster.ALGORITHMS, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iter", type=int)
    s.add_argument("--linkage", choices=sorted(cluster.LINKAGES), default="ward")
    s.add_argument("--sample-size", type=int)
    s.add_argument("--n-samples", type=int, default=5)
    s.add_argument("--n-init", type=int, default=10)
    s.set_defaults(func=cmd_cluster)

    def run_flags(s, algorithm=True):
        s.add_argument("--config", required=True)
        s.add_argument("--seed", type=int)
        s.add_argument("--output-dir")
        s.add_argument("--target")
        if algorithm:
            s.add_argument("--algorithm", choices=cluster.ALGORITHMS)

    s = sub.add_parser("zsl", help="run the zero-shot pipeline, write report.json")
    run_flags(s)
    s.add_argument("--mode", choices=pipeline.MODES)
    s.set_defaults(func=cmd_zsl)

    s = sub.add_parser("compare", help="compare clustering algorithms, CSV to stdout")
    run_flags(s, algorithm=False)
    s.add_argument("--algorithms", default=",".join(cluster.ALGORITHMS))
    s.add_argument("--mode", choices=pipeline.MODES)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("ablate", help="run all three ablation modes, CSV to stdout")
    run_flags(s)
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("seg-eval", help="score mask/probability-map pairs from a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--alpha", type=float, default=0.25)
    s.add_argument("--gamma", type=float, default=2.0)
    s.set_defaults(func=cmd_seg_eval)

    s = sub.add_parser("report", help="render a report JSON as a table")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--format", choices=("text", "csv"), default="text")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"zsldx: config error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DataError, StageError) as exc:
        print(f"zsldx: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
