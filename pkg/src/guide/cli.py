"""Command line entry point: ``guide <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import graph as G
from .config import ConfigError, load_config
from .inject import InjectionSpec, inject
from .metrics import evaluate, save_curve, save_scores, save_summary
from .model import ModelConfig, save_checkpoint, save_loss_trace, score_nodes, train
from .motifs import (TRANSFORMS, StructureMatrix, build_structure_matrix, motif_totals,
                     raw_structure_counts, save_structure_matrix)
from .pipeline import StageError, run_pipeline, sweep

log = logging.getLogger("guide")


def _graph_args(p, attributes=True):
    p.add_argument("--edges", required=True, type=Path, help="edge list file (u v per line)")
    if attributes:
        p.add_argument("--attributes", type=Path, help="attribute file (.coo triples or dense rows)")
        p.add_argument("--d", type=int, help="attribute dimension for .coo files without a shape header")


def _config_args(p):
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, help="root seed (same as --set run.seed=N)")
    p.add_argument("--output", type=Path, help="output directory (same as --set run.output=DIR)")


def build_parser():
    parser = argparse.ArgumentParser(prog="guide", description="Higher-order structure based anomaly detection on attributed graphs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert LINQS .content/.cites files or validate edge/attribute files")
    p.add_argument("--content", type=Path)
    p.add_argument("--cites", type=Path)
    p.add_argument("--edges", type=Path)
    p.add_argument("--attributes", type=Path)
    p.add_argument("--d", type=int)
    p.add_argument("--name", default="dataset")
    p.add_argument("--out-dir", type=Path)

    p = sub.add_parser("inject", help="inject clique and attribute anomalies")
    _graph_args(p)
    p.add_argument("--p", type=int, default=15, help="clique size")
    p.add_argument("--q", type=int, default=None, help="clique count (default: ~5%% anomalies)")
    p.add_argument("--k", type=int, default=50, help="candidate pool size per attribute anomaly")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("copy", "swap"), default="copy")
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("census", help="count node motif degrees")
    _graph_args(p, attributes=False)
    p.add_argument("--transform", choices=TRANSFORMS, default="raw")
    p.add_argument("--out", type=Path, help="structure matrix TSV")

    p = sub.add_parser("train", help="train on a graph as-is and write scores")
    _graph_args(p)
    p.add_argument("--variant", choices=("GUIDE", "GUIDE_GCNEN", "GUIDE_GCNDE", "GUIDE_GCN"), default="GUIDE")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--embedding-dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transform", choices=TRANSFORMS, default="log1p")
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("evaluate", help="score ranking metrics from a scores file and a labels file")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--ks", default="50,100,150")
    p.add_argument("--out-dir", type=Path)

    p = sub.add_parser("run", help="full pipeline from a config file")
    _config_args(p)

    p = sub.add_parser("sweep", help="vary alpha or embedding_dim on one shared injection")
    _config_args(p)
    p.add_argument("--axis", choices=("alpha", "embedding_dim"), required=True)
    p.add_argument("--values", required=True, help="comma separated values")
    return parser


def _load_graph(args):
    g = G.load_edge_list(args.edges)
    if getattr(args, "attributes", None) is not None:
        n, d = g.n, args.d
        shape = G.read_coo_shape(args.attributes) if args.attributes.suffix in G.COORD_SUFFIXES else None
        if shape is not None:
            n, d = shape
            if n != g.n:
                g = G.load_edge_list(args.edges, n_hint=n)
        g = g.with_attributes(G.load_attributes(args.attributes, n, d))
    return g


def cmd_ingest(args):
    if args.content and args.cites:
        bundle = G.load_linqs(args.content, args.cites, args.name)
    elif args.edges:
        bundle = G.DatasetBundle(_load_graph(args), args.name)
    else:
        raise ValueError("give --content and --cites, or --edges [--attributes]")
    g = bundle.graph
    print(f"{bundle.name}: nodes={g.n} edges={g.num_edges} attributes={g.d}")
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        G.save_edge_list(g, args.out_dir / f"{bundle.name}.edges")
        G.save_attributes(g.attributes, args.out_dir / f"{bundle.name}.coo")
        if bundle.id_map is not None:
            (args.out_dir / f"{bundle.name}.ids").write_text(
                "".join(f"{i}\t{orig}\n" for i, orig in enumerate(bundle.id_map)))


def cmd_inject(args):
    g = _load_graph(args)
    res = inject(g, InjectionSpec(p=args.p, q=args.q, k=args.k, seed=args.seed, mode=args.mode))
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    G.save_edge_list(res.graph, out / "perturbed.edges")
    G.save_attributes(res.graph.attributes, out / "perturbed.coo")
    G.save_labels(res.labels, out / "labels.txt")
    print(f"structural={res.structural_ids.size} attribute={res.attribute_ids.size} "
          f"total={int(res.labels.sum())} nodes={g.n} edges={res.graph.num_edges}")


def cmd_census(args):
    g = _load_graph(args)
    raw = raw_structure_counts(g)
    print(json.dumps(motif_totals(raw)))
    if args.out:
        vals = np.log1p(raw) if args.transform == "log1p" else raw.astype(np.float64)
        save_structure_matrix(StructureMatrix(vals, transform=args.transform), args.out)


def cmd_train(args):
    g = _load_graph(args)
    s = build_structure_matrix(g, args.transform)
    cfg = ModelConfig.for_variant(args.variant, alpha=args.alpha, epochs=args.epochs, lr=args.lr,
                                  embedding_dim=args.embedding_dim, seed=args.seed)
    fit = train(g, s, cfg)
    ranking = score_nodes(fit.model, g, g.attributes, s)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(fit.model, out / "checkpoint.bin", fit.optimizer)
    save_loss_trace(fit.trace, out / "loss.csv")
    save_scores(ranking.scores, out / "scores.txt")
    print(f"final_loss={fit.final_loss!r} score_sum={float(ranking.scores.sum())!r}")


def cmd_evaluate(args):
    scores = np.loadtxt(args.scores, ndmin=1)
    labels = G.load_labels(args.labels, scores.size)
    ks = tuple(int(k) for k in args.ks.split(","))
    summary, roc, pr = evaluate(scores, labels, ks)
    print(json.dumps(summary, sort_keys=True))
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        save_summary(summary, args.out_dir / "metrics.json")
        save_curve(roc, args.out_dir / "roc.csv", "fpr,tpr")
        save_curve(pr, args.out_dir / "pr.csv", "recall,precision")


def _run_config(args):
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.output is not None:
        overrides.append(f"run.output={args.output}")
    return load_config(args.config, overrides)


def cmd_run(args):
    report = run_pipeline(_run_config(args))
    print(json.dumps(report["metrics"], sort_keys=True))


def cmd_sweep(args):
    cfg = _run_config(args)
    cfg.output.mkdir(parents=True, exist_ok=True)
    rows = sweep(cfg, args.axis, args.values.split(","), cfg.output / f"sweep_{args.axis}.csv")
    for r in rows:
        print(f"{r['axis']}={r['value']}\t{r['status']}\troc_auc={r['roc_auc']:.4f}\tpr_auc={r['pr_auc']:.4f}")


COMMANDS = {"ingest": cmd_ingest, "inject": cmd_inject, "census": cmd_census, "train": cmd_train,
            "evaluate": cmd_evaluate, "run": cmd_run, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except StageError as exc:
        print(f"guide {args.command}: error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, ValueError, IndexError) as exc:
        print(f"guide {args.command}: error in stage '{args.command}': {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
