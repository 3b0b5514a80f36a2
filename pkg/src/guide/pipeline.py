"""End-to-end experiment: ingest, inject, census, train, score, evaluate."""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import graph as G
from .config import RunConfig, dump_ini
from .inject import InjectionResult, inject
from .metrics import evaluate, save_curve, save_scores, save_summary
from .model import GraphContext, save_checkpoint, save_loss_trace, score_nodes, train
from .motifs import StructureMatrix, motif_totals, raw_structure_counts, save_structure_matrix

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - start


def load_dataset(cfg: RunConfig) -> G.DatasetBundle:
    cfg.check_files()
    g = G.load_edge_list(cfg.edges)
    if cfg.attributes is not None:
        n, d = g.n, None
        shape = G.read_coo_shape(cfg.attributes) if cfg.attributes.suffix in G.COORD_SUFFIXES else None
        if shape is not None:
            if shape[0] < g.n:
                raise G.GraphFormatError(f"attribute file covers {shape[0]} nodes, edges need {g.n}")
            n, d = shape
            if n > g.n:
                g = G.load_edge_list(cfg.edges, n_hint=n)
        g = g.with_attributes(G.load_attributes(cfg.attributes, n, d))
    labels = G.load_labels(cfg.labels, g.n) if cfg.labels is not None else None
    return G.DatasetBundle(graph=g, name=cfg.name, labels=labels)


def prepare(cfg: RunConfig, timings: dict | None = None):
    """Shared front half of a run: load, inject (or use given labels) and census."""
    timings = {} if timings is None else timings
    with stage("ingest", timings):
        bundle = load_dataset(cfg)
    with stage("inject", timings):
        if cfg.inject_enabled:
            result = inject(bundle.graph, cfg.injection)
        else:
            if bundle.labels is None:
                raise ValueError("injection disabled but no [data] labels file given")
            empty = np.array([], dtype=np.int64)
            result = InjectionResult(bundle.graph, bundle.labels, empty, empty)
    with stage("census", timings):
        s_raw = raw_structure_counts(result.graph)
        vals = np.log1p(s_raw) if cfg.transform == "log1p" else s_raw.astype(np.float64)
        s = StructureMatrix(values=vals, transform=cfg.transform)
    return bundle, result, s_raw, s


def fit_and_evaluate(cfg: RunConfig, result: InjectionResult, s: StructureMatrix,
                     timings: dict, ctx: GraphContext | None = None):
    g = result.graph
    with stage("train", timings):
        ctx = ctx or GraphContext(g)
        fit = train(g, s, cfg.model, ctx=ctx)
    with stage("score", timings):
        ranking = score_nodes(fit.model, g, g.attributes, s, ctx=ctx)
    with stage("evaluate", timings):
        summary, roc, pr = evaluate(ranking, result.labels, cfg.ks)
    return fit, ranking, summary, roc, pr


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every stage and write all artifacts under ``cfg.output``."""
    timings: dict = {}
    out = Path(cfg.output)
    with stage("setup", timings):
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(dump_ini(cfg.raw))
    bundle, result, s_raw, s = prepare(cfg, timings)
    with stage("write-data", timings):
        G.save_edge_list(result.graph, out / "perturbed.edges")
        G.save_attributes(result.graph.attributes, out / "perturbed.coo")
        G.save_labels(result.labels, out / "labels.txt")
        save_structure_matrix(StructureMatrix(s_raw.astype(np.float64)), out / "structure.tsv")
    fit, ranking, summary, roc, pr = fit_and_evaluate(cfg, result, s, timings)
    consistency = abs(float(ranking.scores.sum()) - fit.final_loss)
    with stage("write-results", timings):
        save_checkpoint(fit.model, out / "checkpoint.bin", fit.optimizer)
        save_loss_trace(fit.trace, out / "loss.csv")
        save_curve(roc, out / "roc.csv", "fpr,tpr")
        save_curve(pr, out / "pr.csv", "recall,precision")
        save_summary(summary, out / "metrics.json")
        save_scores(ranking.scores, out / "scores.txt")
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "dataset": cfg.name,
        "seed": cfg.seed,
        "config": cfg.raw,
        "injection": {**asdict(cfg.injection.resolve(bundle.graph.n)),
                      "structural": int(result.structural_ids.size),
                      "attribute": int(result.attribute_ids.size)} if cfg.inject_enabled else None,
        "motif_totals": motif_totals(s_raw),
        "model": {**asdict(cfg.model), "variant": cfg.model.variant},
        "final_loss": fit.final_loss,
        "score_sum_minus_loss": consistency,
        "loss_trace": "loss.csv",
        "metrics": summary,
        "timings_seconds": timings,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
    log.info("run complete: roc_auc=%.4f pr_auc=%.4f", summary["roc_auc"], summary["pr_auc"])
    return report


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


SWEEP_AXES = {"alpha": float, "embedding_dim": int}


def sweep(cfg: RunConfig, axis: str, values, path=None) -> list[dict]:
    """Train one fresh model per value on a single shared injection.

    Failed cells are recorded with their error and the sweep carries on.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {sorted(SWEEP_AXES)}, got {axis!r}")
    values = [SWEEP_AXES[axis](v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    timings: dict = {}
    _, result, _, s = prepare(cfg, timings)
    ctx = GraphContext(result.graph)
    rows = []
    for v in values:
        row = {"axis": axis, "value": v}
        try:
            cell = cfg.with_model(**{axis: v})
            _, _, summary, _, _ = fit_and_evaluate(cell, result, s, {}, ctx=ctx)
            row.update(status="ok", roc_auc=summary["roc_auc"], pr_auc=summary["pr_auc"],
                       error="")
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            log.warning("sweep cell %s=%s failed: %s", axis, v, exc)
            row.update(status="failed", roc_auc=float("nan"), pr_auc=float("nan"), error=str(exc))
        rows.append(row)
    if path is not None:
        write_sweep(rows, path)
    return rows


def write_sweep(rows, path):
    with open(path, "w") as fh:
        fh.write("axis,value,status,roc_auc,pr_auc,error\n")
        for r in rows:
            err = r["error"].replace(",", ";").replace("\n", " ")
            fh.write(f"{r['axis']},{r['value']},{r['status']},{r['roc_auc']!r},{r['pr_auc']!r},{err}\n")
