"""Dual autoencoder anomaly detector.

The attribute branch is a four-layer GCN autoencoder over the normalized
adjacency; the structure branch reconstructs the motif-degree matrix with
graph node attention (GNA) layers, optionally swapped for GCN layers. Both
reconstruction errors are combined into one loss and one per-node score.

Matrices are row-major: node representations are rows and a layer maps
``H (n x F)`` to ``n x F'`` via weights shaped ``F x F'``.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import AttributedGraph, normalize_adjacency
from .metrics import ScoredRanking, rank_scores
from .nn import (Adam, NonFiniteError, Parameter, frobenius_sq, glorot_init, relu,
                 relu_backward, spmm)

log = logging.getLogger(__name__)

LAYER_KINDS = ("GNA", "GCN")


@dataclass
class ModelConfig:
    attr_hidden: tuple = (256, 128)
    struct_hidden: tuple = (32, 32)
    embedding_dim: int = 64
    alpha: float = 0.2
    epochs: int = 200
    lr: float = 0.001
    seed: int = 0
    structure_encoder: str = "GNA"
    structure_decoder: str = "GNA"
    decoder_init: str = "abs"

    def __post_init__(self):
        self.attr_hidden = tuple(int(w) for w in self.attr_hidden)
        self.struct_hidden = tuple(int(w) for w in self.struct_hidden)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if len(self.attr_hidden) != 2 or len(self.struct_hidden) != 2:
            raise ValueError("each encoder has three layers: give two hidden widths")
        if min(self.attr_hidden + self.struct_hidden + (self.embedding_dim,)) <= 0:
            raise ValueError("layer widths must be positive")
        if self.decoder_init not in ("abs", "glorot"):
            raise ValueError(f"decoder_init must be 'abs' or 'glorot', got {self.decoder_init!r}")
        for kind in (self.structure_encoder, self.structure_decoder):
            if kind not in LAYER_KINDS:
                raise ValueError(f"layer kind must be one of {LAYER_KINDS}, got {kind!r}")

    @property
    def decoder_init_branches(self):
        return {"abs": ("attr", "struct"), "glorot": ()}[self.decoder_init]

    @property
    def variant(self) -> str:
        enc, dec = self.structure_encoder, self.structure_decoder
        if enc == "GNA" and dec == "GNA":
            return "GUIDE"
        if enc == "GCN" and dec == "GCN":
            return "GUIDE_GCN"
        return "GUIDE_GCNEN" if enc == "GCN" else "GUIDE_GCNDE"

    @classmethod
    def for_variant(cls, variant: str, **kw) -> "ModelConfig":
        kinds = {"GUIDE": ("GNA", "GNA"), "GUIDE_GCNEN": ("GCN", "GNA"),
                 "GUIDE_GCNDE": ("GNA", "GCN"), "GUIDE_GCN": ("GCN", "GCN")}
        enc, dec = kinds[variant]
        return cls(structure_encoder=enc, structure_decoder=dec, **kw)


class GraphContext:
    """Per-graph quantities shared by every layer: the normalized adjacency
    and, for attention, the ``(node, pool member)`` pairs over ``N(i) ∪ {i}``
    sorted by node."""

    def __init__(self, g: AttributedGraph):
        self.n = g.n
        self.a_norm = normalize_adjacency(g)
        pool = (g.adjacency + sp.identity(g.n, format="csr")).tocsr()
        pool.sort_indices()
        self.indptr = pool.indptr.copy()
        self.src = np.repeat(np.arange(g.n), np.diff(pool.indptr))
        self.dst = pool.indices.astype(np.int64)


# --------------------------------------------------------------- layers

def gcn_layer(a_norm, h, w):
    """``ReLU(A_norm @ H @ W)``; returns the output and a backward cache."""
    pre = spmm(a_norm, h @ w)
    return relu(pre), (h, pre)


def gcn_backward(a_norm, w, cache, g_out, need_input=True):
    h, pre = cache
    g_pre = relu_backward(pre, g_out)
    t = spmm(a_norm.T, g_pre)
    dw = np.asarray(h.T @ t)
    dh = t @ w.T if need_input else None
    return dw, dh


def attention_coefficients(h_rows, i, pool, w2, a):
    """Softmax weights of node ``i`` over ``pool`` (which must contain ``i``).

    Logit for ``j`` is ``a . ((h_i - h_j) @ W2)``; the row maximum is
    subtracted before exponentiating.
    """
    pool = list(pool)
    if i not in pool:
        raise ValueError("pool must contain the node itself")
    h_rows = np.asarray(h_rows, dtype=np.float64)
    logits = np.array([a @ ((h_rows[i] - h_rows[j]) @ w2) for j in pool])
    w = np.exp(logits - logits.max())
    return w / w.sum()


def _segment_sum(idx, vals, n):
    return np.bincount(idx, weights=vals, minlength=n)


def gna_layer(ctx: GraphContext, h, w1, w2, a):
    """Graph node attention layer.

    ``h'_i = ReLU(h_i W1 + sum_{j in N(i) ∪ {i}} alpha_ij h_j W2)``
    """
    src, dst, n = ctx.src, ctx.dst, ctx.n
    q = h @ w1
    p = h @ w2
    c = p @ a
    e = c[src] - c[dst]
    emax = np.maximum.reduceat(e, ctx.indptr[:-1])
    ex = np.exp(e - emax[src])
    att = ex / _segment_sum(src, ex, n)[src]
    att_m = sp.csr_matrix((att, dst, ctx.indptr), shape=(n, n))
    pre = q + att_m @ p
    return relu(pre), (h, p, att, att_m, pre)


def gna_backward(ctx: GraphContext, w1, w2, a, cache, g_out, need_input=True):
    h, p, att, att_m, pre = cache
    src, dst, n = ctx.src, ctx.dst, ctx.n
    g_pre = relu_backward(pre, g_out)
    dw1 = h.T @ g_pre
    dp = att_m.T @ g_pre
    d_att = np.einsum("ef,ef->e", g_pre[src], p[dst])
    # softmax backward per pool
    de = att * (d_att - _segment_sum(src, att * d_att, n)[src])
    dc = _segment_sum(src, de, n) - _segment_sum(dst, de, n)
    da = p.T @ dc
    dp = dp + np.outer(dc, a)
    dw2 = h.T @ dp
    dh = g_pre @ w1.T + dp @ w2.T if need_input else None
    return dw1, dw2, da, dh


# ---------------------------------------------------------------- model

@dataclass
class Forward:
    z_attr: np.ndarray
    x_hat: np.ndarray
    z_struct: np.ndarray
    s_hat: np.ndarray
    caches: dict = field(repr=False)
    attention: list = field(default_factory=list, repr=False)


class GuideModel:
    def __init__(self, config: ModelConfig, d: int, m: int, rng: np.random.Generator | None = None):
        self.config = config
        self.d, self.m = d, m
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        emb = config.embedding_dim
        self.params: dict[str, Parameter] = {}

        def init(rows, cols, layer, branch):
            w = glorot_init(rows, cols, rng)
            # decoder inputs are non-negative; non-negative weights keep every
            # ReLU output unit alive at the start of training
            if layer == 3 and branch in config.decoder_init_branches:
                w = np.abs(w)
            return w

        attr_dims = (d,) + config.attr_hidden + (emb, d)
        for idx in range(4):
            self.params[f"attr.{idx}.W"] = Parameter(init(attr_dims[idx], attr_dims[idx + 1], idx, "attr"))
        struct_dims = (m,) + config.struct_hidden + (emb, m)
        for idx in range(4):
            fin, fout = struct_dims[idx], struct_dims[idx + 1]
            if self.struct_kind(idx) == "GCN":
                self.params[f"struct.{idx}.W"] = Parameter(init(fin, fout, idx, "struct"))
            else:
                self.params[f"struct.{idx}.W1"] = Parameter(init(fin, fout, idx, "struct"))
                self.params[f"struct.{idx}.W2"] = Parameter(init(fin, fout, idx, "struct"))
                self.params[f"struct.{idx}.a"] = Parameter(glorot_init(fout, 1, rng).ravel())

    def struct_kind(self, idx: int) -> str:
        return self.config.structure_decoder if idx == 3 else self.config.structure_encoder

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    # forward ----------------------------------------------------------

    def attribute_forward(self, ctx: GraphContext, x):
        h, caches = x, []
        for idx in range(4):
            h, cache = gcn_layer(ctx.a_norm, h, self.params[f"attr.{idx}.W"].value)
            caches.append(cache)
            if idx == 2:
                z = h
        return z, h, caches

    def structure_forward(self, ctx: GraphContext, s):
        h, caches, atts = s, [], []
        for idx in range(4):
            if self.struct_kind(idx) == "GCN":
                h, cache = gcn_layer(ctx.a_norm, h, self.params[f"struct.{idx}.W"].value)
            else:
                h, cache = gna_layer(ctx, h, self.params[f"struct.{idx}.W1"].value,
                                     self.params[f"struct.{idx}.W2"].value,
                                     self.params[f"struct.{idx}.a"].value)
                atts.append(cache[2])
            caches.append(cache)
            if idx == 2:
                z = h
        return z, h, caches, atts

    def forward(self, ctx: GraphContext, x, s) -> Forward:
        za, xh, ca = self.attribute_forward(ctx, x)
        zs, sh, cs, atts = self.structure_forward(ctx, s)
        return Forward(za, xh, zs, sh, {"attr": ca, "struct": cs}, atts)

    # backward ---------------------------------------------------------

    def backward(self, ctx: GraphContext, fw: Forward, g_xhat, g_shat):
        g = g_xhat
        for idx in reversed(range(4)):
            p = self.params[f"attr.{idx}.W"]
            dw, g = gcn_backward(ctx.a_norm, p.value, fw.caches["attr"][idx], g, need_input=idx > 0)
            p.grad += dw
        g = g_shat
        for idx in reversed(range(4)):
            cache = fw.caches["struct"][idx]
            if self.struct_kind(idx) == "GCN":
                p = self.params[f"struct.{idx}.W"]
                dw, g = gcn_backward(ctx.a_norm, p.value, cache, g, need_input=idx > 0)
                p.grad += dw
            else:
                p1 = self.params[f"struct.{idx}.W1"]
                p2 = self.params[f"struct.{idx}.W2"]
                pa = self.params[f"struct.{idx}.a"]
                dw1, dw2, da, g = gna_backward(ctx, p1.value, p2.value, pa.value, cache, g,
                                               need_input=idx > 0)
                p1.grad += dw1
                p2.grad += dw2
                pa.grad += da

    def loss_and_grad(self, ctx: GraphContext, x, s, alpha=None):
        """Forward, loss terms and parameter gradients (accumulated into ``.grad``)."""
        alpha = self.config.alpha if alpha is None else alpha
        fw = self.forward(ctx, x, s)
        s_term, g_s = frobenius_sq(s - fw.s_hat)
        x_term, g_x = frobenius_sq(_dense(x) - fw.x_hat)
        total = (1.0 - alpha) * s_term + alpha * x_term
        self.backward(ctx, fw, -alpha * g_x, -(1.0 - alpha) * g_s)
        return total, s_term, x_term, fw


def _dense(x):
    return x.toarray() if sp.issparse(x) else x


def _model_input(x):
    """Use a sparse copy of very sparse attribute matrices for faster products."""
    if sp.issparse(x):
        return x.tocsr()
    x = np.asarray(x, dtype=np.float64)
    if x.size and np.count_nonzero(x) < 0.1 * x.size:
        return sp.csr_matrix(x)
    return x


def attribute_forward(a_norm, x, params):
    """Three GCN encoder layers then one GCN decoder; returns ``(Z_A, X_hat)``.

    ``params`` is the sequence of four weight matrices.
    """
    h = x
    for idx, w in enumerate(params):
        h, _ = gcn_layer(a_norm, h, w)
        if idx == 2:
            z = h
    return z, h


def structure_forward(ctx: GraphContext, s, model: GuideModel):
    z, s_hat, _, _ = model.structure_forward(ctx, s)
    return z, s_hat


def node_scores(x, x_hat, s, s_hat, alpha) -> np.ndarray:
    rs = s - s_hat
    rx = _dense(x) - x_hat
    return (1.0 - alpha) * np.sum(rs * rs, axis=1) + alpha * np.sum(rx * rx, axis=1)


def loss(x, x_hat, s, s_hat, alpha) -> float:
    """Weighted reconstruction loss, accumulated as the sum of per-node scores
    so that it matches ``node_scores(...).sum()`` bit for bit."""
    return float(np.sum(node_scores(x, x_hat, s, s_hat, alpha)))


# ------------------------------------------------------------- training

@dataclass
class TrainResult:
    model: GuideModel
    optimizer: Adam
    trace: list           # (epoch, loss, structure_term, attribute_term) before each step
    final_loss: float     # loss at the returned parameters


def train(g: AttributedGraph, s, config: ModelConfig, x=None,
          rng: np.random.Generator | None = None, ctx: GraphContext | None = None) -> TrainResult:
    """Full-batch training with Adam; one update per epoch."""
    x = g.attributes if x is None else x
    s = np.asarray(s.values if hasattr(s, "values") else s, dtype=np.float64)
    if s.shape[0] != g.n or x.shape[0] != g.n:
        raise ValueError("structure/attribute rows must equal the node count")
    ctx = ctx or GraphContext(g)
    xin = _model_input(x)
    model = GuideModel(config, x.shape[1], s.shape[1], rng)
    opt = Adam(model.params, lr=config.lr)
    trace = []
    for epoch in range(config.epochs):
        total, s_term, x_term, _ = model.loss_and_grad(ctx, xin, s)
        if not np.isfinite(total):
            raise NonFiniteError(f"loss became non-finite at epoch {epoch}")
        trace.append((epoch, total, s_term, x_term))
        if epoch % 50 == 0 or epoch == config.epochs - 1:
            log.info("epoch %d loss %.6f (structure %.6f, attribute %.6f)", epoch, total, s_term, x_term)
        opt.step()
    fw = model.forward(ctx, xin, s)
    final = loss(x, fw.x_hat, s, fw.s_hat, config.alpha)
    return TrainResult(model, opt, trace, final)


def score_nodes(model: GuideModel, g: AttributedGraph, x, s, alpha=None,
                ctx: GraphContext | None = None) -> ScoredRanking:
    alpha = model.config.alpha if alpha is None else alpha
    s = np.asarray(s.values if hasattr(s, "values") else s, dtype=np.float64)
    ctx = ctx or GraphContext(g)
    fw = model.forward(ctx, _model_input(x), s)
    return rank_scores(node_scores(x, fw.x_hat, s, fw.s_hat, alpha))


def save_loss_trace(trace, path):
    with open(path, "w") as fh:
        fh.write("epoch,loss,structure_term,attribute_term\n")
        for epoch, total, s_term, x_term in trace:
            fh.write(f"{epoch},{total!r},{s_term!r},{x_term!r}\n")


# ----------------------------------------------------------- checkpoint

CHECKPOINT_MAGIC = b"GUIDECKPT"
CHECKPOINT_VERSION = 1


def save_checkpoint(model: GuideModel, path, optimizer: Adam | None = None):
    """Header line (magic + JSON: version, config, tensor table) then raw float64 blobs."""
    arrays = {k: p.value for k, p in model.params.items()}
    if optimizer is not None:
        arrays.update(optimizer.state_arrays())
    table, offset = [], 0
    for name, arr in arrays.items():
        table.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 8
    header = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "d": model.d,
        "m": model.m,
        "adam_step": optimizer.t if optimizer is not None else None,
        "tensors": table,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC + struct.pack("<I", len(blob)) + blob)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> GuideModel:
    with open(path, "rb") as fh:
        if fh.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen))
        data = fh.read()
    if header["version"] != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {header['version']}")
    model = GuideModel(ModelConfig(**header["config"]), header["d"], header["m"],
                       np.random.default_rng(0))
    for t in header["tensors"]:
        if t["name"] in model.params:
            size = int(np.prod(t["shape"])) if t["shape"] else 1
            arr = np.frombuffer(data, dtype="<f8", count=size, offset=t["offset"])
            model.params[t["name"]].value[...] = arr.reshape(t["shape"])
    return model
