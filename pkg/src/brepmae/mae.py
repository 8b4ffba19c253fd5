"""Masked graph autoencoder: masking, MPNN encoder/decoder, decoders, losses."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, ShapeError, TooFewNodes
from .gaag.features import uv_lattice
from .nn import Dropout, LayerNorm, Linear, Module, Parameter
from .nn import functional as F
from .nn.tensor import (
    Tensor,
    add_relu,
    concat,
    gather_rows,
    matmul,
    maximum,
    relu,
    replace_rows,
    sigmoid,
    sqrt,
    tensor,
)

WIDTH = 256

# --------------------------------------------------------------------------
# masking
# --------------------------------------------------------------------------


def mask_count(n, ratio):
    """|M| = clamp(round(ratio * n), 1, n - 1), rounding halves up."""
    if n < 2:
        raise TooFewNodes(f"masking needs at least 2 real nodes, got {n}")
    return min(max(int(math.floor(ratio * n + 0.5)), 1), n - 1)


def plan_mask(n, ratio, rng):
    """Sorted indices of the masked real nodes of one graph."""
    return np.sort(rng.choice(n, size=mask_count(n, ratio), replace=False))


def batch_mask(batch, ratio, rng):
    """Global masked node indices for every graph of a batch."""
    parts = [plan_mask(g.n_real, ratio, rng) + batch.real_offsets[i] for i, g in enumerate(batch.graphs)]
    return np.concatenate(parts).astype(np.int64)


def apply_mask(x, masked, token):
    """Replace the masked rows by the mask token; also return detached targets."""
    if len(masked) == 0:
        raise EmptyMask("mask set is empty")
    return replace_rows(x, masked, token), x.data[masked].copy()


# --------------------------------------------------------------------------
# message passing
# --------------------------------------------------------------------------


def _split_linear(parts, layer):
    """``layer(concat(parts, axis=1))`` without materializing the concat.

    Each part is ``(tensor, gather_index_or_None)``; projecting before the
    gather keeps the node-side products at node count instead of edge count.
    """
    w = layer.weight
    out = None
    start = 0
    for x, idx in parts:
        width = x.shape[-1]
        y = matmul(x, w[start : start + width])
        if idx is not None:
            y = gather_rows(y, idx)
        out = y if out is None else out + y
        start += width
    if start != layer.n_in:
        raise ShapeError(f"split inputs cover {start} of {layer.n_in} features")
    return out + layer.bias


class MPNNLayer(Module):
    """One round of message, aggregate and update with an optional edge update.

    message   m_ij = relu(W_m [x_i, x_j, e_ij])
    aggregate a_j  = W_a [mean, max, min, std over incoming m]
    node      x_j' = x_j + LN(relu(W_n [x_j, a_j]))
    edge      e_ij' = e_ij + relu(W_e [e_ij, x_i', x_j'])
    """

    def __init__(self, edge_update=True):
        super().__init__()
        self.msg = Linear(3 * WIDTH, WIDTH)
        self.agg = Linear(4 * WIDTH, WIDTH)
        self.node = Linear(2 * WIDTH, WIDTH)
        self.node_norm = LayerNorm(WIDTH)
        self.edge = Linear(3 * WIDTH, WIDTH) if edge_update else None

    def forward(self, x, e, src, dst, seg):
        if x.shape[-1] != WIDTH or e.shape[-1] != WIDTH or e.shape[0] != len(src):
            raise ShapeError(f"MPNN layer got nodes {x.shape} and edges {e.shape}")
        m = relu(_split_linear([(x, src), (x, dst), (e, None)], self.msg))
        a = self.agg(F.segment_aggregate(m, seg))
        x = x + self.node_norm(relu(_split_linear([(x, None), (a, None)], self.node)))
        if self.edge is not None:
            e = e + relu(_split_linear([(e, None), (x, src), (x, dst)], self.edge))
        return x, e


def run_mpnn(layers, x, e, batch):
    for layer in layers:
        x, e = layer(x, e, batch.src, batch.dst, batch.seg)
    return x, e


# --------------------------------------------------------------------------
# decoders
# --------------------------------------------------------------------------


class FoldStage(Module):
    """relu(W1 [x, c]) then W2, where ``c`` is the per-point condition."""

    def __init__(self, cond_dim, out_dim, hidden=512):
        super().__init__()
        self.fc1 = Linear(WIDTH + cond_dim, hidden)
        self.fc2 = Linear(hidden, out_dim)

    def forward(self, x, cond):
        # x: (M, 256) per node, cond: (P, c) shared or (M, P, c) per node
        w = self.fc1.weight
        hx = matmul(x, w[:WIDTH])  # (M, H)
        hc = matmul(cond, w[WIDTH:])  # (P, H) or (M, P, H)
        m, h = hx.shape
        h1 = add_relu(hx.reshape(m, 1, h), hc, self.fc1.bias)
        return self.fc2(h1)


class FoldingDecoder(Module):
    """Grid-conditioned geometry decoder producing 7 x K x K per node.

    ``stages`` folds are chained: the first is conditioned on the UV lattice,
    each later one on the previous 64-wide output. Channel 6 goes through a
    sigmoid (trim probability).
    """

    def __init__(self, stages=2):
        super().__init__()
        if stages < 1:
            raise ValueError("folding decoder needs at least one stage")
        self.stages = [
            FoldStage(2 if i == 0 else 64, 7 if i == stages - 1 else 64) for i in range(stages)
        ]

    def forward(self, x, k):
        uu, vv = uv_lattice(k)
        uv = Tensor(np.stack([uu.ravel(), vv.ravel()], axis=1))
        h = uv
        for stage in self.stages:
            h = stage(x, h)
        return _finish_geometry(h, k)


class MLPGeometryDecoder(Module):
    """Ablation decoder: 256 -> 512 -> 7 K^2 without UV conditioning."""

    def __init__(self, k):
        super().__init__()
        self.k = k
        self.fc1 = Linear(WIDTH, 512)
        self.fc2 = Linear(512, 7 * k * k)

    def forward(self, x, k):
        if k != self.k:
            raise ShapeError(f"MLP decoder was built for K={self.k}, asked for K={k}")
        h = self.fc2(relu(self.fc1(x)))
        return _finish_geometry(h.reshape(x.shape[0], k * k, 7), k)


def _finish_geometry(h, k):
    """(M, K^2, 7) raw output -> (M, K^2, 7) with sigmoid on the trim channel."""
    return concat([h[:, :, :6], sigmoid(h[:, :, 6:7])], axis=2)


def geometry_to_grid(pred, k):
    """(M, K^2, 7) -> (M, 7, K, K) array, matching the face grid layout."""
    data = pred.data if isinstance(pred, Tensor) else pred
    return data.reshape(data.shape[0], k, k, 7).transpose(0, 3, 1, 2)


class AuxDecoder(Module):
    def __init__(self, hidden, n_out, p=0.1):
        super().__init__()
        self.fc1 = Linear(WIDTH, hidden)
        self.drop = Dropout(p)
        self.fc2 = Linear(hidden, n_out)

    def forward(self, x):
        return self.fc2(self.drop(relu(self.fc1(x))))


# --------------------------------------------------------------------------
# losses
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.4
    beta: float = 0.36
    gamma: float = 0.12
    delta: float = 0.12
    beta1: float = 0.4
    beta2: float = 0.3
    beta3: float = 0.3

    def __post_init__(self):
        if any(w < 0 for w in vars(self).values()):
            raise ValueError("loss weights must be non-negative")


def _row_mse(pred, target):
    """Mean over rows of the squared Euclidean distance."""
    pred = tensor(pred)
    if pred.shape != np.shape(target):
        raise ShapeError(f"prediction {pred.shape} vs target {np.shape(target)}")
    if pred.shape[0] == 0:
        raise EmptyMask("no masked rows to score")
    d = pred - np.asarray(target, dtype=np.float64)
    return (d * d).sum() * (1.0 / pred.shape[0])


def loss_feat(pred, target):
    return _row_mse(pred, target)


def loss_attr(pred, target):
    return _row_mse(pred, target)


def loss_aabb(pred, target):
    return _row_mse(pred, target)


def geometry_terms(pred, target):
    """(points, normals, trim) means over all M * K^2 samples.

    ``pred`` is (M, P, 7) with the trim channel already in (0, 1); ``target``
    is the (M, 7, K, K) face grid.
    """
    target = np.asarray(target, dtype=np.float64)
    m = target.shape[0]
    tgt = target.reshape(m, 7, -1).transpose(0, 2, 1)
    if pred.shape != tgt.shape:
        raise ShapeError(f"geometry prediction {pred.shape} vs target {tgt.shape}")
    if m == 0:
        raise EmptyMask("no masked rows to score")
    n = tgt.shape[0] * tgt.shape[1]
    dp = pred[:, :, 0:3] - tgt[:, :, 0:3]
    points = (dp * dp).sum() * (1.0 / n)
    nh = pred[:, :, 3:6]
    norm = sqrt(maximum((nh * nh).sum(axis=2), 1e-16))  # |n_hat| floored at 1e-8
    cos = (nh * tgt[:, :, 3:6]).sum(axis=2) / norm
    normals = (1.0 - cos).sum() * (1.0 / n)
    trim = F.bce(pred[:, :, 6], tgt[:, :, 6])
    return points, normals, trim


def loss_geom(pred, target, weights=LossWeights()):
    points, normals, trim = geometry_terms(pred, target)
    return weights.beta1 * points + weights.beta2 * normals + weights.beta3 * trim


def total_pretrain_loss(components, weights=LossWeights()):
    return (
        weights.alpha * components["feat"]
        + weights.beta * components["geom"]
        + weights.gamma * components["attr"]
        + weights.delta * components["aabb"]
    )


# --------------------------------------------------------------------------
# model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MAEConfig:
    n_enc: int = 3
    n_dec: int = 1
    edge_update: bool = True
    remask: bool = True
    decoder: str = "fold2"  # fold1 | fold2 | fold3 | mlp
    grid_size: int = 10


class MAE(Module):
    """Encoder and decoder stacks, tokens and reconstruction heads."""

    def __init__(self, cfg=MAEConfig()):
        super().__init__()
        self.cfg = cfg
        self.mpnn_enc = [MPNNLayer(cfg.edge_update) for _ in range(cfg.n_enc)]
        self.mpnn_dec = [MPNNLayer(cfg.edge_update) for _ in range(cfg.n_dec)]
        if cfg.decoder == "mlp":
            self.fold = MLPGeometryDecoder(cfg.grid_size)
        elif cfg.decoder in ("fold1", "fold2", "fold3"):
            self.fold = FoldingDecoder(int(cfg.decoder[-1]))
        else:
            raise ValueError(f"unknown geometry decoder {cfg.decoder!r}")
        self.attr_dec = AuxDecoder(128, 10)
        self.aabb_dec = AuxDecoder(64, 6)
        self.mask_token = Parameter((WIDTH,), ("uniform", WIDTH))
        self.remask_token = Parameter((WIDTH,), ("uniform", WIDTH))

    def encode(self, x, e, batch):
        return run_mpnn(self.mpnn_enc, x, e, batch)

    def remask_and_decode(self, h, masked, e, batch):
        if self.cfg.remask and len(masked):
            h = replace_rows(h, masked, self.remask_token)
        return run_mpnn(self.mpnn_dec, h, e, batch)


class PretrainModel(Module):
    def __init__(self, cfg=MAEConfig(), attr_norm="layer"):
        super().__init__()
        from .embedder import Embedder

        self.embedder = Embedder(attr_norm)
        self.mae = MAE(cfg)

    def forward(self, batch, masked, weights=LossWeights()):
        """Component losses and total for one batch and a fixed mask set."""
        x, e = self.embedder(batch)
        xm, target = apply_mask(x, masked, self.mae.mask_token)
        h, e = self.mae.encode(xm, e, batch)
        h, _ = self.mae.remask_and_decode(h, masked, e, batch)
        xh = gather_rows(h, masked)
        k = batch.face_grid.shape[-1]
        geom = self.mae.fold(xh, k)
        comps = {
            "feat": loss_feat(xh, target),
            "geom": loss_geom(geom, batch.face_grid[masked], weights),
            "attr": loss_attr(self.mae.attr_dec(xh), batch.face_attr[masked]),
            "aabb": loss_aabb(self.mae.aabb_dec(xh), batch.face_aabb[masked]),
        }
        comps["total"] = total_pretrain_loss(comps, weights)
        return comps
