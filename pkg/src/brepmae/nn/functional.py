"""Fused layer primitives with hand-written backward passes."""

import numpy as np

from ..errors import ShapeError
from ..kernels import STD_EPS, segment_aggregate as _segment_aggregate
from .tensor import _make, _sigmoid, stable_matmul, tensor

# --------------------------------------------------------------------------
# convolutions (kernel 3, stride 1, zero padding 1)
# --------------------------------------------------------------------------


def _offsets(k, nd):
    return list(np.ndindex(*((k,) * nd)))


def _im2col(x_cl, k, nd):
    """Channels-last (B, *S, C) -> (B*prod(S), k^nd * C) patch matrix.

    Columns are ordered kernel offset first, channel second; zero padding of
    k // 2 keeps the spatial extent.
    """
    pad = k // 2
    b, spatial, c = x_cl.shape[0], x_cl.shape[1:-1], x_cl.shape[-1]
    xp = np.zeros((b,) + tuple(s + 2 * pad for s in spatial) + (c,))
    xp[(slice(None),) + tuple(slice(pad, pad + s) for s in spatial)] = x_cl
    cols = np.concatenate(
        [xp[(slice(None),) + tuple(slice(o, o + s) for o, s in zip(off, spatial))] for off in _offsets(k, nd)],
        axis=-1,
    )
    return cols.reshape(-1, c * k**nd)


def _col2im(cols, b, spatial, c, k, nd):
    """Adjoint of :func:`_im2col`, returning channels-last (B, *S, C)."""
    pad = k // 2
    out = np.zeros((b,) + tuple(s + 2 * pad for s in spatial) + (c,))
    patches = cols.reshape((b,) + tuple(spatial) + (k**nd * c,))
    for i, off in enumerate(_offsets(k, nd)):
        out[(slice(None),) + tuple(slice(o, o + s) for o, s in zip(off, spatial))] += patches[..., i * c : (i + 1) * c]
    return out[(slice(None),) + tuple(slice(pad, pad + s) for s in spatial)]


def _conv(x, w, b, nd):
    x, w = tensor(x), tensor(w)
    if x.ndim != 2 + nd or w.ndim != 2 + nd or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv{nd}d: input {x.shape} incompatible with weight {w.shape}")
    k = w.shape[-1]
    c_out, c_in = w.shape[:2]
    xs = x.shape
    spatial = xs[2:]
    x_cl = np.moveaxis(x.data, 1, -1)
    cols = _im2col(x_cl, k, nd)
    # (C_out, C_in, *K) -> (*K, C_in, C_out) -> (K^nd * C_in, C_out)
    w2 = np.moveaxis(w.data, (0, 1), (-1, -2)).reshape(-1, c_out)
    y = stable_matmul(cols, w2)
    if b is not None:
        y += b.data
    out = np.moveaxis(y.reshape((xs[0],) + spatial + (c_out,)), -1, 1)
    del cols  # rebuilt in the backward pass; the patch matrix is k^nd times the input
    parents = (x, w) if b is None else (x, w, b)

    def back(g):
        g2 = np.moveaxis(g, 1, -1).reshape(-1, c_out)
        gx = None
        if x.requires_grad:
            gx = np.moveaxis(_col2im(g2 @ w2.T, xs[0], spatial, c_in, k, nd), -1, 1)
        gw = np.moveaxis((_im2col(x_cl, k, nd).T @ g2).reshape((k,) * nd + (c_in, c_out)), (-1, -2), (0, 1))
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    return _make(np.ascontiguousarray(out), parents, back)


def conv1d(x, w, b=None):
    """x: (B, C_in, L), w: (C_out, C_in, k)."""
    return _conv(x, w, b, 1)


def conv2d(x, w, b=None):
    """x: (B, C_in, H, W), w: (C_out, C_in, k, k)."""
    return _conv(x, w, b, 2)


# --------------------------------------------------------------------------
# normalization
# --------------------------------------------------------------------------


def batch_norm(x, gamma, beta, running_mean, running_var, training, momentum=0.9, eps=1e-5):
    """Normalize channel axis 1 over every other axis.

    In training mode the batch statistics are used and the running buffers
    (numpy arrays, updated in place) move as
    ``running = momentum * running + (1 - momentum) * batch``.
    """
    x = tensor(x)
    if x.ndim < 2 or x.shape[1] != gamma.shape[0]:
        raise ShapeError(f"batch_norm: input {x.shape} vs {gamma.shape[0]} channels")
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, -1) + (1,) * (x.ndim - 2)
    g_ = gamma.data.reshape(bshape)
    xd = x.data
    if not training:
        scale = g_ / np.sqrt(running_var.reshape(bshape) + eps)
        xhat = (xd - running_mean.reshape(bshape)) / np.sqrt(running_var.reshape(bshape) + eps)
        out = xd * scale + (beta.data.reshape(bshape) - running_mean.reshape(bshape) * scale)

        def back_eval(g):
            return g * scale, (g * xhat).sum(axis=axes), g.sum(axis=axes)

        return _make(out, (x, gamma, beta), back_eval)
    m = xd.size // xd.shape[1]
    if m < 2:
        raise ShapeError(f"batch_norm in training mode needs >= 2 values per channel, got {m}")
    mu = xd.mean(axis=axes, keepdims=True)
    var = xd.var(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * inv
    out = xhat * g_ + beta.data.reshape(bshape)
    running_mean *= momentum
    running_mean += (1.0 - momentum) * mu.ravel()
    running_var *= momentum
    running_var += (1.0 - momentum) * var.ravel() * (m / (m - 1))

    def back(g):
        gxhat = g * g_
        gx = inv * (
            gxhat - gxhat.mean(axis=axes, keepdims=True) - xhat * (gxhat * xhat).mean(axis=axes, keepdims=True)
        )
        return gx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return _make(out, (x, gamma, beta), back)


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize over the last axis."""
    x = tensor(x)
    if x.shape[-1] != gamma.shape[0]:
        raise ShapeError(f"layer_norm: input {x.shape} vs width {gamma.shape[0]}")
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    var = xd.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * inv
    out = xhat * gamma.data + beta.data
    lead = tuple(range(xd.ndim - 1))

    def back(g):
        gxhat = g * gamma.data
        gx = inv * (
            gxhat - gxhat.mean(axis=-1, keepdims=True) - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _make(out, (x, gamma, beta), back)


# --------------------------------------------------------------------------
# stochastic and pooling layers
# --------------------------------------------------------------------------


def dropout(x, p, rng, training):
    """Inverted dropout: survivors are scaled by 1 / (1 - p); identity in eval."""
    if not training or p == 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return _make(x.data * keep, (x,), lambda g: (g * keep,))


def adaptive_avg_pool(x):
    """Average every spatial axis down to one value: (B, C, *S) -> (B, C)."""
    axes = tuple(range(2, x.ndim))
    return x.mean(axis=axes)


def bce(pred, target, eps=1e-7):
    """Mean binary cross-entropy with the prediction clamped to [eps, 1 - eps]."""
    p = pred.data
    t = np.asarray(target, dtype=np.float64)
    pc = np.clip(p, eps, 1.0 - eps)
    live = (p >= eps) & (p <= 1.0 - eps)
    n = p.size
    out = -np.mean(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc))

    def back(g):
        return (g * live * (pc - t) / (pc * (1.0 - pc)) / n,)

    return _make(np.asarray(out), (pred,), back)


def sigmoid_np(x):
    return _sigmoid(x)


# --------------------------------------------------------------------------
# graph aggregation
# --------------------------------------------------------------------------


class SegmentIndex:
    """CSR grouping of directed edges by destination node."""

    __slots__ = ("n_nodes", "order", "offsets", "deg")

    def __init__(self, dst, n_nodes):
        dst = np.asarray(dst, dtype=np.int64)
        self.n_nodes = n_nodes
        self.order = np.argsort(dst, kind="stable")
        self.deg = np.bincount(dst, minlength=n_nodes)
        self.offsets = np.concatenate([[0], np.cumsum(self.deg)]).astype(np.int64)


def segment_aggregate(messages, seg, eps=STD_EPS):
    """Per-node [mean | max | min | std] of incoming messages, width 4 * D.

    The std is ``sqrt(var + eps) - sqrt(eps)`` so that it is exactly 0 for a
    single message and differentiable at zero variance.
    """
    m = messages.data
    n_edges, width = m.shape
    mean, mx, mn, std, amax, amin = _segment_aggregate(m, seg.order, seg.offsets, eps)
    out = np.concatenate([mean, mx, mn, std], axis=1)

    def back(g):
        gm, gmax, gmin, gstd = np.split(g, 4, axis=1)
        deg = seg.deg.astype(np.float64)[:, None]
        live = seg.deg > 0
        dst = np.empty(n_edges, dtype=np.int64)
        dst[seg.order] = np.repeat(np.arange(seg.n_nodes), seg.deg)
        with np.errstate(divide="ignore", invalid="ignore"):
            per_node = np.where(live[:, None], gm / deg, 0.0)
            sd = std + np.sqrt(eps)  # sqrt(var + eps)
            coef = np.where(live[:, None], gstd / (deg * sd), 0.0)
        ge = per_node[dst] + coef[dst] * (m - mean[dst])
        cols = np.broadcast_to(np.arange(width), amax.shape)
        sel = live
        np.add.at(ge, (amax[sel].ravel(), cols[sel].ravel()), gmax[sel].ravel())
        np.add.at(ge, (amin[sel].ravel(), cols[sel].ravel()), gmin[sel].ravel())
        return (ge,)

    return _make(out, (messages,), back)
