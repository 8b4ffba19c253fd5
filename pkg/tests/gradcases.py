"""Finite-difference gradient cases shared by the unit and acceptance suites.

Each case builder takes a seed and returns ``(f, inputs)`` where ``f`` is a
zero-argument closure producing a scalar tensor and ``inputs`` are the
tensors to differentiate. The 256-wide layers are too large for elementwise
differences, so :func:`case_error` checks them along random directions
with a small step that rarely crosses a ReLU kink.
"""

import numpy as np

from brepmae.batch import collate
from brepmae.gaag import build_gaag
from brepmae.mae import (
    FoldingDecoder,
    LossWeights,
    MPNNLayer,
    geometry_terms,
    loss_aabb,
    loss_attr,
    loss_feat,
    loss_geom,
    total_pretrain_loss,
)
from brepmae.nn import BatchNorm, Conv1d, Conv2d, Linear, Tensor, grad_check, init_parameters, no_grad
from brepmae.nn import functional as F
from brepmae.nn.tensor import mish, relu, sigmoid, softmax
from brepmae.synthgen import gen_part
from brepmae.trainer.finetune import finetune_loss


def _t(rng, *shape, scale=1.0):
    return Tensor(rng.normal(scale=scale, size=shape), requires_grad=True)


def _weights(rng, shape):
    """Fixed random projection so that the scalar depends on every output."""
    return rng.normal(size=shape)


def _layer(module, seed):
    init_parameters(module, seed)
    return module


def linear(seed):
    rng = np.random.default_rng(seed)
    n, a, b = rng.integers(2, 6, size=3)
    layer = _layer(Linear(a, b), seed)
    x = _t(rng, n, a)
    w = _weights(rng, (n, b))
    return lambda: (layer(x) * w).sum(), [x, layer.weight, layer.bias]


def conv2d(seed):
    rng = np.random.default_rng(seed)
    b, ci, co, s = rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 4), rng.integers(3, 6)
    layer = _layer(Conv2d(ci, co), seed)
    x = _t(rng, b, ci, s, s)
    w = _weights(rng, (b, co, s, s))
    return lambda: (layer(x) * w).sum(), [x, layer.weight, layer.bias]


def conv1d(seed):
    rng = np.random.default_rng(seed)
    b, ci, co, s = rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 4), rng.integers(3, 8)
    layer = _layer(Conv1d(ci, co), seed)
    x = _t(rng, b, ci, s)
    w = _weights(rng, (b, co, s))
    return lambda: (layer(x) * w).sum(), [x, layer.weight, layer.bias]


def batchnorm(seed):
    rng = np.random.default_rng(seed)
    b, c, s = rng.integers(2, 5), rng.integers(1, 4), rng.integers(1, 4)
    layer = _layer(BatchNorm(c), seed)
    layer.weight.data[:] = rng.normal(size=c)
    layer.bias.data[:] = rng.normal(size=c)
    x = _t(rng, b, c, s, s, scale=2.0)
    w = _weights(rng, (b, c, s, s))
    return lambda: (layer(x) * w).sum(), [x, layer.weight, layer.bias]


def _elementwise(op, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    shape = tuple(rng.integers(1, 5, size=rng.integers(1, 4)))
    x = _t(rng, *shape, scale=scale)
    w = _weights(rng, shape)
    return lambda: (op(x) * w).sum(), [x]


def mish_(seed):
    return _elementwise(mish, seed, 2.0)


def relu_(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(rng.integers(2, 5, size=2))
    # keep samples away from the kink at zero
    data = rng.uniform(0.1, 2.0, size=shape) * rng.choice([-1, 1], size=shape)
    x = Tensor(data, requires_grad=True)
    w = _weights(rng, shape)
    return lambda: (relu(x) * w).sum(), [x]


def sigmoid_(seed):
    return _elementwise(sigmoid, seed, 3.0)


def softmax_(seed):
    rng = np.random.default_rng(seed)
    n, c = rng.integers(1, 5), rng.integers(2, 7)
    x = _t(rng, n, c, scale=2.0)
    w = _weights(rng, (n, c))
    return lambda: (softmax(x) * w).sum(), [x]


def pool(seed):
    rng = np.random.default_rng(seed)
    b, c, s = rng.integers(1, 4), rng.integers(1, 4), rng.integers(2, 5)
    x = _t(rng, b, c, s, s + 1)
    w = _weights(rng, (b, c))
    return lambda: (F.adaptive_avg_pool(x) * w).sum(), [x]


def folding(seed):
    rng = np.random.default_rng(seed)
    m, k = rng.integers(1, 3), rng.integers(2, 4)
    dec = _layer(FoldingDecoder(2), seed)
    x = _t(rng, m, 256, scale=0.5)
    w = _weights(rng, (m, k * k, 7))
    params = [p for _, p in dec.named_parameters()]
    return lambda: (dec(x, k) * w).sum(), [x] + params


_GRAPHS = {}


def _graph(seed):
    if seed not in _GRAPHS:
        from brepmae.synthgen import FeatureRecipe

        recipes = [] if seed % 3 == 0 else [FeatureRecipe("through_hole")]
        _GRAPHS[seed] = collate([build_gaag(gen_part(recipes, seed=seed))])
    return _GRAPHS[seed]


def mpnn_layer(seed):
    rng = np.random.default_rng(seed)
    b = _graph(seed)
    layer = _layer(MPNNLayer(edge_update=True), seed)
    x = _t(rng, b.n_nodes, 256, scale=0.5)
    e = _t(rng, len(b.src), 256, scale=0.5)
    wx = _weights(rng, (b.n_nodes, 256))
    we = _weights(rng, (len(b.src), 256))

    def f():
        xo, eo = layer(x, e, b.src, b.dst, b.seg)
        return (xo * wx).sum() + (eo * we).sum()

    return f, [x, e] + [p for _, p in layer.named_parameters()]


def _geom_target(rng, m, k):
    tgt = rng.normal(size=(m, 7, k, k))
    n = tgt[:, 3:6]
    tgt[:, 3:6] = n / np.linalg.norm(n, axis=1, keepdims=True)
    tgt[:, 6] = rng.integers(0, 2, size=(m, k, k))
    return tgt


def _geom_pred(rng, m, k):
    raw = rng.normal(size=(m, k * k, 7))
    raw[:, :, 6] = rng.uniform(0.05, 0.95, size=(m, k * k))
    return Tensor(raw, requires_grad=True)


def loss_feat_(seed):
    rng = np.random.default_rng(seed)
    m, d = rng.integers(1, 5), rng.integers(2, 9)
    x = _t(rng, m, d)
    t = rng.normal(size=(m, d))
    return lambda: loss_feat(x, t), [x]


def loss_attr_(seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(1, 5)
    x = _t(rng, m, 10)
    t = rng.normal(size=(m, 10))
    return lambda: loss_attr(x, t), [x]


def loss_aabb_(seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(1, 5)
    x = _t(rng, m, 6)
    t = rng.normal(size=(m, 6))
    return lambda: loss_aabb(x, t), [x]


def loss_geom_(seed):
    rng = np.random.default_rng(seed)
    m, k = rng.integers(1, 4), rng.integers(2, 4)
    pred, tgt = _geom_pred(rng, m, k), _geom_target(rng, m, k)
    return lambda: loss_geom(pred, tgt), [pred]


def geometry_terms_(seed):
    rng = np.random.default_rng(seed)
    m, k = rng.integers(1, 4), rng.integers(2, 4)
    pred, tgt = _geom_pred(rng, m, k), _geom_target(rng, m, k)
    w = rng.uniform(0.5, 2.0, size=3)

    def f():
        p, n, t = geometry_terms(pred, tgt)
        return p * w[0] + n * w[1] + t * w[2]

    return f, [pred]


def total_loss(seed):
    rng = np.random.default_rng(seed)
    m, k = rng.integers(1, 4), rng.integers(2, 4)
    feat = _t(rng, m, 5)
    attr = _t(rng, m, 10)
    aabb = _t(rng, m, 6)
    pred = _geom_pred(rng, m, k)
    tf, ta, tb, tg = rng.normal(size=(m, 5)), rng.normal(size=(m, 10)), rng.normal(size=(m, 6)), _geom_target(rng, m, k)
    weights = LossWeights(*rng.uniform(0.1, 1.0, size=7))

    def f():
        comps = {
            "feat": loss_feat(feat, tf),
            "geom": loss_geom(pred, tg, weights),
            "attr": loss_attr(attr, ta),
            "aabb": loss_aabb(aabb, tb),
        }
        return total_pretrain_loss(comps, weights)

    return f, [feat, attr, aabb, pred]


def cross_entropy(seed):
    rng = np.random.default_rng(seed)
    n, c = rng.integers(1, 6), rng.integers(2, 8)
    z = _t(rng, n, c, scale=2.0)
    labels = rng.integers(-1, c, size=n)
    labels[0] = rng.integers(0, c)
    return lambda: finetune_loss(z, labels), [z]


LAYER_CASES = {
    "linear": linear,
    "conv2d": conv2d,
    "conv1d": conv1d,
    "batchnorm": batchnorm,
    "mish": mish_,
    "relu": relu_,
    "pool": pool,
    "softmax": softmax_,
    "sigmoid": sigmoid_,
    "folding_decoder": folding,
    "mpnn_layer": mpnn_layer,
}

LOSS_CASES = {
    "loss_feat": loss_feat_,
    "loss_geom": loss_geom_,
    "geometry_terms": geometry_terms_,
    "loss_attr": loss_attr_,
    "loss_aabb": loss_aabb_,
    "total_loss": total_loss,
    "cross_entropy": cross_entropy,
}

ALL_CASES = {**LAYER_CASES, **LOSS_CASES}
WIDE = frozenset({"folding_decoder", "mpnn_layer"})


def directional_error(f, params, seed=0, h=1e-5):
    """Relative mismatch between <grad, d> and a central difference along a
    random direction ``d`` spanning every array in ``params``."""
    rng = np.random.default_rng(seed)
    for p in params:
        p.zero_grad()
    f().backward()
    dirs = [rng.normal(size=p.shape) for p in params]
    analytic = sum(float(np.sum(p.grad * d)) for p, d in zip(params, dirs))
    for p, d in zip(params, dirs):
        p.data += h * d
    with no_grad():
        fp = float(f().data)
    for p, d in zip(params, dirs):
        p.data -= 2 * h * d
    with no_grad():
        fm = float(f().data)
    for p, d in zip(params, dirs):
        p.data += h * d
    numeric = (fp - fm) / (2 * h)
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)


def _value(f):
    with no_grad():
        return float(f().data)


def sampled_error(f, inputs, n=24, h=1e-5, seed=0, kink_tol=1e-3):
    """Elementwise central differences on ``n`` random coordinates per input.

    A coordinate whose forward and backward one-sided slopes disagree by
    more than ``kink_tol`` of the largest gradient entry straddles a ReLU
    kink, where the finite-difference oracle itself is undefined; such
    coordinates are skipped. Returns ``(error, kept_fraction)``.
    """
    rng = np.random.default_rng(seed)
    for x in inputs:
        x.zero_grad()
    f().backward()
    f0 = _value(f)
    worst, kept, total = 0.0, 0, 0
    for x in inputs:
        flat = x.data.reshape(-1)
        grad = x.grad.reshape(-1)
        gmax = max(np.abs(grad).max(), 1e-12)
        idx = rng.choice(flat.size, size=min(n, flat.size), replace=False)
        a, num = [], []
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            fp = _value(f)
            flat[i] = old - h
            fm = _value(f)
            flat[i] = old
            total += 1
            if abs((fp - f0) - (f0 - fm)) / h > kink_tol * gmax:
                continue
            kept += 1
            a.append(grad[i])
            num.append((fp - fm) / (2 * h))
        a, num = np.array(a), np.array(num)
        scale = max(np.linalg.norm(a), np.linalg.norm(num))
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(a - num) / scale))
    return worst, kept / total


def case_error(name, seed):
    """Gradient error of case ``name`` built with ``seed``.

    The 256-wide cases combine a sampled elementwise check at h = 1e-5
    with directional checks over every parameter at h = 1e-7.
    """
    f, inputs = ALL_CASES[name](seed)
    if name in WIDE:
        sampled, kept = sampled_error(f, inputs, seed=seed)
        assert kept >= 0.9, f"{name}: only {kept:.0%} of probes were kink-free"
        directional = max(directional_error(f, inputs, seed=d, h=1e-7) for d in range(3))
        return max(sampled, directional)
    return grad_check(f, inputs)
