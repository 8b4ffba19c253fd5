"""Reverse-mode automatic differentiation over float64 numpy arrays.

A :class:`Tensor` records the tensors it was computed from and a closure that
maps the output gradient to one gradient per parent. :meth:`Tensor.backward`
walks the recorded graph in reverse topological order; leaf tensors that
require gradients accumulate into ``.grad`` while intermediate gradients live
only for the duration of the walk.
"""

import contextlib

import numpy as np

from ..errors import NotScalar, ShapeError

_grad_enabled = True


def is_grad_enabled():
    return _grad_enabled


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_array(x):
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "__weakref__")

    __array_priority__ = 100  # make ndarray <op> Tensor defer to Tensor

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(arr) if requires_grad else None
        self._parents = ()
        self._backward = None

    # -- basic info ---------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __len__(self):
        return len(self.data)

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def zero_grad(self):
        if self.grad is not None:
            self.grad[...] = 0.0

    # -- autograd -----------------------------------------------------------

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``.grad``."""
        if grad is None:
            if self.data.size != 1:
                raise NotScalar(f"backward() needs a scalar output, got shape {self.shape}")
            grad = np.ones_like(self.data)
        topo = _topological_order(self)
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.grad is not None:
                    node.grad += g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # -- operators ----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)


def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def tensor(x, requires_grad=False):
    return x if isinstance(x, Tensor) else Tensor(x, requires_grad)


def _make(data, parents, backward):
    """Output tensor; records the graph only when some parent needs gradients."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# --------------------------------------------------------------------------
# elementwise arithmetic
# --------------------------------------------------------------------------


def add(a, b):
    a, b = tensor(a), tensor(b)
    sa, sb = a.shape, b.shape
    return _make(a.data + b.data, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(g, sb)))


def sub(a, b):
    a, b = tensor(a), tensor(b)
    sa, sb = a.shape, b.shape
    return _make(a.data - b.data, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(-g, sb)))


def mul(a, b):
    a, b = tensor(a), tensor(b)
    ad, bd = a.data, b.data
    return _make(
        ad * bd, (a, b), lambda g: (unbroadcast(g * bd, ad.shape), unbroadcast(g * ad, bd.shape))
    )


def div(a, b):
    a, b = tensor(a), tensor(b)
    ad, bd = a.data, b.data
    out = ad / bd
    return _make(
        out,
        (a, b),
        lambda g: (unbroadcast(g / bd, ad.shape), unbroadcast(-g * out / bd, bd.shape)),
    )


def neg(a):
    return _make(-a.data, (a,), lambda g: (-g,))


def power(a, p):
    ad = a.data
    return _make(ad**p, (a,), lambda g: (g * p * ad ** (p - 1),))


def exp(a):
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a):
    ad = a.data
    return _make(np.log(ad), (a,), lambda g: (g / ad,))


def sqrt(a):
    out = np.sqrt(a.data)
    return _make(out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a):
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(x):
    # the tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a):
    out = _sigmoid(a.data)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a):
    out = np.maximum(a.data, 0.0)
    return _make(out, (a,), lambda g: (np.where(out > 0, g, 0.0),))


def add_relu(a, b, bias):
    """Fused ``relu(a + b + bias)`` with numpy broadcasting among the three."""
    a, b, bias = tensor(a), tensor(b), tensor(bias)
    out = a.data + b.data
    out += bias.data
    np.maximum(out, 0.0, out=out)

    def back(g):
        gm = np.where(out > 0, g, 0.0)
        return unbroadcast(gm, a.shape), unbroadcast(gm, b.shape), unbroadcast(gm, bias.shape)

    return _make(out, (a, b, bias), back)


def _softplus(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softplus(a):
    ad = a.data
    return _make(_softplus(ad), (a,), lambda g: (g * _sigmoid(ad),))


def mish(a):
    """x * tanh(softplus(x)) with a fused derivative."""
    x = a.data
    t = np.tanh(_softplus(x))
    out = x * t

    def back(g):
        return (g * (t + x * (1.0 - t * t) * _sigmoid(x)),)

    return _make(out, (a,), back)


def clamp(a, lo=None, hi=None):
    """Clip values; the gradient flows only where the input was not clipped."""
    x = a.data
    out = np.clip(x, lo, hi)
    keep = np.ones_like(x, dtype=bool)
    if lo is not None:
        keep &= x >= lo
    if hi is not None:
        keep &= x <= hi
    return _make(out, (a,), lambda g: (g * keep,))


def maximum(a, floor):
    """Elementwise max with a constant floor."""
    x = a.data
    keep = x >= floor
    return _make(np.where(keep, x, floor), (a,), lambda g: (g * keep,))


# --------------------------------------------------------------------------
# reductions and shape manipulation
# --------------------------------------------------------------------------


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def tsum(a, axis=None, keepdims=False):
    shape = a.shape
    axes = _norm_axis(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def back(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(out, (a,), back)


def tmean(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    n = 1
    for ax in axes:
        n *= a.shape[ax]
    return tsum(a, axes, keepdims) * (1.0 / n)


def reshape(a, shape):
    old = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None):
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = tuple(np.argsort(axes))
    return _make(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),))


def _is_basic(idx):
    parts = idx if isinstance(idx, tuple) else (idx,)
    return all(p is None or p is Ellipsis or isinstance(p, (int, slice)) for p in parts)


def getitem(a, idx):
    """Basic or advanced indexing; advanced indices scatter-add on the way back."""
    shape = a.shape
    basic = _is_basic(idx)

    def back(g):
        out = np.zeros(shape)
        if basic:
            out[idx] = g
        else:
            np.add.at(out, idx, g)
        return (out,)

    return _make(a.data[idx], (a,), back)


def concat(tensors, axis=0):
    tensors = [tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tensors, back)


def expand_rows(a, n):
    """Repeat a 1-D tensor as ``n`` identical rows."""
    return _make(np.broadcast_to(a.data, (n,) + a.shape).copy(), (a,), lambda g: (g.sum(axis=0),))


def gather_rows(a, idx):
    """``a[idx]`` along the first axis; backward uses an ordered scatter-add."""
    from ..kernels import scatter_add_rows

    idx = np.asarray(idx, dtype=np.int64)
    n = a.shape[0]
    return _make(a.data[idx], (a,), lambda g: (scatter_add_rows(n, idx, g),))


def replace_rows(a, idx, row):
    """Copy of ``a`` whose rows ``idx`` are all set to the 1-D tensor ``row``."""
    idx = np.asarray(idx, dtype=np.int64)
    out = a.data.copy()
    out[idx] = row.data

    def back(g):
        ga = g.copy()
        ga[idx] = 0.0
        return ga, g[idx].sum(axis=0)

    return _make(out, (a, row), back)


# --------------------------------------------------------------------------
# linear algebra
# --------------------------------------------------------------------------


_ROW_BLOCK = 16


def stable_matmul(a, b):
    """``a @ b`` whose rows do not depend on their position in ``a``.

    Optimized BLAS kernels treat the last ``M mod unroll`` rows of a product
    with a different micro-kernel, which can change the rounding of those
    rows. Padding the row count to a multiple of the unroll width sends every
    row through the same kernel, so permuting the rows of ``a`` permutes the
    result bit for bit.
    """
    lead = a.shape[:-1]
    a2 = a.reshape(-1, a.shape[-1])
    m = a2.shape[0]
    extra = -m % _ROW_BLOCK
    if extra:
        a2 = np.concatenate([a2, np.zeros((extra, a2.shape[1]))])
    return (a2 @ b)[:m].reshape(lead + (b.shape[1],))


def matmul(a, b):
    """``a @ b`` with ``b`` 2-D and ``a`` of any rank >= 1."""
    a, b = tensor(a), tensor(b)
    if b.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def back(g):
        ga = g @ bd.T if a.requires_grad else None
        gb = None
        if b.requires_grad:
            gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return _make(stable_matmul(ad, bd), (a, b), back)


# --------------------------------------------------------------------------
# probabilities
# --------------------------------------------------------------------------


def softmax(a, axis=-1):
    x = a.data
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    out = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make(out, (a,), back)


def log_softmax(a, axis=-1):
    x = a.data
    z = x - x.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    p = np.exp(out)

    def back(g):
        return (g - p * g.sum(axis=axis, keepdims=True),)

    return _make(out, (a,), back)


def pick(a, idx):
    """Row-wise selection ``a[i, idx[i]]`` of a 2-D tensor."""
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(len(idx))
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        out[rows, idx] = g
        return (out,)

    return _make(a.data[rows, idx], (a,), back)
