"""Module system and the standard layer set."""

import math

import numpy as np

from ..errors import ShapeError
from ..rng import make_rng
from . import functional as F
from .tensor import Tensor, matmul, relu, tensor


class Parameter(Tensor):
    """A trainable leaf tensor plus the rule used to initialize it."""

    __slots__ = ("init",)

    def __init__(self, shape, init=("zeros",)):
        super().__init__(np.zeros(shape), requires_grad=True)
        self.init = init


class Module:
    """Container with hierarchical parameter names.

    Attributes holding a :class:`Parameter`, a :class:`Module` or a list of
    modules are discovered in assignment order, which fixes the parameter
    manifest order used by checkpoints. Non-trainable state lives in
    ``self._buffers`` (name -> ndarray, updated in place).
    """

    def __init__(self):
        self.training = True
        self._buffers = {}

    # -- traversal ----------------------------------------------------------

    def _children(self):
        for key, val in vars(self).items():
            if isinstance(val, Module):
                yield key, val
            elif isinstance(val, (list, tuple)) and val and all(isinstance(v, Module) for v in val):
                for i, v in enumerate(val):
                    yield f"{key}.{i}", v

    def named_modules(self, prefix=""):
        yield prefix, self
        for key, child in self._children():
            yield from child.named_modules(f"{prefix}.{key}" if prefix else key)

    def named_parameters(self, prefix=""):
        for mod_name, mod in self.named_modules(prefix):
            for key, val in vars(mod).items():
                if isinstance(val, Parameter):
                    yield (f"{mod_name}.{key}" if mod_name else key), val

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix=""):
        for mod_name, mod in self.named_modules(prefix):
            for key, arr in mod._buffers.items():
                yield (f"{mod_name}.{key}" if mod_name else key), arr

    # -- modes --------------------------------------------------------------

    def train(self, mode=True):
        for _, m in self.named_modules():
            m.training = mode
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def set_dropout_rng(self, seed, epoch=None, prefix=""):
        """Give every dropout layer its own stream keyed by its name."""
        for name, m in self.named_modules(prefix):
            if isinstance(m, Dropout):
                m.rng = make_rng(seed, f"dropout:{name}", epoch)

    # -- state --------------------------------------------------------------

    def state_dict(self, prefix=""):
        """Ordered name -> array of parameters followed by buffers (copies)."""
        state = {n: p.data.copy() for n, p in self.named_parameters(prefix)}
        state.update({n: b.copy() for n, b in self.named_buffers(prefix)})
        return state

    def load_state_dict(self, state, prefix="", strict=True):
        params = dict(self.named_parameters(prefix))
        buffers = dict(self.named_buffers(prefix))
        missing = [n for n in list(params) + list(buffers) if n not in state]
        if strict and missing:
            raise KeyError(f"missing entries in state: {missing[:5]}")
        for n, p in params.items():
            if n in state:
                _copy_into(p.data, state[n], n)
        for n, b in buffers.items():
            if n in state:
                _copy_into(b, state[n], n)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _copy_into(dst, src, name):
    src = np.asarray(src, dtype=np.float64)
    if src.shape != dst.shape:
        raise ShapeError(f"{name}: stored shape {src.shape} does not match {dst.shape}")
    dst[...] = src


def init_parameters(module, seed, prefix=""):
    """Draw every parameter from its own stream keyed by (seed, name).

    Weights use U(-sqrt(1/fan_in), sqrt(1/fan_in)); biases start at zero and
    normalization gains at one.
    """
    for name, p in module.named_parameters(prefix):
        kind = p.init[0]
        if kind == "uniform":
            bound = math.sqrt(1.0 / p.init[1])
            p.data[...] = make_rng(seed, f"init:{name}").uniform(-bound, bound, p.shape)
        elif kind == "ones":
            p.data[...] = 1.0
        elif kind == "zeros":
            p.data[...] = 0.0
        else:  # pragma: no cover - guarded by construction
            raise ValueError(f"unknown init rule {kind!r}")


def count_elements(module, prefix=""):
    return sum(p.data.size for _, p in module.named_parameters(prefix))


# --------------------------------------------------------------------------
# layers
# --------------------------------------------------------------------------


class Linear(Module):
    """y = x W + b with W stored as (in, out)."""

    def __init__(self, n_in, n_out, bias=True):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.weight = Parameter((n_in, n_out), ("uniform", n_in))
        self.bias = Parameter((n_out,)) if bias else None

    def forward(self, x):
        x = tensor(x)
        if x.shape[-1] != self.n_in:
            raise ShapeError(f"Linear({self.n_in}->{self.n_out}) got input {x.shape}")
        y = matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class _ConvNd(Module):
    nd = 0

    def __init__(self, c_in, c_out, k=3):
        super().__init__()
        fan_in = c_in * k**self.nd
        self.weight = Parameter((c_out, c_in) + (k,) * self.nd, ("uniform", fan_in))
        self.bias = Parameter((c_out,))

    def forward(self, x):
        return F._conv(x, self.weight, self.bias, self.nd)


class Conv1d(_ConvNd):
    nd = 1


class Conv2d(_ConvNd):
    nd = 2


class BatchNorm(Module):
    """Batch normalization over axis 1 for (B, C), (B, C, L) or (B, C, H, W)."""

    def __init__(self, channels, momentum=0.9, eps=1e-5):
        super().__init__()
        self.momentum, self.eps = momentum, eps
        self.weight = Parameter((channels,), ("ones",))
        self.bias = Parameter((channels,))
        self._buffers = {"running_mean": np.zeros(channels), "running_var": np.ones(channels)}

    def forward(self, x):
        return F.batch_norm(
            x,
            self.weight,
            self.bias,
            self._buffers["running_mean"],
            self._buffers["running_var"],
            self.training,
            self.momentum,
            self.eps,
        )


class LayerNorm(Module):
    def __init__(self, width, eps=1e-5):
        super().__init__()
        self.eps = eps
        self.weight = Parameter((width,), ("ones",))
        self.bias = Parameter((width,))

    def forward(self, x):
        return F.layer_norm(x, self.weight, self.bias, self.eps)


class Dropout(Module):
    def __init__(self, p):
        super().__init__()
        self.p = p
        self.rng = np.random.default_rng(0)

    def forward(self, x):
        return F.dropout(x, self.p, self.rng, self.training)


class ReLU(Module):
    def forward(self, x):
        return relu(x)


class Sequential(Module):
    def __init__(self, *layers):
        super().__init__()
        self.layers = list(layers)

    def _children(self):
        for i, m in enumerate(self.layers):
            yield str(i), m

    def forward(self, x):
        for m in self.layers:
            x = m(x)
        return x
