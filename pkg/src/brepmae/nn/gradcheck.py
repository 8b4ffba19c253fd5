"""Finite-difference verification of reverse-mode gradients."""

import numpy as np

from .tensor import Tensor, no_grad


def numeric_grad(f, arrays, h=1e-5):
    """Central differences of the scalar ``f(*tensors)`` w.r.t. each array."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = arr[i]
            arr[i] = old + h
            with no_grad():
                fp = float(f().data)
            arr[i] = old - h
            with no_grad():
                fm = float(f().data)
            arr[i] = old
            g[i] = (fp - fm) / (2 * h)
        grads.append(g)
    return grads


def grad_check(f, inputs, h=1e-5):
    """Largest relative error between analytic and numeric gradients.

    ``f`` takes no arguments and closes over ``inputs`` (tensors with
    ``requires_grad``); it must return a scalar tensor. The relative error of
    an input is ``||a - n|| / max(||a||, ||n||)`` over all of its elements, so
    gradients that are zero on both sides count as exact.
    """
    inputs = [x for x in inputs if isinstance(x, Tensor)]
    for x in inputs:
        x.zero_grad()
    f().backward()
    analytic = [x.grad.copy() for x in inputs]
    numeric = numeric_grad(f, [x.data for x in inputs], h)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(np.linalg.norm(a), np.linalg.norm(n))
        if scale > 0.0:
            worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst
