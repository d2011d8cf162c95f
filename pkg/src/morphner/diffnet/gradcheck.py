"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable

from .graph import Node, backward
from .params import ModelParameters


def grad_check(loss_fn: Callable[[], Node], params: ModelParameters,
               eps: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    `loss_fn` must rebuild the loss graph from the current parameter values
    and be deterministic (dropout off, fixed data).  Per entry the error is
    |a - n| / max(|a| + |n|, 1e-8); the max over all entries of all
    parameters is returned.
    """
    params.zero_grads()
    backward(loss_fn())
    analytic = {p.name: p.grad.copy() for p in params}
    params.zero_grads()

    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        grads = analytic[p.name].reshape(-1)
        for k in range(flat.size):
            saved = flat[k]
            flat[k] = saved + eps
            hi = float(loss_fn().value)
            flat[k] = saved - eps
            lo = float(loss_fn().value)
            flat[k] = saved
            numeric = (hi - lo) / (2.0 * eps)
            a = grads[k]
            err = abs(a - numeric) / max(abs(a) + abs(numeric), 1e-8)
            if err > worst:
                worst = err
    return worst
