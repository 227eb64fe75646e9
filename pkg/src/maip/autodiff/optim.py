"""Learnable parameter collections and the Adam update."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .tensor import Tensor


class ParamSet(dict):
    """Ordered name -> learnable :class:`Tensor` mapping.

    :meth:`flat` packs every value into one contiguous buffer and turns
    the tensors' ``data`` into views of it, so optimizers update all
    parameters with a handful of vectorized operations.
    """

    _flat = None

    def add(self, name, value):
        if name in self:
            raise KeyError(f"duplicate parameter name {name!r}")
        value = np.asarray(value, dtype=np.float64)
        if not np.all(np.isfinite(value)):
            raise ValueError(f"parameter {name!r} has non-finite entries")
        t = Tensor(value, requires_grad=True, name=name)
        self[name] = t
        self._flat = None
        return t

    def flat(self):
        if self._flat is None:
            buf = np.empty(self.count())
            pos = 0
            for t in self.values():
                n = t.data.size
                buf[pos:pos + n] = t.data.ravel()
                t.data = buf[pos:pos + n].reshape(t.data.shape)
                pos += n
            self._flat = buf
        return self._flat

    def flat_grad(self, out=None):
        return np.concatenate([t.grad.ravel() for t in self.values()], out=out)

    def zero_grad(self):
        for t in self.values():
            t.grad = None

    def count(self):
        return int(sum(t.data.size for t in self.values()))

    def state_arrays(self):
        return {name: t.data.copy() for name, t in self.items()}

    def load_arrays(self, arrays):
        for name, value in arrays.items():
            self[name].data[...] = value


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = None
    v: np.ndarray = None
    _scratch: np.ndarray = None


def adam_step(params, state):
    """One bias-corrected Adam update, in place on ``params``.

    Every parameter must carry a gradient; a missing one is an error
    rather than a silent skip.
    """
    missing = [name for name, t in params.items() if t.grad is None]
    if missing:
        raise ValueError(f"no gradient for parameters: {', '.join(missing[:5])}")
    flat = params.flat()
    if state.m is None:
        state.m = np.zeros_like(flat)
        state.v = np.zeros_like(flat)
        state._scratch = np.empty_like(flat)
    g = params.flat_grad(out=state._scratch)
    state.step += 1
    _adam_kernel(flat, g, state.m, state.v, state.lr, state.beta1, state.beta2,
                 state.eps, 1.0 - state.beta1 ** state.step,
                 1.0 - state.beta2 ** state.step)
    return params


@numba.njit(cache=True)
def _adam_kernel(p, g, m, v, lr, b1, b2, eps, c1, c2):
    # one fused pass; the update is memory bound
    for i in range(p.size):
        gi = g[i]
        mi = b1 * m[i] + (1.0 - b1) * gi
        vi = b2 * v[i] + (1.0 - b2) * gi * gi
        m[i] = mi
        v[i] = vi
        p[i] -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)
