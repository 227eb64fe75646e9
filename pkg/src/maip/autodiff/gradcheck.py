"""Central finite-difference checks against reverse-mode gradients."""

from __future__ import annotations

import numpy as np


def relative_error(analytic, numeric, floor=1e-8):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def roundoff_floor(loss_value, h, tol=1e-3):
    """Smallest gradient a central difference can resolve to ``tol``.

    Evaluating ``f`` carries an error near ``eps * |f|``, so the quotient
    ``(f+ - f-) / 2h`` is noisy at the ``eps * |f| / h`` level.
    """
    return max(1e-8, np.finfo(float).eps * abs(loss_value) / (h * tol))


def check_gradients(loss_fn, tensors, n_coords=10, h=1e-5, seed=0, floor=None):
    """Compare backward gradients with central differences.

    ``loss_fn`` rebuilds the graph from the current ``tensors`` values and
    returns a scalar Tensor. Returns ``{name: max relative error}`` over
    ``n_coords`` random coordinates per tensor. The denominator of the
    relative error is floored at ``floor``, by default the roundoff level
    from :func:`roundoff_floor`.
    """
    rng = np.random.default_rng(seed)
    for t in tensors.values():
        t.grad = None
    loss = loss_fn()
    if floor is None:
        floor = roundoff_floor(float(loss.data), h)
    loss.backward()
    analytic = {name: t.grad.copy() for name, t in tensors.items()}
    worst = {}
    for name, t in tensors.items():
        flat = t.data.reshape(-1)
        picks = rng.choice(flat.size, size=min(n_coords, flat.size), replace=False)
        errs = []
        for idx in picks:
            saved = flat[idx]
            flat[idx] = saved + h
            up = float(loss_fn().data)
            flat[idx] = saved - h
            down = float(loss_fn().data)
            flat[idx] = saved
            numeric = (up - down) / (2 * h)
            errs.append(relative_error(analytic[name].reshape(-1)[idx], numeric, floor))
        worst[name] = max(errs)
    return worst
