"""Differentiable operations.

Feature maps are either ``(C, H, W)`` or grouped ``(G, C, H, W)``; the
group axis stacks independent sub-networks that each own their weights,
so one call evaluates every branch of a multi-branch network.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, accumulate, as_tensor, make_node

LEAKY_SLOPE = 1e-4


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        accumulate(a, _unbroadcast(g, a.shape))
        accumulate(b, _unbroadcast(g, b.shape))

    return make_node(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        accumulate(a, _unbroadcast(g, a.shape))
        accumulate(b, _unbroadcast(-g, b.shape))

    return make_node(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            accumulate(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            accumulate(b, _unbroadcast(g * a.data, b.shape))

    return make_node(a.data * b.data, (a, b), backward, "mul")


def matmul(a, b):
    """Matrix product with numpy's batching rules for leading axes."""
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            accumulate(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            accumulate(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return make_node(a.data @ b.data, (a, b), backward, "matmul")


def reshape(x, shape):
    x = as_tensor(x)
    old = x.shape

    def backward(g):
        accumulate(x, g.reshape(old))

    return make_node(x.data.reshape(shape), (x,), backward, "reshape")


def transpose(x, axes=None):
    x = as_tensor(x)
    axes = tuple(reversed(range(x.ndim))) if axes is None else tuple(axes)
    inverse = np.argsort(axes)

    def backward(g):
        accumulate(x, g.transpose(inverse))

    return make_node(x.data.transpose(axes), (x,), backward, "transpose")


def take(x, index, axis=0):
    """Gather entries of ``x`` along ``axis``; the scatter-add is the adjoint."""
    x = as_tensor(x)
    index = np.asarray(index)

    def backward(g):
        out = np.zeros_like(x.data)
        np.add.at(out, (slice(None),) * axis + (index,), g)
        accumulate(x, out)

    return make_node(np.take(x.data, index, axis=axis), (x,), backward, "take")


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, cuts, axis=axis)):
            accumulate(t, piece)

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return make_node(data, tuple(tensors), backward, "concat")


def total(x):
    x = as_tensor(x)

    def backward(g):
        accumulate(x, np.broadcast_to(g, x.shape).copy())

    return make_node(x.data.sum(), (x,), backward, "sum")


def leaky_relu(x, slope=LEAKY_SLOPE):
    x = as_tensor(x)
    pos = x.data >= 0
    factor = np.where(pos, 1.0, slope)

    def backward(g):
        accumulate(x, g * factor)

    return make_node(x.data * factor, (x,), backward, "leaky_relu")


def sigmoid(x):
    x = as_tensor(x)
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x.data))
    y = np.where(x.data >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(g):
        accumulate(x, g * y * (1.0 - y))

    return make_node(y, (x,), backward, "sigmoid")


def softmax_rows(x):
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        accumulate(x, y * (g - (g * y).sum(axis=-1, keepdims=True)))

    return make_node(y, (x,), backward, "softmax_rows")


def global_avg_pool(x):
    """``(..., C, H, W) -> (..., C)``."""
    x = as_tensor(x)
    h, w = x.shape[-2:]

    def backward(g):
        accumulate(x, np.broadcast_to(g[..., None, None] / (h * w), x.shape).copy())

    return make_node(x.data.mean(axis=(-2, -1)), (x,), backward, "global_avg_pool")


def fully_connected(x, weight, bias=None):
    """Dense layer. ``x``: (..., Cin), ``weight``: (..., Cout, Cin), ``bias``: (..., Cout)."""
    x, weight = as_tensor(x), as_tensor(weight)
    parents = (x, weight) if bias is None else (x, weight, as_tensor(bias))
    y = (weight.data @ x.data[..., None])[..., 0]
    if bias is not None:
        y = y + parents[2].data

    def backward(g):
        if x.requires_grad:
            accumulate(x, (np.swapaxes(weight.data, -1, -2) @ g[..., None])[..., 0])
        if weight.requires_grad:
            accumulate(weight, g[..., :, None] * x.data[..., None, :])
        if bias is not None:
            accumulate(parents[2], g)

    return make_node(y, parents, backward, "fully_connected")


def _conv_geometry(h, w, k, stride, dilation):
    pad = dilation * (k - 1) // 2
    ho = (h + 2 * pad - dilation * (k - 1) - 1) // stride + 1
    wo = (w + 2 * pad - dilation * (k - 1) - 1) // stride + 1
    return pad, ho, wo


def conv2d(x, weight, bias=None, stride=1, dilation=1):
    """Cross-correlation with zero "same" padding.

    ``x`` is (Cin, H, W) with a (Cout, Cin, k, k) kernel, or grouped
    (G, Cin, H, W) with a (G, Cout, Cin, k, k) kernel. Stride 2 halves
    the spatial size (rounding up).
    """
    x, weight = as_tensor(x), as_tensor(weight)
    grouped = x.ndim == 4
    if x.ndim not in (3, 4) or weight.ndim != x.ndim + 1:
        raise ValueError(f"conv2d shape mismatch: input {x.shape}, kernel {weight.shape}")
    xd = x.data if grouped else x.data[None]
    wd = weight.data if grouped else weight.data[None]
    g_, cin, h, w = xd.shape
    _, cout, kcin, k, k2 = wd.shape
    if kcin != cin or k != k2 or wd.shape[0] != g_:
        raise ValueError(f"conv2d shape mismatch: input {x.shape}, kernel {weight.shape}")
    if k % 2 == 0:
        raise ValueError("conv2d needs an odd kernel size")
    if stride not in (1, 2) or dilation < 1:
        raise ValueError("conv2d supports stride 1 or 2 and dilation >= 1")
    pad, ho, wo = _conv_geometry(h, w, k, stride, dilation)
    xp = np.pad(xd, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else xd
    taps = [(i * dilation, j * dilation) for i in range(k) for j in range(k)]
    hspan, wspan = stride * (ho - 1) + 1, stride * (wo - 1) + 1
    cols = np.stack([xp[:, :, r:r + hspan:stride, c:c + wspan:stride] for r, c in taps],
                    axis=2).reshape(g_, cin * k * k, ho * wo)
    wmat = wd.reshape(g_, cout, cin * k * k)
    out = wmat @ cols
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        bd = bias.data if grouped else bias.data[None]
        out += bd[..., None]
        parents.append(bias)
    out = out.reshape(g_, cout, ho, wo)

    def backward(gout):
        gd = (gout if grouped else gout[None]).reshape(g_, cout, ho * wo)
        if weight.requires_grad:
            gw = (gd @ np.swapaxes(cols, 1, 2)).reshape(wd.shape)
            accumulate(weight, gw if grouped else gw[0])
        if bias is not None and bias.requires_grad:
            gb = gd.sum(axis=-1)
            accumulate(bias, gb if grouped else gb[0])
        if x.requires_grad:
            gcols = (np.swapaxes(wmat, 1, 2) @ gd).reshape(g_, cin, k * k, ho, wo)
            gxp = np.zeros_like(xp)
            for t, (r, c) in enumerate(taps):
                gxp[:, :, r:r + hspan:stride, c:c + wspan:stride] += gcols[:, :, t]
            gx = gxp[:, :, pad:pad + h, pad:pad + w] if pad else gxp
            accumulate(x, gx if grouped else gx[0])

    return make_node(out if grouped else out[0], tuple(parents), backward, "conv2d")


def _upsample_matrix(n):
    # align_corners=False: output o samples source (o + 0.5) / 2 - 0.5, clamped
    m = np.zeros((2 * n, n))
    for o in range(2 * n):
        src = min(max((o + 0.5) / 2.0 - 0.5, 0.0), n - 1.0)
        lo = int(np.floor(src))
        hi = min(lo + 1, n - 1)
        frac = src - lo
        m[o, lo] += 1.0 - frac
        m[o, hi] += frac
    return m


def bilinear_upsample(x):
    """Double the two trailing spatial axes with bilinear interpolation."""
    x = as_tensor(x)
    uh = _upsample_matrix(x.shape[-2])
    uw = _upsample_matrix(x.shape[-1])
    y = uh @ x.data @ uw.T

    def backward(g):
        accumulate(x, uh.T @ g @ uw)

    return make_node(y, (x,), backward, "bilinear_upsample")


def aln(x, eps=1e-5):
    """Normalize each spatial position across the channel axis.

    Mean and population standard deviation are taken over channels; the
    result is ``(x - mean) / (std + eps)`` with no learnable affine.
    """
    x = as_tensor(x)
    axis = x.ndim - 3
    centred = x.data - x.data.mean(axis=axis, keepdims=True)
    std = np.sqrt((centred ** 2).mean(axis=axis, keepdims=True))
    inv = 1.0 / (std + eps)
    y = centred * inv
    c = x.shape[axis]

    def backward(g):
        gm = g - g.mean(axis=axis, keepdims=True)
        proj = (g * centred).sum(axis=axis, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(std > 0, inv ** 2 * proj / (c * std), 0.0)
        accumulate(x, inv * gm - coef * centred)

    return make_node(y, (x,), backward, "aln")


def instance_norm(x, eps=1e-5):
    """Per-channel normalization over spatial positions.

    This is what batch normalization reduces to with a batch of one; it
    serves as the ablation stand-in for the channel-wise ALN.
    """
    x = as_tensor(x)
    axes = (-2, -1)
    n = x.shape[-1] * x.shape[-2]
    centred = x.data - x.data.mean(axis=axes, keepdims=True)
    std = np.sqrt((centred ** 2).mean(axis=axes, keepdims=True))
    inv = 1.0 / (std + eps)
    y = centred * inv

    def backward(g):
        gm = g - g.mean(axis=axes, keepdims=True)
        proj = (g * centred).sum(axis=axes, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(std > 0, inv ** 2 * proj / (n * std), 0.0)
        accumulate(x, inv * gm - coef * centred)

    return make_node(y, (x,), backward, "instance_norm")


def l1_loss(pred, target):
    """Sum of absolute residuals; the subgradient uses sign(0) = 0."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"l1_loss shape mismatch: {pred.shape} vs {target.shape}")
    r = pred.data - target.data
    s = np.sign(r)

    def backward(g):
        accumulate(pred, g * s)
        accumulate(target, -g * s)

    return make_node(np.abs(r).sum(), (pred, target), backward, "l1_loss")


def frobenius_loss(pred, target):
    """Frobenius norm of the residual (not squared)."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"frobenius_loss shape mismatch: {pred.shape} vs {target.shape}")
    r = pred.data - target.data
    norm = np.sqrt((r ** 2).sum())
    unit = r / norm if norm > 0 else np.zeros_like(r)

    def backward(g):
        accumulate(pred, g * unit)
        accumulate(target, -g * unit)

    return make_node(norm, (pred, target), backward, "frobenius_loss")
