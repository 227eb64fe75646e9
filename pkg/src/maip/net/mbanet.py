"""Multi-branch attention network: branch ResUNets, fusion unit, branch attention.

All branch sub-networks run as one grouped computation. Branch weights
carry a leading group axis of size L (one slice per frequency frame);
with ``multi_branch=False`` there is a single group that sees all L
noise channels at once.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import ParamSet, Tensor
from .config import MBANetConfig


def _conv_shape(groups, cout, cin, k):
    return (groups, cout, cin, k, k)


def _layout(cfg):
    """Yield ``(name, shape, fan_in)`` for every learnable array.

    ``fan_in`` is None for biases (zero init) and for the scaling vector
    (ones init).
    """
    groups = cfg.branches if cfg.multi_branch else 1
    io = 1 if cfg.multi_branch else cfg.branches
    widths = cfg.widths
    nd = len(cfg.aspp_dilations)

    def conv(name, cout, cin, k, bias=True):
        yield f"{name}.w", _conv_shape(groups, cout, cin, k), cin * k * k
        if bias:
            yield f"{name}.b", (groups, cout), None

    def fc(name, cout, cin):
        yield f"{name}.w", (groups, cout, cin), cin
        yield f"{name}.b", (groups, cout), None

    def aspp(name, cin, cout):
        yield from conv(f"{name}.pool1x1", cout, cin, 1)
        for d in cfg.aspp_dilations:
            yield from conv(f"{name}.dil{d}", cout, cin, 3)
        yield from conv(f"{name}.merge", cout, cout * (nd + 1), 1)

    c0 = widths[0]
    yield from conv("stem.conv1", c0, io, 3)
    yield from conv("stem.conv2", c0, c0, 3)
    yield from conv("stem.shortcut", c0, io, 1)
    for j in range(cfg.encoder_depth):
        cin, cout = widths[j], widths[j + 1]
        hidden = max(1, cin // cfg.se_reduction)
        yield from fc(f"enc{j}.se1", hidden, cin)
        yield from fc(f"enc{j}.se2", cin, hidden)
        yield from conv(f"enc{j}.conv1", cout, cin, 3)
        yield from conv(f"enc{j}.conv2", cout, cout, 3)
        yield from conv(f"enc{j}.shortcut", cout, cin, 1)
    yield from aspp("bridge", widths[-1], widths[-1])
    for j in range(cfg.encoder_depth):
        cd = widths[cfg.encoder_depth - j]
        cs = widths[cfg.encoder_depth - j - 1]
        cout = cs
        yield from conv(f"dec{j}.gate_up", cs, cd, 1)
        yield from conv(f"dec{j}.gate_skip", cs, cs, 1)
        yield from conv(f"dec{j}.gate_psi", 1, cs, 1)
        yield from conv(f"dec{j}.conv1", cout, cd + cs, 3)
        yield from conv(f"dec{j}.conv2", cout, cout, 3)
        yield from conv(f"dec{j}.shortcut", cout, cd + cs, 1)
    yield from aspp("tail.aspp", c0, c0)
    yield from conv("tail.out", io, c0, 1)

    L, fu = cfg.branches, cfg.fu_channels
    yield "fu.conv3a.w", (1, fu, L, 3, 3), L * 9
    yield "fu.conv3a.b", (1, fu), None
    yield "fu.conv3b.w", (1, fu, fu, 3, 3), fu * 9
    yield "fu.conv3b.b", (1, fu), None
    yield "fu.conv1.w", (1, L, fu, 1, 1), fu
    yield "fu.conv1.b", (1, L), None
    if cfg.attention:
        yield "ba.A", (L, L), L
        yield "ba.w", (L,), None


def init_params(cfg: MBANetConfig, seed=None):
    """Kaiming-normal weights for leaky-ReLU gain, zero biases, w = 1.

    The last fusion layer follows ``cfg.fu_output_zero`` and
    ``cfg.fu_output_bias``. Draws happen in a fixed layout order (the
    zeroed layer still consumes its draws) so a seed pins every byte.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    gain2 = 2.0 / (1.0 + cfg.leaky_slope ** 2)
    params = ParamSet()
    for name, shape, fan_in in _layout(cfg):
        if name == "ba.w":
            value = np.ones(shape)
        elif fan_in is None:
            value = np.zeros(shape)
        else:
            value = rng.standard_normal(shape) * np.sqrt(gain2 / fan_in)
        if name == "fu.conv1.w" and cfg.fu_output_zero:
            value = np.zeros(shape)
        elif name == "fu.conv1.b":
            value = np.full(shape, float(cfg.fu_output_bias))
        params.add(name, value)
    return params


def branch_params(params, index):
    """Slice out the weights of one branch as a single-group ParamSet."""
    out = ParamSet()
    for name, t in params.items():
        if name.startswith(("fu.", "ba.")):
            continue
        out.add(name, t.data[index:index + 1])
    return out


class _Net:
    def __init__(self, cfg, params):
        self.cfg = cfg
        self.p = params
        self.slope = cfg.leaky_slope

    def act(self, x):
        return ad.leaky_relu(x, self.slope)

    def norm(self, x):
        return ad.aln(x) if self.cfg.norm == "aln" else ad.instance_norm(x)

    def conv(self, name, x, stride=1, dilation=1):
        return ad.conv2d(x, self.p[f"{name}.w"], self.p.get(f"{name}.b"),
                         stride=stride, dilation=dilation)

    def se(self, name, x):
        s = ad.global_avg_pool(x)
        s = self.act(ad.fully_connected(s, self.p[f"{name}.se1.w"], self.p[f"{name}.se1.b"]))
        s = ad.sigmoid(ad.fully_connected(s, self.p[f"{name}.se2.w"], self.p[f"{name}.se2.b"]))
        g, c = s.shape
        return ad.mul(x, ad.reshape(s, (g, c, 1, 1)))

    def aspp(self, name, x):
        parts = [self.act(self.conv(f"{name}.pool1x1", x))]
        for d in self.cfg.aspp_dilations:
            parts.append(self.act(self.conv(f"{name}.dil{d}", x, dilation=d)))
        return self.conv(f"{name}.merge", ad.concat(parts, axis=1))

    def stem(self, x):
        h = self.conv("stem.conv1", x)
        h = self.conv("stem.conv2", self.act(self.norm(h)))
        return ad.add(h, self.conv("stem.shortcut", x))

    def encoder(self, j, x):
        s = self.se(f"enc{j}", x)
        h = self.conv(f"enc{j}.conv1", self.act(self.norm(s)), stride=2)
        h = self.conv(f"enc{j}.conv2", self.act(self.norm(h)))
        return ad.add(h, self.conv(f"enc{j}.shortcut", s, stride=2))

    def decoder(self, j, x, skip):
        up = ad.bilinear_upsample(x)
        # additive attention gate on the encoder skip
        a = self.act(ad.add(self.conv(f"dec{j}.gate_up", up),
                            self.conv(f"dec{j}.gate_skip", skip)))
        a = ad.sigmoid(self.conv(f"dec{j}.gate_psi", a))
        cat = ad.concat([up, ad.mul(skip, a)], axis=1)
        h = self.conv(f"dec{j}.conv1", self.act(self.norm(cat)))
        h = self.conv(f"dec{j}.conv2", self.act(self.norm(h)))
        return ad.add(h, self.conv(f"dec{j}.shortcut", cat))

    def branch(self, x):
        skips = [self.stem(x)]
        for j in range(self.cfg.encoder_depth):
            skips.append(self.encoder(j, skips[-1]))
        h = self.aspp("bridge", skips.pop())
        for j in range(self.cfg.encoder_depth):
            h = self.decoder(j, h, skips.pop())
        h = self.aspp("tail.aspp", h)
        return self.act(self.conv("tail.out", h))

    def fusion(self, b):
        h = self.conv("fu.conv3a", b)
        h = self.conv("fu.conv3b", h)
        return ad.sigmoid(self.conv("fu.conv1", h))


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def branch_forward(z, params, cfg: MBANetConfig):
    """Run the branch sub-networks on grouped input ``(G, C, H, W)``.

    A single ``(1, H, W)`` image is accepted with single-group params
    (see :func:`branch_params`) and returns ``(1, H, W)``.
    """
    z = _as_tensor(z)
    single = z.ndim == 3
    if single:
        z = ad.reshape(z, (1,) + z.shape)
    if z.shape[-2:] != (cfg.height, cfg.width):
        raise ValueError(f"input is {z.shape[-2:]}, config expects {(cfg.height, cfg.width)}")
    out = _Net(cfg, params).branch(z)
    return ad.reshape(out, out.shape[1:]) if single else out


def fusion_unit(branches, params, cfg: MBANetConfig):
    """Concatenate L single-channel maps and fuse to ``(L, H, W)`` in (0, 1)."""
    if isinstance(branches, (list, tuple)):
        if len(branches) != cfg.branches:
            raise ValueError(f"expected {cfg.branches} branch outputs, got {len(branches)}")
        b = ad.concat([_as_tensor(x) for x in branches], axis=0)
    else:
        b = _as_tensor(branches)
    if b.shape[-3] != cfg.branches:
        raise ValueError(f"expected {cfg.branches} branch channels, got {b.shape[-3]}")
    b = ad.reshape(b, (1, cfg.branches, cfg.height, cfg.width))
    f = _Net(cfg, params).fusion(b)
    return ad.reshape(f, (cfg.branches, cfg.height, cfg.width))


def branch_attention(f, A, w):
    """``diag(w) @ softmax_rows(A) @ F`` with F flattened to ``(L, H*W)``."""
    f, A, w = _as_tensor(f), _as_tensor(A), _as_tensor(w)
    L, H, W = f.shape
    if A.shape != (L, L) or w.shape != (L,):
        raise ValueError(f"attention shapes {A.shape}, {w.shape} do not fit {L} channels")
    mixed = ad.matmul(ad.softmax_rows(A), ad.reshape(f, (L, H * W)))
    scaled = ad.mul(ad.reshape(w, (L, 1)), mixed)
    return ad.reshape(scaled, (L, H, W))


def net_forward(z, params, cfg: MBANetConfig):
    """Full network: split the noise, run branches, fuse, attend. Returns (L, H, W)."""
    L, H, W = cfg.branches, cfg.height, cfg.width
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (L, H, W):
        raise ValueError(f"noise input must be {(L, H, W)}, got {z.shape}")
    x = z.reshape(L, 1, H, W) if cfg.multi_branch else z.reshape(1, L, H, W)
    b = branch_forward(Tensor(x), params, cfg)
    f = fusion_unit(ad.reshape(b, (L, H, W)), params, cfg)
    if not cfg.attention:
        return f
    return branch_attention(f, params["ba.A"], params["ba.w"])


def sample_noise(cfg: MBANetConfig, seed):
    """Fixed network input drawn once from U(0, 1)."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(cfg.branches, cfg.height, cfg.width))
