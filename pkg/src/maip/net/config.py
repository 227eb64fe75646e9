from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np


@dataclass(frozen=True)
class MBANetConfig:
    """Shape and ablation switches of the multi-branch attention network.

    ``branches`` is the number of frequency frames L. ``attention``,
    ``multi_branch`` and ``norm`` exist for ablation runs; the defaults
    are the full model.

    ``fu_output_zero`` and ``fu_output_bias`` set the starting point of the
    last fusion layer: zero weights with a negative bias make the first
    image a flat ``sigmoid(bias)``, which keeps the branch outputs from
    being driven below zero by the first large updates. Set them to
    ``False`` and ``0.0`` for a plain Kaiming start.
    """

    branches: int
    height: int
    width: int
    base_channels: int = 16
    encoder_depth: int = 3
    aspp_dilations: tuple = (1, 2, 4)
    se_reduction: int = 4
    leaky_slope: float = 1e-4
    fu_channels: int = 32
    attention: bool = True
    multi_branch: bool = True
    norm: str = "aln"
    fu_output_zero: bool = True
    fu_output_bias: float = -4.0
    seed: int = 0
    widths: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "aspp_dilations", tuple(int(d) for d in self.aspp_dilations))
        if self.branches < 1:
            raise ValueError("branches must be >= 1")
        if self.encoder_depth < 1:
            raise ValueError("encoder_depth must be >= 1")
        step = 2 ** self.encoder_depth
        if self.height % step or self.width % step:
            raise ValueError(
                f"height and width must be divisible by {step} for {self.encoder_depth} "
                f"stride-2 encoders, got {self.height}x{self.width}")
        if not self.aspp_dilations or min(self.aspp_dilations) < 1:
            raise ValueError("aspp_dilations must be a nonempty list of positive integers")
        if self.base_channels < 1 or self.fu_channels < 1 or self.se_reduction < 1:
            raise ValueError("channel counts and se_reduction must be positive")
        if not np.isfinite(self.fu_output_bias):
            raise ValueError("fu_output_bias must be finite")
        if self.norm not in ("aln", "batch"):
            raise ValueError(f"norm must be 'aln' or 'batch', got {self.norm!r}")
        widths = tuple(self.base_channels * 2 ** i for i in range(self.encoder_depth + 1))
        object.__setattr__(self, "widths", widths)

    def to_dict(self):
        d = asdict(self)
        d.pop("widths")
        d["aspp_dilations"] = list(self.aspp_dilations)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls) if f.init}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown network config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
