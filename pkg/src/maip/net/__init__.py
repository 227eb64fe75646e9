from .config import MBANetConfig
from .mbanet import (branch_attention, branch_forward, branch_params, fusion_unit,
                     init_params, net_forward, sample_noise)

__all__ = [
    "MBANetConfig", "branch_attention", "branch_forward", "branch_params", "fusion_unit",
    "init_params", "net_forward", "sample_noise",
]
