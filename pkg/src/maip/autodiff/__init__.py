from .ops import (LEAKY_SLOPE, add, aln, bilinear_upsample, concat, conv2d,
                  frobenius_loss, fully_connected, global_avg_pool, instance_norm,
                  l1_loss, leaky_relu, matmul, mul, reshape, sigmoid, softmax_rows,
                  sub, take, total, transpose)
from .optim import AdamState, ParamSet, adam_step
from .tensor import GraphError, Tensor, as_tensor, graph_listing

__all__ = [
    "LEAKY_SLOPE", "AdamState", "GraphError", "ParamSet", "Tensor", "adam_step", "add",
    "aln", "as_tensor", "bilinear_upsample", "concat", "conv2d", "frobenius_loss",
    "fully_connected", "global_avg_pool", "graph_listing", "instance_norm", "l1_loss",
    "leaky_relu", "matmul", "mul", "reshape", "sigmoid", "softmax_rows", "sub", "take",
    "total", "transpose",
]
