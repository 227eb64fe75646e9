"""Untrained-network reconstruction of multi-frequency conductivity stacks.

The network output is pushed through the lifted sensitivity matrix and
compared with the measured frames; Adam updates the network weights for a
fixed number of iterations. The input noise is drawn once per run.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .geometry import (ConductivityStack, MeasurementFrameSet, SensitivityMatrix, extract)
from .net import MBANetConfig, init_params, net_forward, sample_noise

logger = logging.getLogger(__name__)

LOSSES = ("l1", "frobenius")


class DivergenceError(RuntimeError):
    """The objective became non-finite during optimization."""

    def __init__(self, iteration, param_norm, loss):
        super().__init__(f"non-finite loss {loss} at iteration {iteration} "
                         f"(parameter norm {param_norm:.4g})")
        self.iteration = iteration
        self.param_norm = param_norm


@dataclass(frozen=True)
class ReconConfig:
    iterations: int = 900
    lr: float = 0.00012
    seed: int = 0
    loss: str = "l1"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")

    def to_dict(self):
        return asdict(self)


@dataclass
class ReconResult:
    stack: ConductivityStack
    loss_trace: list
    attention: np.ndarray | None
    scaling: np.ndarray | None
    wall_time: float
    frames: np.ndarray = field(repr=False, default=None)


def _check_inputs(J, V, netcfg):
    if not isinstance(J, SensitivityMatrix):
        raise TypeError("J must be a SensitivityMatrix")
    Vm = V.V if isinstance(V, MeasurementFrameSet) else np.asarray(V, dtype=np.float64)
    if Vm.ndim != 2:
        raise ValueError(f"measurements must be (M, L), got {Vm.shape}")
    if Vm.shape[0] != J.n_measurements:
        raise ValueError(f"{Vm.shape[0]} measurements but the sensitivity has "
                         f"{J.n_measurements} rows")
    if Vm.shape[1] != netcfg.branches:
        raise ValueError(f"{Vm.shape[1]} frames but the network has {netcfg.branches} branches")
    if J.grid.shape != (netcfg.height, netcfg.width):
        raise ValueError(f"sensitivity grid {J.grid.shape} does not match the network "
                         f"{(netcfg.height, netcfg.width)}")
    return Vm


def objective(frames, lifted, V, kind="l1"):
    """Data misfit of network frames (L, H, W) under the lifted forward map."""
    L = frames.shape[0]
    cols = ad.transpose(ad.reshape(frames, (L, -1)))
    pred = ad.matmul(lifted, cols)
    if kind == "l1":
        return ad.l1_loss(pred, V)
    return ad.frobenius_loss(pred, V)


def run_maip(J, V, netcfg: MBANetConfig, cfg: ReconConfig = ReconConfig(), callback=None):
    """Fit the network weights to the measurements and return the final frames.

    ``callback(iteration, loss)`` is invoked after every update when given.
    Raises :class:`DivergenceError` on a non-finite loss.
    """
    Vm = _check_inputs(J, V, netcfg)
    start = time.perf_counter()
    params = init_params(netcfg, cfg.seed)
    z = sample_noise(netcfg, cfg.seed + 1)
    state = ad.AdamState(lr=cfg.lr)
    lifted = J.lifted
    trace = []
    for it in range(cfg.iterations):
        frames = net_forward(z, params, netcfg)
        loss = objective(frames, lifted, Vm, cfg.loss)
        value = float(loss.data)
        if not np.isfinite(value):
            norm = float(np.sqrt(sum(np.sum(t.data ** 2) for t in params.values())))
            raise DivergenceError(it, norm, value)
        trace.append(value)
        loss.backward()
        ad.adam_step(params, state)
        params.zero_grad()
        if callback is not None:
            callback(it, value)
        if it % 100 == 0:
            logger.debug("iteration %d loss %.6g", it, value)
    final = net_forward(z, params, netcfg).data
    stack = ConductivityStack(extract(final, J.projection), J.grid)
    attention = scaling = None
    if netcfg.attention:
        A = params["ba.A"].data
        e = np.exp(A - A.max(axis=1, keepdims=True))
        attention = e / e.sum(axis=1, keepdims=True)
        scaling = params["ba.w"].data.copy()
    return ReconResult(stack, trace, attention, scaling, time.perf_counter() - start, final)


def loss_trace_export(result, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "loss"])
        for i, value in enumerate(result.loss_trace, start=1):
            writer.writerow([i, repr(float(value))])


def moving_average(values, window=50):
    values = np.asarray(values, dtype=np.float64)
    if values.size < window:
        return values.copy()
    kernel = np.full(window, 1.0 / window)
    return np.convolve(values, kernel, mode="valid")


def run_tikhonov_baseline(J, V, lam):
    """Per-column solution of ``(J.T J + lam I) sigma = J.T v``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    Jm = J.J if isinstance(J, SensitivityMatrix) else np.asarray(J, dtype=np.float64)
    Vm = V.V if isinstance(V, MeasurementFrameSet) else np.asarray(V, dtype=np.float64)
    n = Jm.shape[1]
    try:
        sigma = np.linalg.solve(Jm.T @ Jm + lam * np.eye(n), Jm.T @ Vm)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"Tikhonov solve failed: {exc}") from exc
    if isinstance(J, SensitivityMatrix):
        return ConductivityStack(sigma, J.grid)
    return sigma
