"""Synthetic difference measurements, noise, and normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import FD, TD, ConductivityStack, MeasurementFrameSet, SensitivityMatrix
from .phantom import PhantomSpec
from .solver import ForwardModel, SensorModel, element_sample_points, pixel_average, pixel_overlap


def normalize(V_raw, V_ref, J_raw, background=1.0):
    """Relative voltage change and matching sensitivity rows.

    Returns ``((V_raw - V_ref) / V_ref, J_raw * background / V_ref[:, None])``
    so the normalized model maps relative conductivity change (delta
    sigma / background) to relative voltage change.
    """
    V_raw = np.asarray(V_raw, dtype=np.float64)
    V_ref = np.asarray(V_ref, dtype=np.float64)
    if np.any(V_ref == 0):
        raise ValueError("reference voltages must be nonzero")
    ref = V_ref if V_raw.ndim == 1 else V_ref.reshape(-1, *([1] * (V_raw.ndim - 1)))
    V = (V_raw - ref) / ref
    J = None
    if J_raw is not None:
        J = np.asarray(J_raw, dtype=np.float64) * (background / V_ref[:, None])
    return V, J


@dataclass
class SyntheticData:
    measurements: MeasurementFrameSet
    truth: ConductivityStack
    sensitivity: SensitivityMatrix
    raw_voltages: np.ndarray      # (M, schedule length), volts
    reference_voltages: np.ndarray

    def __iter__(self):
        # unpacks as (measurements, truth)
        return iter((self.measurements, self.truth))


class Simulator:
    """Caches the mesh, the forward model and the pixel overlap for one sensor/grid pair."""

    def __init__(self, sensor: SensorModel, grid, order=5):
        self.sensor = sensor
        self.grid = grid
        self.model = ForwardModel(sensor)
        self.mesh = self.model.mesh
        self.samples = element_sample_points(self.mesh, order)
        self.overlap = pixel_overlap(self.mesh, grid, order)
        self._raw_jacobian = None

    @property
    def raw_jacobian(self):
        if self._raw_jacobian is None:
            Je = self.model.element_jacobian()
            self._raw_jacobian = np.asarray((self.overlap.T @ Je.T).T)
        return self._raw_jacobian

    def element_conductivity(self, phantom, freq_index):
        return phantom.conductivity_at(self.samples, freq_index).mean(axis=1)

    def voltages(self, sigma):
        return self.model.solve(sigma).measurements

    def pixel_conductivity(self, phantom, freq_index):
        return pixel_average(lambda p: phantom.conductivity_at(p, freq_index), self.grid,
                             self.sensor.radius)

    def synthesize(self, phantom: PhantomSpec, mode=TD, reference=None):
        mode = str(mode).upper()
        if mode not in (TD, FD):
            raise ValueError(f"mode must be TD or FD, got {mode!r}")
        bg = self.sensor.background_conductivity
        schedule = phantom.frequencies
        raw = np.column_stack([self.voltages(self.element_conductivity(phantom, i))
                               for i in range(len(schedule))])
        pix = np.column_stack([self.pixel_conductivity(phantom, i)
                               for i in range(len(schedule))])
        if mode == TD:
            V_ref = self.voltages(np.full(self.mesh.n_elements, float(bg)))
            keep = list(range(len(schedule)))
            truth = (pix - bg) / bg
            reference = None
        else:
            if reference is None:
                raise ValueError("FD mode needs a reference frequency")
            r = phantom.frequency_index(reference)
            V_ref = raw[:, r]
            keep = [i for i in range(len(schedule)) if i != r]
            truth = (pix[:, keep] - pix[:, [r]]) / bg
            reference = schedule[r]
        V, J = normalize(raw[:, keep], V_ref, self.raw_jacobian, bg)
        frames = MeasurementFrameSet(V, [schedule[i] for i in keep], mode, reference)
        return SyntheticData(frames, ConductivityStack(truth, self.grid),
                             SensitivityMatrix(J, self.grid), raw, V_ref)


def synthesize_measurements(phantom, sensor, grid, mode=TD, reference=None):
    """Simulate normalized TD or FD difference frames plus the pixel ground truth."""
    return Simulator(sensor, grid).synthesize(phantom, mode, reference)


def replicate_frames(frames: MeasurementFrameSet, copies):
    """Repeat a single-frame measurement set ``copies`` times (identical columns)."""
    if frames.n_frames != 1:
        raise ValueError("replication expects exactly one frame")
    base = frames.frequencies[0]
    freqs = [base * (k + 1) for k in range(copies)]
    if frames.reference_frequency is not None and frames.reference_frequency in freqs:
        freqs = [base + k for k in range(copies)]
    return MeasurementFrameSet(np.repeat(frames.V, copies, axis=1), freqs, frames.mode,
                               frames.reference_frequency)


def add_noise(frames, snr_db, seed=None):
    """White Gaussian noise at ``snr_db`` per column; ``snr_db=inf`` returns a copy.

    Noise power is ``mean(column**2) / 10**(snr_db/10)``.
    """
    V = frames.V if isinstance(frames, MeasurementFrameSet) else np.asarray(frames, float)
    if np.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    if np.isposinf(snr_db):
        noisy = V.copy()
    else:
        if np.isneginf(snr_db):
            raise ValueError("snr_db must be finite or +inf")
        power = np.mean(V ** 2, axis=0)
        if np.any(power == 0):
            raise ValueError("cannot set an SNR on an all-zero measurement column")
        rng = np.random.default_rng(seed)
        sd = np.sqrt(power / 10.0 ** (snr_db / 10.0))
        noisy = V + rng.standard_normal(V.shape) * sd[None, :]
    if isinstance(frames, MeasurementFrameSet):
        return MeasurementFrameSet(noisy, list(frames.frequencies), frames.mode,
                                   frames.reference_frequency)
    return noisy
