"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .geometry import MeasurementFrameSet, SensitivityMatrix


def check_measurements(X, n_measurements=None, n_frames=None):
    """Return the (M, L) float64 measurement matrix from an array or frame set."""
    if isinstance(X, MeasurementFrameSet):
        X = X.V
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)
    if n_measurements is not None and X.shape[0] != n_measurements:
        raise ValueError(f"expected {n_measurements} measurements per frame, got {X.shape[0]}")
    if n_frames is not None and X.shape[1] != n_frames:
        raise ValueError(f"expected {n_frames} frames, got {X.shape[1]}")
    return X


def check_sensitivity(J):
    if not isinstance(J, SensitivityMatrix):
        raise TypeError(f"sensitivity must be a SensitivityMatrix, got {type(J).__name__}")
    if not np.all(np.isfinite(J.J)):
        raise ValueError("sensitivity matrix has non-finite entries")
    return J


def check_stack(frames, grid=None):
    frames = check_array(frames, dtype=np.float64, ensure_2d=False, allow_nd=True)
    if frames.ndim == 2:
        frames = frames[None]
    if frames.ndim != 3:
        raise ValueError(f"expected (L, H, W) frames, got shape {frames.shape}")
    if grid is not None and frames.shape[1:] != grid.shape:
        raise ValueError(f"frames are {frames.shape[1:]}, grid is {grid.shape}")
    return frames
