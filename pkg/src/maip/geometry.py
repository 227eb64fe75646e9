"""Pixel grids, the projection between in-mask vectors and rectangular
images, and the linear forward maps built on them.

In-mask pixels are numbered in row-major order. Anything that reads or
writes sensitivity matrices or conductivity vectors relies on that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TD = "TD"
FD = "FD"


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """An ``H x W`` raster with a boolean mask of pixels inside the domain."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.ndim != 2 or min(mask.shape) < 1:
            raise ValueError(f"mask must be a nonempty 2D array, got shape {mask.shape}")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def height(self):
        return self.mask.shape[0]

    @property
    def width(self):
        return self.mask.shape[1]

    @property
    def shape(self):
        return self.mask.shape

    @cached_property
    def pixel_index(self):
        """Flat row-major grid positions of the in-mask pixels, length N."""
        idx = np.flatnonzero(self.mask)
        idx.setflags(write=False)
        return idx

    @property
    def n_pixels(self):
        return int(self.pixel_index.size)

    def __eq__(self, other):
        return isinstance(other, PixelGrid) and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.mask.shape, self.mask.tobytes()))


def build_circular_mask(height, width):
    """Disc inscribed in the raster: pixel centres within ``min(H, W) / 2``."""
    if height < 2 or width < 2:
        raise ValueError(f"grid must be at least 2x2, got {height}x{width}")
    r = np.arange(height)[:, None] + 0.5
    c = np.arange(width)[None, :] + 0.5
    dist2 = (r - height / 2.0) ** 2 + (c - width / 2.0) ** 2
    return PixelGrid(dist2 <= (min(height, width) / 2.0) ** 2)


@dataclass(frozen=True, eq=False)
class ProjectionMap:
    """Selection operator from N in-mask values to the full ``H*W`` raster.

    Stored as the index list only; ``matrix()`` materializes the 0/1
    matrix for inspection and tests.
    """

    grid: PixelGrid

    @property
    def index(self):
        return self.grid.pixel_index

    @property
    def shape(self):
        return (self.grid.height * self.grid.width, self.grid.n_pixels)

    def matrix(self):
        p = np.zeros(self.shape, dtype=np.int64)
        p[self.index, np.arange(self.grid.n_pixels)] = 1
        return p

    def apply(self, sigma):
        """``P @ sigma`` for ``sigma`` of shape (N,) or (N, L)."""
        sigma = np.asarray(sigma, dtype=np.float64)
        out = np.zeros((self.shape[0],) + sigma.shape[1:])
        out[self.index] = sigma
        return out

    def apply_transpose(self, full):
        """``P.T @ full`` for ``full`` of shape (H*W,) or (H*W, L)."""
        return np.asarray(full, dtype=np.float64)[self.index]


def build_projection(grid):
    return ProjectionMap(grid)


def _check_grid_stack(stack, grid):
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[1:] != grid.shape:
        raise ValueError(f"expected an (L, {grid.height}, {grid.width}) stack, got {stack.shape}")
    return stack


def embed(sigma, proj):
    """Vector form (N, L) to grid form (L, H, W), zeros at void pixels."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim == 1:
        sigma = sigma[:, None]
    n = proj.grid.n_pixels
    if sigma.ndim != 2 or sigma.shape[0] != n:
        raise ValueError(f"expected ({n}, L) conductivity vectors, got {sigma.shape}")
    full = proj.apply(sigma)
    return full.T.reshape(sigma.shape[1], proj.grid.height, proj.grid.width)


def flatten_frames(stack):
    """Reshape (L, H, W) to (H*W, L), one column per frame."""
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3:
        raise ValueError(f"expected an (L, H, W) stack, got {stack.shape}")
    return stack.reshape(stack.shape[0], -1).T


def extract(stack, proj):
    """Grid form (L, H, W) to vector form (N, L), reading in-mask pixels."""
    stack = _check_grid_stack(stack, proj.grid)
    return proj.apply_transpose(flatten_frames(stack))


class SensitivityMatrix:
    """Normalized Jacobian ``J`` (M x N) tied to a pixel grid.

    ``lifted`` is ``J @ P.T`` (M x H*W), built on first use.
    """

    def __init__(self, J, grid):
        J = np.array(J, dtype=np.float64)
        if J.ndim != 2:
            raise ValueError(f"sensitivity must be 2D, got shape {J.shape}")
        if J.shape[1] != grid.n_pixels:
            raise ValueError(
                f"sensitivity has {J.shape[1]} columns but the mask has {grid.n_pixels} pixels")
        J.setflags(write=False)
        self.J = J
        self.grid = grid
        self.projection = ProjectionMap(grid)

    @property
    def shape(self):
        return self.J.shape

    @property
    def n_measurements(self):
        return self.J.shape[0]

    @cached_property
    def lifted(self):
        out = np.zeros((self.J.shape[0], self.grid.height * self.grid.width))
        out[:, self.grid.pixel_index] = self.J
        out.setflags(write=False)
        return out


@dataclass
class MeasurementFrameSet:
    """Normalized voltage differences, one column per imaged frequency."""

    V: np.ndarray
    frequencies: list = field(default_factory=list)
    mode: str = TD
    reference_frequency: float | None = None

    def __post_init__(self):
        V = np.array(self.V, dtype=np.float64)
        if V.ndim == 1:
            V = V[:, None]
        if V.ndim != 2 or V.shape[1] < 1:
            raise ValueError(f"measurements must be an (M, L) matrix with L >= 1, got {V.shape}")
        self.V = V
        if not self.frequencies:
            self.frequencies = [float(i + 1) for i in range(V.shape[1])]
        self.frequencies = [float(f) for f in self.frequencies]
        if len(self.frequencies) != V.shape[1]:
            raise ValueError(f"{len(self.frequencies)} frequencies for {V.shape[1]} frames")
        self.mode = str(self.mode).upper()
        if self.mode not in (TD, FD):
            raise ValueError(f"mode must be TD or FD, got {self.mode!r}")
        if self.mode == FD:
            if self.reference_frequency is None:
                raise ValueError("FD measurements need a reference frequency")
            if float(self.reference_frequency) in self.frequencies:
                raise ValueError("the FD reference frequency cannot be an imaged frame")
            self.reference_frequency = float(self.reference_frequency)

    @property
    def n_frames(self):
        return self.V.shape[1]

    @property
    def n_measurements(self):
        return self.V.shape[0]

    def metadata(self):
        return {"frequencies": self.frequencies, "mode": self.mode,
                "reference_frequency": self.reference_frequency}


@dataclass
class ConductivityStack:
    """Multi-frequency conductivity images on a pixel grid.

    ``vectors`` is the (N, L) in-mask form; ``frames`` gives the
    (L, H, W) raster with zeros outside the mask.
    """

    vectors: np.ndarray
    grid: PixelGrid

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.n_pixels:
            raise ValueError(f"expected {self.grid.n_pixels} rows, got {v.shape[0]}")
        self.vectors = v

    @classmethod
    def from_frames(cls, frames, grid):
        return cls(extract(frames, ProjectionMap(grid)), grid)

    @property
    def frames(self):
        return embed(self.vectors, ProjectionMap(self.grid))

    @property
    def n_frames(self):
        return self.vectors.shape[1]


def _matrix(J):
    return J.J if isinstance(J, SensitivityMatrix) else np.asarray(J, dtype=np.float64)


def forward(J, sigma):
    """Linearized forward model ``V = J @ Sigma``."""
    Jm = _matrix(J)
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape[0] != Jm.shape[1]:
        raise ValueError(f"cannot apply a {Jm.shape} sensitivity to {sigma.shape} conductivities")
    return Jm @ sigma


def forward_modified(J, stack):
    """Forward model on rectangular frames: ``lifted(J) @ flatten_frames(stack)``."""
    if not isinstance(J, SensitivityMatrix):
        raise TypeError("forward_modified needs a SensitivityMatrix (it carries the grid)")
    stack = _check_grid_stack(stack, J.grid)
    return J.lifted @ flatten_frames(stack)
