"""Finite-element forward solver and adjoint sensitivities for 2D EIT."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..geometry import SensitivityMatrix
from .mesh import FemMesh, disc_mesh


class SingularSystemError(RuntimeError):
    """The stiffness matrix could not be factorized (degenerate mesh)."""


@dataclass(frozen=True)
class SensorModel:
    """Circular sensor with equally spaced electrodes and the adjacent protocol.

    ``electrode_coverage`` is the fraction of the perimeter one electrode
    spans; it is rounded to an odd number of boundary nodes (at least one,
    i.e. a point electrode).
    """

    radius: float = 0.1
    electrode_count: int = 16
    electrode_coverage: float = 0.0
    background_conductivity: float = 2.0
    rings: int = 16

    def __post_init__(self):
        if self.electrode_count < 4:
            raise ValueError("electrode_count must be >= 4")
        if not self.radius > 0 or not self.background_conductivity > 0:
            raise ValueError("radius and background conductivity must be positive")
        if not 0 <= self.electrode_coverage < 1:
            raise ValueError("electrode_coverage must be in [0, 1)")

    @property
    def n_measurements(self):
        return self.electrode_count * (self.electrode_count - 3)

    def protocol(self):
        """``(drive, measure)`` electrode-pair start indices in measurement order."""
        E = self.electrode_count
        pairs = []
        for d in range(E):
            for m in range(E):
                if {m, (m + 1) % E} & {d, (d + 1) % E}:
                    continue
                pairs.append((d, m))
        return np.array(pairs, dtype=np.int64)

    def build_mesh(self):
        per_node = self.electrode_count * self.rings
        nodes = max(1, int(round(self.electrode_coverage * per_node)))
        if nodes % 2 == 0:
            nodes += 1
        return disc_mesh(self.radius, self.electrode_count, self.rings, nodes)


class _Operator:
    """Gradient operators and element areas of a mesh, shared across solves."""

    def __init__(self, mesh: FemMesh):
        p = mesh.nodes[mesh.elements]
        x, y = p[..., 0], p[..., 1]
        area = mesh.signed_areas()
        # barycentric basis gradients, (n_elements, 2, 3)
        b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        self.grad = np.stack([b, c], axis=1) / (2.0 * area)[:, None, None]
        self.area = area
        self.local = area[:, None, None] * np.einsum("eki,ekj->eij", self.grad, self.grad)
        e = mesh.elements
        self.rows = np.repeat(e, 3, axis=1).ravel()
        self.cols = np.tile(e, (1, 3)).ravel()
        self.n = mesh.n_nodes


def _pattern_matrix(mesh, sensor):
    """Unit current patterns for every adjacent electrode pair, (E, n_nodes)."""
    E = sensor.electrode_count
    f = np.zeros((E, mesh.n_nodes))
    for d in range(E):
        for node in mesh.electrodes[d]:
            f[d, node] += 1.0 / len(mesh.electrodes[d])
        nxt = (d + 1) % E
        for node in mesh.electrodes[nxt]:
            f[d, node] -= 1.0 / len(mesh.electrodes[nxt])
    return f


@dataclass
class ForwardSolution:
    potentials: np.ndarray          # (E drive patterns, n_nodes), volts
    electrode_voltages: np.ndarray  # (E drive patterns, E electrodes), volts
    measurements: np.ndarray        # (M,), adjacent differential voltages
    element_gradients: np.ndarray   # (E drive patterns, n_elements, 2)


class ForwardModel:
    """Solves the Laplace problem div(sigma grad u) = 0 on a fixed mesh."""

    def __init__(self, sensor: SensorModel, mesh: FemMesh | None = None):
        self.sensor = sensor
        self.mesh = sensor.build_mesh() if mesh is None else mesh
        if len(self.mesh.electrodes) != sensor.electrode_count:
            raise ValueError("mesh electrode count does not match the sensor")
        self.op = _Operator(self.mesh)
        self.patterns = _pattern_matrix(self.mesh, sensor)
        self.protocol = sensor.protocol()

    @cached_property
    def _electrode_weights(self):
        E = self.sensor.electrode_count
        w = np.zeros((E, self.mesh.n_nodes))
        for e, group in enumerate(self.mesh.electrodes):
            w[e, list(group)] = 1.0 / len(group)
        return w

    def stiffness(self, sigma):
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (self.mesh.n_elements,))
        if np.any(~np.isfinite(sigma)) or np.any(sigma <= 0):
            raise ValueError("element conductivities must be positive and finite")
        vals = (sigma[:, None, None] * self.op.local).ravel()
        return sp.csc_matrix((vals, (self.op.rows, self.op.cols)), shape=(self.op.n, self.op.n))

    def solve(self, sigma):
        """Potentials for every adjacent drive pattern, grounded at the centre node."""
        K = self.stiffness(sigma)[1:, 1:]
        try:
            lu = spla.splu(K.tocsc())
        except RuntimeError as exc:
            raise SingularSystemError(f"stiffness matrix is singular: {exc}") from exc
        u = np.zeros_like(self.patterns)
        u[:, 1:] = lu.solve(np.ascontiguousarray(self.patterns[:, 1:].T)).T
        if not np.all(np.isfinite(u)):
            raise SingularSystemError("forward solve produced non-finite potentials")
        electrode = u @ self._electrode_weights.T
        E = self.sensor.electrode_count
        d, m = self.protocol[:, 0], self.protocol[:, 1]
        meas = electrode[d, m] - electrode[d, (m + 1) % E]
        grads = np.einsum("eki,pei->pek", self.op.grad, u[:, self.mesh.elements])
        return ForwardSolution(u, electrode, meas, grads)

    def element_jacobian(self, sigma=None):
        """dV/d(sigma_e) for every measurement and element, (M, n_elements)."""
        if sigma is None:
            sigma = self.sensor.background_conductivity
        sol = self.solve(sigma)
        g = sol.element_gradients
        d, m = self.protocol[:, 0], self.protocol[:, 1]
        # adjoint identity: the measurement field is the drive field of pair m
        return -self.op.area[None, :] * np.einsum("mek,mek->me", g[d], g[m])


def solve_forward(sensor: SensorModel, mesh: FemMesh, sigma=None):
    """Adjacent-protocol voltages for element conductivities ``sigma`` (default: background)."""
    if sigma is None:
        sigma = sensor.background_conductivity
    return ForwardModel(sensor, mesh).solve(sigma)


def _pixel_coords(points, grid, radius):
    scale = radius / (min(grid.height, grid.width) / 2.0)
    col = points[..., 0] / scale + grid.width / 2.0
    row = grid.height / 2.0 - points[..., 1] / scale
    return row, col


def _barycentric_lattice(n):
    pts = [(i / n, j / n) for i in range(n + 1) for j in range(n + 1 - i)]
    a = np.array(pts)
    lam = np.column_stack([1.0 - a.sum(axis=1), a[:, 0], a[:, 1]])
    # pull the samples off the edges so neighbouring elements do not share them
    return (lam + 1.0 / (3 * n)) / (1.0 + 1.0 / n)


def element_sample_points(mesh, order=5):
    lam = _barycentric_lattice(order)
    return np.einsum("sk,ekd->esd", lam, mesh.nodes[mesh.elements])


def _split_cells(coord, n, tol=1e-9):
    """Cell index candidates for each coordinate; a point on a cell edge counts half to each side."""
    lo = np.clip(np.floor(coord - tol).astype(int), 0, n - 1)
    hi = np.clip(np.floor(coord + tol).astype(int), 0, n - 1)
    tie = lo != hi
    return (lo, np.where(tie, 0.5, 1.0)), (hi, np.where(tie, 0.5, 0.0))


def pixel_overlap(mesh, grid, order=5):
    """Sparse (n_elements, N) matrix of element-area fractions per in-mask pixel.

    Element area is sampled on a barycentric lattice; samples landing in a
    void pixel go to the nearest in-mask pixel so no sensitivity is lost.
    Samples on a pixel edge are shared equally, which keeps the map as
    symmetric as the mesh and the grid.
    """
    pts = element_sample_points(mesh, order)
    n_e, n_s, _ = pts.shape
    row, col = _pixel_coords(pts, grid, mesh.radius)
    flat_rows, raster, data = [], [], []
    elem = np.broadcast_to(np.arange(n_e)[:, None], (n_e, n_s))
    for r, wr in _split_cells(row, grid.height):
        for c, wc in _split_cells(col, grid.width):
            w = wr * wc
            keep = w > 0
            flat_rows.append(elem[keep])
            raster.append((r * grid.width + c)[keep])
            data.append(w[keep] / n_s)
    to_raster = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(flat_rows), np.concatenate(raster))),
        shape=(n_e, grid.height * grid.width)).tocsr()
    m = (to_raster @ _nearest_inmask(grid)).tocsr()
    m.sum_duplicates()
    return m


def _nearest_inmask(grid):
    """Sparse (H*W, N) map from raster positions to their nearest in-mask pixels.

    In-mask positions map to themselves; a void position splits its weight
    equally over all equidistant nearest in-mask pixels.
    """
    rr, cc = np.divmod(np.arange(grid.height * grid.width), grid.width)
    pr, pc = np.divmod(grid.pixel_index, grid.width)
    d2 = (rr[:, None] - pr[None, :]) ** 2 + (cc[:, None] - pc[None, :]) ** 2
    near = d2 == d2.min(axis=1, keepdims=True)
    src, dst = np.nonzero(near)
    weight = 1.0 / near.sum(axis=1)[src]
    return sp.csr_matrix((weight, (src, dst)), shape=(rr.size, grid.n_pixels))


def assemble_jacobian(sensor: SensorModel, mesh: FemMesh, grid):
    """Raw pixel sensitivity dV/d(sigma_pixel) at background conductivity, (M, N)."""
    model = ForwardModel(sensor, mesh)
    Je = model.element_jacobian()
    J = np.asarray((pixel_overlap(mesh, grid).T @ Je.T).T)
    return SensitivityMatrix(J, grid)


def pixel_average(fn, grid, radius, samples=4):
    """Average of ``fn(points)`` over a ``samples x samples`` lattice in each in-mask pixel."""
    off = (np.arange(samples) + 0.5) / samples
    pr, pc = np.divmod(grid.pixel_index, grid.width)
    rows = pr[:, None, None] + off[None, :, None]
    cols = pc[:, None, None] + off[None, None, :]
    scale = radius / (min(grid.height, grid.width) / 2.0)
    x = (cols - grid.width / 2.0) * scale
    y = (grid.height / 2.0 - rows) * scale
    x, y = np.broadcast_arrays(x, y)
    pts = np.stack([x, y], axis=-1).reshape(grid.n_pixels, -1, 2)
    return fn(pts).mean(axis=1)


def default_forward_model(sensor=None):
    return ForwardModel(sensor or SensorModel())


__all__ = [
    "ForwardModel", "ForwardSolution", "SensorModel", "SingularSystemError",
    "assemble_jacobian", "default_forward_model", "disc_mesh", "element_sample_points",
    "pixel_average", "pixel_overlap", "solve_forward",
]
