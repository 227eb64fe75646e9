"""Structured triangulation of a disc with electrodes on the boundary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class FemMesh:
    """First-order triangle mesh of the sensor disc.

    ``electrodes[e]`` lists the boundary nodes that make up electrode ``e``,
    counter-clockwise from angle 0. Node 0 is the disc centre and serves as
    the ground.
    """

    nodes: np.ndarray
    elements: np.ndarray
    electrodes: tuple
    radius: float

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    def signed_areas(self):
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def centroids(self):
        return self.nodes[self.elements].mean(axis=1)


def _zip_rings(inner, outer, n_inner, n_outer):
    """Triangulate the annulus between two rings whose first nodes share angle 0."""
    tris = []
    i = j = 0
    while i < n_inner or j < n_outer:
        # compare next angles as fractions of a turn, exact in integers
        adv_outer = i == n_inner or (j < n_outer and (j + 1) * n_inner <= (i + 1) * n_outer)
        if adv_outer:
            tris.append((inner[i % n_inner], outer[j % n_outer], outer[(j + 1) % n_outer]))
            j += 1
        else:
            tris.append((inner[i % n_inner], outer[j % n_outer], inner[(i + 1) % n_inner]))
            i += 1
    return tris


def disc_mesh(radius=0.1, electrode_count=16, rings=16, electrode_nodes=1):
    """Concentric-ring mesh, exactly symmetric under rotation by one electrode pitch.

    Ring ``k`` holds ``electrode_count * k`` equally spaced nodes starting at
    angle 0, giving ``electrode_count * rings**2`` elements. Each electrode is
    ``electrode_nodes`` consecutive boundary nodes centred on its angle.
    """
    if electrode_count < 4:
        raise ValueError("need at least 4 electrodes")
    if rings < 2:
        raise ValueError("need at least 2 rings")
    if electrode_nodes < 1 or electrode_nodes % 2 == 0 or electrode_nodes >= rings:
        raise ValueError("electrode_nodes must be odd, positive and smaller than rings")
    nodes = [(0.0, 0.0)]
    ring_ids = [[0]]
    for k in range(1, rings + 1):
        n = electrode_count * k
        theta = 2.0 * np.pi * np.arange(n) / n
        r = radius * k / rings
        start = len(nodes)
        nodes.extend(zip(r * np.cos(theta), r * np.sin(theta)))
        ring_ids.append(list(range(start, start + n)))
    elements = []
    for k in range(1, rings + 1):
        inner, outer = ring_ids[k - 1], ring_ids[k]
        if k == 1:
            n = len(outer)
            elements.extend((0, outer[j], outer[(j + 1) % n]) for j in range(n))
        else:
            elements.extend(_zip_rings(inner, outer, len(inner), len(outer)))
    nodes = np.array(nodes)
    elements = np.array(elements, dtype=np.int64)
    p = nodes[elements]
    area = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = area < 0
    elements[flip] = elements[flip][:, [0, 2, 1]]
    boundary = ring_ids[-1]
    half = electrode_nodes // 2
    electrodes = tuple(
        tuple(boundary[(e * rings + o) % len(boundary)] for o in range(-half, half + 1))
        for e in range(electrode_count))
    mesh = FemMesh(nodes, elements, electrodes, float(radius))
    if np.any(mesh.signed_areas() <= 0):
        raise ValueError("degenerate mesh: non-positive element area")
    return mesh
