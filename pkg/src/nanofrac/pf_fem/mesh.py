"""Quadrilateral plane-strain meshes with graded structured generation.

Coordinates are in millimetres.  Element connectivity is counter-clockwise;
:meth:`Mesh.validate` rejects inverted or degenerate quads, orphan nodes and
conflicting set references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import MeshError


@dataclass
class Mesh:
    nodes: np.ndarray                      # (n, 2) float, mm
    elements: np.ndarray                   # (e, 4) int, CCW
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)
    elem_sets: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def validate(self) -> None:
        """Check connectivity orientation, corner Jacobians and orphan nodes."""
        if self.elements.min(initial=0) < 0 or self.elements.max(initial=-1) >= self.n_nodes:
            raise MeshError("element connectivity references nodes out of range")
        xy = self.nodes[self.elements]           # (e, 4, 2)
        # corner cross products: positive at all four corners of every quad
        # guarantees a positive bilinear Jacobian on the whole element
        for corner in range(4):
            a = xy[:, (corner + 1) % 4] - xy[:, corner]
            b = xy[:, (corner - 1) % 4] - xy[:, corner]
            cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
            bad = np.nonzero(cross <= 0.0)[0]
            if bad.size:
                raise MeshError(
                    f"element {bad[0]} has a non-positive Jacobian "
                    f"(corner {corner}, cross {cross[bad[0]]:.3e})"
                )
        used = np.zeros(self.n_nodes, dtype=bool)
        used[self.elements.ravel()] = True
        if not used.all():
            raise MeshError(f"{np.count_nonzero(~used)} orphan nodes in the mesh")
        for name, ids in self.node_sets.items():
            if ids.size and (ids.min() < 0 or ids.max() >= self.n_nodes):
                raise MeshError(f"node set '{name}' references nodes out of range")

    def nodes_where(self, predicate) -> np.ndarray:
        """Node ids satisfying a coordinate predicate (vectorised)."""
        mask = predicate(self.nodes[:, 0], self.nodes[:, 1])
        return np.nonzero(mask)[0].astype(np.int64)


# ---------------------------------------------------------------------------
# Structured generation helpers
# ---------------------------------------------------------------------------

def _grade_out(span: float, h0: float, growth: float, h_max: float) -> np.ndarray:
    """Cumulative offsets filling ``span`` with geometrically growing steps."""
    if span <= 1e-12:
        return np.zeros(0)
    steps = []
    h, total = h0, 0.0
    while total < span - 1e-12:
        h = min(h * growth, h_max)
        steps.append(h)
        total += h
    arr = np.asarray(steps)
    arr *= span / arr.sum()
    return np.cumsum(arr)


def graded_line(lo: float, hi: float, fine_lo: float, fine_hi: float,
                h_fine: float, growth: float = 1.3,
                h_max: float = math.inf) -> np.ndarray:
    """1D node coordinates: uniform spacing <= h_fine on [fine_lo, fine_hi],
    geometrically graded outside, exact endpoints."""
    if not lo <= fine_lo < fine_hi <= hi:
        raise ValueError("fine region must lie inside the line span")
    n_fine = max(1, math.ceil((fine_hi - fine_lo) / h_fine - 1e-9))
    fine = np.linspace(fine_lo, fine_hi, n_fine + 1)
    left = _grade_out(fine_lo - lo, h_fine, growth, h_max)
    right = _grade_out(hi - fine_hi, h_fine, growth, h_max)
    line = np.concatenate([fine_lo - left[::-1], fine, fine_hi + right])
    line[0], line[-1] = lo, hi            # exact endpoints despite rounding
    return line


def mirrored_line(center: float, half: np.ndarray) -> np.ndarray:
    """Symmetric coordinate line from a half-line starting at ``center``."""
    if abs(half[0] - center) > 1e-12:
        raise ValueError("half line must start at the mirror centre")
    return np.concatenate([(2.0 * center - half[1:])[::-1], half])


def tensor_grid(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product quad grid; returns (nodes, elements) with CCW quads."""
    nx, ny = len(xs), len(ys)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(i, j):
        return j * nx + i

    elems = np.empty(((nx - 1) * (ny - 1), 4), dtype=np.int64)
    k = 0
    for j in range(ny - 1):
        for i in range(nx - 1):
            elems[k] = (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1))
            k += 1
    return nodes, elems


def insert_edge_crack(nodes: np.ndarray, elems: np.ndarray, y_crack: float,
                      x_lo: float, x_hi: float,
                      tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Duplicate the node line of a horizontal edge crack.

    Nodes on ``y = y_crack`` with ``x_lo <= x < x_hi`` (the crack faces, tip
    excluded at ``x_hi``) are duplicated; elements above the crack remap to
    the copies.  For a crack running to the right of the tip pass the range
    mirrored (``x_lo`` strictly greater than the tip abscissa).

    Returns (nodes, elements, lower_face_ids, upper_face_ids).
    """
    on_line = np.abs(nodes[:, 1] - y_crack) < tol
    in_range = (nodes[:, 0] >= x_lo - tol) & (nodes[:, 0] < x_hi - tol)
    face = np.nonzero(on_line & in_range)[0]
    if face.size == 0:
        raise MeshError("no crack-face nodes found on the requested line")

    n0 = nodes.shape[0]
    dup_ids = np.arange(n0, n0 + face.size, dtype=np.int64)
    nodes = np.vstack([nodes, nodes[face]])
    remap = dict(zip(face.tolist(), dup_ids.tolist()))

    elems = elems.copy()
    centroids_y = nodes[elems].mean(axis=1)[:, 1]
    above = centroids_y > y_crack
    for e in np.nonzero(above)[0]:
        for a in range(4):
            n = elems[e, a]
            if n in remap:
                elems[e, a] = remap[n]
    return nodes, elems, face.astype(np.int64), dup_ids


def carve_holes(nodes: np.ndarray, elems: np.ndarray,
                holes: list[tuple[float, float, float]],
                proj_band: float,
                smooth_passes: int = 2,
                frozen: np.ndarray | None = None,
                ) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Cut circular holes out of a structured grid.

    Elements with any corner inside a hole are removed; the exposed boundary
    nodes lying within ``proj_band`` of a circle are pulled radially inward
    onto it, and a couple of Laplacian passes relax the surrounding annulus
    (projected rim nodes and ``frozen`` nodes never move).  Unreferenced
    nodes are compressed out.

    Returns (nodes, elements, rim_node_ids_per_hole) in the new numbering.
    """
    nodes = nodes.copy()
    inside_any = np.zeros(nodes.shape[0], dtype=bool)
    for cx, cy, r in holes:
        inside_any |= np.hypot(nodes[:, 0] - cx, nodes[:, 1] - cy) < r - 1e-9
    keep = ~inside_any[elems].any(axis=1)
    removed_nodes = np.unique(elems[~keep])
    elems = elems[keep]
    kept_nodes = np.unique(elems)
    boundary = np.intersect1d(removed_nodes, kept_nodes, assume_unique=True)

    frozen_mask = np.zeros(nodes.shape[0], dtype=bool)
    if frozen is not None:
        frozen_mask[frozen] = True

    rim_sets = []
    for cx, cy, r in holes:
        d = np.hypot(nodes[boundary, 0] - cx, nodes[boundary, 1] - cy)
        rim = boundary[(d < r + proj_band) & ~frozen_mask[boundary]]
        for n in rim:
            dx, dy = nodes[n, 0] - cx, nodes[n, 1] - cy
            norm = math.hypot(dx, dy)
            if norm < 1e-12:
                dx, dy, norm = 1.0, 0.0, 1.0
            nodes[n, 0] = cx + r * dx / norm
            nodes[n, 1] = cy + r * dy / norm
        rim_sets.append(np.sort(rim))

    if smooth_passes:
        neighbours: dict[int, set[int]] = {}
        for quad in elems:
            for a in range(4):
                neighbours.setdefault(int(quad[a]), set()).update(
                    (int(quad[(a + 1) % 4]), int(quad[(a - 1) % 4]))
                )
        pinned = set(int(n) for rim in rim_sets for n in rim)
        pinned.update(np.nonzero(frozen_mask)[0].tolist())
        movable = set()
        for cx, cy, r in holes:
            d = np.hypot(nodes[kept_nodes, 0] - cx, nodes[kept_nodes, 1] - cy)
            ring = kept_nodes[(d >= r) & (d < r + 3.0 * proj_band)]
            movable.update(int(n) for n in ring)
        movable -= pinned
        for _ in range(smooth_passes):
            new_pos = {}
            for n in movable:
                ring = neighbours.get(n)
                if ring:
                    pts = nodes[list(ring)]
                    new_pos[n] = 0.5 * nodes[n] + 0.5 * pts.mean(axis=0)
            for n, p in new_pos.items():
                nodes[n] = p

    new_id = -np.ones(nodes.shape[0], dtype=np.int64)
    new_id[kept_nodes] = np.arange(kept_nodes.size)
    nodes = nodes[kept_nodes]
    elems = new_id[elems]
    rim_sets = [np.sort(new_id[rim]) for rim in rim_sets]
    return nodes, elems, rim_sets
