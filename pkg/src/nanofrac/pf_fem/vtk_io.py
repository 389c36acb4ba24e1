"""Legacy ASCII VTK output of mesh, damage and displacement fields."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh


def write_vtk(path, mesh: Mesh, phi: np.ndarray, u: np.ndarray,
              title: str = "phase-field snapshot") -> None:
    """Write an unstructured-grid file with point data "phi" and "u".

    Quads are written as VTK cell type 9; the out-of-plane coordinate and
    displacement component are zero.
    """
    n, e = mesh.n_nodes, mesh.n_elements
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n} double\n")
        for x, y in mesh.nodes:
            fh.write(f"{x:.10g} {y:.10g} 0.0\n")
        fh.write(f"CELLS {e} {5 * e}\n")
        for quad in mesh.elements:
            fh.write(f"4 {quad[0]} {quad[1]} {quad[2]} {quad[3]}\n")
        fh.write(f"CELL_TYPES {e}\n")
        for _ in range(e):
            fh.write("9\n")
        fh.write(f"POINT_DATA {n}\n")
        fh.write("SCALARS phi double 1\n")
        fh.write("LOOKUP_TABLE default\n")
        for v in phi:
            fh.write(f"{v:.10g}\n")
        fh.write("VECTORS u double\n")
        for ux, uy in zip(u[0::2], u[1::2]):
            fh.write(f"{ux:.10g} {uy:.10g} 0.0\n")
