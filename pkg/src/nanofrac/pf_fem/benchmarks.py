"""Benchmark specimens: notched plates in tension and shear, pin-loaded
holed plate.

The specimen dimensions are assumptions (documented here): a 50 mm wide,
70 mm tall plate with a 25 mm mid-height edge notch for both notched cases,
and a 65 x 120 mm plate with two 10 mm pin holes and a 20 mm edge notch at
the upper-hole height for the holed case.  The notched-plate height is the
one free dimension and is set so that the simulated load-displacement
curves reach their peaks at the reported displacement levels; load ratios
between materials are insensitive to it.  Reported absolute forces are
calibrated through the out-of-plane thickness factor.

Mesh refinement keeps the element size in the expected crack band at or
below ell/7 ("standard" and "paper" levels) or ell/10 ("fine").
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .assembly import BoundaryCondition
from .mesh import (
    Mesh,
    carve_holes,
    graded_line,
    insert_edge_crack,
    mirrored_line,
    tensor_grid,
)
from .solver import LoadSchedule

CASES = ("sen_tension", "sen_shear", "holed_plate")

# notched-plate dimensions (mm): width, height, notch length at mid-height
SEN_WIDTH = 50.0
SEN_HEIGHT = 70.0
SEN_NOTCH = 25.0

# default regularisation lengths (mm) per case
ELL = {"sen_tension": 2.4, "sen_shear": 2.4, "holed_plate": 0.9}

# out-of-plane thickness (mm) reproducing the reported absolute peak load of
# the tension benchmark at 1% uniform filler content (2.72 kN); see README
DEFAULT_THICKNESS_MM = {"sen_tension": 22.07, "sen_shear": 22.07, "holed_plate": 22.07}


@dataclass(frozen=True)
class _NotchedLevel:
    band_h: float        # element size in the crack band, fraction of ell
    x_fine_from: float   # start of the fine x zone (tension)
    band_half: float     # half-width of the fine y band (mm)
    growth: float
    h_max: float


_TENSION_LEVELS = {
    "standard": _NotchedLevel(1 / 7, 20.0, 2.6, 1.45, 3.4),
    "paper": _NotchedLevel(1 / 7, 13.0, 4.8, 1.20, 1.9),
    "fine": _NotchedLevel(1 / 10, 20.0, 2.6, 1.45, 3.4),
}

_SHEAR_LEVELS = {
    "standard": _NotchedLevel(1 / 7, 27.0, 2.0, 1.5, 3.8),
    "paper": _NotchedLevel(1 / 7, 31.0, 2.6, 1.3, 2.2),
    "fine": _NotchedLevel(1 / 10, 27.0, 2.0, 1.5, 3.8),
}

_HOLED_H = {"standard": 1 / 7, "paper": 1 / 7, "fine": 1 / 10}


def _sen_tension_mesh(level: _NotchedLevel, ell: float) -> Mesh:
    h = level.band_h * ell
    w, ht, a = SEN_WIDTH, SEN_HEIGHT, SEN_NOTCH
    mid = 0.5 * ht
    x = np.unique(np.concatenate([
        graded_line(0.0, a, level.x_fine_from, a, h,
                    growth=level.growth, h_max=level.h_max),
        graded_line(a, w, a, w, h),
    ]))
    y_half = graded_line(mid, ht, mid, mid + level.band_half, h,
                         growth=level.growth, h_max=level.h_max)
    y = mirrored_line(mid, y_half)
    nodes, elems = tensor_grid(x, y)
    nodes, elems, lower, upper = insert_edge_crack(nodes, elems, mid, 0.0, a)

    mesh = Mesh(nodes, elems)
    tol = 1e-8
    mesh.node_sets = {
        "bottom": mesh.nodes_where(lambda X, Y: np.abs(Y) < tol),
        "top": mesh.nodes_where(lambda X, Y: np.abs(Y - ht) < tol),
        "notch_lower": lower,
        "notch_upper": upper,
    }
    cx = nodes[elems].mean(axis=1)
    band = np.nonzero(
        (np.abs(cx[:, 1] - mid) < level.band_half) & (cx[:, 0] > level.x_fine_from)
    )[0]
    mesh.elem_sets = {"band": band.astype(np.int64)}
    return mesh


def _sen_shear_mesh(level: _NotchedLevel, ell: float) -> Mesh:
    # mirrored notch (from the right edge); the crack sweeps the lower-left
    # region under the negative-x top displacement
    h = level.band_h * ell
    w, ht = SEN_WIDTH, SEN_HEIGHT
    mid = 0.5 * ht
    tip = w - SEN_NOTCH
    x = np.unique(np.concatenate([
        graded_line(0.0, tip, 0.0, tip, h),
        graded_line(tip, w, tip, level.x_fine_from, h,
                    growth=level.growth, h_max=level.h_max),
    ]))
    y = np.unique(np.concatenate([
        graded_line(0.0, mid, 0.0, mid, h),
        graded_line(mid, ht, mid, mid + level.band_half, h,
                    growth=level.growth, h_max=level.h_max),
    ]))
    nodes, elems = tensor_grid(x, y)
    # duplicate strictly right of the tip so the tip node stays shared
    nodes, elems, lower, upper = insert_edge_crack(
        nodes, elems, mid, tip + 1e-6, w + 1.0)

    mesh = Mesh(nodes, elems)
    tol = 1e-8
    mesh.node_sets = {
        "bottom": mesh.nodes_where(lambda X, Y: np.abs(Y) < tol),
        "top": mesh.nodes_where(lambda X, Y: np.abs(Y - ht) < tol),
        "notch_lower": lower,
        "notch_upper": upper,
    }
    cx = nodes[elems].mean(axis=1)
    band = np.nonzero((cx[:, 0] < level.x_fine_from) & (cx[:, 1] < mid + level.band_half))[0]
    mesh.elem_sets = {"band": band.astype(np.int64)}
    return mesh


# holed-plate geometry (mm); overridable through HoledGeometry
@dataclass(frozen=True)
class HoledGeometry:
    width: float = 65.0
    height: float = 120.0
    hole_radius: float = 5.0
    upper_hole: tuple[float, float] = (32.5, 100.0)
    lower_hole: tuple[float, float] = (32.5, 20.0)
    notch_length: float = 24.0       # from the left edge at the upper-hole height


def _holed_mesh(h_band_frac: float, ell: float,
                geo: HoledGeometry = HoledGeometry()) -> Mesh:
    h = h_band_frac * ell
    ux, uy_ = geo.upper_hole
    lx, ly_ = geo.lower_hole
    r = geo.hole_radius
    tip = geo.notch_length

    hx1 = 1.7 * h                       # crack zone, along-crack direction
    hx2 = 3.4 * h                       # second-crack zone, along-crack
    x = np.unique(np.concatenate([
        graded_line(0.0, tip, tip - 2.0, tip, hx1, growth=1.7, h_max=4.5),
        graded_line(tip, ux + r + 2.0, tip, ux + r + 2.0, hx1),
        graded_line(ux + r + 2.0, geo.width, ux + r + 2.0, ux + r + 2.4, hx1,
                    growth=1.2, h_max=hx2),
    ]))
    band = 1.05                          # fine half-band around the crack line
    y = np.unique(np.concatenate([
        graded_line(0.0, ly_ + 6.5, ly_ - 6.5, ly_ + 6.5, 1.1, growth=1.6, h_max=5.0),
        graded_line(ly_ + 6.5, uy_ - band, uy_ - band - 0.2, uy_ - band, h,
                    growth=1.38, h_max=3.6),
        graded_line(uy_ - band, uy_, uy_ - band, uy_, h),
        graded_line(uy_, uy_ + band, uy_, uy_ + band, h),
        graded_line(uy_ + band, geo.height, uy_ + band, uy_ + band + 0.2, h,
                    growth=1.38, h_max=4.2),
    ]))
    nodes, elems = tensor_grid(x, y)

    on_crack_line = np.nonzero(np.abs(nodes[:, 1] - uy_) < 1e-9)[0]
    nodes, elems, rims = carve_holes(
        nodes, elems, [(ux, uy_, r), (lx, ly_, r)],
        proj_band=0.8 * max(hx1, h), frozen=on_crack_line)
    nodes, elems, lower, upper = insert_edge_crack(nodes, elems, uy_, 0.0, tip)

    mesh = Mesh(nodes, elems)
    upper_rim, lower_rim = rims
    arc = 0.25 * r
    upper_pin = upper_rim[nodes[upper_rim, 1] >= uy_ + arc]
    lower_pin = lower_rim[nodes[lower_rim, 1] <= ly_ - arc]
    # metal pins shield their bearing surfaces from damage: the whole lower
    # annulus (load introduction) and the bearing half of the upper annulus;
    # the upper-hole equator stays free so cracks can enter and re-nucleate
    d_up = np.hypot(nodes[:, 0] - ux, nodes[:, 1] - uy_)
    d_lo = np.hypot(nodes[:, 0] - lx, nodes[:, 1] - ly_)
    shield = np.nonzero(
        (d_lo <= r + 1.8)
        | ((d_up <= r + 1.8) & (nodes[:, 1] >= uy_ + 1.0))
    )[0]
    mesh.node_sets = {
        "upper_pin": upper_pin.astype(np.int64),
        "lower_pin": lower_pin.astype(np.int64),
        "upper_rim": upper_rim.astype(np.int64),
        "lower_rim": lower_rim.astype(np.int64),
        "pin_shield": shield.astype(np.int64),
        "notch_lower": lower,
        "notch_upper": upper,
    }
    cx = nodes[elems].mean(axis=1)
    band_els = np.nonzero(
        (np.abs(cx[:, 1] - uy_) < band) & (cx[:, 0] > tip - 3.0))[0]
    mesh.elem_sets = {"band": band_els.astype(np.int64)}
    return mesh


def generate_benchmark_mesh(case: str, refinement: str = "standard",
                            ell: float | None = None) -> Mesh:
    """Structured, graded quad mesh for one of the three benchmark cases.

    ``refinement`` is one of "standard" (desk-scale), "paper" (element
    counts comparable to the reference meshes) or "fine" (band size ell/10
    for mesh-objectivity checks).  The crack is represented geometrically by
    duplicated nodes along the notch faces.
    """
    if case not in CASES:
        raise ValueError(f"unknown benchmark case {case!r}; pick from {CASES}")
    ell = ELL[case] if ell is None else ell
    if case == "sen_tension":
        mesh = _sen_tension_mesh(_TENSION_LEVELS[refinement], ell)
    elif case == "sen_shear":
        mesh = _sen_shear_mesh(_SHEAR_LEVELS[refinement], ell)
    else:
        mesh = _holed_mesh(_HOLED_H[refinement], ell)
    mesh.validate()
    return mesh


def benchmark_bcs(case: str) -> tuple[list[BoundaryCondition], str, str]:
    """Boundary conditions plus (reaction node set, reaction dof)."""
    if case == "sen_tension":
        bcs = [
            BoundaryCondition("bottom", "x", 0.0),
            BoundaryCondition("bottom", "y", 0.0),
            BoundaryCondition("top", "x", 0.0),
            BoundaryCondition("top", "y", 1.0),
        ]
        return bcs, "top", "y"
    if case == "sen_shear":
        bcs = [
            BoundaryCondition("bottom", "x", 0.0),
            BoundaryCondition("bottom", "y", 0.0),
            BoundaryCondition("top", "y", 0.0),
            BoundaryCondition("top", "x", -1.0),
        ]
        return bcs, "top", "x"
    if case == "holed_plate":
        bcs = [
            BoundaryCondition("lower_pin", "x", 0.0),
            BoundaryCondition("lower_pin", "y", 0.0),
            BoundaryCondition("upper_pin", "y", 1.0),
            BoundaryCondition("pin_shield", "phi", 0.0),
        ]
        return bcs, "upper_pin", "y"
    raise ValueError(f"unknown benchmark case {case!r}")


DEFAULT_SCHEDULES = {
    "sen_tension": LoadSchedule(((0.078, 16), (0.105, 54), (0.109, 2))),
    "sen_shear": LoadSchedule(((0.120, 12), (0.310, 76))),
    "holed_plate": LoadSchedule(((0.085, 17), (0.125, 40), (0.285, 64), (0.335, 40))),
}
