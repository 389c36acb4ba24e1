"""Closed-form interior Eshelby tensors for spheres and prolate spheroids.

The spheroid has its symmetry (long) axis along the local x3 direction and
aspect ratio ``kappa = length / diameter >= 1``.  Components depend only on
``kappa`` and the matrix Poisson's ratio; no length scale enters.

The prolate expressions are evaluated through the classical I-integrals,
which for a spheroid reduce to elementary functions:

    I1 = I2 = 2 pi k (k e - arccosh k) / e^3,       e = sqrt(k^2 - 1)
    I3 = 4 pi - 2 I1
    I13 = (3 I1 - 4 pi) / (k^2 - 1)
    I11 = I12 = (4 pi - I13) / 4
    I33 = (4 pi / k^2 - 2 I13) / 3

and, with Q = 3 / (8 pi (1 - nu)) and R = (1 - 2 nu) / (8 pi (1 - nu)),

    S_iiii = Q a_i^2 I_ii + R I_i
    S_iijj = Q/3 a_j^2 I_ij - R I_i
    S_ijij = Q/6 (a_i^2 + a_j^2) I_ij + R/2 (I_i + I_j)

The exact prolate formulas contain 0/0 limits at kappa = 1; inside
``|kappa - 1| < 1e-4`` the sphere closed form is used instead, which keeps
the evaluation continuous to well below the documented 1e-4 tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Sphere branch threshold around kappa = 1.
_SPHERE_BAND = 1e-4


@dataclass(frozen=True)
class EshelbyTensor:
    """Interior Eshelby tensor as a strain-map 6x6 matrix (dimensionless)."""

    m: np.ndarray
    kappa: float
    nu_m: float


def _check_poisson(nu_m: float) -> None:
    if not -1.0 < nu_m < 0.5:
        raise ValueError(f"matrix Poisson's ratio must lie in (-1, 0.5), got {nu_m}")


def _assemble(s1111, s3333, s1122, s1133, s3311, s1212, s1313) -> np.ndarray:
    """Build the engineering-notation 6x6 from independent components.

    Transverse isotropy about x3; shear rows carry the factor 2 of the
    engineering strain-map convention.
    """
    m = np.zeros((6, 6))
    m[0, 0] = m[1, 1] = s1111
    m[2, 2] = s3333
    m[0, 1] = m[1, 0] = s1122
    m[0, 2] = m[1, 2] = s1133
    m[2, 0] = m[2, 1] = s3311
    m[3, 3] = m[4, 4] = 2.0 * s1313   # 23 and 13 shears
    m[5, 5] = 2.0 * s1212             # 12 shear
    return m


def eshelby_sphere(nu_m: float) -> EshelbyTensor:
    """Closed-form Eshelby tensor of a spherical inclusion."""
    _check_poisson(nu_m)
    d = 15.0 * (1.0 - nu_m)
    s1111 = (7.0 - 5.0 * nu_m) / d
    s1122 = (5.0 * nu_m - 1.0) / d
    s1212 = (4.0 - 5.0 * nu_m) / d
    m = _assemble(s1111, s1111, s1122, s1122, s1122, s1212, s1212)
    return EshelbyTensor(m, kappa=1.0, nu_m=nu_m)


def eshelby_spheroid(kappa: float, nu_m: float) -> EshelbyTensor:
    """Eshelby tensor of a prolate spheroid with symmetry axis x3.

    ``kappa`` is the aspect ratio (length over diameter).  Only the prolate
    branch is supported; oblate shapes (kappa < 1) are rejected because no
    filler in this model is oblate.
    """
    _check_poisson(nu_m)
    if kappa <= 0.0:
        raise ValueError(f"aspect ratio must be positive, got {kappa}")
    if kappa < 1.0 - _SPHERE_BAND:
        raise ValueError(
            f"oblate spheroids (kappa={kappa} < 1) are not supported; "
            "only prolate fillers and spherical bundles are modelled"
        )
    if abs(kappa - 1.0) < _SPHERE_BAND:
        sphere = eshelby_sphere(nu_m)
        return EshelbyTensor(sphere.m, kappa=kappa, nu_m=nu_m)

    k2 = kappa * kappa
    e = np.sqrt(k2 - 1.0)
    i1 = 2.0 * np.pi * kappa * (kappa * e - np.arccosh(kappa)) / e**3
    i3 = 4.0 * np.pi - 2.0 * i1
    i13 = (3.0 * i1 - 4.0 * np.pi) / (k2 - 1.0)
    i11 = (4.0 * np.pi - i13) / 4.0
    i33 = (4.0 * np.pi / k2 - 2.0 * i13) / 3.0

    q = 3.0 / (8.0 * np.pi * (1.0 - nu_m))
    r = (1.0 - 2.0 * nu_m) / (8.0 * np.pi * (1.0 - nu_m))

    s1111 = q * i11 + r * i1
    s3333 = q * k2 * i33 + r * i3
    s1122 = (q / 3.0) * i11 - r * i1
    s1133 = (q / 3.0) * k2 * i13 - r * i1
    s3311 = (q / 3.0) * i13 - r * i3
    s1212 = (q / 3.0) * i11 + r * i1
    s1313 = (q / 6.0) * (1.0 + k2) * i13 + (r / 2.0) * (i1 + i3)

    m = _assemble(s1111, s3333, s1122, s1133, s3311, s1212, s1313)
    return EshelbyTensor(m, kappa=kappa, nu_m=nu_m)
