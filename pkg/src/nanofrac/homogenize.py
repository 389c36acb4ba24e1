"""Mean-field effective stiffness of a three-phase nanotube composite.

Two estimators are provided:

* :func:`double_inclusion_effective` treats each filler plus its penetrable
  soft interphase as a nested inclusion pair and averages the concentration
  tensors over the filler orientation distribution.
* :func:`two_step_effective` accounts for filler bundling.  Step one applies
  the double-inclusion model separately to the bundle regions and to the
  surrounding matrix (same recipe, different filler fraction); step two embeds
  the bundles as spherical Mori-Tanaka inclusions in the step-one matrix.

All stiffnesses are in Pa and all fractions are volume fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SingularPhase
from .eshelby import EshelbyTensor, eshelby_sphere, eshelby_spheroid
from .tensors import (
    ODF3D,
    ConcentrationTensor,
    StiffnessTensor,
    average_rotated,
    isotropic_stiffness,
    stiffness_to_tensor,
)

_I6 = np.eye(6)

# Relative stiffness contrast below which a phase is treated as identical to
# the matrix (the dilute concentration tensor is exactly the identity there).
_EQUALITY_CONTRAST = 1e-10


# ---------------------------------------------------------------------------
# Parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FillerGeometry:
    """Cylindrical filler dimensions and interphase thickness, in metres."""

    length: float
    diameter: float
    interphase_thickness: float = 0.0

    def __post_init__(self):
        if self.length <= 0.0 or self.diameter <= 0.0:
            raise ValueError("filler length and diameter must be positive")
        if self.interphase_thickness < 0.0:
            raise ValueError("interphase thickness cannot be negative")
        if self.aspect_ratio < 1.0:
            raise ValueError(
                f"aspect ratio {self.aspect_ratio:.3f} < 1: fillers must be prolate"
            )

    @property
    def aspect_ratio(self) -> float:
        return self.length / self.diameter

    @property
    def equivalent_diameter(self) -> float:
        """Diameter of the sphere with the same volume as the filler."""
        return self.diameter * self.aspect_ratio ** (1.0 / 3.0)

    @property
    def thickness_ratio(self) -> float:
        """Interphase thickness over equivalent diameter."""
        return self.interphase_thickness / self.equivalent_diameter


@dataclass(frozen=True)
class Phase:
    youngs: float
    poisson: float


@dataclass(frozen=True)
class PhaseSet:
    """Elastic constants of matrix, filler and interphase plus filler fraction."""

    matrix: Phase
    filler: Phase
    interphase: Phase
    filler_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.filler_fraction < 1.0:
            raise ValueError(
                f"filler volume fraction must lie in [0, 1), got {self.filler_fraction}"
            )


@dataclass(frozen=True)
class AgglomerationParams:
    """Two-parameter bundling description.

    ``bundle_volume_ratio`` (chi) is the volume fraction of bundle regions;
    ``bundled_filler_ratio`` (zeta) is the fraction of all fillers living
    inside bundles.
    """

    bundle_volume_ratio: float
    bundled_filler_ratio: float

    def __post_init__(self):
        if not 0.0 < self.bundle_volume_ratio <= 1.0:
            raise ValueError(
                f"bundle volume ratio (chi) must lie in (0, 1], got {self.bundle_volume_ratio}"
            )
        if not 0.0 <= self.bundled_filler_ratio <= 1.0:
            raise ValueError(
                f"bundled filler ratio (zeta) must lie in [0, 1], got {self.bundled_filler_ratio}"
            )


class IsotropicFit(NamedTuple):
    youngs: float
    poisson: float
    residual: float


# ---------------------------------------------------------------------------
# Scalar helpers
# ---------------------------------------------------------------------------

def sphericity(kappa: float) -> float:
    """Sphericity of a prolate filler: equal-volume-sphere area over filler area.

    n(k) = 2 k^(2/3) tan(phi) / (tan(phi) + k^2 phi) with phi = arccos(1/k);
    n(1) = 1 and n decreases monotonically with aspect ratio.
    """
    if kappa < 1.0:
        raise ValueError(f"aspect ratio must be >= 1, got {kappa}")
    if kappa == 1.0:
        return 1.0
    phi = math.acos(1.0 / kappa)
    # tan(phi) = sin(phi) * kappa; write in terms of sin to stay finite
    # for the near-needle angles where tan(phi) blows up.
    s = math.sin(phi)
    return 2.0 * kappa ** (2.0 / 3.0) * s / (s + kappa * phi)


def interphase_volume_fraction(f_p: float, geom: FillerGeometry) -> float:
    """Volume fraction occupied by penetrable soft interphases.

    Exponential expression in the thickness ratio eta = t / D_eq and the
    filler sphericity; returns 0 for zero thickness or zero filler content.
    """
    if not 0.0 <= f_p < 1.0:
        raise ValueError(f"filler fraction must lie in [0, 1), got {f_p}")
    if f_p == 0.0 or geom.interphase_thickness == 0.0:
        return 0.0
    eta = geom.thickness_ratio
    n = sphericity(geom.aspect_ratio)
    ratio = f_p / (1.0 - f_p)
    bracket = (
        eta / n
        + (2.0 + 3.0 * ratio / n**2) * eta**2
        + (4.0 / 3.0) * (1.0 + 3.0 * ratio / n) * eta**3
    )
    return (1.0 - f_p) * (1.0 - math.exp(-6.0 * ratio * bracket))


# ---------------------------------------------------------------------------
# Concentration tensors
# ---------------------------------------------------------------------------

def dilute_concentration(
    C_m: StiffnessTensor,
    C_phase: StiffnessTensor,
    S: EshelbyTensor,
    phase: str = "inclusion",
) -> ConcentrationTensor:
    """Dilute strain concentration tensor of a single inclusion.

    A_dil = I + S T with T = -(S + M)^-1 and M = (C_phase - C_m)^-1 C_m.
    When the phase stiffness equals the matrix stiffness the contrast matrix
    M is singular and the limit A_dil -> I is returned directly.
    """
    dC = C_phase.m - C_m.m
    if np.linalg.norm(dC) <= _EQUALITY_CONTRAST * np.linalg.norm(C_m.m):
        return ConcentrationTensor(_I6.copy())
    try:
        M = np.linalg.solve(dC, C_m.m)
        T = -np.linalg.inv(S.m + M)
    except np.linalg.LinAlgError as exc:
        raise SingularPhase(phase, str(exc)) from exc
    return ConcentrationTensor(_I6 + S.m @ T)


def isotropic_projection(C: StiffnessTensor) -> IsotropicFit:
    """Closest isotropic (E, nu) to a stiffness tensor, plus the residual.

    Bulk and shear moduli come from the two isotropic invariants of the full
    tensor, kappa = C_iijj / 9 and mu = (C_ijij - 3 kappa) / 10; the residual
    is the Frobenius distance to the projected isotropic tensor relative to
    the input norm, evaluated in full tensor space.
    """
    t = stiffness_to_tensor(C.m)
    c_iijj = float(np.einsum("iijj->", t))
    c_ijij = float(np.einsum("ijij->", t))
    kappa = c_iijj / 9.0
    mu = (c_ijij - 3.0 * kappa) / 10.0
    E = 9.0 * kappa * mu / (3.0 * kappa + mu)
    nu = (3.0 * kappa - 2.0 * mu) / (2.0 * (3.0 * kappa + mu))
    iso = isotropic_stiffness(E, nu)
    t_iso = stiffness_to_tensor(iso.m)
    residual = float(np.linalg.norm(t - t_iso) / np.linalg.norm(t))
    return IsotropicFit(E, nu, residual)


# ---------------------------------------------------------------------------
# Effective stiffness estimators
# ---------------------------------------------------------------------------

def _voigt_reuss_check(c_eff: StiffnessTensor, fractions, stiffnesses) -> None:
    """Guard: isotropically averaged composites must respect the bounds."""
    c_voigt = sum(f * c.m for f, c in zip(fractions, stiffnesses))
    s_reuss = sum(f * np.linalg.inv(c.m) for f, c in zip(fractions, stiffnesses))
    e_voigt = isotropic_projection(StiffnessTensor.from_matrix(c_voigt)).youngs
    e_reuss = isotropic_projection(
        StiffnessTensor.from_matrix(np.linalg.inv(s_reuss))
    ).youngs
    e_eff = isotropic_projection(c_eff).youngs
    if not e_reuss * (1.0 - 1e-9) <= e_eff <= e_voigt * (1.0 + 1e-9):
        raise ValueError(
            f"effective modulus {e_eff:.6e} violates Reuss/Voigt bounds "
            f"[{e_reuss:.6e}, {e_voigt:.6e}]"
        )


def double_inclusion_effective(
    phases: PhaseSet,
    geom: FillerGeometry,
    odf: ODF3D,
    order: int = 32,
) -> StiffnessTensor:
    """Effective stiffness of the matrix / interphase / filler composite.

    Builds the spheroid Eshelby tensor once in the filler frame (the
    interphase shares the filler spheroid), normalises the dilute
    concentration tensors against each other, and orientationally averages
    both the concentration tensors and their stiffness-weighted products.
    """
    f_p = phases.filler_fraction
    f_i = interphase_volume_fraction(f_p, geom)
    f_m = 1.0 - f_p - f_i
    if f_m < 0.0:
        raise ValueError(
            f"matrix fraction is negative: f_p={f_p}, interphase f_i={f_i:.4f}"
        )

    C_m = isotropic_stiffness(phases.matrix.youngs, phases.matrix.poisson)
    if f_p == 0.0 and f_i == 0.0:
        return C_m
    C_p = isotropic_stiffness(phases.filler.youngs, phases.filler.poisson)
    C_i = isotropic_stiffness(phases.interphase.youngs, phases.interphase.poisson)

    S = eshelby_spheroid(geom.aspect_ratio, phases.matrix.poisson)
    A_p_dil = dilute_concentration(C_m, C_p, S, "filler").m
    A_i_dil = dilute_concentration(C_m, C_i, S, "interphase").m

    # Normalisation in the filler frame; the normalising combination rotates
    # with the filler, so the averaged tensors are plain orientational
    # averages of fixed local matrices.
    norm = np.linalg.inv(f_m * _I6 + f_i * A_i_dil + f_p * A_p_dil)
    A_p = A_p_dil @ norm
    A_i = A_i_dil @ norm

    avg_A_p = average_rotated(A_p, "strain_map", odf, order=order)
    avg_A_i = average_rotated(A_i, "strain_map", odf, order=order)
    avg_CA_p = average_rotated(C_p.m @ A_p, "stiffness", odf, order=order)
    avg_CA_i = average_rotated(C_i.m @ A_i, "stiffness", odf, order=order)

    numerator = f_m * C_m.m + f_i * avg_CA_i + f_p * avg_CA_p
    denominator = f_m * _I6 + f_i * avg_A_i + f_p * avg_A_p
    c_eff = StiffnessTensor.from_matrix(numerator @ np.linalg.inv(denominator))

    if getattr(odf, "is_uniform", False):
        _voigt_reuss_check(c_eff, (f_m, f_i, f_p), (C_m, C_i, C_p))
    return c_eff


def agglomeration_partition(f_p: float, agg: AgglomerationParams) -> tuple[float, float]:
    """Split the overall filler fraction into bundle and matrix fractions.

    f_bundles = (zeta / chi) f_p inside the bundle regions and
    f_matrix = ((1 - zeta) / (1 - chi)) f_p in the surrounding matrix.
    """
    chi = agg.bundle_volume_ratio
    zeta = agg.bundled_filler_ratio
    f_bundles = zeta / chi * f_p
    if chi == 1.0:
        if zeta != 1.0:
            raise ValueError("chi = 1 requires zeta = 1 (everything is bundle)")
        f_matrix = 0.0
    else:
        f_matrix = (1.0 - zeta) / (1.0 - chi) * f_p
    if f_bundles > 1.0:
        raise ValueError(
            f"bundle filler fraction {f_bundles:.4f} exceeds 1 "
            f"(f_p={f_p}, chi={chi}, zeta={zeta})"
        )
    if f_matrix > 1.0:
        raise ValueError(f"matrix filler fraction {f_matrix:.4f} exceeds 1")
    return f_bundles, f_matrix


def two_step_effective(
    phases: PhaseSet,
    geom: FillerGeometry,
    agg: AgglomerationParams,
    odf: ODF3D,
    order: int = 32,
) -> StiffnessTensor:
    """Effective stiffness with bundled fillers.

    Step one homogenises the bundles (filler fraction f_bundles) and the
    surrounding matrix (f_matrix) with the double-inclusion recipe.  Step two
    embeds the bundles as spherical inclusions of volume fraction chi in the
    step-one matrix via Mori-Tanaka:

        C = C_m + chi (C_b - C_m) A,
        A = A_dil [(1 - chi) I + chi A_dil]^-1,
        A_dil = [I + S_b C_m^-1 (C_b - C_m)]^-1

    The sphere Eshelby tensor uses the Poisson's ratio extracted from the
    step-one matrix by isotropic projection.
    """
    chi = agg.bundle_volume_ratio
    f_bundles, f_matrix = agglomeration_partition(phases.filler_fraction, agg)

    def with_fraction(f: float) -> PhaseSet:
        return PhaseSet(phases.matrix, phases.filler, phases.interphase, f)

    C_b = double_inclusion_effective(with_fraction(f_bundles), geom, odf, order)
    C_ms = double_inclusion_effective(with_fraction(f_matrix), geom, odf, order)

    dC = C_b.m - C_ms.m
    if np.linalg.norm(dC) <= _EQUALITY_CONTRAST * np.linalg.norm(C_ms.m):
        # zeta == chi: bundles and matrix are the same medium
        return C_ms

    nu_ms = isotropic_projection(C_ms).poisson
    S_b = eshelby_sphere(nu_ms)
    try:
        A_dil = np.linalg.inv(_I6 + S_b.m @ np.linalg.solve(C_ms.m, dC))
        A = A_dil @ np.linalg.inv((1.0 - chi) * _I6 + chi * A_dil)
    except np.linalg.LinAlgError as exc:
        raise SingularPhase("bundle", str(exc)) from exc
    return StiffnessTensor.from_matrix(C_ms.m + chi * dC @ A)
