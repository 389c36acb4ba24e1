"""Fourth-order tensor algebra in 6x6 engineering (Voigt) notation.

Notation convention, used consistently across the whole package
---------------------------------------------------------------
Strain vectors are *engineering* strain::

    e = (e11, e22, e33, g23, g13, g12),   g_ij = 2 e_ij

and stress vectors carry no factors::

    s = (s11, s22, s33, s23, s13, s12)

With this choice two families of 6x6 matrices appear:

* stiffness-like maps (engineering strain -> stress).  Their matrix entries
  equal the tensor components, ``C[I, J] = C_ijkl``, and the matrix inverse
  is the compliance.  These matrices are symmetric for elastic stiffnesses.
* strain-maps (engineering strain -> engineering strain), e.g. Eshelby and
  concentration tensors.  Rows 4-6 pick up a factor 2,
  ``A[I, J] = w_I * A_ijkl`` with ``w = (1, 1, 1, 2, 2, 2)``, so that matrix
  products compose exactly like double contractions.  These matrices are in
  general *not* symmetric.

All shear bookkeeping lives in the two conversion helpers below; everything
else is plain 6x6 matrix algebra.  Rotations are carried out through the full
fourth-order transformation rule to avoid sign/factor mistakes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureNonConvergence

# Voigt index pairs in the order (11, 22, 33, 23, 13, 12).
VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))

# Row weights for strain-map matrices (engineering shear rows).
_W = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


# ---------------------------------------------------------------------------
# 6x6 <-> 3x3x3x3 conversions
# ---------------------------------------------------------------------------

def stiffness_to_tensor(m: np.ndarray) -> np.ndarray:
    """Expand a stiffness-like 6x6 matrix to the full 3x3x3x3 tensor."""
    t = np.zeros((3, 3, 3, 3))
    for I, (i, j) in enumerate(VOIGT_PAIRS):
        for J, (k, l) in enumerate(VOIGT_PAIRS):
            v = m[I, J]
            t[i, j, k, l] = v
            t[j, i, k, l] = v
            t[i, j, l, k] = v
            t[j, i, l, k] = v
    return t


def tensor_to_stiffness(t: np.ndarray) -> np.ndarray:
    """Contract a minor-symmetric 3x3x3x3 tensor to a stiffness-like 6x6."""
    m = np.empty((6, 6))
    for I, (i, j) in enumerate(VOIGT_PAIRS):
        for J, (k, l) in enumerate(VOIGT_PAIRS):
            m[I, J] = t[i, j, k, l]
    return m


def strain_map_to_tensor(m: np.ndarray) -> np.ndarray:
    """Expand a strain-map 6x6 matrix (rows weighted by 2 on shears)."""
    return stiffness_to_tensor(m / _W[:, None])


def tensor_to_strain_map(t: np.ndarray) -> np.ndarray:
    """Contract a minor-symmetric 3x3x3x3 strain-to-strain map to 6x6."""
    return tensor_to_stiffness(t) * _W[:, None]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StiffnessTensor:
    """Elastic stiffness in 6x6 engineering notation (Pa).

    Construction enforces major symmetry: the input is checked against the
    ``sym_tol`` relative tolerance and then symmetrised, so stored matrices
    are symmetric to machine precision.
    """

    m: np.ndarray
    convention: str = field(default="engineering-voigt", compare=False)

    @staticmethod
    def from_matrix(m: np.ndarray, sym_tol: float = 1e-6) -> "StiffnessTensor":
        m = np.asarray(m, dtype=float)
        if m.shape != (6, 6):
            raise ValueError(f"stiffness matrix must be 6x6, got {m.shape}")
        scale = np.linalg.norm(m)
        if scale > 0.0 and np.linalg.norm(m - m.T) > sym_tol * scale:
            raise ValueError(
                "stiffness matrix is not major-symmetric "
                f"(relative asymmetry {np.linalg.norm(m - m.T) / scale:.3e})"
            )
        sym = 0.5 * (m + m.T)
        sym.setflags(write=False)
        return StiffnessTensor(sym)

    def is_positive_definite(self) -> bool:
        return bool(np.all(np.linalg.eigvalsh(self.m) > 0.0))


@dataclass(frozen=True)
class ConcentrationTensor:
    """Dimensionless strain concentration map in 6x6 engineering notation."""

    m: np.ndarray


@dataclass(frozen=True)
class Orientation:
    """Filler orientation: azimuth ``gamma`` in [0, 2pi], polar ``theta`` in [0, pi/2]."""

    gamma: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 2.0 * np.pi + 1e-12:
            raise ValueError(f"gamma out of range [0, 2pi]: {self.gamma}")
        if not 0.0 <= self.theta <= 0.5 * np.pi + 1e-12:
            raise ValueError(f"theta out of range [0, pi/2]: {self.theta}")

    def rotation_matrix(self) -> np.ndarray:
        """3x3 matrix Q mapping local to global vectors (filler axis = local x3).

        Q = Rz(gamma) Ry(theta); the filler axis ends up at
        (sin t cos g, sin t sin g, cos t).
        """
        cg, sg = np.cos(self.gamma), np.sin(self.gamma)
        ct, st = np.cos(self.theta), np.sin(self.theta)
        ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
        rz = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
        return rz @ ry


class ODF3D:
    """Orientation distribution over (gamma, theta) with sin(theta) measure.

    Normalisation requirement::

        int_0^{2pi} int_0^{pi/2} odf(g, t) sin(t) dt dg = 1

    Tabulated densities are validated against this at construction.
    """

    def __init__(self, density: Callable[[float, float], float], *, _skip_check: bool = False):
        self._density = density
        if not _skip_check:
            defect = abs(self.normalisation(order=48) - 1.0)
            if defect > 1e-8:
                raise ValueError(f"ODF not normalised: defect {defect:.3e}")

    @staticmethod
    def uniform() -> "ODF3D":
        """Uniform (random-orientation) distribution, constant 1/(2 pi)."""
        odf = ODF3D(lambda g, t: 1.0 / (2.0 * np.pi), _skip_check=True)
        odf.is_uniform = True
        return odf

    @staticmethod
    def from_function(density: Callable[[float, float], float]) -> "ODF3D":
        return ODF3D(density)

    is_uniform: bool = False

    def density(self, gamma: float, theta: float) -> float:
        return self._density(gamma, theta)

    def normalisation(self, order: int = 32) -> float:
        g, wg, t, wt = _angle_grid(order)
        vals = np.array([[self._density(gi, ti) for ti in t] for gi in g])
        return float(wg @ (vals * np.sin(t)) @ wt)


# ---------------------------------------------------------------------------
# Constructors and rotation
# ---------------------------------------------------------------------------

def isotropic_stiffness(E: float, nu: float) -> StiffnessTensor:
    """Isotropic stiffness from Young's modulus (Pa) and Poisson's ratio.

    Raises ``ValueError`` unless ``E > 0`` and ``-1 < nu < 0.5``.
    """
    if E <= 0.0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not -1.0 < nu < 0.5:
        raise ValueError(f"Poisson's ratio must lie in (-1, 0.5), got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    m = np.zeros((6, 6))
    m[:3, :3] = lam
    m[np.diag_indices(3)] = lam + 2.0 * mu
    m[3, 3] = m[4, 4] = m[5, 5] = mu
    return StiffnessTensor.from_matrix(m)


def _rotate_tensor(t: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.einsum("ip,jq,kr,ls,pqrs->ijkl", q, q, q, q, t, optimize=True)


def rotate_stiffness(C: StiffnessTensor, o: Orientation) -> StiffnessTensor:
    """Rotate a stiffness tensor by the full fourth-order transformation rule."""
    q = o.rotation_matrix()
    t = _rotate_tensor(stiffness_to_tensor(C.m), q)
    return StiffnessTensor.from_matrix(tensor_to_stiffness(t))


def rotate_strain_map(m: np.ndarray, o: Orientation) -> np.ndarray:
    """Rotate a strain-map 6x6 matrix (Eshelby / concentration tensors)."""
    q = o.rotation_matrix()
    return tensor_to_strain_map(_rotate_tensor(strain_map_to_tensor(m), q))


# ---------------------------------------------------------------------------
# Orientational averaging
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _angle_grid(order: int):
    """Tensor-product Gauss-Legendre nodes/weights on [0, 2pi] x [0, pi/2]."""
    x, w = np.polynomial.legendre.leggauss(order)
    g = np.pi * (x + 1.0)          # gamma in [0, 2pi]
    wg = np.pi * w
    t = 0.25 * np.pi * (x + 1.0)   # theta in [0, pi/2]
    wt = 0.25 * np.pi * w
    return g, wg, t, wt


def orientational_average(
    F: Callable[[Orientation], np.ndarray],
    odf: ODF3D,
    order: int = 32,
    conv_tol: float = 1e-8,
) -> np.ndarray:
    """Average a matrix-valued function of orientation over an ODF.

    Computes ``int int F(g, t) odf(g, t) sin(t) dt dg`` with tensor-product
    Gauss-Legendre quadrature at ``order`` and ``2 * order`` points per angle
    and raises :class:`QuadratureNonConvergence` if the two disagree by more
    than ``conv_tol`` in relative Frobenius norm.
    """

    def evaluate(n: int) -> np.ndarray:
        g, wg, t, wt = _angle_grid(n)
        acc = np.zeros((6, 6))
        for gi, wgi in zip(g, wg):
            for ti, wti in zip(t, wt):
                acc += (
                    wgi * wti * np.sin(ti) * odf.density(gi, ti)
                ) * np.asarray(F(Orientation(gi, ti)))
        return acc

    coarse = evaluate(order)
    fine = evaluate(2 * order)
    scale = max(np.linalg.norm(fine), 1e-300)
    if np.linalg.norm(fine - coarse) > conv_tol * scale:
        raise QuadratureNonConvergence(
            "orientational average did not converge: relative change "
            f"{np.linalg.norm(fine - coarse) / scale:.3e} between orders "
            f"{order} and {2 * order}"
        )
    return fine


def average_rotated(
    m_local: np.ndarray,
    kind: str,
    odf: ODF3D,
    order: int = 32,
    conv_tol: float = 1e-8,
) -> np.ndarray:
    """Orientational average of a fixed local-frame matrix under rotation.

    Vectorised fast path for the common case where the integrand is a single
    matrix expressed in the filler frame.  ``kind`` selects the transformation
    rule: ``"stiffness"`` or ``"strain_map"``.
    """
    if kind == "stiffness":
        t_local = stiffness_to_tensor(m_local)
        contract = tensor_to_stiffness
    elif kind == "strain_map":
        t_local = strain_map_to_tensor(m_local)
        contract = tensor_to_strain_map
    else:
        raise ValueError(f"unknown kind {kind!r}")

    def evaluate(n: int) -> np.ndarray:
        g, wg, t, wt = _angle_grid(n)
        gg, tt = np.meshgrid(g, t, indexing="ij")
        ww = np.outer(wg, wt) * np.sin(tt)
        dens = np.empty_like(ww)
        if odf.is_uniform:
            dens.fill(1.0 / (2.0 * np.pi))
        else:
            for a in range(gg.shape[0]):
                for b in range(gg.shape[1]):
                    dens[a, b] = odf.density(gg[a, b], tt[a, b])
        cg, sg = np.cos(gg).ravel(), np.sin(gg).ravel()
        ct, st = np.cos(tt).ravel(), np.sin(tt).ravel()
        npts = cg.size
        q = np.zeros((npts, 3, 3))
        # Rz(gamma) @ Ry(theta), written out
        q[:, 0, 0] = cg * ct
        q[:, 0, 1] = -sg
        q[:, 0, 2] = cg * st
        q[:, 1, 0] = sg * ct
        q[:, 1, 1] = cg
        q[:, 1, 2] = sg * st
        q[:, 2, 0] = -st
        q[:, 2, 2] = ct
        rotated = np.einsum(
            "nip,njq,nkr,nls,pqrs->nijkl", q, q, q, q, t_local, optimize=True
        )
        weights = (ww * dens).ravel()
        return contract(np.einsum("n,nijkl->ijkl", weights, rotated))

    coarse = evaluate(order)
    fine = evaluate(2 * order)
    scale = max(np.linalg.norm(fine), 1e-300)
    if np.linalg.norm(fine - coarse) > conv_tol * scale:
        raise QuadratureNonConvergence(
            "orientational average did not converge: relative change "
            f"{np.linalg.norm(fine - coarse) / scale:.3e} between orders "
            f"{order} and {2 * order}"
        )
    return fine
