"""Element-level machinery for the coupled displacement / phase-field system.

Bilinear quads, 2x2 Gauss quadrature, plane strain.  Working units are
millimetres and MPa: stiffness entries in MPa, fracture energy in N/mm,
forces per unit thickness in N/mm, energy densities in MPa.

The damage residual implements the regularised fracture energy with crack
density phi^2/(2 l) + l |grad phi|^2 / 2 and quadratic stiffness degradation
(1 - phi)^2 applied to the full stress (no tension/compression split).  The
driving term uses the history field H = max over the loading program of the
undegraded strain energy density, which enforces irreversibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import MeshError
from ..tensors import StiffnessTensor
from .mesh import Mesh

# plane-strain rows/cols of the 6x6 stiffness: (11, 22, 12)
_PS_IDX = np.array([0, 1, 5])

_GP = np.array([
    (-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0),
]) / np.sqrt(3.0)
_GW = np.ones(4)

_CORNERS = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])


def plane_strain_reduce(C: StiffnessTensor) -> np.ndarray:
    """3x3 plane-strain constitutive matrix relating (e11, e22, g12) to
    (s11, s22, s12).

    Plane strain constrains e33 = g23 = g13 = 0, so the reduction is the
    plain submatrix of the 6x6 engineering-notation stiffness.
    """
    return C.m[np.ix_(_PS_IDX, _PS_IDX)].copy()


def element_energy_density(strain: np.ndarray, C2d: np.ndarray) -> float:
    """Undegraded strain energy density 1/2 e : C : e (>= 0)."""
    strain = np.asarray(strain, dtype=float)
    return 0.5 * float(strain @ C2d @ strain)


def update_history(psi: float, H_old: float) -> float:
    """Irreversibility update: the history field is the running maximum."""
    return max(psi, H_old)


@dataclass(frozen=True)
class PFMaterial:
    """Homogenised phase-field material.

    ``C_eff`` is the 3D stiffness in Pa (from the homogenisation stage),
    ``G_c`` the fracture energy in J/m^2 and ``ell`` the regularisation
    length in mm.  Derived plane-strain quantities are stored in mm-MPa
    units.  ``residual_stiffness`` keeps the degraded stress definite once
    phi -> 1.
    """

    C_eff: StiffnessTensor
    G_c: float
    ell: float
    residual_stiffness: float = 1e-10

    def __post_init__(self):
        if self.G_c <= 0.0 or self.ell <= 0.0:
            raise ValueError("fracture energy and length scale must be positive")

    @property
    def C2d(self) -> np.ndarray:
        """Plane-strain stiffness in MPa."""
        return plane_strain_reduce(self.C_eff) * 1e-6

    @property
    def g_c(self) -> float:
        """Fracture energy in N/mm."""
        return self.G_c * 1e-3


@dataclass(frozen=True)
class BoundaryCondition:
    """Prescription of one dof family on a named node set.

    The prescribed value at a load level ``t`` is ``amplitude * t`` (mm for
    displacements).  Homogeneous constraints use amplitude 0.
    """

    node_set: str
    dof: str            # 'x' | 'y' | 'phi'
    amplitude: float = 0.0

    def __post_init__(self):
        if self.dof not in ("x", "y", "phi"):
            raise ValueError(f"unknown dof {self.dof!r}")


@dataclass
class SolutionState:
    """Converged fields of one load step."""

    u: np.ndarray          # (2 n_nodes,), mm
    phi: np.ndarray        # (n_nodes,), in [0, 1]
    history: np.ndarray    # (n_elements, 4 corner points), MPa
    step: int = 0
    applied: float = 0.0
    iterations: int = 0    # quasi-Newton iterations spent on this step
    sweeps: int = 0        # staggered fallback sweeps spent on this step

    @staticmethod
    def initial(mesh: Mesh) -> "SolutionState":
        return SolutionState(
            u=np.zeros(2 * mesh.n_nodes),
            phi=np.zeros(mesh.n_nodes),
            history=np.zeros((mesh.n_elements, 4)),
        )

    def copy(self) -> "SolutionState":
        return SolutionState(self.u.copy(), self.phi.copy(), self.history.copy(),
                             self.step, self.applied)


class Discretisation:
    """Precomputed quadrature data and scatter indices for one mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        n_e = mesh.n_elements
        xy = mesh.nodes[mesh.elements]                     # (e, 4, 2)

        # shape functions and parent-space gradients at the 4 Gauss points
        xi, eta = _GP[:, 0], _GP[:, 1]
        self.N = 0.25 * np.stack([
            (1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta), (1 - xi) * (1 + eta),
        ], axis=1)                                          # (4 gp, 4 node)
        dN = np.empty((4, 2, 4))                            # (gp, dim, node)
        for g, (x, e_) in enumerate(_GP):
            dN[g, 0] = 0.25 * np.array([-(1 - e_), (1 - e_), (1 + e_), -(1 + e_)])
            dN[g, 1] = 0.25 * np.array([-(1 - x), -(1 + x), (1 + x), (1 - x)])

        # Jacobians: J[e,g] = dN[g] @ xy[e]  (2x2)
        J = np.einsum("gdn,enc->egdc", dN, xy)
        detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        bad = np.nonzero(detJ.min(axis=1) <= 0.0)[0]
        if bad.size:
            raise MeshError(f"element {bad[0]} has non-positive Jacobian at a Gauss point")
        self.wdetJ = detJ * _GW[None, :]                    # (e, 4)

        Jinv = np.empty_like(J)
        Jinv[..., 0, 0] = J[..., 1, 1] / detJ
        Jinv[..., 1, 1] = J[..., 0, 0] / detJ
        Jinv[..., 0, 1] = -J[..., 0, 1] / detJ
        Jinv[..., 1, 0] = -J[..., 1, 0] / detJ

        # physical gradients: dNdx[e,g,d,n]
        dNdx = np.einsum("egdc,gcn->egdn", Jinv, dN)
        self.dNdx = dNdx

        # strain-displacement matrices B[e,g,3,8]
        B = np.zeros((n_e, 4, 3, 8))
        B[:, :, 0, 0::2] = dNdx[:, :, 0, :]
        B[:, :, 1, 1::2] = dNdx[:, :, 1, :]
        B[:, :, 2, 0::2] = dNdx[:, :, 1, :]
        B[:, :, 2, 1::2] = dNdx[:, :, 0, :]
        self.B = B

        # Corner (Gauss-Lobatto) rule for the damage reaction terms: keeps
        # the reaction operator diagonal so the damage field respects its
        # [0, 1] bounds; stiffness and gradient terms stay on the 2x2 rule.
        dN_c = np.empty((4, 2, 4))
        for g, (x, e_) in enumerate(_CORNERS):
            dN_c[g, 0] = 0.25 * np.array([-(1 - e_), (1 - e_), (1 + e_), -(1 + e_)])
            dN_c[g, 1] = 0.25 * np.array([-(1 - x), -(1 + x), (1 + x), (1 - x)])
        J_c = np.einsum("gdn,enc->egdc", dN_c, xy)
        detJ_c = J_c[..., 0, 0] * J_c[..., 1, 1] - J_c[..., 0, 1] * J_c[..., 1, 0]
        if detJ_c.min() <= 0.0:
            bad = int(np.nonzero(detJ_c.min(axis=1) <= 0.0)[0][0])
            raise MeshError(f"element {bad} has non-positive Jacobian at a corner")
        self.wdetJ_c = detJ_c.copy()            # corner weights are all 1
        Jinv_c = np.empty_like(J_c)
        Jinv_c[..., 0, 0] = J_c[..., 1, 1] / detJ_c
        Jinv_c[..., 1, 1] = J_c[..., 0, 0] / detJ_c
        Jinv_c[..., 0, 1] = -J_c[..., 0, 1] / detJ_c
        Jinv_c[..., 1, 0] = -J_c[..., 1, 0] / detJ_c
        dNdx_c = np.einsum("egdc,gcn->egdn", Jinv_c, dN_c)
        B_c = np.zeros((n_e, 4, 3, 8))
        B_c[:, :, 0, 0::2] = dNdx_c[:, :, 0, :]
        B_c[:, :, 1, 1::2] = dNdx_c[:, :, 1, :]
        B_c[:, :, 2, 0::2] = dNdx_c[:, :, 1, :]
        B_c[:, :, 2, 1::2] = dNdx_c[:, :, 0, :]
        self.B_corner = B_c

        conn = mesh.elements
        self.edof_u = np.empty((n_e, 8), dtype=np.int64)
        self.edof_u[:, 0::2] = 2 * conn
        self.edof_u[:, 1::2] = 2 * conn + 1
        self.edof_phi = conn.copy()

        self.n_dof_u = 2 * mesh.n_nodes
        self.n_dof_phi = mesh.n_nodes
        self.n_dof = self.n_dof_u + self.n_dof_phi

        # scatter indices for the sparse block tangents
        self.rows_uu = np.repeat(self.edof_u, 8, axis=1).ravel()
        self.cols_uu = np.tile(self.edof_u, (1, 8)).ravel()
        self.rows_pp = np.repeat(self.edof_phi, 4, axis=1).ravel() + self.n_dof_u
        self.cols_pp = np.tile(self.edof_phi, (1, 4)).ravel() + self.n_dof_u

    # -- field evaluation ---------------------------------------------------

    def strains(self, u: np.ndarray) -> np.ndarray:
        """Strain (e, 4 gp, 3) from a global displacement vector."""
        ue = u[self.edof_u]
        return np.einsum("egij,ej->egi", self.B, ue)

    def corner_strains(self, u: np.ndarray) -> np.ndarray:
        """Strain (e, 4 corner, 3) at the reaction quadrature points."""
        ue = u[self.edof_u]
        return np.einsum("egij,ej->egi", self.B_corner, ue)

    def phi_at_gp(self, phi: np.ndarray) -> np.ndarray:
        return phi[self.edof_phi] @ self.N.T                # (e, 4)

    def grad_phi(self, phi: np.ndarray) -> np.ndarray:
        pe = phi[self.edof_phi]
        return np.einsum("egdn,en->egd", self.dNdx, pe)     # (e, 4, 2)


def assemble_residual(
    disc: Discretisation,
    mat: PFMaterial,
    u: np.ndarray,
    phi: np.ndarray,
    history: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[float, float]]:
    """Internal forces of both fields and the effective history field.

    Returns ``(r_u, r_phi, H_eff, scales)`` where ``H_eff = max(history,
    psi(u))`` per reaction quadrature point (element corners) is the value
    actually driving the damage equation, and ``scales`` are the
    element-level force norms of the two fields before assembly cancellation
    (natural magnitudes for relative convergence checks).  The displacement
    residual is the internal force vector (loads are displacement-controlled,
    so equilibrium is r_u = 0 on free dofs).
    """
    C2d = mat.C2d
    g_c, ell, k_res = mat.g_c, mat.ell, mat.residual_stiffness

    eps = disc.strains(u)                                   # (e, g, 3)
    sigma0 = np.einsum("ij,egj->egi", C2d, eps)

    phig = disc.phi_at_gp(phi)                              # (e, g)
    degr = (1.0 - phig) ** 2 + k_res

    w = disc.wdetJ
    r_ue = np.einsum("egij,egi,eg->ej", disc.B, sigma0, degr * w)
    r_u = np.bincount(disc.edof_u.ravel(), weights=r_ue.ravel(),
                      minlength=disc.n_dof_u)

    eps_c = disc.corner_strains(u)
    psi_c = 0.5 * np.einsum("egi,ij,egj->eg", eps_c, C2d, eps_c)
    H_eff = np.maximum(history, psi_c)                      # (e, 4 corner)

    phic = phi[disc.edof_phi]                               # nodal = corner values
    w_c = disc.wdetJ_c
    react = w_c * (g_c / ell * phic - 2.0 * (1.0 - phic) * H_eff)
    drive = w_c * 2.0 * (1.0 - phic) * H_eff
    gphi = disc.grad_phi(phi)                               # (e, g, 2)
    grad = g_c * ell * np.einsum("egdn,egd,eg->en", disc.dNdx, gphi, w)
    r_pe = react + grad
    r_phi = np.bincount(disc.edof_phi.ravel(), weights=r_pe.ravel(),
                        minlength=disc.n_dof_phi)
    scales = (float(np.linalg.norm(r_ue)),
              float(np.linalg.norm(react + drive) + np.linalg.norm(drive)
                    + np.linalg.norm(grad)))
    return r_u, r_phi, H_eff, scales


def assemble_uu_block(disc: Discretisation, mat: PFMaterial,
                      phi: np.ndarray) -> sp.csc_matrix:
    """Degraded elastic stiffness (displacement block of the seed tangent)."""
    degr = (1.0 - disc.phi_at_gp(phi)) ** 2 + mat.residual_stiffness
    k_uu = np.einsum("egia,ij,egjb,eg->eab", disc.B, mat.C2d, disc.B,
                     degr * disc.wdetJ, optimize=True)
    n = disc.n_dof_u
    K = sp.coo_matrix((k_uu.ravel(), (disc.rows_uu, disc.cols_uu)),
                      shape=(n, n))
    return K.tocsc()


def assemble_pp_block(disc: Discretisation, mat: PFMaterial, u: np.ndarray,
                      history: np.ndarray) -> sp.csc_matrix:
    """Damage reaction-diffusion operator with the current history field.

    This is the exact Jacobian of the damage residual at fixed history, so a
    single solve lands on the partial minimiser.
    """
    g_c, ell = mat.g_c, mat.ell
    eps_c = disc.corner_strains(u)
    psi_c = 0.5 * np.einsum("egi,ij,egj->eg", eps_c, mat.C2d, eps_c)
    H_eff = np.maximum(history, psi_c)
    # diagonal reaction block (corner rule) plus the 2x2 gradient block
    react = disc.wdetJ_c * (g_c / ell + 2.0 * H_eff)
    k_pp = np.zeros((disc.mesh.n_elements, 4, 4))
    k_pp[:, range(4), range(4)] = react
    k_pp += g_c * ell * np.einsum("egda,egdb,eg->eab", disc.dNdx, disc.dNdx,
                                  disc.wdetJ, optimize=True)
    n = disc.n_dof_phi
    K = sp.coo_matrix(
        (k_pp.ravel(),
         (disc.rows_pp - disc.n_dof_u, disc.cols_pp - disc.n_dof_u)),
        shape=(n, n))
    return K.tocsc()


def assemble_block_tangent(
    disc: Discretisation,
    mat: PFMaterial,
    u: np.ndarray,
    phi: np.ndarray,
    history: np.ndarray,
) -> sp.csc_matrix:
    """Symmetric block-diagonal tangent used to seed the quasi-Newton solver.

    The uu block is the degraded elastic stiffness, the phi-phi block the
    damage reaction-diffusion operator with the current history field; the
    nonsymmetric coupling blocks are left to the quasi-Newton updates.
    """
    return sp.block_diag(
        [assemble_uu_block(disc, mat, phi),
         assemble_pp_block(disc, mat, u, history)], format="csc")


def regularised_surface_energy(disc: Discretisation, mat: PFMaterial,
                               phi: np.ndarray) -> float:
    """Discrete crack surface energy int G_c (phi^2/(2 l) + l |grad phi|^2 / 2)."""
    phig = disc.phi_at_gp(phi)
    gphi = disc.grad_phi(phi)
    dens = phig**2 / (2.0 * mat.ell) + 0.5 * mat.ell * np.einsum(
        "egd,egd->eg", gphi, gphi)
    return mat.g_c * float(np.sum(dens * disc.wdetJ))


def elastic_energy(disc: Discretisation, mat: PFMaterial, u: np.ndarray,
                   phi: np.ndarray) -> float:
    """Degraded stored elastic energy (N mm per unit thickness)."""
    eps = disc.strains(u)
    psi = 0.5 * np.einsum("egi,ij,egj->eg", eps, mat.C2d, eps)
    degr = (1.0 - disc.phi_at_gp(phi)) ** 2 + mat.residual_stiffness
    return float(np.sum(degr * psi * disc.wdetJ))
