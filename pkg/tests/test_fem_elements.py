"""Element-level checks: plane-strain reduction, residuals, history field."""

import numpy as np
import pytest

from nanofrac.pf_fem import (
    Discretisation,
    PFMaterial,
    assemble_residual,
    element_energy_density,
    plane_strain_reduce,
    regularised_surface_energy,
    update_history,
)
from nanofrac.pf_fem.mesh import Mesh, graded_line, tensor_grid
from nanofrac.tensors import StiffnessTensor, isotropic_stiffness


def square_mesh(nx=2, ny=2, lx=2.0, ly=1.7):
    nodes, elems = tensor_grid(np.linspace(0, lx, nx + 1),
                               np.linspace(0, ly, ny + 1))
    return Mesh(nodes, elems)


class TestPlaneStrainReduce:
    def test_zero_poisson(self):
        C2d = plane_strain_reduce(isotropic_stiffness(5.0e9, 0.0))
        assert C2d[0, 0] == pytest.approx(5.0e9)
        assert C2d[0, 1] == pytest.approx(0.0)
        assert C2d[2, 2] == pytest.approx(2.5e9)

    def test_closed_form(self):
        E, nu = 2.5e9, 0.28
        C2d = plane_strain_reduce(isotropic_stiffness(E, nu))
        expected = E * (1 - nu) / ((1 + nu) * (1 - 2 * nu))
        assert C2d[0, 0] == pytest.approx(expected, rel=1e-12)
        assert C2d[0, 0] == pytest.approx(3.196022727272728e9, rel=1e-12)

    def test_round_trip_consistency(self):
        E, nu = 3.1e9, 0.22
        C2d = plane_strain_reduce(isotropic_stiffness(E, nu))
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        direct = np.array([
            [lam + 2 * mu, lam, 0.0],
            [lam, lam + 2 * mu, 0.0],
            [0.0, 0.0, mu],
        ])
        assert np.allclose(C2d, direct, rtol=1e-12)

    def test_anisotropic_submatrix(self):
        m = np.diag([10.0, 11, 12, 5, 6, 7.0])
        m[0, 1] = m[1, 0] = 2.0
        C2d = plane_strain_reduce(StiffnessTensor.from_matrix(m))
        assert C2d[0, 0] == 10.0 and C2d[1, 1] == 11.0 and C2d[2, 2] == 7.0
        assert C2d[0, 1] == 2.0


class TestEnergyDensity:
    def test_zero_strain(self):
        C2d = plane_strain_reduce(isotropic_stiffness(2.5e9, 0.0))
        assert element_energy_density(np.zeros(3), C2d) == 0.0

    def test_uniaxial(self):
        C2d = plane_strain_reduce(isotropic_stiffness(2.5e9, 0.0))
        psi = element_energy_density([1e-3, 0, 0], C2d)
        assert psi == pytest.approx(0.5 * 2.5e9 * 1e-6, rel=1e-12)  # 1250 J/m3

    def test_shear_oracle(self):
        E, nu = 3.0e9, 0.3
        G = E / (2 * (1 + nu))
        C2d = plane_strain_reduce(isotropic_stiffness(E, nu))
        gamma = 2e-3
        assert element_energy_density([0, 0, gamma], C2d) == pytest.approx(
            0.5 * G * gamma**2, rel=1e-12)

    def test_nonnegative_random(self):
        rng = np.random.default_rng(1)
        C2d = plane_strain_reduce(isotropic_stiffness(2.5e9, 0.28))
        for _ in range(50):
            assert element_energy_density(rng.normal(size=3), C2d) >= 0.0


class TestUpdateHistory:
    def test_growing(self):
        assert update_history(5.0, 3.0) == 5.0

    def test_shrinking(self):
        assert update_history(2.0, 3.0) == 3.0

    def test_running_max(self):
        seq = [0.1, 0.5, 0.3, 0.9, 0.2]
        h = 0.0
        maxima = []
        for psi in seq:
            h = update_history(psi, h)
            maxima.append(h)
        assert maxima == [0.1, 0.5, 0.5, 0.9, 0.9]


class TestResidual:
    def test_undeformed_zero(self):
        mesh = square_mesh()
        disc = Discretisation(mesh)
        mat = PFMaterial(isotropic_stiffness(2.5e9, 0.28), 133.0, 1.0)
        r_u, r_phi, H, _ = assemble_residual(
            disc, mat, np.zeros(2 * mesh.n_nodes), np.zeros(mesh.n_nodes),
            np.zeros((mesh.n_elements, 4)))
        assert np.allclose(r_u, 0.0) and np.allclose(r_phi, 0.0)
        assert np.allclose(H, 0.0)

    def test_patch_constant_stress(self):
        # linear displacement field on an irregular 2-element patch must
        # produce zero residual at the interior node and constant stress
        nodes, elems = tensor_grid(np.array([0.0, 1.3, 2.0]),
                                   np.array([0.0, 0.9, 1.7]))
        mesh = Mesh(nodes, elems)
        disc = Discretisation(mesh)
        mat = PFMaterial(isotropic_stiffness(2.5e9, 0.28), 133.0, 1.0)
        a, b, c, d = 1e-3, 2e-4, -3e-4, 5e-4
        u = np.empty(2 * mesh.n_nodes)
        u[0::2] = a * nodes[:, 0] + b * nodes[:, 1]
        u[1::2] = c * nodes[:, 0] + d * nodes[:, 1]
        r_u, _, H, _ = assemble_residual(
            disc, mat, u, np.zeros(mesh.n_nodes), np.zeros((4, 4)))
        interior = 4  # centre node of the 3x3 grid
        scale = np.abs(r_u).max()
        assert abs(r_u[2 * interior]) < 1e-12 * scale
        assert abs(r_u[2 * interior + 1]) < 1e-12 * scale
        eps = disc.strains(u)
        assert np.allclose(eps, [a, d, b + c], atol=1e-15)
        psi_expected = element_energy_density([a, d, b + c], mat.C2d)
        assert np.allclose(H, psi_expected, rtol=1e-12)

    def test_uniform_phi_mass_action(self):
        # uniform phi, zero strain: the damage residual is G_c phi / ell
        # times the (lumped = consistent row-sum) mass action
        nodes, elems = tensor_grid(np.array([0.0, 2.0]), np.array([0.0, 2.0]))
        mesh = Mesh(nodes, elems)
        disc = Discretisation(mesh)
        mat = PFMaterial(isotropic_stiffness(2.5e9, 0.28), 133.0, 1.3)
        phi0 = 0.3
        _, r_phi, _, _ = assemble_residual(
            disc, mat, np.zeros(8), phi0 * np.full(4, 1.0), np.zeros((1, 4)))
        area = 4.0
        assert np.allclose(r_phi, mat.g_c / mat.ell * phi0 * area / 4, rtol=1e-12)

    def test_jacobian_error_names_element(self):
        nodes, elems = tensor_grid(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        elems = elems[:, ::-1].copy()  # clockwise connectivity
        from nanofrac.errors import MeshError
        with pytest.raises(MeshError, match="element 0"):
            Discretisation(Mesh(nodes, elems))


class TestSurfaceEnergy:
    def test_exponential_profile_recovers_g_c(self):
        # the optimal 1D profile exp(-|x|/ell) carries G_c per unit length
        ell = 1.0
        h = ell / 7
        half = graded_line(0.0, 12.0 * ell, 0.0, 12.0 * ell, h)
        xs = np.unique(np.concatenate([-half[::-1], half]))
        ys = np.array([0.0, h, 2 * h])
        nodes, elems = tensor_grid(xs, ys)
        mesh = Mesh(nodes, elems)
        disc = Discretisation(mesh)
        mat = PFMaterial(isotropic_stiffness(1e9, 0.0), 1000.0, ell)
        phi = np.exp(-np.abs(mesh.nodes[:, 0]) / ell)
        energy = regularised_surface_energy(disc, mat, phi)
        per_unit_length = energy / (2 * h)
        assert per_unit_length == pytest.approx(mat.g_c, rel=0.02)

    def test_finer_mesh_converges(self):
        ell = 1.0
        errors = []
        for h in (ell / 7, ell / 14):
            half = graded_line(0.0, 12.0 * ell, 0.0, 12.0 * ell, h)
            xs = np.unique(np.concatenate([-half[::-1], half]))
            nodes, elems = tensor_grid(xs, np.array([0.0, h]))
            mesh = Mesh(nodes, elems)
            disc = Discretisation(mesh)
            mat = PFMaterial(isotropic_stiffness(1e9, 0.0), 1000.0, ell)
            phi = np.exp(-np.abs(mesh.nodes[:, 0]) / ell)
            energy = regularised_surface_energy(disc, mat, phi) / h
            errors.append(abs(energy - mat.g_c) / mat.g_c)
        assert errors[1] < errors[0]
