"""Voigt-notation algebra: construction, rotation, orientational averaging."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanofrac.errors import QuadratureNonConvergence
from nanofrac.tensors import (
    ODF3D,
    Orientation,
    StiffnessTensor,
    average_rotated,
    isotropic_stiffness,
    orientational_average,
    rotate_stiffness,
    rotate_strain_map,
    stiffness_to_tensor,
    strain_map_to_tensor,
    tensor_to_stiffness,
    tensor_to_strain_map,
)


def transversely_isotropic_example() -> np.ndarray:
    m = np.zeros((6, 6))
    m[0, 0] = m[1, 1] = 10.0
    m[2, 2] = 50.0
    m[0, 1] = m[1, 0] = 4.0
    m[0, 2] = m[2, 0] = m[1, 2] = m[2, 1] = 3.0
    m[3, 3] = m[4, 4] = 7.0
    m[5, 5] = 0.5 * (m[0, 0] - m[0, 1])
    return m


class TestIsotropicStiffness:
    def test_lame_constant_oracle(self):
        # independent oracle: lambda = E nu/((1+nu)(1-2nu)), mu = E/(2(1+nu))
        E, nu = 2.5e9, 0.28
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        C = isotropic_stiffness(E, nu)
        assert C.m[0, 0] == pytest.approx(lam + 2 * mu, rel=1e-14)
        assert C.m[0, 0] == pytest.approx(3.196022727272728e9, rel=1e-12)
        assert C.m[3, 3] == pytest.approx(mu, rel=1e-14)
        assert C.m[3, 3] == pytest.approx(0.9765625e9, rel=1e-12)

    def test_zero_poisson_decouples(self):
        C = isotropic_stiffness(1.0, 0.0)
        assert np.allclose(np.diag(C.m), [1, 1, 1, 0.5, 0.5, 0.5])
        assert np.allclose(C.m - np.diag(np.diag(C.m)), 0.0)

    def test_filler_modulus_positive_definite(self):
        assert isotropic_stiffness(700e9, 0.3).is_positive_definite()

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            isotropic_stiffness(1.0, 0.5)
        with pytest.raises(ValueError):
            isotropic_stiffness(1.0, -1.0)
        with pytest.raises(ValueError):
            isotropic_stiffness(-2.0, 0.3)

    @given(st.floats(1e3, 1e12), st.floats(-0.9, 0.45))
    @settings(max_examples=40, deadline=None)
    def test_symmetry_and_definiteness(self, E, nu):
        C = isotropic_stiffness(E, nu)
        assert np.array_equal(C.m, C.m.T)
        assert C.is_positive_definite()


class TestConversions:
    def test_stiffness_round_trip(self):
        C = isotropic_stiffness(3.0, 0.2).m
        assert np.allclose(tensor_to_stiffness(stiffness_to_tensor(C)), C)

    def test_strain_map_round_trip(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(6, 6))
        assert np.allclose(tensor_to_strain_map(strain_map_to_tensor(m)), m,
                           atol=1e-14)

    def test_identity_strain_map(self):
        # the symmetric fourth-order identity contracts to the 6x6 identity
        ident = np.zeros((3, 3, 3, 3))
        for i in range(3):
            for j in range(3):
                ident[i, j, i, j] += 0.5
                ident[i, j, j, i] += 0.5
        assert np.allclose(tensor_to_strain_map(ident), np.eye(6))

    def test_major_symmetry_enforced(self):
        bad = np.eye(6)
        bad[0, 1] = 0.5
        with pytest.raises(ValueError):
            StiffnessTensor.from_matrix(bad)


class TestRotation:
    def test_isotropic_invariance(self):
        C = isotropic_stiffness(2.5e9, 0.28)
        Cr = rotate_stiffness(C, Orientation(1.1, 0.7))
        assert np.allclose(Cr.m, C.m, rtol=1e-12, atol=1e-12 * np.abs(C.m).max())

    def test_identity_rotation(self):
        C = StiffnessTensor.from_matrix(transversely_isotropic_example())
        Cr = rotate_stiffness(C, Orientation(0.0, 0.0))
        assert np.allclose(Cr.m, C.m, atol=1e-14)

    def test_composition_against_matrix_oracle(self):
        # rotating twice must equal one rotation by the composed 3x3 matrix
        C = StiffnessTensor.from_matrix(transversely_isotropic_example())
        o1 = Orientation(0.0, np.pi / 2)
        o2 = Orientation(np.pi / 2, np.pi / 2)
        q = o2.rotation_matrix() @ o1.rotation_matrix()
        once = rotate_stiffness(rotate_stiffness(C, o1), o2).m
        t = np.einsum("ip,jq,kr,ls,pqrs->ijkl", q, q, q, q,
                      stiffness_to_tensor(C.m), optimize=True)
        assert np.allclose(once, tensor_to_stiffness(t), atol=1e-12 * np.abs(C.m).max())

    def test_norm_preserved(self):
        C = StiffnessTensor.from_matrix(transversely_isotropic_example())
        t0 = stiffness_to_tensor(C.m)
        t1 = stiffness_to_tensor(rotate_stiffness(C, Orientation(2.2, 1.0)).m)
        assert np.linalg.norm(t1) == pytest.approx(np.linalg.norm(t0), rel=1e-12)

    def test_rotation_preserves_symmetry_and_definiteness(self):
        C = StiffnessTensor.from_matrix(transversely_isotropic_example())
        Cr = rotate_stiffness(C, Orientation(0.3, 1.2))
        assert np.allclose(Cr.m, Cr.m.T)
        assert Cr.is_positive_definite()

    def test_orientation_range_validation(self):
        with pytest.raises(ValueError):
            Orientation(-0.1, 0.2)
        with pytest.raises(ValueError):
            Orientation(0.1, 2.0)


class TestODF:
    def test_uniform_normalised(self):
        assert ODF3D.uniform().normalisation() == pytest.approx(1.0, abs=1e-10)

    def test_tabulated_rejects_unnormalised(self):
        with pytest.raises(ValueError):
            ODF3D.from_function(lambda g, t: 1.0)

    def test_tabulated_accepts_normalised(self):
        odf = ODF3D.from_function(lambda g, t: np.cos(t) / np.pi)
        assert odf.normalisation() == pytest.approx(1.0, abs=1e-8)


class TestOrientationalAverage:
    def test_constant_integrand(self):
        M = np.arange(36, dtype=float).reshape(6, 6)
        avg = orientational_average(lambda o: M, ODF3D.uniform(), order=8)
        assert np.allclose(avg, M, rtol=1e-12)

    def test_uniform_average_of_rotated_ti_is_isotropic(self):
        Cti = transversely_isotropic_example()
        avg = average_rotated(Cti, "stiffness", ODF3D.uniform())
        # two independent eigenvalue groups: C11=C22=C33, C44=C55=C66,
        # and the isotropic shear relation C44 = (C11 - C12)/2
        assert avg[0, 0] == pytest.approx(avg[1, 1], rel=1e-10)
        assert avg[0, 0] == pytest.approx(avg[2, 2], rel=1e-10)
        assert avg[3, 3] == pytest.approx(avg[4, 4], rel=1e-10)
        assert avg[3, 3] == pytest.approx(avg[5, 5], rel=1e-10)
        assert avg[3, 3] == pytest.approx((avg[0, 0] - avg[0, 1]) / 2, rel=1e-6)

    def test_generic_path_matches_fast_path(self):
        Cti = transversely_isotropic_example()
        generic = orientational_average(
            lambda o: rotate_stiffness(
                StiffnessTensor.from_matrix(Cti), o).m,
            ODF3D.uniform(), order=16)
        fast = average_rotated(Cti, "stiffness", ODF3D.uniform(), order=16)
        assert np.allclose(generic, fast, rtol=1e-12)

    def test_linearity(self):
        A = transversely_isotropic_example()
        B = np.eye(6) * 3.0
        odf = ODF3D.uniform()
        left = average_rotated(2.0 * A + B, "stiffness", odf, order=16)
        right = (2.0 * average_rotated(A, "stiffness", odf, order=16)
                 + average_rotated(B, "stiffness", odf, order=16))
        assert np.allclose(left, right, rtol=1e-12)

    def test_quadrature_convergence_for_smooth_integrand(self):
        Cti = transversely_isotropic_example()
        a16 = average_rotated(Cti, "stiffness", ODF3D.uniform(), order=16)
        a32 = average_rotated(Cti, "stiffness", ODF3D.uniform(), order=32)
        assert np.linalg.norm(a32 - a16) < 1e-8 * np.linalg.norm(a32)

    def test_nonconvergence_reported(self):
        # a needle-sharp non-smooth density cannot converge at low order
        spike = lambda g, t: 500.0 if abs(t - 0.7) < 1e-3 else 1e-9
        odf = ODF3D(spike, _skip_check=True)
        M = transversely_isotropic_example()
        with pytest.raises(QuadratureNonConvergence):
            average_rotated(M, "stiffness", odf, order=4, conv_tol=1e-10)

    def test_strain_map_rotation_consistent_with_stiffness(self):
        # conjugation consistency: rotating C and rotating I leaves products
        # sane; the strain-map rotation of the identity is the identity
        ident = np.eye(6)
        assert np.allclose(rotate_strain_map(ident, Orientation(1.0, 0.5)),
                           ident, atol=1e-13)
