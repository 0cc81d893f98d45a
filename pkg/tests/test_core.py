"""State/operator types and the coarse-graining measures."""

import numpy as np
import pytest

from puriflow.core import (DensityMatrix, DistinguishedAlgebra,
                           HermitianOperator, PureState, expectation,
                           g_reduced_state, generalized_purity, hs_distance,
                           invariant_fluctuation, purity_bounds, variance)
from puriflow.algebras import (pauli_matrices, su2_algebra, su2_coherent_state,
                               su2_generators, two_qubit_local_algebra,
                               FockSpace, schwinger_generators)

SX, SY, SZ = pauli_matrices()


def bell_state():
    return PureState(np.array([1, 0, 0, 1]) / np.sqrt(2))


class TestPureState:
    def test_constructor_normalizes(self):
        st = PureState(np.array([3.0, 4.0]))
        assert np.linalg.norm(st.amplitudes) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_small_dimension(self):
        with pytest.raises(ValueError, match="at least 2"):
            PureState(np.array([1.0]))

    def test_rejects_zero_vector(self):
        with pytest.raises(ValueError, match="zero vector"):
            PureState(np.zeros(3))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            PureState(np.array([1.0, np.nan]))

    def test_basis_state(self):
        st = PureState.basis_state(4, 2)
        assert st.amplitudes[2] == 1.0
        assert st.dim == 4

    def test_random_is_normalized(self, rng):
        for _ in range(10):
            st = PureState.random(5, rng)
            assert abs(np.linalg.norm(st.amplitudes) - 1.0) < 1e-12


class TestHermitianOperator:
    def test_accepts_hermitian(self):
        op = HermitianOperator(SX)
        assert op.dim == 2

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            HermitianOperator(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            HermitianOperator(np.zeros((2, 3)))


class TestDensityMatrix:
    def test_from_state(self, rng):
        st = PureState.random(3, rng)
        rho = DensityMatrix.from_state(st)
        assert np.trace(rho.matrix) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_indefinite_matrices_allowed(self):
        # coarse-graining projections can be indefinite; the type only
        # checks hermiticity and trace
        m = np.diag([0.75, 0.25, 0.25, -0.25]).astype(complex)
        rho = DensityMatrix(m)
        assert np.min(np.linalg.eigvalsh(rho.matrix)) < 0


class TestExpectation:
    def test_eigenstate_values(self):
        assert expectation(PureState.basis_state(2, 0), SZ) == pytest.approx(1.0)
        plus = PureState(np.array([1, 1]) / np.sqrt(2))
        assert expectation(plus, SX) == pytest.approx(1.0)
        jz = su2_generators(3)[2]
        assert expectation(PureState.basis_state(3, 2), jz) == pytest.approx(-1.0)

    def test_normalization_invariance(self, rng):
        st = PureState.random(3, rng)
        scaled = PureState(st.amplitudes * (2.3 - 1.7j))
        jx = su2_generators(3)[0]
        assert expectation(st, jx) == pytest.approx(expectation(scaled, jx), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            expectation(PureState.basis_state(3, 0), SZ)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            expectation(PureState.basis_state(2, 0),
                        np.array([[0, 1], [0, 0]], dtype=complex))


class TestVariance:
    def test_eigenstate_has_zero_variance(self):
        assert variance(PureState.basis_state(2, 0), SZ) == pytest.approx(0.0, abs=1e-12)

    def test_transverse_variance(self):
        assert variance(PureState.basis_state(2, 0), SX) == pytest.approx(1.0)

    def test_balanced_number_state(self):
        # direct 5x5 evaluation in the fixed-number sector: (j(j+1) - m^2)/2
        space = FockSpace(4)
        jx = schwinger_generators(space)[0]
        st = space.number_state(2, 2)
        assert variance(st, jx) == pytest.approx(3.0, abs=1e-12)

    def test_never_negative(self, rng):
        alg = su2_algebra(5)
        for _ in range(20):
            st = PureState.random(5, rng)
            for g in alg.generators:
                assert variance(st, g) >= 0.0


class TestMeasures:
    def test_product_state_purity(self):
        alg = two_qubit_local_algebra()
        assert generalized_purity(PureState.basis_state(4, 0), alg) == pytest.approx(2.0)

    def test_bell_state_purity_vanishes(self):
        alg = two_qubit_local_algebra()
        assert generalized_purity(bell_state(), alg) == pytest.approx(0.0, abs=1e-12)

    def test_every_qubit_state_has_unit_purity(self, rng):
        alg = su2_algebra(2)
        pauli = DistinguishedAlgebra([HermitianOperator(s) for s in (SX, SY, SZ)],
                                     purity_max=1.0, fluctuation_min=2.0)
        for _ in range(25):
            st = PureState.random(2, rng)
            assert generalized_purity(st, pauli) == pytest.approx(1.0, abs=1e-12)
            assert invariant_fluctuation(st, pauli) == pytest.approx(2.0, abs=1e-12)

    def test_highest_weight_fluctuation(self):
        for dim in (2, 3, 5):
            j = (dim - 1) / 2
            alg = su2_algebra(dim)
            top = PureState.basis_state(dim, 0)
            assert invariant_fluctuation(top, alg) == pytest.approx(j, abs=1e-12)

    def test_balanced_number_state_fluctuation(self):
        space = FockSpace(4)
        alg = DistinguishedAlgebra(schwinger_generators(space))
        assert invariant_fluctuation(space.number_state(2, 2), alg) == pytest.approx(6.0)

    def test_casimir_identity(self, rng):
        """Purity plus fluctuation is the Casimir value j(j+1) on any state."""
        for dim in (2, 3, 5):
            j = (dim - 1) / 2
            alg = su2_algebra(dim)
            for _ in range(200):
                st = PureState.random(dim, rng)
                total = (generalized_purity(st, alg)
                         + invariant_fluctuation(st, alg))
                assert total == pytest.approx(j * (j + 1), abs=1e-10)

    def test_bounds_hold_on_random_states(self, rng):
        for dim in (3, 5):
            alg = su2_algebra(dim)
            for _ in range(100):
                st = PureState.random(dim, rng)
                assert generalized_purity(st, alg) <= alg.purity_max + 1e-9
                assert invariant_fluctuation(st, alg) >= alg.fluctuation_min - 1e-9

    def test_bound_saturation_on_coherent_states(self, rng):
        """Fluctuation is minimal exactly where purity is maximal."""
        for dim in (2, 3, 5):
            alg = su2_algebra(dim)
            for _ in range(10):
                theta, phi = rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)
                st = su2_coherent_state(dim, theta, phi)
                assert generalized_purity(st, alg) == pytest.approx(
                    alg.purity_max, abs=1e-9)
                assert invariant_fluctuation(st, alg) == pytest.approx(
                    alg.fluctuation_min, abs=1e-9)


class TestPurityBounds:
    def test_su2_values(self):
        assert purity_bounds("su2", j=1) == (1.0, 1.0)
        assert purity_bounds("su2", j=2) == (2.0, 4.0)
        assert purity_bounds("su2", j=0.5) == (0.5, 0.25)

    def test_su2_brute_force_scan(self):
        """Grid scan over coherent states reproduces the closed-form minimum."""
        for dim in (3, 5):
            j = (dim - 1) / 2
            alg = su2_algebra(dim)
            best = np.inf
            for theta in np.linspace(0, np.pi, 40):
                for phi in np.linspace(0, 2 * np.pi, 40):
                    best = min(best, invariant_fluctuation(
                        su2_coherent_state(dim, theta, phi), alg))
            assert best == pytest.approx(j, abs=1e-9)

    def test_quadrature_bound(self):
        fmin, pmax = purity_bounds("quadrature")
        assert fmin == 2.0 and pmax is None

    def test_two_qubit_values(self):
        assert purity_bounds("two_qubit_local") == (4.0, 2.0)

    def test_custom_pass_through(self):
        assert purity_bounds("custom", bounds=(3.0, 9.0)) == (3.0, 9.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown algebra kind"):
            purity_bounds("so5")


class TestQuadratureFluctuationBound:
    def test_truncated_coherent_states_approach_two(self):
        """Gaussian-coherent states have unit q/p dispersion per mode."""
        from puriflow.algebras import FockSpace, quadrature_algebra, fock_operators
        from scipy.linalg import expm
        space = FockSpace(10)
        alg = quadrature_algebra(space)
        ops = fock_operators(space)
        vac = space.number_state(0, 0)
        assert invariant_fluctuation(vac, alg) == pytest.approx(2.0, abs=1e-12)
        for a1, a2 in ((0.4, 0.0), (0.3, 0.5j), (0.6, -0.2 + 0.4j)):
            disp = expm(a1 * ops.a1.conj().T - np.conj(a1) * ops.a1
                        + a2 * ops.a2.conj().T - np.conj(a2) * ops.a2)
            st = PureState(disp @ vac.amplitudes)
            assert invariant_fluctuation(st, alg) == pytest.approx(2.0, abs=1e-6)


class TestGReducedState:
    def test_maximally_mixed_is_fixed_point(self):
        alg = two_qubit_local_algebra()
        rho = DensityMatrix(np.eye(4) / 4)
        out = g_reduced_state(rho, alg)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_bell_projector_reduces_to_mixed(self):
        alg = two_qubit_local_algebra()
        rho = DensityMatrix.from_state(bell_state())
        out = g_reduced_state(rho, alg)
        np.testing.assert_allclose(out.matrix, np.eye(4) / 4, atol=1e-12)

    def test_product_projector_reduction(self):
        # independent Hilbert-Schmidt projection: all six local expectations
        # vanish except the two z components, each equal to 1
        alg = two_qubit_local_algebra()
        rho = DensityMatrix.from_state(PureState.basis_state(4, 0))
        eye = np.eye(2)
        expected = (np.eye(4) / 4
                    + np.kron(SZ, eye) / 4 + np.kron(eye, SZ) / 4)
        out = g_reduced_state(rho, alg)
        np.testing.assert_allclose(out.matrix, expected, atol=1e-12)

    def test_expectations_and_trace_preserved(self, rng):
        alg = two_qubit_local_algebra()
        for _ in range(10):
            st = PureState.random(4, rng)
            rho = DensityMatrix.from_state(st)
            out = g_reduced_state(rho, alg)
            assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-12)
            for g in alg.generators:
                want = np.trace(rho.matrix @ g.matrix).real
                got = np.trace(out.matrix @ g.matrix).real
                assert got == pytest.approx(want, abs=1e-10)

    def test_idempotent(self, rng):
        alg = su2_algebra(3)
        st = PureState.random(3, rng)
        once = g_reduced_state(DensityMatrix.from_state(st), alg)
        twice = g_reduced_state(once, alg)
        np.testing.assert_allclose(once.matrix, twice.matrix, atol=1e-12)


class TestHsDistance:
    def test_zero_on_equal(self, rng):
        rho = DensityMatrix.from_state(PureState.random(3, rng))
        assert hs_distance(rho, rho) == 0.0

    def test_orthogonal_projectors(self):
        a = DensityMatrix.from_state(PureState.basis_state(2, 0))
        b = DensityMatrix.from_state(PureState.basis_state(2, 1))
        assert hs_distance(a, b) == pytest.approx(np.sqrt(2))

    def test_mixed_vs_pure(self):
        a = DensityMatrix(np.eye(2) / 2)
        b = DensityMatrix.from_state(PureState.basis_state(2, 0))
        assert hs_distance(a, b) == pytest.approx(1 / np.sqrt(2))

    def test_symmetry_and_mismatch(self, rng):
        a = DensityMatrix.from_state(PureState.random(3, rng))
        b = DensityMatrix.from_state(PureState.random(3, rng))
        assert hs_distance(a, b) == pytest.approx(hs_distance(b, a))
        c = DensityMatrix(np.eye(2) / 2)
        with pytest.raises(ValueError, match="dimension mismatch"):
            hs_distance(a, c)


class TestDistinguishedAlgebra:
    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValueError, match="mixed dimensions"):
            DistinguishedAlgebra([HermitianOperator(SZ),
                                  HermitianOperator(np.eye(3))])

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            DistinguishedAlgebra([])

    def test_squares_sum_is_casimir_for_su2(self):
        alg = su2_algebra(3)
        np.testing.assert_allclose(alg.squares_sum(), 2.0 * np.eye(3), atol=1e-12)
