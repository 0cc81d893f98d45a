"""Post-processing: observable series, sections, Lyapunov estimates."""

import numpy as np
import pytest

from puriflow.algebras import (pauli_matrices, su2_algebra, su2_generators)
from puriflow.analysis import (SectionPoint, box_occupancy, fluctuation_series,
                               largest_lyapunov, observable_series,
                               poincare_section, section_of_orbit)
from puriflow.core import PureState
from puriflow.opensystem import LindbladSpec, integrate_lindblad
from puriflow.reduced import energy_shell_point, make_field

SX, SY, SZ = pauli_matrices()


class TestObservableSeries:
    def test_constant_on_eigenstate_trajectory(self):
        states = np.tile(PureState.basis_state(2, 0).amplitudes, (5, 1))
        np.testing.assert_allclose(observable_series(states, SZ), 1.0)

    def test_pure_and_density_agree(self, rng):
        states = np.stack([PureState.random(3, rng).amplitudes for _ in range(6)])
        rhos = np.einsum("ti,tj->tij", states, states.conj())
        jz = su2_generators(3)[2]
        np.testing.assert_allclose(observable_series(states, jz),
                                   observable_series(rhos, jz), atol=1e-12)

    def test_unitary_run_matches_density_run(self, rng, hermitian):
        spec = LindbladSpec(hamiltonian=hermitian(rng, 2), lindblads=[SZ],
                            gamma=0.0)
        traj = integrate_lindblad(PureState.random(2, rng), spec, dt=1e-3,
                                  t_final=1.0, sample_stride=100)
        series = observable_series(traj.densities, SX)
        assert np.all(np.isfinite(series))

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="expected states"):
            observable_series(np.zeros((2, 2, 2, 2)), SZ)


class TestFluctuationSeries:
    def test_pure_and_density_agree(self, rng):
        alg = su2_algebra(3)
        states = np.stack([PureState.random(3, rng).amplitudes for _ in range(5)])
        rhos = np.einsum("ti,tj->tij", states, states.conj())
        np.testing.assert_allclose(fluctuation_series(states, alg),
                                   fluctuation_series(rhos, alg), atol=1e-10)


class TestSections:
    def test_crossing_invariants(self):
        y0 = energy_shell_point("ns", 1.5, 1.0, 1.5, 0.5, -0.25)
        points = section_of_orbit(y0, "ns", 1.5, 1.0, t_max=60.0)
        assert len(points) > 10
        field = make_field("ns", 1.5, 1.0)
        for p in points[1:4]:
            # re-integrate to the crossing time from the start: the section
            # definition itself is re-checked via the refined states
            assert p.crossing_time > 0
        # refinement contract is |q2| <= 1e-9 with p2 > 0; re-derive a few
        # crossings by direct re-integration
        from puriflow.reduced import rk4_step
        y = tuple(y0)
        t = 0.0
        checked = 0
        for p in points[1:3]:
            while t + 2e-3 < p.crossing_time - 1e-12:
                y = rk4_step(field, y, 2e-3)
                t += 2e-3
            y_refined = rk4_step(field, y, p.crossing_time - t)
            assert abs(y_refined[1]) <= 1e-6
            assert y_refined[3] > 0
            checked += 1
        assert checked == 2

    def test_time_reversal_reproduces_crossings(self):
        """Running the reversed field from the endpoint returns the same
        section points."""
        y0 = energy_shell_point("ns", 1.5, 1.0, 1.5, 0.5, -0.25)
        t_max = 40.0
        forward = section_of_orbit(y0, "ns", 1.5, 1.0, t_max=t_max)
        from puriflow.reduced import rk4_step
        field = make_field("ns", 1.5, 1.0)
        y = tuple(y0)
        n_steps = int(round(t_max / 2e-3))
        for _ in range(n_steps):
            y = rk4_step(field, y, 2e-3)
        reverse = section_of_orbit(y, "ns", 1.5, 1.0, t_max=t_max,
                                   field=lambda z: tuple(-v for v in field(z)))
        # interior crossings only: the endpoints sit exactly on the section
        # and are credited to different runs
        margin = 0.01
        fw = sorted((p.q1, p.p1) for p in forward
                    if margin < p.crossing_time < t_max - margin)
        bw = sorted((p.q1, p.p1) for p in reverse
                    if margin < p.crossing_time < t_max - margin)
        assert len(fw) == len(bw)
        for a, b in zip(fw, bw):
            assert abs(a[0] - b[0]) < 1e-6
            assert abs(a[1] - b[1]) < 1e-6

    def test_poincare_section_output(self):
        points = poincare_section("s", 1.1, 1.0, 1.5, n_orbits=4, t_max=60.0)
        assert points
        assert all(isinstance(p, SectionPoint) for p in points)


class TestBoxOccupancy:
    def test_curve_versus_area(self, rng):
        ts = rng.uniform(0, 2 * np.pi, 2000)
        curve = [SectionPoint(np.cos(t), np.sin(t), 0.0) for t in ts]
        filled = [SectionPoint(q, p, 0.0)
                  for q, p in rng.uniform(-1, 1, (2000, 2))]
        bounds = (-1, 1, -1, 1)
        occ_curve = box_occupancy(curve, 50, bounds)
        occ_filled = box_occupancy(filled, 50, bounds)
        assert occ_filled >= 5 * occ_curve

    def test_empty(self):
        assert box_occupancy([], 50) == 0


class TestLargestLyapunov:
    def test_linear_rotation_is_regular(self):
        def rotation(y):
            q1, q2, p1, p2 = y
            return (-p1, -p2, q1, q2)
        lam, se = largest_lyapunov(rotation, (0.3, 0.2, 0.1, 0.4),
                                   t_total=400.0, renorm_dt=1.0, dt=2e-3)
        assert abs(lam) < 5e-3

    def test_flow_scale_covariance(self):
        """Doubling the field doubles the growth-rate estimate."""
        y0 = energy_shell_point("ns", 1.5, 1.0, 1.5, 0.5, -0.25)
        base = make_field("ns", 1.5, 1.0)
        double = lambda y: tuple(2 * v for v in base(y))
        lam1, se1 = largest_lyapunov(base, y0, t_total=400.0, renorm_dt=1.0,
                                     dt=2e-3)
        lam2, se2 = largest_lyapunov(double, y0, t_total=400.0, renorm_dt=0.5,
                                     dt=1e-3)
        assert lam2 == pytest.approx(2 * lam1, abs=6 * (se1 + se2))

    def test_chaotic_orbit_detected(self):
        y0 = energy_shell_point("ns", 1.5, 1.0, 1.5, 0.5, -0.25)
        lam, _ = largest_lyapunov(make_field("ns", 1.5, 1.0), y0,
                                  t_total=400.0, renorm_dt=1.0, dt=2e-3)
        assert lam > 1e-2

    def test_bad_renorm_interval(self):
        with pytest.raises(ValueError, match="renorm_dt"):
            largest_lyapunov(lambda y: y, (1.0, 0.0), t_total=10.0,
                             renorm_dt=1e-3, dt=2e-3)

    @pytest.mark.parametrize("mu", [1.1, 1.3, 1.5, 1.7])
    def test_chaotic_sea_present_across_couplings(self, mu):
        """The x-coupled flow has chaotic orbits on the shared energy shell
        for the whole coupling sweep (the sea moves, so a few candidate
        columns are scanned)."""
        field = make_field("ns", mu, 1.0)
        best = 0.0
        for q1, p1 in ((0.5, -0.25), (-0.5, -0.25), (0.25, -0.5)):
            y0 = energy_shell_point("ns", mu, 1.0, 1.5, q1, p1)
            if y0 is None:
                continue
            lam, _ = largest_lyapunov(field, y0, t_total=300.0,
                                      renorm_dt=1.0, dt=2e-3)
            best = max(best, lam)
        assert best > 1e-2
