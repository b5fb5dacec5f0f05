import numpy as np
import pytest
import scipy.linalg
from scipy.stats import ortho_group

from kronspec.cli import demo_system
from kronspec.evolution import (
    matrix_exponential,
    max_relative_discrepancy,
    propagate_continuous,
    propagate_discrete,
    second_moment_bounds_continuous,
    second_moment_bounds_discrete,
    step_discrete,
    _check_moment_chain,
)
from kronspec.kronsum import build_discrete_sum
from kronspec.matrices import ConsistencyError, SystemSpec, random_system, vec


def _random_vec(rng, d):
    return (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / np.sqrt(2.0)


class TestStepDiscrete:
    def test_pure_noise_identity(self):
        spec = SystemSpec(np.zeros((2, 2)), (np.eye(2),))
        assert np.allclose(step_discrete(spec, np.eye(2)), np.eye(2), atol=1e-14)

    def test_demo_first_step_hand_expanded(self):
        a, b, s = 0.5, 0.7, 2.0
        spec = demo_system(a, b, s)
        v0 = np.outer([1.0, 0.0], [1.0, 0.0])
        assert np.allclose(step_discrete(spec, v0), np.diag([a * a, s * s]), atol=1e-14)

    def test_vectorized_form_matches(self, rng, crandn):
        # the module's core oracle: vec(step(V)) == D vec(V)
        for _ in range(10):
            spec = random_system(rng, 3, 2)
            v = crandn(3, 3)
            lhs = vec(step_discrete(spec, v))
            rhs = build_discrete_sum(spec) @ vec(v)
            assert np.allclose(lhs, rhs, atol=1e-12 * max(1.0, np.max(np.abs(lhs))))

    def test_shape_mismatch(self, crandn):
        with pytest.raises(ValueError):
            step_discrete(SystemSpec(crandn(2, 2)), crandn(3, 3))


class TestPropagateDiscrete:
    def test_zero_steps_echoes_initial_outer(self, rng):
        spec = random_system(rng, 3, 1)
        u, v = _random_vec(rng, 3), _random_vec(rng, 3)
        traj = propagate_discrete(spec, u, v, 0)
        assert traj.index == (0,)
        assert np.allclose(traj.values[0], np.outer(u, v.conj()), atol=1e-14)
        assert traj.second_moments is None

    def test_demo_routes_agree(self):
        spec = demo_system(0.5, 0.7, 2.0)
        u = np.array([1.0, 0.0])
        direct = propagate_discrete(spec, u, u, 3, "direct")
        kronecker = propagate_discrete(spec, u, u, 3, "kronecker")
        assert max_relative_discrepancy(direct, kronecker) <= 1e-8
        assert direct.second_moments is not None
        assert direct.second_moments[0] == pytest.approx(1.0)

    def test_random_routes_agree(self, rng):
        for _ in range(10):
            spec = random_system(rng, 3, 2)
            u, v = _random_vec(rng, 3), _random_vec(rng, 3)
            direct = propagate_discrete(spec, u, v, 10, "direct")
            kronecker = propagate_discrete(spec, u, v, 10, "kronecker")
            assert max_relative_discrepancy(direct, kronecker) <= 1e-8

    def test_second_moments_are_traces(self, rng):
        spec = random_system(rng, 3, 1)
        u = _random_vec(rng, 3)
        traj = propagate_discrete(spec, u, u, 5)
        for v, r in zip(traj.values, traj.second_moments):
            assert r == pytest.approx(float(np.trace(v).real), abs=1e-8)

    def test_overflow_reports_step(self):
        spec = SystemSpec(10.0 * np.eye(2))
        with pytest.raises(OverflowError, match="step"):
            propagate_discrete(spec, [1.0, 0.0], [1.0, 0.0], 200)

    def test_route_validation(self, rng):
        spec = random_system(rng, 2, 0)
        with pytest.raises(ValueError):
            propagate_discrete(spec, [1, 0], [1, 0], 1, route="ode")


class TestMatrixExponential:
    def test_zero_time_gives_identity(self, crandn):
        assert np.array_equal(matrix_exponential(crandn(3, 3), 0.0), np.eye(3))

    def test_diagonal_matrix(self):
        a = np.diag([0.3 - 1.0j, -2.0 + 0.5j])
        for t in (0.1, 1.0, 7.3):
            assert np.allclose(
                matrix_exponential(a, t), np.diag(np.exp(t * np.diag(a))), rtol=1e-12
            )

    def test_derivative_finite_difference_oracle(self, crandn):
        a = crandn(4, 4)
        t, h = 0.7, 1e-4
        fd = (matrix_exponential(a, t + h) - matrix_exponential(a, t - h)) / (2 * h)
        exact = a @ matrix_exponential(a, t)
        assert np.max(np.abs(fd - exact)) <= 1e-6 * np.max(np.abs(exact))

    def test_semigroup_property(self, crandn):
        a = crandn(4, 4)
        lhs = matrix_exponential(a, 0.9) @ matrix_exponential(a, 1.4)
        rhs = matrix_exponential(a, 2.3)
        assert np.max(np.abs(lhs - rhs)) <= 1e-8 * max(1.0, np.max(np.abs(rhs)))

    def test_against_scipy(self, crandn):
        for n in (1, 2, 5, 9):
            a = crandn(n, n)
            mine = matrix_exponential(a, 1.0)
            ref = scipy.linalg.expm(a)
            assert np.max(np.abs(mine - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))

    def test_large_argument_accuracy(self):
        # norm far beyond the top Pade threshold exercises scaling and squaring
        a = np.array([[0.0, 100.0], [-100.0, 0.0]])
        e = matrix_exponential(a, 1.0)
        expected = np.array(
            [[np.cos(100.0), np.sin(100.0)], [-np.sin(100.0), np.cos(100.0)]]
        )
        assert np.max(np.abs(e - expected)) <= 1e-9

    def test_overflow_reported(self):
        with pytest.raises(OverflowError):
            matrix_exponential(np.diag([1000.0, 0.0]), 1.0)


class TestPropagateContinuous:
    def test_time_zero_echoes_initial_outer(self, rng):
        spec = random_system(rng, 2, 1)
        u, v = _random_vec(rng, 2), _random_vec(rng, 2)
        traj = propagate_continuous(spec, u, v, [0.0])
        assert np.allclose(traj.values[0], np.outer(u, v.conj()), atol=1e-12)

    def test_pure_noise_grows_exponentially(self):
        # V' = V when the only matrix is the identity noise channel
        spec = SystemSpec(np.zeros((2, 2)), (np.eye(2),))
        u = np.array([1.0, 1.0]) / np.sqrt(2.0)
        for route in ("ode", "kronecker"):
            traj = propagate_continuous(spec, u, u, [0.5, 1.0], route)
            v0 = np.outer(u, u.conj())
            assert np.allclose(traj.values[0], np.exp(0.5) * v0, rtol=1e-7)
            assert np.allclose(traj.values[1], np.exp(1.0) * v0, rtol=1e-7)

    def test_demo_routes_agree(self):
        spec = demo_system(0.5, 0.7, 2.0)
        u = np.array([1.0, 0.0])
        ode = propagate_continuous(spec, u, u, [1.0], "ode")
        kron_route = propagate_continuous(spec, u, u, [1.0], "kronecker")
        assert max_relative_discrepancy(ode, kron_route) <= 1e-6

    def test_random_routes_agree(self, rng):
        for _ in range(5):
            spec = random_system(rng, 3, 2)
            u, v = _random_vec(rng, 3), _random_vec(rng, 3)
            ode = propagate_continuous(spec, u, v, [0.25, 1.0], "ode")
            kron_route = propagate_continuous(spec, u, v, [0.25, 1.0], "kronecker")
            assert max_relative_discrepancy(ode, kron_route) <= 1e-6

    def test_grid_validation(self, rng):
        spec = random_system(rng, 2, 0)
        u = _random_vec(rng, 2)
        with pytest.raises(ValueError):
            propagate_continuous(spec, u, u, [])
        with pytest.raises(ValueError):
            propagate_continuous(spec, u, u, [1.0, 0.5])
        with pytest.raises(ValueError):
            propagate_continuous(spec, u, u, [-1.0, 0.5])

    def test_route_validation(self, rng):
        spec = random_system(rng, 2, 0)
        with pytest.raises(ValueError):
            propagate_continuous(spec, [1, 0], [1, 0], [1.0], route="direct")


class TestSecondMomentBounds:
    def test_orthogonal_pair_is_exactly_geometric(self, rng):
        spec = SystemSpec(ortho_group.rvs(3, random_state=rng), (ortho_group.rvs(3, random_state=rng),))
        u = np.array([1.0, 0.0, 0.0])
        for n in (0, 1, 5, 10):
            res = second_moment_bounds_discrete(spec, u, n)
            assert res.lower == pytest.approx(2.0 ** n, rel=1e-12)
            assert res.upper == pytest.approx(2.0 ** n, rel=1e-12)
            assert res.actual == pytest.approx(2.0 ** n, rel=1e-9)

    def test_zero_steps_all_equal_initial_norm(self, rng):
        spec = random_system(rng, 3, 2)
        u = 2.0 * _random_vec(rng, 3)
        res = second_moment_bounds_discrete(spec, u, 0)
        u2 = float(np.sum(np.abs(u) ** 2))
        assert res.lower == pytest.approx(u2)
        assert res.upper == pytest.approx(u2)
        assert res.actual == pytest.approx(u2, rel=1e-12)

    def test_demo_decoupled_channel(self):
        # u on the second coordinate never feels the noise: r(5) = b^10
        b = 0.7
        spec = demo_system(0.5, b, 2.0)
        res = second_moment_bounds_discrete(spec, np.array([0.0, 1.0]), 5)
        assert res.actual == pytest.approx(b ** 10, rel=1e-12)
        assert res.lower - 1e-12 <= res.actual <= res.upper + 1e-12
        assert res.lower == pytest.approx(b ** 10, rel=1e-12)  # the bound is tight here

    def test_continuous_scalar_companion_is_tight(self, rng):
        a_val = 0.3
        g = rng.standard_normal((3, 3))
        spec = SystemSpec(a_val * np.eye(3) + (g - g.T), (ortho_group.rvs(3, random_state=rng),))
        u = np.array([1.0, 0.0, 0.0])
        for t in (0.0, 0.5, 1.5):
            res = second_moment_bounds_continuous(spec, u, t)
            want = np.exp((2 * a_val + 1) * t)
            assert res.lower == pytest.approx(want, rel=1e-9)
            assert res.upper == pytest.approx(want, rel=1e-9)
            assert res.actual == pytest.approx(want, rel=1e-6)

    def test_random_chains_hold(self, rng):
        for _ in range(10):
            spec = random_system(rng, 3, 2)
            u = _random_vec(rng, 3)
            res = second_moment_bounds_discrete(spec, u, 8)
            assert res.lower <= res.actual * (1 + 1e-8) + 1e-8
            res_c = second_moment_bounds_continuous(spec, u, 0.5)
            assert res_c.lower <= res_c.actual * (1 + 1e-6) + 1e-6

    def test_violation_raises_loudly(self):
        with pytest.raises(ConsistencyError):
            _check_moment_chain("discrete", 1.0, 2.0, 5.0, 1e-8)
        with pytest.raises(ConsistencyError):
            _check_moment_chain("discrete", 1.0, 2.0, 0.5, 1e-8)


class TestTrajectoryInvariants:
    def test_covariance_norm_upper_bound(self, rng):
        # |vec(V_uv)| <= sqrt(r_u r_v) along the whole trajectory
        for _ in range(5):
            spec = random_system(rng, 3, 2)
            u, v = _random_vec(rng, 3), _random_vec(rng, 3)
            cross = propagate_discrete(spec, u, v, 8)
            ru = propagate_discrete(spec, u, u, 8).second_moments
            rv = propagate_discrete(spec, v, v, 8).second_moments
            for k in range(9):
                lhs = float(np.linalg.norm(vec(cross.values[k])))
                rhs = np.sqrt(ru[k] * rv[k])
                assert lhs <= rhs * (1 + 1e-9) + 1e-12

    def test_covariance_norm_lower_bound_same_vector(self, rng):
        # |vec(V_uu)| >= r_u / sqrt(d)
        for _ in range(5):
            spec = random_system(rng, 4, 1)
            u = _random_vec(rng, 4)
            traj = propagate_discrete(spec, u, u, 8)
            for v, r in zip(traj.values, traj.second_moments):
                lhs = float(np.linalg.norm(vec(v)))
                assert lhs >= r / np.sqrt(4.0) * (1 - 1e-9) - 1e-12

    def test_hermitian_psd_preserved(self, rng):
        for mode in ("discrete", "continuous"):
            spec = random_system(rng, 3, 2)
            u = _random_vec(rng, 3)
            if mode == "discrete":
                traj = propagate_discrete(spec, u, u, 6)
            else:
                traj = propagate_continuous(spec, u, u, [0.25, 0.5, 1.0])
            for v in traj.values:
                scale = max(1.0, float(np.max(np.abs(v))))
                assert np.max(np.abs(v - v.conj().T)) <= 1e-8 * scale
                assert np.min(np.linalg.eigvalsh((v + v.conj().T) / 2)) >= -1e-8 * scale
