import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from thermsqueeze import pump
from thermsqueeze.analytic import integrate, thermal_relaxation, uniform_grid
from thermsqueeze.errors import DimensionLimitError, DomainError, TruncationError
from thermsqueeze.oracle import (
    auto_dim,
    check_density,
    construct_sts_density,
    evolve,
    fock_density,
    ladder_ops,
    lindblad_rhs,
    observables,
    read_snapshot,
    squeeze_operator_columns,
    thermal_density,
    trace_distance,
    write_snapshot,
)
from thermsqueeze.sts import ModelParams, StsState, g2_of_state, quad_variances


def dense_rhs(rho, t, params, env):
    """Reference generator written directly from commutators and dissipators."""
    b, bd = ladder_ops(rho.shape[0])
    ag = complex(pump.pump_product(env, params.theta, params.omega, t, params.gamma_decay))
    H = params.omega * bd @ b + ag * bd @ bd + np.conj(ag) * b @ b

    def diss(F):
        FdF = F.conj().T @ F
        return F @ rho @ F.conj().T - 0.5 * (FdF @ rho + rho @ FdF)

    gam, nb = params.gamma_decay, params.n_b
    return -1j * (H @ rho - rho @ H) + gam * (nb + 1) * diss(b) + gam * nb * diss(bd)


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestLadder:
    def test_two_level(self):
        b, bd = ladder_ops(2)
        np.testing.assert_array_equal(b, [[0, 1], [0, 0]])
        np.testing.assert_array_equal(bd, [[0, 0], [1, 0]])

    def test_number_operator(self):
        b, bd = ladder_ops(5)
        np.testing.assert_allclose(np.diag(bd @ b).real, [0, 1, 2, 3, 4], atol=1e-15)

    def test_commutator(self):
        b, bd = ladder_ops(12)
        c = b @ bd - bd @ b
        np.testing.assert_allclose(np.diag(c)[:-1], 1, atol=1e-14)

    def test_too_small(self):
        with pytest.raises(DomainError):
            ladder_ops(1)


class TestGenerator:
    def test_vacuum_fixed(self):
        out = lindblad_rhs(fock_density(0, 10), 0.0, ModelParams(), pump.constant(0.0))
        assert np.max(np.abs(out)) == 0

    @pytest.mark.parametrize("nb", [0.1, 0.5, 1.0])
    def test_thermal_fixed(self, nb):
        rho = thermal_density(nb, 80)
        out = lindblad_rhs(rho, 0.0, ModelParams(n_b=nb), pump.constant(0.0))
        assert np.max(np.abs(out)) < 1e-6

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0, 2), st.floats(0, 3), st.floats(0, 2),
           st.floats(-3, 3), st.floats(0, 5))
    def test_matches_dense_reference(self, seed, nb, g0, omega, theta, t):
        rho = random_density(9, seed)
        p = ModelParams(n_b=nb, omega=omega, theta=theta)
        env = pump.constant(g0)
        out = lindblad_rhs(rho, t, p, env)
        ref = dense_rhs(rho, t, p, env)
        np.testing.assert_allclose(out, ref, atol=1e-12 * (1 + np.max(np.abs(ref))))
        assert abs(np.trace(out)) <= 1e-12 * (1 + np.max(np.abs(ref)))
        assert np.max(np.abs(out - out.conj().T)) <= 1e-10


class TestConstruction:
    def test_vacuum(self):
        rho = construct_sts_density(0.0, 0.0, 10)
        np.testing.assert_allclose(rho, fock_density(0, 10), atol=1e-15)

    def test_thermal_weights(self):
        rho = construct_sts_density(0.5, 0.0, 40)
        k = np.arange(40)
        np.testing.assert_allclose(np.diag(rho).real, (1 / 1.5) * (0.5 / 1.5) ** k,
                                   rtol=1e-12, atol=1e-12)

    def test_squeezed_thermal_quadrature(self):
        # dim 40 leaves a 1.4e-8 truncation error here; 50 is the smallest round size within 1e-8
        rho = construct_sts_density(0.25, 0.5, 50)
        dx2, dy2 = quad_variances(StsState(0.5, 0.0, 0.25))
        obs = observables(rho)
        assert abs(obs.dx2 - dx2) <= 1e-8
        assert abs(obs.dy2 - dy2) <= 1e-8

    @pytest.mark.parametrize("n_th, xi", [(0.0, 0.4), (0.3, 0.7j), (1.2, 0.5 * np.exp(0.9j)),
                                          (2.0, 0.0)])
    def test_purity(self, n_th, xi):
        rho = construct_sts_density(n_th, xi, 120)
        assert observables(rho).purity == pytest.approx(1 / (2 * n_th + 1), abs=1e-6)
        check_density(rho, tail_tol=1e-8)

    @pytest.mark.parametrize("xi", [0.3, 0.8j, 1.1 * np.exp(2.3j)])
    def test_squeeze_operator_matches_expm(self, xi):
        dim = 60
        b, bd = ladder_ops(dim)
        K = 0.5 * (np.conj(xi) * b @ b - xi * bd @ bd)
        ref = expm(K)
        S = squeeze_operator_columns(xi, dim, 20)
        np.testing.assert_allclose(S[:30], ref[:30, :20], atol=1e-10)

    def test_inadequate_dimension(self):
        with pytest.raises(TruncationError):
            construct_sts_density(2.0, 1.0, 20)

    def test_phase_rotates_squeezing(self):
        # xi = i u is squeezed along the quadrature at beta = -pi/4
        rho = construct_sts_density(0.0, 0.6j, 80)
        obs = observables(rho, beta_phase=-math.pi / 4)
        assert obs.dx2 == pytest.approx(math.exp(-1.2), rel=1e-8)


class TestObservables:
    def test_vacuum(self):
        obs = observables(fock_density(0, 8))
        assert obs.n == 0 and obs.dx2 == 1 and obs.dy2 == 1
        assert obs.g2 is None and obs.purity == 1

    @pytest.mark.parametrize("n_th", [0.3, 1.0, 2.5])
    def test_thermal_g2(self, n_th):
        obs = observables(thermal_density(n_th, 160))
        assert obs.g2 == pytest.approx(2, abs=1e-8)

    def test_coherent_displacement(self):
        # |1> + |0> superposition: <b> = 1/2
        psi = np.zeros(6, complex)
        psi[:2] = 1 / math.sqrt(2)
        obs = observables(np.outer(psi, psi.conj()))
        assert obs.n == pytest.approx(0.5)
        assert obs.dx2 == pytest.approx(2 * 0.5 + 1 - 1.0)

    @pytest.mark.slow
    def test_bright_sts_g2(self):
        rho = construct_sts_density(5.0, 1.5, 1200, tail_tol=1e-3)
        g2 = observables(rho).g2
        assert g2 == pytest.approx(g2_of_state(StsState(1.5, 0, 5.0)), abs=1e-2)


class TestTraceDistance:
    def test_identical(self):
        rho = thermal_density(0.7, 20)
        assert trace_distance(rho, rho) == 0

    def test_orthogonal(self):
        assert trace_distance(fock_density(0, 5), fock_density(1, 5)) == pytest.approx(1, abs=1e-15)

    def test_thermal_pair(self):
        a, b = thermal_density(0.5, 60), thermal_density(0.6, 60)
        d = trace_distance(a, b)
        assert 0 < d < 1
        assert abs(d - trace_distance(b, a)) <= 1e-14

    def test_mismatch(self):
        with pytest.raises(DomainError):
            trace_distance(np.eye(3), np.eye(4))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 10_000))
    def test_bounds(self, s1, s2):
        d = trace_distance(random_density(7, s1), random_density(7, s2))
        assert 0 <= d <= 1 + 1e-10


class TestEvolve:
    def test_vacuum_stays(self):
        run = evolve(fock_density(0, 20), ModelParams(), pump.constant(0.0), uniform_grid(2, 0.1))
        assert np.all(np.abs(run.n) <= 1e-10)

    def test_equilibrium_stationary(self):
        p = ModelParams(n_b=0.5)
        t = uniform_grid(3, 0.1)
        run = evolve(thermal_density(0.5, 40), p, pump.constant(0.0), t)
        np.testing.assert_allclose(run.n, thermal_relaxation(0.5, p, t), atol=1e-6)

    def test_relaxation(self):
        p = ModelParams(n_b=0.5)
        t = uniform_grid(3, 0.05)
        run = evolve(thermal_density(2.0, 40), p, pump.constant(0.0), t, tail_tol=1e-3)
        np.testing.assert_allclose(run.n, thermal_relaxation(2.0, p, t), rtol=1e-3)

    def test_invariants_and_meta(self):
        t = uniform_grid(1, 0.05)
        run = evolve(thermal_density(0.2, 30), ModelParams(n_b=0.2), pump.constant(0.5), t,
                     snapshot_times=(0.5, 1.0))
        assert np.all(np.abs(run.trace - 1) <= 1e-8)
        assert np.all(run.min_eig >= -1e-8) and np.all(run.purity <= 1 + 1e-10)
        assert run.meta["richardson_error"] < 1e-10
        assert sorted(run.snapshots) == [0.5, 1.0]

    def test_truncation_overflow(self):
        with pytest.raises(TruncationError) as info:
            evolve(thermal_density(0.5, 20), ModelParams(n_b=0.5), pump.constant(0.9),
                   uniform_grid(4, 0.1))
        assert info.value.t is not None and info.value.dim == 20

    def test_rotating_frame_lo(self):
        # omega > 0 keeps the explicit pump phase; quadratures at beta = omega t
        p = ModelParams(n_b=0.1, omega=1.0)
        t = uniform_grid(1, 0.05)
        run = evolve(thermal_density(0.1, 30), p, pump.constant(0.6), t, step=2.5e-4)
        tr = integrate(StsState(0, 0, 0.1), p, pump.constant(0.6), t)
        np.testing.assert_allclose(run.dx2, tr.dx2, rtol=1e-6)
        np.testing.assert_allclose(run.dy2, tr.dy2, rtol=1e-6)

    def test_oracle_matches_analytic(self):
        p = ModelParams(n_b=0.5)
        t = uniform_grid(2, 0.05)
        env = pump.constant(0.8)
        tr = integrate(StsState(0, 0, 0.5), p, env, t)
        dist = []
        run = evolve(thermal_density(0.5, 60), p, env, t, callback=lambda s, rho: dist.append(
            trace_distance(rho, construct_sts_density(
                tr.n_th[len(dist)], tr.u[len(dist)] * np.exp(1j * tr.phi[len(dist)]), 60))))
        assert max(dist) < 1e-6
        np.testing.assert_allclose(run.n, tr.n, rtol=1e-6)


class TestAutoDim:
    def test_unpumped(self):
        assert auto_dim(ModelParams(n_b=0.5), pump.constant(0.0), 5.0) == 20

    def test_moderate(self):
        assert auto_dim(ModelParams(n_b=0.5), pump.constant(0.8), 6.0) <= 80

    def test_above_critical(self):
        with pytest.raises(DimensionLimitError):
            auto_dim(ModelParams(), pump.constant(1.5), 10.0)


def test_snapshot_round_trip(tmp_path):
    rho = construct_sts_density(0.4, 0.3 * np.exp(0.5j), 30)
    path = tmp_path / "rho.txt"
    write_snapshot(path, rho, 1.25)
    assert path.read_text().splitlines()[0] == "dim=30 t=1.25"
    back, t = read_snapshot(path)
    assert t == 1.25
    np.testing.assert_array_equal(back, rho)


def test_snapshot_bad_header(tmp_path):
    path = tmp_path / "rho.txt"
    path.write_text("dimension 3\n")
    with pytest.raises(DomainError):
        read_snapshot(path)
