"""Stationary solver: analytic benchmarks, an independent first-order oracle,
uniqueness and minimality properties, and the failure paths."""

import numpy as np
import pytest
from scipy.fft import dst

from beamsim import (
    CubicRestoring,
    LinearRestoring,
    MaxIterationsExceeded,
    NonConvexDetected,
    SineModeForcing,
    ZeroForcing,
    build_discretization,
    l2_inner,
    residual_bvp,
    solve_stationary,
    total_potential,
)

from conftest import linear_static_scenario, make_scenario

PI4 = np.pi ** 4


def gradient_descent_oracle(scenario, disc, tol=1e-12, max_iter=500_000):
    """Brute-force first-order minimizer of the total potential.

    Steepest descent with Barzilai-Borwein step lengths, written against the
    eigenbasis coordinates with its own transform calls: no Hessians, no
    factorizations, nothing shared with the Newton path beyond the problem
    data itself.
    """
    grid = disc.grid
    n = grid.n_interior
    lam = disc.operator.eigenvalues
    sigma = scenario.sigma
    rest = scenario.restoring.force
    f_nodal = scenario.forcing.sample(grid)
    c_f = dst(f_nodal, type=1) / (n + 1)

    def grad(c):
        u_n = dst(c, type=1) / 2.0
        return sigma * lam * c + dst(rest(u_n), type=1) / (n + 1) - c_f

    c = np.zeros(n)
    g = grad(c)
    step = 1.0 / (sigma * lam[-1])  # safe first step: inverse top curvature
    for _ in range(max_iter):
        if np.max(np.abs(g)) <= tol:
            break
        c_new = c - step * g
        g_new = grad(c_new)
        s = c_new - c
        y = g_new - g
        sy = float(s @ y)
        if sy > 0:
            step = float(s @ s) / sy
        else:
            step = 1.0 / (sigma * lam[-1])
        c, g = c_new, g_new
    else:
        raise AssertionError("oracle did not converge")
    return dst(c, type=1) / 2.0  # nodal values


# ---------------------------------------------------------------------------
# total potential
# ---------------------------------------------------------------------------


def test_total_potential_zero_state():
    scenario = make_scenario()
    disc = build_discretization(0.0, 1.0, 50, "fd")
    assert total_potential(np.zeros(50), scenario, disc) == 0.0


def test_total_potential_sine_analytic():
    scenario = make_scenario(
        restoring=LinearRestoring(1.0), forcing=ZeroForcing()
    )
    expected = PI4 / 4.0 + 0.25  # elastic pi^4/4 plus potential 1/4
    disc_sp = build_discretization(0.0, 1.0, 100, "spectral")
    c = np.zeros(100)
    c[0] = 1.0
    assert total_potential(c, scenario, disc_sp) == pytest.approx(expected, rel=1e-12)

    disc_fd = build_discretization(0.0, 1.0, 199, "fd")
    u = np.sin(np.pi * disc_fd.grid.nodes)
    assert total_potential(u, scenario, disc_fd) == pytest.approx(expected, rel=1e-3)


# ---------------------------------------------------------------------------
# linear benchmark
# ---------------------------------------------------------------------------


def test_linear_benchmark_spectral_exact():
    scenario = linear_static_scenario()
    disc = build_discretization(0.0, 1.0, 200, "spectral")
    sol = solve_stationary(scenario, disc)
    exact = np.sin(np.pi * disc.grid.nodes) / (PI4 + 1.0)
    assert np.max(np.abs(disc.to_nodal(sol.u_hat) - exact)) <= 1e-12
    assert sol.newton_iters <= 2
    assert sol.grad_norm <= 1e-10


def test_linear_benchmark_fd_second_order():
    scenario = linear_static_scenario()
    disc = build_discretization(0.0, 1.0, 200, "fd")
    sol = solve_stationary(scenario, disc)
    exact = np.sin(np.pi * disc.grid.nodes) / (PI4 + 1.0)
    err = np.max(np.abs(sol.u_hat - exact))
    assert err <= 1e-6
    assert err > 1e-9  # second-order scheme, not exact
    assert sol.newton_iters <= 2
    assert sol.grad_norm <= 1e-10


def test_linear_quadratic_functional_identity():
    # at the minimizer of a quadratic functional, value = -(f, u)/2
    scenario = linear_static_scenario()
    disc = build_discretization(0.0, 1.0, 120, "spectral")
    sol = solve_stationary(scenario, disc)
    f_nodal = scenario.forcing.sample(disc.grid)
    u_nodal = disc.to_nodal(sol.u_hat)
    expected = -0.5 * l2_inner(f_nodal, u_nodal, disc.quadrature)
    assert sol.potential_value == pytest.approx(expected, rel=1e-10)


def test_linear_law_agrees_with_banded_direct_solve():
    # independent route: one banded Cholesky solve of (sigma*A + kappa*I) u = f
    scenario = linear_static_scenario()
    disc = build_discretization(0.0, 1.0, 200, "fd")
    sol = solve_stationary(scenario, disc)
    f = scenario.forcing.sample(disc.grid)
    u_banded = disc.operator.solve_shifted(np.full(200, 1.0), scenario.sigma, f)
    assert np.max(np.abs(sol.u_hat - u_banded)) <= 1e-10


def test_unforced_convex_minimizer_is_zero():
    scenario = make_scenario(forcing=ZeroForcing())
    for scheme in ("fd", "spectral"):
        disc = build_discretization(0.0, 1.0, 80, scheme)
        sol = solve_stationary(scenario, disc)
        assert np.max(np.abs(sol.u_hat)) <= 1e-10


# ---------------------------------------------------------------------------
# nonlinear solve vs first-order oracle
# ---------------------------------------------------------------------------


def test_cubic_matches_gradient_descent_oracle():
    scenario = make_scenario(restoring=CubicRestoring(1.0))
    disc = build_discretization(0.0, 1.0, 31, "fd")
    sol = solve_stationary(scenario, disc)
    oracle = gradient_descent_oracle(scenario, disc)
    assert np.max(np.abs(sol.u_hat - oracle)) <= 1e-8


def test_random_restarts_agree():
    scenario = make_scenario()
    disc = build_discretization(0.0, 1.0, 50, "fd")
    rng = np.random.default_rng(101)
    solutions = [
        solve_stationary(scenario, disc, initial_guess=rng.uniform(-1, 1, 50)).u_hat
        for _ in range(5)
    ]
    for i in range(5):
        for j in range(i + 1, 5):
            assert np.max(np.abs(solutions[i] - solutions[j])) <= 1e-8


def test_minimizer_beats_perturbations():
    scenario = make_scenario()
    disc = build_discretization(0.0, 1.0, 40, "fd")
    sol = solve_stationary(scenario, disc)
    value = total_potential(sol.u_hat, scenario, disc)
    rng = np.random.default_rng(59)
    for _ in range(100):
        dw = 1e-3 * rng.standard_normal(40)
        assert value <= total_potential(sol.u_hat + dw, scenario, disc) + 1e-12


# ---------------------------------------------------------------------------
# residual certificate
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("scheme", ["fd", "spectral"])
def test_residual_of_solution_below_tolerance(scheme):
    scenario = make_scenario()
    disc = build_discretization(0.0, 1.0, 100, scheme)
    sol = solve_stationary(scenario, disc)
    assert residual_bvp(sol.coefficients, scenario, disc) <= 1e-10


def test_residual_of_zero_is_forcing_amplitude():
    scenario = make_scenario(forcing=SineModeForcing(2.5, 1))
    disc = build_discretization(0.0, 1.0, 60, "spectral")
    assert residual_bvp(np.zeros(60), scenario, disc) == pytest.approx(2.5, rel=1e-12)


@pytest.mark.parametrize("scheme", ["fd", "spectral"])
def test_residual_of_linear_perturbation(scheme):
    # adding eps * sin(pi x) to the solution shifts the residual by
    # eps * (sigma*lambda_1 + kappa) in the first coordinate
    scenario = linear_static_scenario()
    disc = build_discretization(0.0, 1.0, 100, scheme)
    sol = solve_stationary(scenario, disc)
    pert = sol.coefficients.copy()
    pert[0] += 1e-3
    lam1 = disc.operator.min_eigenvalue
    expected = 1e-3 * (scenario.sigma * lam1 + 1.0)
    assert residual_bvp(pert, scenario, disc) == pytest.approx(expected, rel=1e-9)


# ---------------------------------------------------------------------------
# failure paths
# ---------------------------------------------------------------------------


def test_nonconvex_law_detected():
    scenario = make_scenario(restoring=LinearRestoring(kappa=-5.0))
    disc = build_discretization(0.0, 1.0, 30, "fd")
    with pytest.raises(NonConvexDetected):
        solve_stationary(scenario, disc, validate=False)


def test_max_iterations_exceeded():
    scenario = make_scenario(restoring=CubicRestoring(1.0))
    disc = build_discretization(0.0, 1.0, 30, "fd")
    with pytest.raises(MaxIterationsExceeded):
        solve_stationary(scenario, disc, max_iter=0)


def test_invalid_scenario_rejected_by_default():
    from beamsim import InvalidScenario

    scenario = make_scenario(m_mass=-1.0)
    disc = build_discretization(0.0, 1.0, 30, "fd")
    with pytest.raises(InvalidScenario):
        solve_stationary(scenario, disc)
