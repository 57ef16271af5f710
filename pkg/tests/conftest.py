"""Shared scenario builders for the test suite."""

import numpy as np
import pytest

from beamsim import (
    BeamScenario,
    CubicRestoring,
    LinearPlusQuadraticDamping,
    LinearRestoring,
    SineModeForcing,
    SineModeProfile,
    ZeroForcing,
    ZeroProfile,
    ZeroRestoring,
    build_discretization,
)


def make_scenario(
    *,
    a=0.0,
    b=1.0,
    m_mass=1.0,
    sigma=1.0,
    damping=None,
    restoring=None,
    forcing=None,
    u0=None,
    u1=None,
    t_end=1.0,
    dt=1e-3,
):
    return BeamScenario(
        a=a,
        b=b,
        m_mass=m_mass,
        sigma=sigma,
        damping=damping if damping is not None else LinearPlusQuadraticDamping(1.0, 1.0),
        restoring=restoring if restoring is not None else CubicRestoring(1.0),
        forcing=forcing if forcing is not None else SineModeForcing(1.0, 1),
        u0=u0 if u0 is not None else SineModeProfile(0.5, 1),
        u1=u1 if u1 is not None else ZeroProfile(),
        t_end=t_end,
        dt=dt,
    )


def canonical_scenario(t_end=50.0, dt=1e-3):
    """The damped cubic benchmark used throughout the acceptance suite."""
    return make_scenario(t_end=t_end, dt=dt)


def single_mode_scenario(c=0.1, t_end=1.0, dt=1e-3, amplitude=1.0):
    """No restoring force, no load: the first sine mode obeys a scalar ODE."""
    return make_scenario(
        damping=LinearPlusQuadraticDamping(c, 0.0),
        restoring=ZeroRestoring(),
        forcing=ZeroForcing(),
        u0=SineModeProfile(amplitude, 1),
        u1=ZeroProfile(),
        t_end=t_end,
        dt=dt,
    )


def linear_static_scenario():
    """sigma = kappa = 1 with a unit first-mode load; equilibrium is
    sin(pi x) / (pi^4 + 1)."""
    return make_scenario(
        damping=LinearPlusQuadraticDamping(1.0, 0.0),
        restoring=LinearRestoring(1.0),
        forcing=SineModeForcing(1.0, 1),
        u0=ZeroProfile(),
        u1=ZeroProfile(),
        t_end=1.0,
    )


@pytest.fixture
def disc_fd_small():
    return build_discretization(0.0, 1.0, 50, "fd")


@pytest.fixture
def disc_sp_small():
    return build_discretization(0.0, 1.0, 50, "spectral")


def damped_mode_coefficient(t, m=1.0, c=0.1, stiffness=np.pi ** 4, amplitude=1.0):
    """Closed-form underdamped solution of m q'' + c q' + k q = 0, q(0)=amp, q'(0)=0."""
    beta = c / (2.0 * m)
    omega = np.sqrt(stiffness / m - beta ** 2)
    return (
        amplitude
        * np.exp(-beta * t)
        * (np.cos(omega * t) + (beta / omega) * np.sin(omega * t))
    )


def damped_mode_velocity(t, m=1.0, c=0.1, stiffness=np.pi ** 4, amplitude=1.0):
    beta = c / (2.0 * m)
    omega0_sq = stiffness / m
    omega = np.sqrt(omega0_sq - beta ** 2)
    return -amplitude * (omega0_sq / omega) * np.exp(-beta * t) * np.sin(omega * t)
