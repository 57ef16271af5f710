"""Equilibrium of the beam: minimize the total potential over interior shapes.

The functional

    Phi(u) = sigma/2 * ||u||_bending^2 + integral of potential density - (f, u)

is strictly convex whenever the restoring potential is convex, so it has one
minimizer, which is also the solution of the stationary problem
sigma u_xxxx + restoring(u) = f with simply supported ends.

The solve runs in the operator's sine eigenbasis for both schemes.  That is
not a stylistic choice: in nodal coordinates the gradient of any representable
iterate is quantized at about ||A|| * ulp(u) (1e-8 at n = 200), so a 1e-10
certificate is unreachable there, while eigenbasis coordinates give each mode
its own relative resolution.  For the fd scheme the eigenbasis is the discrete
sine basis with the stencil's exact eigenvalues, so this is the same linear
algebra as the banded form, just in coordinates where the certificate exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .discretization import (
    Discretization,
    modal_to_nodal,
    nodal_diag_as_modal,
    nodal_to_modal,
    potential_energy,
)
from .dynamics import forcing_repr
from .model import BeamScenario, InvalidScenario, validate_scenario

__all__ = [
    "StationarySolution",
    "NonConvexDetected",
    "MaxIterationsExceeded",
    "total_potential",
    "solve_stationary",
    "residual_bvp",
]

STATIONARY_TOL_DEFAULT = 1e-10
STATIONARY_MAX_ITER_DEFAULT = 50

_ARMIJO = 1e-4
_MIN_BACKTRACK = 2.0 ** -30


class NonConvexDetected(RuntimeError):
    """Negative restoring stiffness encountered: the convexity hypothesis fails."""


class MaxIterationsExceeded(RuntimeError):
    def __init__(self, grad_norm: float, iterations: int):
        self.grad_norm = grad_norm
        self.iterations = iterations
        super().__init__(
            f"stationary Newton stopped at gradient {grad_norm:.3e} "
            f"after {iterations} iterations"
        )


@dataclass(frozen=True, eq=False)
class StationarySolution:
    """Minimizer with its certificate.

    ``u_hat`` is in the scheme's state representation (nodal values for fd,
    sine coefficients for spectral); ``coefficients`` always holds the
    eigenbasis coordinates, which is what the residual certificate refers to.
    """

    u_hat: np.ndarray
    coefficients: np.ndarray
    potential_value: float
    grad_norm: float
    newton_iters: int


def total_potential(u, scenario: BeamScenario, disc: Discretization) -> float:
    """Static energy of a shape ``u`` given in the scheme representation."""
    u = np.asarray(u, dtype=float)
    f = forcing_repr(scenario, disc)
    elastic = 0.5 * scenario.sigma * disc.operator.quadratic_form(u)
    nonlinear = potential_energy(disc.to_nodal(u), scenario.restoring, disc.quadrature)
    return elastic + nonlinear - disc.pairing(f, u)


class _ModalProblem:
    """The stationary problem in eigenbasis coordinates, shared by both schemes."""

    def __init__(self, scenario: BeamScenario, disc: Discretization):
        self.disc = disc
        self.grid = disc.grid
        self.sigma = scenario.sigma
        self.lam = disc.operator.eigenvalues
        self.rest = scenario.restoring.force
        self.rest_slope = scenario.restoring.stiffness
        self.phi = scenario.restoring.energy_density
        self.phi0 = float(np.asarray(scenario.restoring.energy_density(0.0)))
        self.half_len = 0.5 * self.grid.length
        f = forcing_repr(scenario, disc)
        self.c_f = f if disc.scheme == "spectral" else nodal_to_modal(f, self.grid)
        self.quad = disc.quadrature

    def gradient(self, c: np.ndarray) -> np.ndarray:
        u_n = modal_to_nodal(c, self.grid)
        return self.sigma * self.lam * c + nodal_to_modal(self.rest(u_n), self.grid) - self.c_f

    def value(self, c: np.ndarray) -> float:
        u_n = modal_to_nodal(c, self.grid)
        elastic = 0.5 * self.sigma * self.half_len * float((self.lam * c) @ c)
        nonlinear = self.quad.integrate(self.phi(u_n)) + self.quad.h * self.phi0
        return elastic + nonlinear - self.half_len * float(self.c_f @ c)

    def newton_direction(self, c: np.ndarray, g: np.ndarray) -> np.ndarray:
        u_n = modal_to_nodal(c, self.grid)
        s = self.rest_slope(u_n)
        smin = float(np.min(s))
        if smin < 0.0:
            raise NonConvexDetected(
                f"restoring stiffness reaches {smin:.3g} along the iterate"
            )
        s = np.asarray(s, dtype=float)
        if float(np.ptp(s)) == 0.0:
            # constant stiffness: the Hessian is diagonal in the eigenbasis
            return g / (self.sigma * self.lam + float(s.flat[0]))
        H = np.diag(self.sigma * self.lam) + nodal_diag_as_modal(self.grid, s)
        try:
            return np.linalg.solve(H, g)
        except np.linalg.LinAlgError as exc:
            raise NonConvexDetected(f"Hessian factorization failed: {exc}") from exc


def solve_stationary(
    scenario: BeamScenario,
    disc: Discretization,
    initial_guess: Optional[np.ndarray] = None,
    *,
    tol: float = STATIONARY_TOL_DEFAULT,
    max_iter: int = STATIONARY_MAX_ITER_DEFAULT,
    validate: bool = True,
) -> StationarySolution:
    """Newton with backtracking on the convex total potential.

    The default start is the linear solve with the restoring force frozen at
    zero (one diagonal solve), which makes the linear benchmark converge in a
    single polishing iteration.  ``tol`` bounds the max-norm of the eigenbasis
    gradient, the same quantity residual_bvp reports.
    """
    if validate:
        report = validate_scenario(scenario)
        if not report.ok:
            raise InvalidScenario(report)

    prob = _ModalProblem(scenario, disc)
    if initial_guess is not None:
        guess = np.asarray(initial_guess, dtype=float)
        if guess.shape != (disc.n,):
            raise ValueError(f"initial guess must have {disc.n} entries")
        c = guess.copy() if disc.scheme == "spectral" else nodal_to_modal(guess, disc.grid)
    else:
        c = prob.c_f / (scenario.sigma * prob.lam)

    iters = 0
    while True:
        g = prob.gradient(c)
        gn = float(np.max(np.abs(g)))
        if gn <= tol:
            break
        if iters >= max_iter:
            raise MaxIterationsExceeded(gn, iters)
        delta = prob.newton_direction(c, g)
        slope = -prob.half_len * float(g @ delta)
        if slope >= 0.0:
            raise NonConvexDetected("Newton direction is not a descent direction")
        value0 = prob.value(c)
        alpha = 1.0
        while True:
            c_try = c - alpha * delta
            if prob.value(c_try) <= value0 + _ARMIJO * alpha * slope:
                break
            alpha *= 0.5
            if alpha < _MIN_BACKTRACK:
                raise MaxIterationsExceeded(gn, iters)
        c = c_try
        iters += 1

    u_hat = c if disc.scheme == "spectral" else modal_to_nodal(c, disc.grid)
    return StationarySolution(
        u_hat=u_hat,
        coefficients=c,
        potential_value=prob.value(c),
        grad_norm=gn,
        newton_iters=iters,
    )


def residual_bvp(coefficients: np.ndarray, scenario: BeamScenario, disc: Discretization) -> float:
    """Max-norm of the stationary residual sigma*A u + restoring(u) - f.

    ``coefficients`` are eigenbasis coordinates (the spectral scheme's state
    representation; for fd use nodal_to_modal, or the ``coefficients`` field
    of a StationarySolution, whose certificate this function reproduces).
    """
    c = np.asarray(coefficients, dtype=float)
    if c.shape != (disc.n,):
        raise ValueError(f"expected {disc.n} coefficients, got {c.shape}")
    prob = _ModalProblem(scenario, disc)
    return float(np.max(np.abs(prob.gradient(c))))
