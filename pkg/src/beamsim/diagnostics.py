"""Energy ledgers and certification of the qualitative dynamics.

Everything here is pure post-processing over an immutable trajectory: the
energy ledger decomposition, per-step monotonicity and balance audits, running
bounds, windowed dissipation, and the convergence report against a stationary
solution.  The monotonicity and balance tolerances default to ten times the
integrator's Newton tolerance: the continuous statements are exact, and the
discrete counterparts inherit exactly the solver slack, nothing more.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .discretization import Discretization, h2star_norm_sq
from .dynamics import State, Trajectory, energy_components
from .model import BeamScenario
from .stationary import StationarySolution

__all__ = [
    "EnergyLedger",
    "MonotonicityResult",
    "BoundsResult",
    "WindowedDissipation",
    "ConvergenceReport",
    "energy_of",
    "ledger_at",
    "check_energy_monotone",
    "check_energy_identity",
    "check_bounds",
    "windowed_dissipation",
    "convergence_report",
]


@dataclass(frozen=True)
class EnergyLedger:
    """Energy decomposition at one instant.

    total is kinetic + elastic + potential + forcing by construction; the
    kinetic-free part equals the static total potential of the displacement.
    """

    t: float
    kinetic: float
    elastic: float
    potential: float
    forcing: float
    total: float
    dissipated_cumulative: float


class MonotonicityResult(NamedTuple):
    violations: int
    worst_increase: float


class BoundsResult(NamedTuple):
    sup_h2star: float
    sup_dissipated: float


class WindowedDissipation(NamedTuple):
    start_times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Approach to the stationary solution, sampled at the snapshot times.

    settled_at is the first sample time from which both the bending-norm gap
    and the velocity norm stay below their tolerances for the whole remaining
    trajectory; it is None if the final sample still violates either bound.
    """

    times: np.ndarray
    h2star_gap: np.ndarray
    v_l2: np.ndarray
    total_potential: np.ndarray
    settled_at: Optional[float]
    gap_tol: float
    v_tol: float
    potential_gap_at_end: float
    monotonicity_violations: int
    worst_increase: float


def energy_of(
    state: State,
    scenario: BeamScenario,
    disc: Discretization,
    dissipated_cumulative: float = 0.0,
) -> EnergyLedger:
    """Ledger of a bare state (cumulative dissipation is the caller's to supply)."""
    kinetic, elastic, potential, forcing = energy_components(
        scenario, disc, state.u, state.v
    )
    return EnergyLedger(
        t=state.t,
        kinetic=kinetic,
        elastic=elastic,
        potential=potential,
        forcing=forcing,
        total=kinetic + elastic + potential + forcing,
        dissipated_cumulative=dissipated_cumulative,
    )


def ledger_at(traj: Trajectory, step_index: int) -> EnergyLedger:
    """Ledger recorded at one accepted step of a trajectory."""
    e = traj.energy
    return EnergyLedger(
        t=float(e.t[step_index]),
        kinetic=float(e.kinetic[step_index]),
        elastic=float(e.elastic[step_index]),
        potential=float(e.potential[step_index]),
        forcing=float(e.forcing[step_index]),
        total=float(e.total[step_index]),
        dissipated_cumulative=float(e.dissipated[step_index]),
    )


def _default_tol(traj: Trajectory, tol: Optional[float]) -> float:
    return 10.0 * traj.newton_tol if tol is None else tol


def check_energy_monotone(traj: Trajectory, tol: Optional[float] = None) -> MonotonicityResult:
    """Count steps whose total energy increased beyond the solver slack."""
    tol = _default_tol(traj, tol)
    diffs = np.diff(traj.energy.total)
    violations = int(np.sum(diffs > tol))
    worst = float(max(0.0, diffs.max())) if diffs.size else 0.0
    return MonotonicityResult(violations=violations, worst_increase=worst)


def check_energy_identity(traj: Trajectory) -> float:
    """Worst telescoped balance residual max_k |E_k - E_0 + D_k|.

    For a converged trajectory this is bounded by the per-step solver slack
    times the step count.
    """
    e = traj.energy
    return float(np.max(np.abs(e.total - e.total[0] + e.dissipated)))


def check_bounds(traj: Trajectory) -> BoundsResult:
    """Running suprema of the squared bending norm and of the dissipation.

    Both are finite for any completed trajectory; boundedness of the
    dissipation integral shows up as the supremum stabilizing over time.
    """
    e = traj.energy
    sigma = traj.scenario.sigma
    sup_h2 = float(np.max(2.0 * e.elastic / sigma))
    return BoundsResult(sup_h2star=sup_h2, sup_dissipated=float(e.dissipated[-1]))


def windowed_dissipation(traj: Trajectory, window: float) -> WindowedDissipation:
    """Trapezoid integrals of the damping power over sliding windows.

    Returns one value per recorded step time t with t + window <= t_end.  A
    bounded dissipation integral forces these to tail off to zero, which is
    the computable form of the escape-of-energy argument.
    """
    e = traj.energy
    span = float(e.t[-1] - e.t[0])
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    if window > span:
        raise ValueError(f"window {window} exceeds trajectory span {span}")
    # cumulative trapezoid of the instantaneous rate
    dt = np.diff(e.t)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (e.rate[1:] + e.rate[:-1]))])
    starts = e.t[e.t <= e.t[-1] - window + 1e-12 * max(span, 1.0)]
    ends = starts + window
    values = np.interp(ends, e.t, cum) - cum[: starts.size]
    return WindowedDissipation(start_times=starts, values=values)


def convergence_report(
    traj: Trajectory,
    stationary: StationarySolution,
    gap_tol: float = 1e-6,
    v_tol: float = 1e-6,
) -> ConvergenceReport:
    """Measure the approach of the flow to the stationary solution.

    The gap is the bending norm of u(t) - u_hat, the velocity is measured in
    the weighted L2 norm, and the static total potential along the flow is
    reported so its convergence to the minimizer's value can be asserted.
    """
    disc = traj.disc
    u_hat = np.asarray(stationary.u_hat, dtype=float)
    times = np.array([s.t for s in traj.states])
    gaps = np.array(
        [np.sqrt(max(0.0, h2star_norm_sq(s.u - u_hat, disc))) for s in traj.states]
    )
    v_norms = np.array([np.sqrt(max(0.0, disc.pairing(s.v, s.v))) for s in traj.states])

    e = traj.energy
    idx = traj.snapshot_steps
    potentials = (e.elastic + e.potential + e.forcing)[idx]

    ok = (gaps <= gap_tol) & (v_norms <= v_tol)
    settled_at: Optional[float] = None
    if ok.size and ok[-1]:
        # last index after which the condition holds for every sample
        holds_from = ok.size - 1
        while holds_from > 0 and ok[holds_from - 1]:
            holds_from -= 1
        settled_at = float(times[holds_from])

    mono = check_energy_monotone(traj)
    return ConvergenceReport(
        times=times,
        h2star_gap=gaps,
        v_l2=v_norms,
        total_potential=potentials,
        settled_at=settled_at,
        gap_tol=gap_tol,
        v_tol=v_tol,
        potential_gap_at_end=float(potentials[-1] - stationary.potential_value),
        monotonicity_violations=mono.violations,
        worst_increase=mono.worst_increase,
    )
