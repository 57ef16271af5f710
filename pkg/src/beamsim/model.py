"""Problem data for the damped beam: constants, force laws, forcing, initial shapes.

A scenario bundles everything needed to pose the motion problem

    m u_tt + sigma u_xxxx + damping(u_t) + restoring(u) = f(x)

on an interval (a, b) with simply supported ends (u = u_xx = 0 at both),
together with the hypotheses the well-posedness and convergence theory needs:
monotone damping vanishing at rest, a convex restoring potential whose force
vanishes somewhere, and time-independent forcing.  ``validate_scenario`` checks
those hypotheses by sampling and reports them one by one instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "LinearPlusQuadraticDamping",
    "PowerLawDamping",
    "DampingLaw",
    "ZeroRestoring",
    "LinearRestoring",
    "CubicRestoring",
    "SmoothedOneSidedRestoring",
    "RestoringLaw",
    "ZeroForcing",
    "SineModeForcing",
    "SampledForcing",
    "Forcing",
    "ZeroProfile",
    "SineModeProfile",
    "SampledProfile",
    "SpatialProfile",
    "BeamScenario",
    "ValidationCheck",
    "ValidationReport",
    "InvalidScenario",
    "validate_scenario",
]


def _softplus(t):
    return np.logaddexp(0.0, t)


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


# ---------------------------------------------------------------------------
# damping laws (velocity -> opposing force density)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearPlusQuadraticDamping:
    """Damping force c*x + d*|x|*x: linear at small rates, drag-like at large."""

    c: float = 1.0
    d: float = 1.0

    kind = "linear_plus_quadratic"

    def force(self, x):
        return self.c * x + self.d * np.abs(x) * x

    def force_derivative(self, x):
        return self.c + 2.0 * self.d * np.abs(x)


@dataclass(frozen=True)
class PowerLawDamping:
    """Damping force delta * |x|^(p-2) * x with p >= 2 (p = 2 is linear)."""

    delta: float = 1.0
    p: float = 2.0

    kind = "power_law"

    def force(self, x):
        return self.delta * np.abs(x) ** (self.p - 2.0) * x

    def force_derivative(self, x):
        return self.delta * (self.p - 1.0) * np.abs(x) ** (self.p - 2.0)


DampingLaw = Union[LinearPlusQuadraticDamping, PowerLawDamping]


# ---------------------------------------------------------------------------
# restoring laws (displacement -> force density, with potential density)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroRestoring:
    kind = "zero"
    force_root = 0.0

    def energy_density(self, x):
        return x * 0.0

    def force(self, x):
        return x * 0.0

    def stiffness(self, x):
        return x * 0.0


@dataclass(frozen=True)
class LinearRestoring:
    """Hookean restoring force kappa*x, potential density kappa*x^2/2."""

    kappa: float = 1.0

    kind = "linear"
    force_root = 0.0

    def energy_density(self, x):
        return 0.5 * self.kappa * x * x

    def force(self, x):
        return self.kappa * x

    def stiffness(self, x):
        return x * 0.0 + self.kappa


@dataclass(frozen=True)
class CubicRestoring:
    """Stiffening restoring force kappa*x^3, potential density kappa*x^4/4."""

    kappa: float = 1.0

    kind = "cubic"
    force_root = 0.0

    def energy_density(self, x):
        return 0.25 * self.kappa * x ** 4

    def force(self, x):
        return self.kappa * x ** 3

    def stiffness(self, x):
        return 3.0 * self.kappa * x * x


@dataclass(frozen=True)
class SmoothedOneSidedRestoring:
    """One-sided spring that resists deflection of one sign only.

    A hanger that is slack for x < 0 and Hookean for x > 0 has potential
    density kappa*max(x,0)^2/2, which is only C^1.  Replacing max(x,0) by the
    C-infinity ramp eps*softplus(x/eps) keeps the potential convex and bounded
    below while giving it two continuous derivatives.  The force is strictly
    positive and vanishes only in the limit x -> -infinity, which is why
    ``force_root`` is None and validation attaches a warning to this law.
    """

    kappa: float = 1.0
    eps: float = 0.05

    kind = "smoothed_one_sided"
    force_root = None

    def energy_density(self, x):
        ramp = self.eps * _softplus(np.asarray(x, dtype=float) / self.eps)
        return 0.5 * self.kappa * ramp * ramp

    def force(self, x):
        t = np.asarray(x, dtype=float) / self.eps
        return self.kappa * self.eps * _softplus(t) * _sigmoid(t)

    def stiffness(self, x):
        t = np.asarray(x, dtype=float) / self.eps
        s = _sigmoid(t)
        return self.kappa * (s * s + _softplus(t) * s * (1.0 - s))


RestoringLaw = Union[
    ZeroRestoring, LinearRestoring, CubicRestoring, SmoothedOneSidedRestoring
]


# ---------------------------------------------------------------------------
# forcing and initial profiles
# ---------------------------------------------------------------------------


def _sine_samples(grid, amplitude: float, mode: int) -> np.ndarray:
    return amplitude * np.sin(mode * np.pi * (grid.nodes - grid.a) / grid.length)


@dataclass(frozen=True)
class ZeroForcing:
    kind = "zero"

    def sample(self, grid) -> np.ndarray:
        return np.zeros(grid.n_interior)


@dataclass(frozen=True)
class SineModeForcing:
    """Static load amplitude * sin(mode*pi*(x-a)/(b-a)); mode >= 1."""

    amplitude: float = 1.0
    mode: int = 1

    kind = "sine_mode"

    def sample(self, grid) -> np.ndarray:
        return _sine_samples(grid, self.amplitude, self.mode)


@dataclass(frozen=True)
class SampledForcing:
    """Static load given by its values at the interior grid nodes."""

    values: tuple

    kind = "samples"

    def sample(self, grid) -> np.ndarray:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (grid.n_interior,):
            raise ValueError(
                f"sampled forcing has {vals.size} values, grid has "
                f"{grid.n_interior} interior nodes"
            )
        return vals.copy()


Forcing = Union[ZeroForcing, SineModeForcing, SampledForcing]


@dataclass(frozen=True)
class ZeroProfile:
    kind = "zero"

    def sample(self, grid) -> np.ndarray:
        return np.zeros(grid.n_interior)

    def boundary_values(self, a: float, b: float):
        return 0.0, 0.0


@dataclass(frozen=True)
class SineModeProfile:
    amplitude: float = 1.0
    mode: int = 1

    kind = "sine_mode"

    def sample(self, grid) -> np.ndarray:
        return _sine_samples(grid, self.amplitude, self.mode)

    def boundary_values(self, a: float, b: float):
        # sin(k*pi) evaluates to a few ulps rather than zero; report it honestly
        return 0.0, self.amplitude * float(np.sin(self.mode * np.pi))


@dataclass(frozen=True)
class SampledProfile:
    """Initial shape given at the interior nodes; endpoints are implicitly 0."""

    values: tuple

    kind = "samples"

    def sample(self, grid) -> np.ndarray:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (grid.n_interior,):
            raise ValueError(
                f"sampled profile has {vals.size} values, grid has "
                f"{grid.n_interior} interior nodes"
            )
        return vals.copy()

    def boundary_values(self, a: float, b: float):
        return 0.0, 0.0


SpatialProfile = Union[ZeroProfile, SineModeProfile, SampledProfile]


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BeamScenario:
    """Complete problem statement for one simulation.

    Units are SI throughout: a, b in m, m_mass in kg/m, sigma in N m^2,
    times in s.  Instances are immutable and safe to share across workers.
    """

    a: float
    b: float
    m_mass: float
    sigma: float
    damping: DampingLaw
    restoring: RestoringLaw
    forcing: Forcing
    u0: SpatialProfile
    u1: SpatialProfile
    t_end: float
    dt: float

    @property
    def length(self) -> float:
        return self.b - self.a


# ---------------------------------------------------------------------------
# hypothesis validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            detail = f"  ({c.detail})" if c.detail else ""
            lines.append(f"{status}  {c.name}{detail}")
        for w in self.warnings:
            lines.append(f"WARN  {w}")
        return "\n".join(lines)


class InvalidScenario(ValueError):
    """Raised by solvers handed a scenario whose validation report has failures."""

    def __init__(self, report: ValidationReport):
        self.report = report
        names = ", ".join(c.name for c in report.failures())
        super().__init__(f"scenario failed validation: {names}")


# The convexity/monotonicity hypotheses are checked by sign scans on a fixed
# symmetric sample grid; a symbolic check is out of reach for user laws.
_SCAN_LO, _SCAN_HI, _SCAN_N = -10.0, 10.0, 4001


def validate_scenario(scenario: BeamScenario) -> ValidationReport:
    """Check every structural hypothesis, returning pass/fail per item.

    Never raises: a broken scenario produces a report whose ``ok`` is False.
    Hypotheses needed only for convergence to the stationary solution (strictly
    positive damping, a restoring force with a finite root) downgrade to
    warnings so that conservative and one-sided scenarios remain runnable.
    """
    checks = []
    warnings = []
    xs = np.linspace(_SCAN_LO, _SCAN_HI, _SCAN_N)

    def check(name, passed, detail=""):
        checks.append(ValidationCheck(name, bool(passed), detail))

    s = scenario
    check("domain_ordered", s.a < s.b, f"a={s.a}, b={s.b}")
    check("mass_positive", s.m_mass > 0, f"m={s.m_mass}")
    check("rigidity_positive", s.sigma > 0, f"sigma={s.sigma}")
    check("t_end_positive", s.t_end > 0, f"t_end={s.t_end}")
    check("dt_positive", s.dt > 0, f"dt={s.dt}")

    # damping: parameters in range, F(0)=0, nondecreasing
    damping = s.damping
    if isinstance(damping, LinearPlusQuadraticDamping):
        check(
            "damping_parameters",
            damping.c >= 0 and damping.d >= 0,
            f"c={damping.c}, d={damping.d}",
        )
        if damping.c == 0 and damping.d == 0:
            warnings.append(
                "damping is identically zero: energy decay still holds but "
                "convergence to the stationary solution is not guaranteed"
            )
    else:
        check(
            "damping_parameters",
            damping.delta > 0 and damping.p >= 2,
            f"delta={damping.delta}, p={damping.p}",
        )
    check("damping_zero_at_rest", float(np.asarray(damping.force(0.0))) == 0.0)
    dmin = float(np.min(damping.force_derivative(xs)))
    check("damping_monotone", dmin >= 0.0, f"min sampled slope {dmin:.3g}")

    # restoring: convex potential, consistent with its declared force root,
    # bounded below
    restoring = s.restoring
    smin = float(np.min(restoring.stiffness(xs)))
    check("restoring_convex", smin >= 0.0, f"min sampled stiffness {smin:.3g}")
    root = restoring.force_root
    if root is None:
        check("restoring_force_root", True, "vanishes only in a limit")
        warnings.append(
            "restoring force has no finite root (it vanishes only as "
            "x -> -inf); uniqueness of the equilibrium holds in the limit"
        )
    else:
        fval = abs(float(np.asarray(restoring.force(root))))
        check("restoring_force_root", fval == 0.0, f"|force({root})|={fval:.3g}")
    emin = float(np.min(restoring.energy_density(xs)))
    check("restoring_bounded_below", emin >= 0.0, f"min sampled density {emin:.3g}")

    # forcing: every built-in evaluates independently of time by construction
    check("forcing_time_independent", True, "static by construction")

    # initial data must honor the clamped endpoints
    ok = True
    detail = []
    for label, prof in (("u0", s.u0), ("u1", s.u1)):
        va, vb = prof.boundary_values(s.a, s.b)
        scale = 1.0 + abs(getattr(prof, "amplitude", 1.0))
        if abs(va) > 1e-12 * scale or abs(vb) > 1e-12 * scale:
            ok = False
            detail.append(f"{label}: ({va:.3g}, {vb:.3g})")
    check("initial_boundary_compatible", ok, "; ".join(detail))

    return ValidationReport(checks=tuple(checks), warnings=tuple(warnings))
