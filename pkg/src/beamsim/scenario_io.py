"""Scenario files: a strict TOML schema and its canonical writer.

A scenario file fully determines a run: physics, laws, initial data, time
grid, spatial scheme, solver tolerances, and output options.  Parsing is
strict (unknown sections or keys are errors, as are missing required keys) so
that a typo cannot silently change an experiment.  The canonical writer
round-trips: parsing what it writes reproduces the setup exactly, float bits
included.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .discretization import SCHEMES, Discretization, build_discretization
from .model import (
    BeamScenario,
    CubicRestoring,
    LinearPlusQuadraticDamping,
    LinearRestoring,
    PowerLawDamping,
    SampledForcing,
    SampledProfile,
    SineModeForcing,
    SineModeProfile,
    SmoothedOneSidedRestoring,
    ZeroForcing,
    ZeroProfile,
    ZeroRestoring,
)

__all__ = [
    "OutputOptions",
    "RunSetup",
    "ScenarioFormatError",
    "load_scenario_file",
    "parse_scenario_dict",
    "setup_to_dict",
    "write_scenario_file",
    "apply_overrides",
    "discretization_for",
]


class ScenarioFormatError(ValueError):
    """The scenario file is syntactically or semantically malformed."""


@dataclass(frozen=True)
class OutputOptions:
    stride: int = 0  # 0 means: pick automatically (~2000 rows)
    nodal_snapshots: bool = False
    plots: bool = True


@dataclass(frozen=True)
class RunSetup:
    """Everything a command needs: the physics plus run/solver configuration."""

    scenario: BeamScenario
    scheme: str
    n_interior: int
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    stationary_tol: float = 1e-10
    gap_tol: float = 1e-6
    v_tol: float = 1e-6
    output: OutputOptions = field(default_factory=OutputOptions)


def discretization_for(setup: RunSetup) -> Discretization:
    return build_discretization(
        setup.scenario.a, setup.scenario.b, setup.n_interior, setup.scheme
    )


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Section:
    def __init__(self, name: str, data: dict):
        if not isinstance(data, dict):
            raise ScenarioFormatError(f"[{name}] must be a table")
        self.name = name
        self.data = dict(data)

    def take(self, key, kind, required=True, default=None):
        if key not in self.data:
            if required:
                raise ScenarioFormatError(f"[{self.name}] is missing required key '{key}'")
            return default
        value = self.data.pop(key)
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioFormatError(f"[{self.name}].{key} must be a number")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioFormatError(f"[{self.name}].{key} must be an integer")
            return int(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ScenarioFormatError(f"[{self.name}].{key} must be a boolean")
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ScenarioFormatError(f"[{self.name}].{key} must be a string")
            return value
        if kind is list:
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                raise ScenarioFormatError(f"[{self.name}].{key} must be a list of numbers")
            return tuple(float(v) for v in value)
        raise AssertionError(kind)

    def finish(self):
        if self.data:
            extra = ", ".join(sorted(self.data))
            raise ScenarioFormatError(f"[{self.name}] has unknown keys: {extra}")


def _parse_damping(sec: _Section):
    kind = sec.take("type", str)
    if kind == "linear_plus_quadratic":
        law = LinearPlusQuadraticDamping(c=sec.take("c", float), d=sec.take("d", float))
    elif kind == "power_law":
        law = PowerLawDamping(delta=sec.take("delta", float), p=sec.take("p", float))
    else:
        raise ScenarioFormatError(f"[damping].type: unknown variant '{kind}'")
    sec.finish()
    return law


def _parse_restoring(sec: _Section):
    kind = sec.take("type", str)
    if kind == "zero":
        law = ZeroRestoring()
    elif kind == "linear":
        law = LinearRestoring(kappa=sec.take("kappa", float))
    elif kind == "cubic":
        law = CubicRestoring(kappa=sec.take("kappa", float))
    elif kind == "smoothed_one_sided":
        law = SmoothedOneSidedRestoring(
            kappa=sec.take("kappa", float), eps=sec.take("eps", float)
        )
    else:
        raise ScenarioFormatError(f"[restoring].type: unknown variant '{kind}'")
    sec.finish()
    return law


def _parse_forcing(sec: _Section):
    kind = sec.take("type", str)
    if kind == "zero":
        law = ZeroForcing()
    elif kind == "sine_mode":
        law = SineModeForcing(
            amplitude=sec.take("amplitude", float),
            mode=sec.take("mode", int, required=False, default=1),
        )
    elif kind == "samples":
        law = SampledForcing(values=sec.take("values", list))
    else:
        raise ScenarioFormatError(f"[forcing].type: unknown variant '{kind}'")
    sec.finish()
    return law


def _parse_profile(sec: _Section, prefix: str):
    kind = sec.take(f"{prefix}_type", str)
    if kind == "zero":
        return ZeroProfile()
    if kind == "sine_mode":
        return SineModeProfile(
            amplitude=sec.take(f"{prefix}_amplitude", float),
            mode=sec.take(f"{prefix}_mode", int, required=False, default=1),
        )
    if kind == "samples":
        return SampledProfile(values=sec.take(f"{prefix}_values", list))
    raise ScenarioFormatError(f"[initial].{prefix}_type: unknown variant '{kind}'")


_KNOWN_SECTIONS = (
    "domain",
    "physics",
    "damping",
    "restoring",
    "forcing",
    "initial",
    "time",
    "discretization",
    "solver",
    "output",
)


def parse_scenario_dict(data: dict, source: str = "<dict>") -> RunSetup:
    unknown = sorted(set(data) - set(_KNOWN_SECTIONS))
    if unknown:
        raise ScenarioFormatError(f"{source}: unknown sections: {', '.join(unknown)}")
    missing = [
        s
        for s in ("domain", "physics", "damping", "restoring", "forcing", "initial", "time", "discretization")
        if s not in data
    ]
    if missing:
        raise ScenarioFormatError(f"{source}: missing sections: {', '.join(missing)}")

    domain = _Section("domain", data["domain"])
    a = domain.take("a", float)
    b = domain.take("b", float)
    domain.finish()

    physics = _Section("physics", data["physics"])
    m_mass = physics.take("m", float)
    sigma = physics.take("sigma", float)
    physics.finish()

    damping = _parse_damping(_Section("damping", data["damping"]))
    restoring = _parse_restoring(_Section("restoring", data["restoring"]))
    forcing = _parse_forcing(_Section("forcing", data["forcing"]))

    initial = _Section("initial", data["initial"])
    u0 = _parse_profile(initial, "u0")
    u1 = _parse_profile(initial, "u1")
    initial.finish()

    time_sec = _Section("time", data["time"])
    dt = time_sec.take("dt", float)
    t_end = time_sec.take("t_end", float)
    time_sec.finish()

    disc_sec = _Section("discretization", data["discretization"])
    scheme = disc_sec.take("scheme", str)
    n = disc_sec.take("n", int)
    disc_sec.finish()
    if scheme not in SCHEMES:
        raise ScenarioFormatError(
            f"[discretization].scheme must be one of {SCHEMES}, got '{scheme}'"
        )

    solver = _Section("solver", data.get("solver", {}))
    newton_tol = solver.take("newton_tol", float, required=False, default=1e-10)
    newton_max_iter = solver.take("newton_max_iter", int, required=False, default=50)
    stationary_tol = solver.take("stationary_tol", float, required=False, default=1e-10)
    gap_tol = solver.take("gap_tol", float, required=False, default=1e-6)
    v_tol = solver.take("v_tol", float, required=False, default=1e-6)
    solver.finish()

    output = _Section("output", data.get("output", {}))
    stride = output.take("stride", int, required=False, default=0)
    nodal_snapshots = output.take("nodal_snapshots", bool, required=False, default=False)
    plots = output.take("plots", bool, required=False, default=True)
    output.finish()

    scenario = BeamScenario(
        a=a,
        b=b,
        m_mass=m_mass,
        sigma=sigma,
        damping=damping,
        restoring=restoring,
        forcing=forcing,
        u0=u0,
        u1=u1,
        t_end=t_end,
        dt=dt,
    )
    return RunSetup(
        scenario=scenario,
        scheme=scheme,
        n_interior=n,
        newton_tol=newton_tol,
        newton_max_iter=newton_max_iter,
        stationary_tol=stationary_tol,
        gap_tol=gap_tol,
        v_tol=v_tol,
        output=OutputOptions(stride=stride, nodal_snapshots=nodal_snapshots, plots=plots),
    )


def load_scenario_file(path) -> RunSetup:
    """Parse a scenario file.  OS errors (missing file, unreadable) propagate;
    malformed content raises ScenarioFormatError."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            data = _toml.load(fh)
        except _toml.TOMLDecodeError as exc:
            raise ScenarioFormatError(f"{path}: invalid TOML: {exc}") from exc
    return parse_scenario_dict(data, source=str(path))


# ---------------------------------------------------------------------------
# canonical writing
# ---------------------------------------------------------------------------


def _law_dict(law) -> dict:
    out = {"type": law.kind}
    for key in ("c", "d", "delta", "p", "kappa", "eps", "amplitude", "mode"):
        if hasattr(law, key):
            out[key] = getattr(law, key)
    if hasattr(law, "values"):
        out["values"] = list(law.values)
    return out


def setup_to_dict(setup: RunSetup) -> dict:
    s = setup.scenario
    initial = {"u0_type": s.u0.kind, "u1_type": s.u1.kind}
    for prefix, prof in (("u0", s.u0), ("u1", s.u1)):
        if hasattr(prof, "amplitude"):
            initial[f"{prefix}_amplitude"] = prof.amplitude
            initial[f"{prefix}_mode"] = prof.mode
        if hasattr(prof, "values"):
            initial[f"{prefix}_values"] = list(prof.values)
    return {
        "domain": {"a": s.a, "b": s.b},
        "physics": {"m": s.m_mass, "sigma": s.sigma},
        "damping": _law_dict(s.damping),
        "restoring": _law_dict(s.restoring),
        "forcing": _law_dict(s.forcing),
        "initial": initial,
        "time": {"dt": s.dt, "t_end": s.t_end},
        "discretization": {"scheme": setup.scheme, "n": setup.n_interior},
        "solver": {
            "newton_tol": setup.newton_tol,
            "newton_max_iter": setup.newton_max_iter,
            "stationary_tol": setup.stationary_tol,
            "gap_tol": setup.gap_tol,
            "v_tol": setup.v_tol,
        },
        "output": {
            "stride": setup.output.stride,
            "nodal_snapshots": setup.output.nodal_snapshots,
            "plots": setup.output.plots,
        },
    }


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)  # shortest round-trip form, valid TOML
        return text
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(float(v)) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def write_scenario_file(path, setup: RunSetup) -> None:
    """Emit the canonical form: fixed section and key order, round-trip safe."""
    data = setup_to_dict(setup)
    lines = []
    for section in _KNOWN_SECTIONS:
        if section not in data:
            continue
        lines.append(f"[{section}]")
        for key, value in data[section].items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def apply_overrides(data: dict, overrides: dict) -> dict:
    """Return a deep-enough copy of a scenario dict with section.key overrides."""
    out = {k: dict(v) for k, v in data.items()}
    for dotted, value in overrides.items():
        if "." not in dotted:
            raise ScenarioFormatError(f"override '{dotted}' must look like section.key")
        section, key = dotted.split(".", 1)
        if section not in _KNOWN_SECTIONS:
            raise ScenarioFormatError(f"override targets unknown section '{section}'")
        out.setdefault(section, {})[key] = value
    return out
