"""Run artifacts: CSV tables, a JSON manifest, and static SVG line charts.

All numeric CSV fields are serialized with 17 significant digits so that a
re-run on the same platform produces byte-identical files.  The manifest is
written last and atomically; every file it lists exists by the time it does.
The SVG charts are a fixed template (axes box, ticks, one polyline), no
styling randomness, suitable for quick inspection only.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_trajectory_csv",
    "write_stationary_csv",
    "write_sweep_csv",
    "write_manifest",
    "render_line_svg",
]

TOOL_NAME = "beamsim"


def _version() -> str:
    try:
        from importlib.metadata import version

        return version("beamsim")
    except Exception:
        return "0.1.0"


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any float64 exactly."""
    value = float(x) + 0.0  # normalize negative zero
    return f"{value:.17g}"


def write_trajectory_csv(path, traj, *, nodal_snapshots: bool = False) -> None:
    """One row per stored snapshot: energy ledger plus the two norms.

    The squared bending norm and squared velocity norm are recovered from the
    elastic and kinetic ledgers, so the columns agree exactly with the audit
    quantities.  With nodal_snapshots the interior displacement values are
    appended as u_1..u_n.
    """
    e = traj.energy
    idx = traj.snapshot_steps
    sigma = traj.scenario.sigma
    m = traj.scenario.m_mass
    header = [
        "t",
        "energy_total",
        "kinetic",
        "elastic",
        "potential",
        "forcing",
        "dissipated_cumulative",
        "h2star_norm_u",
        "l2_norm_v",
    ]
    n = traj.disc.n
    if nodal_snapshots:
        header += [f"u_{i}" for i in range(1, n + 1)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for snap_pos, k in enumerate(idx):
            row = [
                fmt(e.t[k]),
                fmt(e.total[k]),
                fmt(e.kinetic[k]),
                fmt(e.elastic[k]),
                fmt(e.potential[k]),
                fmt(e.forcing[k]),
                fmt(e.dissipated[k]),
                fmt(np.sqrt(max(0.0, 2.0 * e.elastic[k] / sigma))),
                fmt(np.sqrt(max(0.0, 2.0 * e.kinetic[k] / m))),
            ]
            if nodal_snapshots:
                u_nodal = traj.disc.to_nodal(traj.states[snap_pos].u)
                row += [fmt(val) for val in u_nodal]
            writer.writerow(row)


def write_stationary_csv(path, nodes, u_hat_nodal) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "u_hat"])
        for x, u in zip(nodes, u_hat_nodal):
            writer.writerow([fmt(x), fmt(u)])


def write_sweep_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_manifest(out_dir, name, payload: dict) -> Path:
    """Atomic JSON manifest: written to a temp file, then renamed into place."""
    out_dir = Path(out_dir)
    payload = dict(payload)
    payload.setdefault("tool", TOOL_NAME)
    payload.setdefault("version", _version())
    target = out_dir / name
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


# ---------------------------------------------------------------------------
# fixed-template SVG line chart
# ---------------------------------------------------------------------------

_W, _H = 800, 500
_ML, _MR, _MT, _MB = 80, 20, 40, 60


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, count)


def render_line_svg(path, x, y, *, title: str, xlabel: str, ylabel: str, logy: bool = False) -> None:
    """Minimal deterministic line chart; logy plots log10 of positive values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if logy:
        floor = 1e-300
        y = np.log10(np.maximum(np.abs(y), floor))
        ylabel = f"log10 {ylabel}"
    xlo, xhi = float(x.min()), float(x.max())
    ylo, yhi = float(y.min()), float(y.max())
    if xhi <= xlo:
        xhi = xlo + 1.0
    if yhi <= ylo:
        yhi = ylo + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo -= pad
    yhi += pad
    iw = _W - _ML - _MR
    ih = _H - _MT - _MB

    def px(val):
        return _ML + iw * (val - xlo) / (xhi - xlo)

    def py(val):
        return _MT + ih * (1.0 - (val - ylo) / (yhi - ylo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{iw}" height="{ih}" fill="none" '
        f'stroke="black" stroke-width="1"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
        f'<text x="{_W / 2:.1f}" y="{_H - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>',
        f'<text x="20" y="{_H / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13" transform="rotate(-90 20 {_H / 2:.1f})">{ylabel}</text>',
    ]
    for tx in _ticks(xlo, xhi):
        parts.append(
            f'<line x1="{px(tx):.2f}" y1="{_MT + ih}" x2="{px(tx):.2f}" '
            f'y2="{_MT + ih + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(tx):.2f}" y="{_MT + ih + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tx:.6g}</text>'
        )
    for ty in _ticks(ylo, yhi):
        parts.append(
            f'<line x1="{_ML - 5}" y1="{py(ty):.2f}" x2="{_ML}" y2="{py(ty):.2f}" '
            f'stroke="black"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{py(ty) + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:.6g}</text>'
        )
    points = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
    parts.append(
        f'<polyline points="{points}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")
