"""CSV/JSON writers with byte-stable numeric formatting.

All floats are written in scientific notation with 17 significant digits
so values round-trip doubles exactly and reruns of the same configuration
produce byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .coupling import CouplingMatrices
from .dynamics import DecayCurve
from .field import FieldMap
from .spectrum import AngleSweep, ModeSet, ScalingResult


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, payload: dict) -> None:
    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not JSON-serializable: {type(o)}")
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True,
                                     default=default) + "\n",
                          encoding="utf-8")


def write_modes_csv(path, modes: ModeSet, n_sites: int, spacing: float,
                    phi: float) -> None:
    """Mode table (N, d, phi, m, J_over_Gamma0, Gamma_over_Gamma0)."""
    rows = []
    for k in range(modes.n_modes):
        m = "" if modes.labels is None else int(modes.labels[k])
        rows.append((n_sites, spacing, phi, m,
                     modes.shifts[k], modes.rates[k]))
    write_csv(path, ["N", "d", "phi", "m", "J_over_Gamma0",
                     "Gamma_over_Gamma0"], rows)


def write_angle_sweep_csv(path, sweep: AngleSweep) -> None:
    rows = []
    for i, phi in enumerate(sweep.phis):
        for k, m in enumerate(sweep.m_values):
            rows.append((sweep.n_sites, sweep.spacing, phi, int(m),
                         sweep.shifts[i, k], sweep.rates[i, k]))
    write_csv(path, ["N", "d", "phi", "m", "J_over_Gamma0",
                     "Gamma_over_Gamma0"], rows)


def write_scaling_csv(path, result: ScalingResult) -> None:
    rows = [(int(n), d, g, result.manifold) for n, d, g in result.rows()]
    write_csv(path, ["N", "d", "Gamma_min", "manifold"], rows)


def write_fits_json(path, result: ScalingResult) -> None:
    fits = [{"d": d, "xi": f.xi, "r2": f.r2, "n_points": f.n_points}
            for d, f in sorted(result.fits.items())]
    write_json(path, {"manifold": result.manifold, "fits": fits})


def write_decay_csv(path, curves: list[DecayCurve]) -> None:
    rows = []
    for curve in curves:
        for t, p in zip(curve.times, curve.population):
            rows.append((t, p, curve.kind))
    write_csv(path, ["t_Gamma0", "value", "kind"], rows)


def write_trace_csv(path, times, values, kind: str) -> None:
    rows = [(t, v, kind) for t, v in zip(times, values)]
    write_csv(path, ["t_Gamma0", "value", "kind"], rows)


def write_traces_csv(path, traces: list[tuple[np.ndarray, np.ndarray, str]]) -> None:
    rows = []
    for times, values, kind in traces:
        rows.extend((t, v, kind) for t, v in zip(times, values))
    write_csv(path, ["t_Gamma0", "value", "kind"], rows)


def write_matrix_csv(path, matrix: np.ndarray, labels) -> None:
    """Square table with labeled header row and label column."""
    header = ["label"] + [str(l) for l in labels[1]]
    rows = [[str(l1)] + list(row) for l1, row in zip(labels[0], matrix)]
    write_csv(path, header, rows)


def write_coupling_csv(omega_path, gamma_path, c: CouplingMatrices) -> None:
    idx = list(range(c.n_sites))
    write_matrix_csv(omega_path, c.omega, (idx, idx))
    write_matrix_csv(gamma_path, c.gamma, (idx, idx))


def write_efficiency_csv(path, xs, eta) -> None:
    write_csv(path, ["x", "eta_max"], zip(xs, eta))


def write_field_csv(path, fmap: FieldMap) -> None:
    rows = zip(fmap.grid[:, 0], fmap.grid[:, 1], fmap.grid[:, 2],
               fmap.intensity)
    write_csv(path, ["x", "y", "z", "intensity"], rows)


def write_field_meta(path, fmap: FieldMap) -> None:
    write_json(path, fmap.metadata)
