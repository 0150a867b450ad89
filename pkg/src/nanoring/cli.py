"""Command-line front end: experiment orchestration with reproducible outputs.

Every run writes its result CSV/JSON files plus a manifest echoing the
effective configuration, the seed, the package version, and the wall
time. Identical configurations produce byte-identical result files.

Exit codes: 0 success, 1 configuration error, 2 numerical/geometry error.
Worker count for sweeps comes from --threads or NANORING_THREADS.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, serialize
from .coupling import coupling_rates
from .dynamics import (default_decay_times, disorder_decay_study,
                       transfer_fidelity, transfer_population)
from .errors import ConfigError, NanoringError
from .field import farfield_map, plane_map, superposition_state
from .geometry import (PolSpec, RingSpec, build_ring, lhc_layout,
                       save_layout, two_ring_layout)
from .spectrum import (analytic_ring_spectrum, angle_sweep, diagonalize,
                       effective_hamiltonian, magic_angle, min_decay_scan)

COMMANDS = ("spectrum", "angle-sweep", "scaling", "disorder", "transport",
            "efficiency", "field", "validate")

POL_NAMES = ("tangential", "radial", "transverse", "magic")


def make_pol(name: str, phi: float | None = None) -> PolSpec:
    if name == "tangential":
        return PolSpec.tangential(0.0 if phi is None else phi)
    if name == "radial":
        return PolSpec.radial(0.0 if phi is None else phi)
    if name == "transverse":
        return PolSpec.transverse()
    if name == "magic":
        angle = magic_angle(1.0)
        return PolSpec.tangential(angle)
    raise ConfigError(f"pol: unknown polarization {name!r}, "
                      f"expected one of {POL_NAMES}")


def parse_range(text) -> list:
    """Accept "4..16", "4,8,12" or a bare value; returns numbers."""
    if isinstance(text, (list, tuple)):
        return list(text)
    text = str(text)
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        out.append(float(part) if ("." in part or "e" in part) else int(part))
    return out


def parse_shift(text, d: float) -> float:
    """Displacement amplitude, either absolute or relative like "0.4d"."""
    if isinstance(text, (int, float)):
        return float(text)
    text = str(text).strip()
    if text.endswith("d"):
        return float(text[:-1]) * d
    return float(text)


# --------------------------------------------------------------------------
# configuration handling

FIELD_SPECS = {
    "spectrum": {"n": 8, "d": 0.1, "pol": "transverse", "phi": None,
                 "manifold": 1},
    "angle-sweep": {"n": 8, "d": 0.1, "pol": "tangential",
                    "phi_min": 0.0, "phi_max": math.pi / 2, "phi_steps": 33},
    "scaling": {"n": "4..16", "d": "0.1", "pol": "transverse", "manifold": 1},
    "disorder": {"n": 8, "d": 0.4, "pol": "transverse", "kind": "radial",
                 "max_shift": "0.2d", "realizations": 100,
                 "t_points": 120, "t_max": None},
    "transport": {"n1": 9, "n2": 16, "d": 0.1, "pol": "tangential",
                  "phi": None, "m": 3, "dtheta": 2 * math.pi, "x": 0.12,
                  "t_max": 300.0, "t_points": 1501},
    "efficiency": {"n1": 16, "n2": 9, "d": 0.1, "pol": "transverse",
                   "x_min": 0.1, "x_max": 0.5, "x_steps": 41,
                   "table": False, "x": 0.12},
    "field": {"layout": "ring", "n": 10, "n1": 9, "n2": 16, "n_inner": 16,
              "n_outer": 9, "n_rings_outer": 8, "d": 0.1, "gap": 0.12,
              "pol": "tangential", "phi": None, "m": 0,
              "central": "superradiant", "outer": "subradiant",
              "map": "sphere", "radius": None, "n_theta": 91, "n_phi": 72,
              "z_offset": 0.5, "extent": 2.5, "n_x": 81, "n_y": 81},
}

COMMON_DEFAULTS = {"seed": 0, "out_dir": "nanoring_out", "threads": None}


def load_config_file(path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} line {err.lineno}: {err.msg}") from err
    if not isinstance(payload, dict):
        raise ConfigError("config file must hold a JSON object")
    return payload


def merge_config(command: str, file_config: dict, flag_values: dict) -> dict:
    """Defaults, then config file, then explicitly set flags."""
    if command not in FIELD_SPECS:
        raise ConfigError(f"command: unknown command {command!r}")
    config = dict(COMMON_DEFAULTS)
    config.update(FIELD_SPECS[command])
    unknown = set(file_config) - set(config) - {"command"}
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    config.update({k: v for k, v in file_config.items() if k != "command"})
    config.update({k: v for k, v in flag_values.items() if v is not None})
    config["command"] = command
    return config


def validate_config(config: dict) -> list[str]:
    """Human-readable list of problems; empty when the config is runnable."""
    problems = []
    cmd = config.get("command")
    if cmd not in FIELD_SPECS:
        problems.append(f"command: unknown command {cmd!r}")
        return problems

    def positive(key, allow_none=False):
        v = config.get(key)
        if v is None and allow_none:
            return
        try:
            if float(v) <= 0:
                problems.append(f"{key}: must be positive, got {v}")
        except (TypeError, ValueError):
            problems.append(f"{key}: not a number: {v!r}")

    if "d" in config and cmd != "scaling":
        positive("d")
    if cmd != "scaling":
        for key in ("n", "n1", "n2"):
            if key in FIELD_SPECS[cmd]:
                try:
                    if int(config[key]) < 2:
                        problems.append(f"{key}: a ring needs at least 2 sites")
                except (TypeError, ValueError):
                    problems.append(f"{key}: not an integer: {config[key]!r}")
    if "pol" in FIELD_SPECS[cmd] and config.get("pol") not in POL_NAMES:
        problems.append(f"pol: unknown polarization {config.get('pol')!r}")
    if cmd == "scaling":
        if config.get("manifold") not in (1, 2):
            problems.append(f"manifold: must be 1 or 2, got {config.get('manifold')}")
        try:
            if not parse_range(config["n"]):
                problems.append("n: empty grid")
            ds = parse_range(config["d"])
            if not ds:
                problems.append("d: empty grid")
            elif any(float(d) <= 0 for d in ds):
                problems.append("d: grid values must be positive")
        except ValueError as err:
            problems.append(f"n/d: {err}")
    if cmd == "disorder":
        if config.get("kind") not in ("angular", "radial", "vertical"):
            problems.append(f"kind: unknown disorder kind {config.get('kind')!r}")
        if int(config.get("realizations", 0)) < 1:
            problems.append("realizations: must be at least 1")
    if cmd == "efficiency" and not config.get("table"):
        if int(config.get("x_steps", 0)) < 1:
            problems.append("x_steps: must be at least 1")
    if cmd == "field":
        if config.get("layout") not in ("ring", "two-ring", "lhc"):
            problems.append(f"layout: unknown layout {config.get('layout')!r}")
        if config.get("map") not in ("sphere", "plane"):
            problems.append(f"map: unknown map kind {config.get('map')!r}")
    try:
        int(config.get("seed", 0))
    except (TypeError, ValueError):
        problems.append(f"seed: not an integer: {config.get('seed')!r}")
    return problems


def thread_count(config: dict) -> int:
    t = config.get("threads")
    if t is None:
        t = os.environ.get("NANORING_THREADS")
    if t in (None, "", "auto"):
        return min(4, os.cpu_count() or 1)
    try:
        n = int(t)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"threads: not an integer: {t!r}") from err
    if n < 1:
        raise ConfigError(f"threads: must be >= 1, got {n}")
    return n


def parallel_map(fn, items, workers: int) -> list:
    """Order-preserving parallel map (results sorted by input index)."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# command implementations (each returns the list of files written)


def run_spectrum(config, out: Path) -> list[str]:
    pol = make_pol(config["pol"], config.get("phi"))
    spec = RingSpec(int(config["n"]), float(config["d"]), pol)
    manifold = int(config["manifold"])
    if manifold == 1:
        modes = analytic_ring_spectrum(spec)
    else:
        arr = build_ring(spec)
        modes = diagonalize(effective_hamiltonian(coupling_rates(arr),
                                                  manifold), manifold=manifold)
    serialize.write_modes_csv(out / "modes.csv", modes, spec.n_sites,
                              spec.spacing, pol.phi)
    return ["modes.csv"]


def run_angle_sweep(config, out: Path) -> list[str]:
    pol = make_pol(config["pol"], 0.0)
    spec = RingSpec(int(config["n"]), float(config["d"]), pol)
    phis = np.linspace(float(config["phi_min"]), float(config["phi_max"]),
                       int(config["phi_steps"]))
    sweep = angle_sweep(spec, phis)
    serialize.write_angle_sweep_csv(out / "angle_sweep.csv", sweep)
    return ["angle_sweep.csv"]


def run_scaling(config, out: Path) -> list[str]:
    ns = [int(n) for n in parse_range(config["n"])]
    ds = [float(d) for d in parse_range(config["d"])]
    pol = make_pol(config["pol"])
    result = min_decay_scan(ns, ds, manifold=int(config["manifold"]), pol=pol)
    serialize.write_scaling_csv(out / "scaling.csv", result)
    serialize.write_fits_json(out / "fits.json", result)
    return ["scaling.csv", "fits.json"]


def run_disorder(config, out: Path) -> list[str]:
    d = float(config["d"])
    pol = make_pol(config["pol"])
    spec = RingSpec(int(config["n"]), d, pol)
    max_shift = parse_shift(config["max_shift"], d)
    t_max = config.get("t_max")
    if t_max is None:
        ref = analytic_ring_spectrum(spec)
        t_max = 30.0 / max(ref.rates[0], 1e-12)
    times = np.concatenate([[0.0], np.geomspace(1e-3, float(t_max),
                                                int(config["t_points"]))])
    mean, ref_curve = disorder_decay_study(
        spec, config["kind"], max_shift,
        n_real=int(config["realizations"]), seed=int(config["seed"]),
        times=times)
    serialize.write_decay_csv(out / "decay.csv", [mean, ref_curve])
    serialize.write_json(out / "study.json", {
        "seed": int(config["seed"]),
        "n_realizations": mean.n_realizations,
        "kind": config["kind"],
        "max_shift": max_shift,
        "n": int(config["n"]),
        "d": d,
        "pol": config["pol"],
        "t_max": float(t_max),
    })
    return ["decay.csv", "study.json"]


def run_transport(config, out: Path) -> list[str]:
    pol = make_pol(config["pol"], config.get("phi"))
    d = float(config["d"])
    system = two_ring_layout(RingSpec(int(config["n1"]), d, pol),
                             RingSpec(int(config["n2"]), d, pol),
                             float(config["x"]))
    times = np.linspace(0.0, float(config["t_max"]), int(config["t_points"]))
    m = int(config["m"])
    dtheta = float(config["dtheta"])
    fid = transfer_fidelity(system, m, dtheta, times)
    pop = transfer_population(system, m, dtheta, times)
    serialize.write_traces_csv(out / "transport.csv",
                               [(times, fid, "fidelity"),
                                (times, pop, "ring2_population")])
    save_layout(system, out / "layout.json")
    return ["transport.csv", "layout.json"]


def run_efficiency(config, out: Path) -> list[str]:
    pol = make_pol(config["pol"])
    d = float(config["d"])
    spec1 = RingSpec(int(config["n1"]), d, pol)
    spec2 = RingSpec(int(config["n2"]), d, pol)
    written = []
    if config.get("table"):
        from .transport import mode_coupling_table
        system = two_ring_layout(spec1, spec2, float(config["x"]))
        table = mode_coupling_table(system, spec1, spec2)
        labels = (table.m1_values.tolist(), table.m2_values.tolist())
        serialize.write_matrix_csv(out / "coupling_j.csv", table.j, labels)
        serialize.write_matrix_csv(out / "coupling_gamma.csv", table.g, labels)
        serialize.write_matrix_csv(out / "coupling_eta.csv", table.eta, labels)
        written += ["coupling_j.csv", "coupling_gamma.csv", "coupling_eta.csv"]
    else:
        from .transport import efficiency_sweep
        xs = np.linspace(float(config["x_min"]), float(config["x_max"]),
                         int(config["x_steps"]))
        workers = thread_count(config)
        etas = parallel_map(
            lambda x: float(efficiency_sweep(spec1, spec2, [x])[0]),
            list(xs), workers)
        serialize.write_efficiency_csv(out / "eta.csv", xs, etas)
        written.append("eta.csv")
    return written


def _field_state_and_array(config):
    pol = make_pol(config["pol"], config.get("phi"))
    d = float(config["d"])
    layout = config["layout"]
    from .dynamics import site_basis_state
    from .spectrum import spin_wave
    if layout == "ring":
        n = int(config["n"])
        arr = build_ring(RingSpec(n, d, pol))
        psi = site_basis_state(arr, spin_wave(n, int(config["m"])))
        return arr, psi
    if layout == "two-ring":
        arr = two_ring_layout(RingSpec(int(config["n1"]), d, pol),
                              RingSpec(int(config["n2"]), d, pol),
                              float(config["gap"]))
        spec1 = RingSpec(int(config["n1"]), d, pol)
        spec2 = RingSpec(int(config["n2"]), d, pol)
        sets = [analytic_ring_spectrum(spec1), analytic_ring_spectrum(spec2)]
        choices = [config["central"], config["outer"]]
        return arr, superposition_state(arr, sets, choices)
    if layout == "lhc":
        n_in, n_out = int(config["n_inner"]), int(config["n_outer"])
        n_rings = int(config["n_rings_outer"])
        arr = lhc_layout(n_in, n_out, n_rings, d, pol)
        sets = [analytic_ring_spectrum(RingSpec(n_in, d, pol))]
        sets += [analytic_ring_spectrum(RingSpec(n_out, d, pol))] * n_rings
        choices = [config["central"]] + [config["outer"]] * n_rings
        return arr, superposition_state(arr, sets, choices)
    raise ConfigError(f"layout: unknown layout {layout!r}")


def run_field(config, out: Path) -> list[str]:
    arr, psi = _field_state_and_array(config)
    if config["map"] == "sphere":
        radius = config.get("radius")
        fmap = farfield_map(arr, psi,
                            radius=None if radius is None else float(radius),
                            n_theta=int(config["n_theta"]),
                            n_phi=int(config["n_phi"]))
    else:
        fmap = plane_map(arr, psi, z_offset=float(config["z_offset"]),
                         extent=float(config["extent"]),
                         n_x=int(config["n_x"]), n_y=int(config["n_y"]))
    serialize.write_field_csv(out / "field.csv", fmap)
    serialize.write_field_meta(out / "field_meta.json", fmap)
    save_layout(arr, out / "layout.json")
    return ["field.csv", "field_meta.json", "layout.json"]


RUNNERS = {
    "spectrum": run_spectrum,
    "angle-sweep": run_angle_sweep,
    "scaling": run_scaling,
    "disorder": run_disorder,
    "transport": run_transport,
    "efficiency": run_efficiency,
    "field": run_field,
}


def run(config: dict) -> list[str]:
    """Execute a validated configuration; returns written file names."""
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        written = RUNNERS[config["command"]](config, out)
    except NanoringError:
        manifest = {
            "command": config["command"],
            "config": {k: v for k, v in config.items()},
            "version": __version__,
            "status": "failed",
            "wall_time_s": time.perf_counter() - t0,
        }
        serialize.write_json(out / "manifest.json", manifest)
        raise
    manifest = {
        "command": config["command"],
        "config": {k: v for k, v in config.items()},
        "seed": int(config.get("seed", 0)),
        "version": __version__,
        "status": "ok",
        "wall_time_s": time.perf_counter() - t0,
        "outputs": written,
    }
    serialize.write_json(out / "manifest.json", manifest)
    return written


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nanoring",
        description="Collective radiation and transport in dipole-coupled "
                    "emitter rings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads")

    p = sub.add_parser("spectrum", help="collective shifts and rates of one ring")
    add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--pol", choices=POL_NAMES)
    p.add_argument("--phi", type=float)
    p.add_argument("--manifold", type=int, choices=(1, 2))

    p = sub.add_parser("angle-sweep", help="mode shifts/rates vs dipole tilt")
    add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--pol", choices=("tangential", "radial"))
    p.add_argument("--phi-min", dest="phi_min", type=float)
    p.add_argument("--phi-max", dest="phi_max", type=float)
    p.add_argument("--phi-steps", dest="phi_steps", type=int)

    p = sub.add_parser("scaling", help="minimal decay rate vs ring size")
    add_common(p)
    p.add_argument("--n", help="e.g. 4..16 or 4,8,12")
    p.add_argument("--d", help="e.g. 0.05,0.1")
    p.add_argument("--pol", choices=POL_NAMES)
    p.add_argument("--manifold", type=int, choices=(1, 2))

    p = sub.add_parser("disorder", help="disorder-averaged decay study")
    add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--pol", choices=POL_NAMES)
    p.add_argument("--kind", choices=("angular", "radial", "vertical"))
    p.add_argument("--max-shift", dest="max_shift",
                   help="absolute (0.08) or relative to spacing (0.2d)")
    p.add_argument("--realizations", type=int)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-points", dest="t_points", type=int)

    p = sub.add_parser("transport", help="wave-packet transfer between two rings")
    add_common(p)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--pol", choices=POL_NAMES)
    p.add_argument("--phi", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--dtheta", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-points", dest="t_points", type=int)

    p = sub.add_parser("efficiency", help="mode-to-mode coupling efficiency")
    add_common(p)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--pol", choices=POL_NAMES)
    p.add_argument("--x-min", dest="x_min", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--x-steps", dest="x_steps", type=int)
    p.add_argument("--table", action="store_const", const=True)
    p.add_argument("--x", type=float)

    p = sub.add_parser("field", help="emitted-field intensity maps")
    add_common(p)
    p.add_argument("--layout", choices=("ring", "two-ring", "lhc"))
    p.add_argument("--n", type=int)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--n-inner", dest="n_inner", type=int)
    p.add_argument("--n-outer", dest="n_outer", type=int)
    p.add_argument("--n-rings-outer", dest="n_rings_outer", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--gap", type=float)
    p.add_argument("--pol", choices=POL_NAMES)
    p.add_argument("--phi", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--central", choices=("superradiant", "subradiant"))
    p.add_argument("--outer", choices=("superradiant", "subradiant"))
    p.add_argument("--map", choices=("sphere", "plane"))
    p.add_argument("--radius", type=float)
    p.add_argument("--n-theta", dest="n_theta", type=int)
    p.add_argument("--n-phi", dest="n_phi", type=int)
    p.add_argument("--z-offset", dest="z_offset", type=float)
    p.add_argument("--extent", type=float)
    p.add_argument("--n-x", dest="n_x", type=int)
    p.add_argument("--n-y", dest="n_y", type=int)

    p = sub.add_parser("validate", help="check a configuration without running")
    p.add_argument("--config", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config")}

    try:
        if args.command == "validate":
            file_config = load_config_file(args.config)
            command = file_config.get("command")
            if command is None:
                print("command: missing", file=sys.stderr)
                return 1
            config = merge_config(command, file_config, {})
            defaults_injected = [k for k in ("seed", "out_dir")
                                 if k not in file_config]
            problems = validate_config(config)
            if problems:
                for item in problems:
                    print(item, file=sys.stderr)
                return 1
            for k in defaults_injected:
                print(f"default injected: {k} = {config[k]}")
            print("OK")
            return 0

        file_config = load_config_file(args.config) if args.config else {}
        config = merge_config(args.command, file_config, flags)
        run(config)
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except NanoringError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
