"""Command-line entry points for simulations and verification experiments.

Configs are flat ``key = value`` text files; ``[section]`` headers and
``#`` comments are allowed and ignored.  Unknown keys are rejected with
their line number.  Exit codes: 0 success, 1 numerical failure or
violated check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import shutil
import sys

import numpy as np
import scipy.fft

from rotlayer import checkpoint as ckpt
from rotlayer import rossby, selfsim, solver
from rotlayer.spectral import Grid, SpectralVectorField, norm_l2

__all__ = ["main", "parse_config", "ConfigError"]


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def parse_config(path):
    """Read a flat key = value config; returns {key: (raw string, line)}."""
    try:
        with open(path, "r") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    entries = {}
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if text.startswith("[") and text.endswith("]"):
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
        key, value = (part.strip() for part in text.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(
                f"{path}:{lineno}: duplicate key {key!r} (first set on line {entries[key][1]})"
            )
        entries[key] = (value, lineno)
    return entries


def _coerce(path, key, raw, lineno, kind):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "floatlist":
            return [float(part) for part in raw.split(",") if part.strip()]
        return raw
    except ValueError as exc:
        raise ConfigError(
            f"{path}:{lineno}: key {key!r} expects {kind}, got {raw!r}"
        ) from exc


def _apply_schema(path, entries, schema):
    values = {}
    for key, (raw, lineno) in entries.items():
        if key not in schema:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(path, key, raw, lineno, schema[key])
    return values


_RUN_SCHEMA = {
    field.name: (
        "int" if field.type is int or field.type == "int"
        else "bool" if field.type is bool or field.type == "bool"
        else "float" if field.type is float or field.type == "float"
        else "str"
    )
    for field in dataclasses.fields(solver.RunConfig)
}


def _run_config(path, entries, args, extra_allowed=()):
    schema = dict(_RUN_SCHEMA)
    for key in extra_allowed:
        schema.pop(key, None)
    values = _apply_schema(path, entries, schema)
    if args.seed is not None:
        values["seed"] = args.seed
    if args.out:
        values["output_dir"] = args.out
    try:
        return solver.RunConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _require_outdir(config_values, args, path):
    outdir = args.out or config_values.get("output_dir", "")
    if not outdir:
        raise ConfigError(f"{path}: no output directory (set output_dir or pass --out)")
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _echo_config_and_manifest(outdir, config_path, extra_files):
    """Copy the config into the output dir and hash all artifacts."""
    shutil.copyfile(config_path, os.path.join(outdir, "config.txt"))
    names = sorted(set(extra_files) | {"config.txt"})
    ckpt.write_manifest(outdir, names)


def _simulation_outputs(outdir):
    return sorted(
        name
        for name in os.listdir(outdir)
        if name.endswith(".nscf1") or name == "monitors.csv"
    )


def cmd_simulate(args):
    entries = parse_config(args.config)
    config = _run_config(args.config, entries, args)
    if not config.output_dir:
        raise ConfigError(
            f"{args.config}: no output directory (set output_dir or pass --out)"
        )
    if config.split_radius > 0:
        result = solver.lambda_r_split_run(config, config.split_radius)
    else:
        result = solver.simulate(config)
    if result.aborted:
        print(f"run aborted at t = {result.final_state.t:.6g}: non-finite field")
        raise NumericalFailure
    _echo_config_and_manifest(
        config.output_dir, args.config, _simulation_outputs(config.output_dir)
    )
    print(
        f"simulate: {len(result.states)} checkpoints, "
        f"{len(result.monitors)} monitor rows, max |||u||| = {result.max_x_norm:.6g}"
    )
    return 0


_STRICHARTZ_SCHEMA = {
    "nx": "int", "ny": "int", "nz": "int", "box_l": "float",
    "radius": "float", "sigma": "float", "omegas": "floatlist",
    "t_max": "float", "dt_sample": "float", "output_dir": "str",
}


def cmd_strichartz(args):
    entries = parse_config(args.config)
    values = _apply_schema(args.config, entries, _STRICHARTZ_SCHEMA)
    outdir = _require_outdir(values, args, args.config)
    omegas = sorted(values.get("omegas", [100.0, 1000.0, 10000.0]))
    if not omegas:
        raise ConfigError(f"{args.config}: omegas must be a nonempty list")
    grid = Grid(values.get("nx", 64), values.get("ny", 64),
                values.get("nz", 4), values.get("box_l", 40.0))
    data = rossby.localized_wave_data(
        grid, values.get("radius", 4.0), values.get("sigma", 0.3)
    )
    rows, slope = rossby.strichartz_experiment(
        data, omegas, values.get("t_max", 3.0), values.get("dt_sample", 1e-3)
    )
    fields = ["omega", "integral_LinfL1", "slope_fit_local", "tail_bound"]
    ckpt.write_monitors_csv(os.path.join(outdir, "strichartz.csv"), rows, fields)
    _echo_config_and_manifest(outdir, args.config, ["strichartz.csv"])
    if np.isnan(slope):
        print("strichartz: single rate, overall slope undefined")
    else:
        print(f"strichartz: overall log-log slope {slope:.4f}")
    for row in rows:
        print(f"  omega = {row['omega']:10.4g}  integral = {row['integral_LinfL1']:.6e}")
    return 0


_KERNEL_SCHEMA = {
    "radius": "float", "a_values": "floatlist", "b_values": "floatlist",
    "eval_nx": "int", "eval_box": "float", "output_dir": "str",
}


def cmd_kernel_bound(args):
    entries = parse_config(args.config)
    values = _apply_schema(args.config, entries, _KERNEL_SCHEMA)
    outdir = _require_outdir(values, args, args.config)
    radius = values.get("radius", 4.0)
    if radius <= 0:
        raise ConfigError(f"{args.config}: radius must be positive, got {radius}")
    a_list = values.get("a_values", [0.0, 0.01, 0.05])
    b_list = values.get("b_values", [1.0, 10.0, 100.0])
    eval_grid = None
    if "eval_nx" in values:
        nx = values["eval_nx"]
        box = values.get("eval_box", 2.0 * np.pi * nx / (8.0 * radius))
        eval_grid = Grid(nx, nx, 4, box)
    rows = rossby.lemma_b2_check(radius, a_list, b_list, eval_grid)
    fields = ["A", "B", "R", "sup_K", "ratio"]
    ckpt.write_monitors_csv(os.path.join(outdir, "kernel_bound.csv"), rows, fields)
    _echo_config_and_manifest(outdir, args.config, ["kernel_bound.csv"])
    ratios = [row["ratio"] for row in rows]
    print(
        f"kernel-bound: {len(rows)} cells, ratio range "
        f"[{min(ratios):.4f}, {max(ratios):.4f}], spread x{max(ratios)/min(ratios):.3f}"
    )
    return 0


def cmd_oseen_convergence(args):
    entries = parse_config(args.config)
    config = _run_config(args.config, entries, args)
    if not config.output_dir:
        raise ConfigError(
            f"{args.config}: no output directory (set output_dir or pass --out)"
        )
    result = solver.simulate(config)
    if result.aborted:
        print(f"run aborted at t = {result.final_state.t:.6g}: non-finite field")
        raise NumericalFailure
    if len(result.states) < 2:
        raise ConfigError(
            f"{args.config}: too few checkpoints for a convergence report "
            "(decrease checkpoint_every)"
        )
    rows, fits = selfsim.convergence_report(result)
    fields = [
        "t", "tau", "oseen_l1_distance", "h1_tilde", "h1_u3bar",
        "w3bar_l2sq_scaled", "w3bar_h1sq_scaled",
    ]
    ckpt.write_monitors_csv(os.path.join(outdir := config.output_dir, "convergence.csv"), rows, fields)
    summary = []
    for fit in fits:
        if np.isnan(fit.rate):
            summary.append(f"{fit.quantity}: degenerate series, no fit")
        else:
            summary.append(
                f"{fit.quantity}: {fit.model} rate {fit.rate:.4f} "
                f"(residual {fit.residual:.2e}, window {fit.window})"
            )
    with open(os.path.join(outdir, "rates.txt.tmp"), "w") as handle:
        handle.write("\n".join(summary) + "\n")
    os.replace(os.path.join(outdir, "rates.txt.tmp"), os.path.join(outdir, "rates.txt"))
    _echo_config_and_manifest(
        outdir, args.config, _simulation_outputs(outdir) + ["convergence.csv", "rates.txt"]
    )
    d0, dT = rows[0]["oseen_l1_distance"], rows[-1]["oseen_l1_distance"]
    print(f"oseen-convergence: L1 distance {d0:.6g} -> {dT:.6g} over tau <= {rows[-1]['tau']:.3f}")
    for line in summary:
        print("  " + line)
    return 0


def cmd_energy_check(args):
    entries = parse_config(args.config)
    config = _run_config(args.config, entries, args)
    result = solver.simulate(config)
    if result.aborted:
        print(f"run aborted at t = {result.final_state.t:.6g}: non-finite field")
        raise NumericalFailure
    if config.output_dir:
        _echo_config_and_manifest(
            config.output_dir, args.config, _simulation_outputs(config.output_dir)
        )
    worst = {}
    for row in result.monitors:
        for sys_id in range(1, 6):
            res = row.get(f"sys{sys_id}_residual")
            scale = row.get(f"sys{sys_id}_scale")
            if res is None or scale is None or scale == 0:
                continue
            rel = res / scale
            worst[sys_id] = min(worst.get(sys_id, np.inf), rel)
    ok = True
    for sys_id in sorted(worst):
        status = "ok" if worst[sys_id] >= -1e-4 else "VIOLATED"
        if status == "VIOLATED":
            ok = False
        print(f"energy-check: system {sys_id} min relative residual {worst[sys_id]:+.3e} [{status}]")
    if not worst:
        print("energy-check: no residual samples (run too short)")
        ok = False
    return 0 if ok else 1


_ROSSBY_SCHEMA = {
    "nx": "int", "ny": "int", "nz": "int", "box_l": "float",
    "omega": "float", "t_max": "float", "dt_sample": "float",
    "seed": "int", "output_dir": "str",
}


def cmd_rossby_decay(args):
    entries = parse_config(args.config)
    values = _apply_schema(args.config, entries, _ROSSBY_SCHEMA)
    outdir = _require_outdir(values, args, args.config)
    seed = args.seed if args.seed is not None else values.get("seed", 0)
    grid = Grid(values.get("nx", 16), values.get("ny", 16),
                values.get("nz", 8), values.get("box_l", 5.0))
    omega = values.get("omega", 100.0)
    t_max = values.get("t_max", 0.2)
    dt_sample = values.get("dt_sample", 1e-2)
    rng = np.random.default_rng(seed)
    # slowest vertical oscillation: horizontal data on (k = 0, n = +/-1)
    coeffs = np.zeros((3, grid.nx, grid.ny, grid.nz), dtype=complex)
    amp = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    coeffs[0, 0, 0, 1], coeffs[1, 0, 0, 1] = amp
    coeffs[0, 0, 0, -1], coeffs[1, 0, 0, -1] = np.conj(amp)
    u0 = SpectralVectorField(grid, coeffs)
    norm0 = norm_l2(grid, u0.coeffs)
    times = np.arange(0.0, t_max + 0.5 * dt_sample, dt_sample)
    rows = []
    products = []
    for t in times:
        ut = rossby.rossby_propagate(u0, float(t), omega)
        norm = norm_l2(grid, ut.coeffs)
        product = norm * np.exp(4.0 * np.pi**2 * t)
        products.append(product)
        rows.append({"t": float(t), "l2_norm": norm, "compensated": product})
    deviation = float(np.max(np.abs(np.array(products) / products[0] - 1.0)))
    ckpt.write_monitors_csv(
        os.path.join(outdir, "rossby_decay.csv"), rows, ["t", "l2_norm", "compensated"]
    )
    _echo_config_and_manifest(outdir, args.config, ["rossby_decay.csv"])
    status = "ok" if deviation < 1e-10 else "VIOLATED"
    print(
        f"rossby-decay: |u0| = {norm0:.6g}, compensated norm drift {deviation:.3e} [{status}]"
    )
    return 0 if status == "ok" else 1


_COMMANDS = {
    "simulate": cmd_simulate,
    "strichartz": cmd_strichartz,
    "kernel-bound": cmd_kernel_bound,
    "oseen-convergence": cmd_oseen_convergence,
    "energy-check": cmd_energy_check,
    "rossby-decay": cmd_rossby_decay,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rotlayer",
        description="Rotating-layer flow simulations and verification experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="key = value config file")
        cmd.add_argument("--out", default="", help="output directory override")
        cmd.add_argument("--threads", type=int, default=0,
                         help="FFT worker threads (results are thread-count independent)")
        cmd.add_argument("--seed", type=int, default=None, help="seed override")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    command = _COMMANDS[args.command]
    try:
        if args.threads and args.threads > 0:
            with scipy.fft.set_workers(args.threads):
                return command(args)
        return command(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure:
        return 1


if __name__ == "__main__":
    sys.exit(main())
