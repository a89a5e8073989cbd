"""Command-line front end.

Subcommands: eig, model, ssm, curvature, select, frc, asweep,
reproduce.  Values may come from flags, from a flat key-value config
file (``--config``), or from built-in defaults, in that precedence
order.  The output directory defaults to the SSMSELECT_OUTDIR
environment variable, then the working directory.

Every output file starts with a header comment carrying the resolved
configuration, so a run can be reproduced from its own artifacts.
Failures exit nonzero with a single-line JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .curvature import curvature_report
from .modal import MasterSplit, compute_modes
from .models import BUILTIN_MODELS, builtin_model
from .response import (
    amplitude_sweep,
    frequency_sweep,
    lift,
    linear_response,
    reduce_model,
    relative_error,
    solve_periodic_hb,
)
from .selection import SelectionConfig, run_selection
from .ssm import compute_ssm_coefficients
from .system import read_model_file, write_model_file

__all__ = ["main", "build_parser"]

REPRODUCE_CASES = (
    "three-mass-frc",
    "beam-table1",
    "beam-asweep",
    "beam-appendixB",
    "curved-frc",
)


class ConfigError(ValueError):
    pass


def _num(v):
    return repr(float(v))


def _parse_index_list(text):
    """Mode lists like '1,2,3' or ranges '1:5' or a mix '1:5,21,22'."""
    out = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            lo, hi = token.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(token))
    if not out:
        raise ConfigError(f"empty mode list: {text!r}")
    return tuple(sorted(set(out)))


def _load_config_file(path):
    values = {}
    try:
        with open(path) as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, val = line.partition(" ")
                if not val:
                    raise ConfigError(f"{path}: malformed line {line!r}")
                values[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _resolve(args, file_keys):
    """Apply config-file values for flags the user left unset."""
    if getattr(args, "config", None):
        fileconf = _load_config_file(args.config)
        for key, caster in file_keys.items():
            if getattr(args, key, None) is None and key in fileconf:
                setattr(args, key, caster(fileconf[key]))
    return args


def _get_model(args):
    if getattr(args, "model_file", None):
        path = args.model_file
        if not os.path.exists(path):
            raise ConfigError(f"model file not found: {path}")
        system, forcing = read_model_file(path)
        if forcing is None and _needs_forcing(args):
            raise ConfigError(f"model file {path} has no FORCE section")
        return system, forcing
    name = getattr(args, "model", None)
    if name is None:
        raise ConfigError("no model given; use --model or --model-file")
    if name not in BUILTIN_MODELS:
        raise ConfigError(
            f"unknown model {name!r}; built-ins: {', '.join(sorted(BUILTIN_MODELS))}"
        )
    return builtin_model(name)


def _needs_forcing(args):
    return args.command in ("select", "frc", "asweep")


def _outdir(args):
    out = getattr(args, "outdir", None) or os.environ.get("SSMSELECT_OUTDIR") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _header(args, **extra):
    skip = {"command", "func", "config"}
    resolved = {
        key: val for key, val in vars(args).items()
        if key not in skip and val is not None
    }
    resolved.update(extra)
    parts = [f"command={args.command}"]
    parts += [f"{key}={resolved[key]}" for key in sorted(resolved)]
    return "# ssmselect " + " ".join(parts)


def _write_lines(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(path)


def _emit(args, filename, lines):
    if getattr(args, "stdout", False):
        print("\n".join(lines))
        return None
    path = os.path.join(_outdir(args), filename)
    _write_lines(path, lines)
    return path


# --- subcommand implementations ----------------------------------------


def _cmd_eig(args):
    system, _ = _get_model(args)
    modal = compute_modes(system)
    lines = [_header(args), "mode,omega,zeta"]
    for i in range(modal.n):
        lines.append(f"{i + 1},{_num(modal.omega[i])},{_num(modal.zeta[i])}")
    _emit(args, "eig.csv", lines)
    return 0


def _cmd_model(args):
    if not getattr(args, "model", None):
        raise ConfigError("the model command exports built-ins; use --model NAME")
    system, forcing = _get_model(args)
    out = args.out or os.path.join(_outdir(args), f"{args.model}.model")
    write_model_file(out, system, forcing)
    print(out)
    return 0


def _cmd_ssm(args):
    system, _ = _get_model(args)
    modal = compute_modes(system)
    split = MasterSplit(modal.n, _parse_index_list(args.masters))
    slaves = _parse_index_list(args.slaves) if args.slaves else None
    coeffs = compute_ssm_coefficients(modal, split, slaves=slaves)
    lines = [_header(args)]
    for k in sorted(coeffs.W):
        lines.append(f"W {k}")
        for row in coeffs.W[k]:
            lines.append(",".join(_num(v) for v in row))
    _emit(args, "ssm_coefficients.csv", lines)
    return 0


def _cmd_curvature(args):
    system, _ = _get_model(args)
    modal = compute_modes(system)
    split = MasterSplit(modal.n, _parse_index_list(args.masters))
    coeffs = compute_ssm_coefficients(modal, split)
    report = curvature_report(coeffs)
    ranking = report.ranking()
    lines = [_header(args), "mode,curvature,abs_curvature,rank"]
    for k in sorted(report.directional):
        c = report.directional[k]
        lines.append(f"{k},{_num(c)},{_num(abs(c))},{ranking.index(k) + 1}")
    lines.append(f"# total={_num(report.total)}")
    _emit(args, "curvature.csv", lines)
    return 0


def _cmd_select(args):
    system, forcing = _get_model(args)
    if args.omega is not None:
        forcing = forcing.with_omega(args.omega)
    modal = compute_modes(system)
    cfg = SelectionConfig(p=args.p, N=args.N, repeat=bool(args.repeat))
    initial = _parse_index_list(args.i0) if args.i0 else None
    report = run_selection(modal, forcing, cfg, initial=initial)
    lines = [_header(args)]
    lines.append(f"initial_set {','.join(map(str, report.I0))}")
    for idx, rnd in enumerate(report.rounds, 1):
        lines.append(f"round {idx} masters {','.join(map(str, rnd.I))}")
        lines.append(f"round {idx} recommended {','.join(map(str, rnd.recommended))}")
        lines.append(f"round {idx} accepted {','.join(map(str, rnd.accepted))}")
    lines.append(f"final_set {','.join(map(str, report.final))}")
    lines.append(f"termination {report.termination}")
    _emit(args, "selection.txt", lines)
    # curvature table of the first round for plotting
    if report.rounds and not getattr(args, "stdout", False):
        rnd = report.rounds[0]
        ranking = rnd.curvatures.ranking()
        table = [_header(args), "mode,curvature,abs_curvature,rank"]
        for k in sorted(rnd.curvatures.directional):
            c = rnd.curvatures.directional[k]
            table.append(f"{k},{_num(c)},{_num(abs(c))},{ranking.index(k) + 1}")
        _emit(args, "selection_curvature.csv", table)
    return 0


def _curve_lines(args, curve, dofs):
    lines = [_header(args, truncated=curve.truncated)]
    for msg in curve.messages:
        lines.append(f"# {msg}")
    cols = "param,amp_max,mass_norm,residual,iterations"
    if dofs:
        cols += "," + ",".join(f"dof{d}" for d in dofs)
    lines.append(cols)
    for s in curve.samples:
        row = [_num(s.param), _num(s.amp_max), _num(s.mass_norm),
               _num(s.solution.residual), str(s.solution.iterations)]
        for d in dofs:
            row.append(_num(s.solution.dof_amplitude(d)))
        lines.append(",".join(row))
    for j in curve.jumps:
        lines.append(f"# jump_at_index={j}")
    return lines


def _svg_curve(path, xs, ys, xlabel, ylabel):
    """Minimal polyline plot, no plotting dependency."""
    width, height, pad = 640, 480, 50
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) == 0:
        body = ""
    else:
        x0, x1 = xs.min(), xs.max()
        y0, y1 = ys.min(), ys.max()
        sx = (width - 2 * pad) / max(x1 - x0, 1e-300)
        sy = (height - 2 * pad) / max(y1 - y0, 1e-300)
        pts = " ".join(
            f"{pad + (x - x0) * sx:.2f},{height - pad - (y - y0) * sy:.2f}"
            for x, y in zip(xs, ys)
        )
        body = (
            f'<polyline fill="none" stroke="black" points="{pts}"/>'
            f'<text x="{width // 2}" y="{height - 10}">{xlabel}</text>'
            f'<text x="12" y="{height // 2}" transform="rotate(-90 12 {height // 2})">{ylabel}</text>'
        )
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<rect width="100%" height="100%" fill="white"/>'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>'
        f"{body}</svg>"
    )
    with open(path, "w") as fh:
        fh.write(svg)


def _rom_or_full(args, system, forcing):
    if getattr(args, "masters", None):
        modal = compute_modes(system)
        split = MasterSplit(modal.n, _parse_index_list(args.masters))
        return reduce_model(modal, split, forcing)
    return system


def _cmd_frc(args):
    system, forcing = _get_model(args)
    if args.scale is not None:
        forcing = forcing.with_scale(args.scale)
    model = _rom_or_full(args, system, forcing)
    curve = frequency_sweep(
        model, forcing, (args.omega_min, args.omega_max),
        NH=args.NH, n_steps=args.steps,
    )
    dofs = _parse_index_list(args.dofs) if args.dofs else ()
    lines = _curve_lines(args, curve, dofs)
    path = _emit(args, "frc.csv", lines)
    if args.svg and path:
        _svg_curve(path.replace(".csv", ".svg"), curve.params, curve.amplitudes,
                   "forcing frequency [rad/s]", "max response norm")
    return 0


def _cmd_asweep(args):
    system, forcing = _get_model(args)
    omega = args.omega if args.omega is not None else forcing.omega
    model = _rom_or_full(args, system, forcing)
    curve = amplitude_sweep(
        model, forcing, omega, (args.f_min, args.f_max),
        NH=args.NH, n_steps=args.steps,
    )
    dofs = _parse_index_list(args.dofs) if args.dofs else ()
    lines = _curve_lines(args, curve, dofs)
    path = _emit(args, "asweep.csv", lines)
    if args.svg and path:
        _svg_curve(path.replace(".csv", ".svg"), curve.params, curve.amplitudes,
                   "forcing amplitude [N]", "max response norm")
    return 0


# --- one-shot reproduction bundles --------------------------------------


def _rom_error_at(modal, forcing, masters, full_sol, NH, f_target):
    """ROM steady state at the target amplitude and its mass-norm error."""
    split = MasterSplit(modal.n, masters)
    rom = reduce_model(modal, split, forcing)
    curve = amplitude_sweep(rom, forcing, forcing.omega,
                            (f_target / 10.0, f_target), NH=NH, n_steps=12)
    if curve.truncated or not curve.samples:
        return None, curve
    last = curve.samples[-1]
    if abs(last.param - f_target) > 1e-9 * f_target:
        return None, curve
    lifted = lift(last.solution, rom)
    return relative_error(full_sol, lifted, modal.system.M), curve


def _reproduce_beam_errors(args, outdir, f_target, tag):
    system, forcing = builtin_model("straight-beam")
    forcing = forcing.with_scale(f_target)
    modal = compute_modes(system)
    NH = args.NH
    full_curve = amplitude_sweep(system, forcing, forcing.omega,
                                 (f_target / 10.0, f_target), NH=NH, n_steps=12)
    if full_curve.truncated:
        raise RuntimeError("full-model continuation failed; cannot build error table")
    full_sol = full_curve.samples[-1].solution
    axial = _parse_index_list(args.axial_pair) if args.axial_pair else (21, 22)
    sets = {
        "I0": tuple(range(1, 6)),
        "I1": tuple(range(1, 11)),
        "I2": tuple(range(1, 6)) + tuple(axial),
    }
    lines = [_header(args, case=tag, F=f_target, omega=forcing.omega),
             "mode_set,modes,relative_error,status"]
    for name, masters in sets.items():
        err, curve = _rom_error_at(modal, forcing, masters, full_sol, NH, f_target)
        if err is None:
            status = "diverged" if curve.truncated else "incomplete"
            lines.append(f"{name},{';'.join(map(str, masters))},nan,{status}")
        else:
            jumps = " jumps" if curve.jumps else ""
            lines.append(f"{name},{';'.join(map(str, masters))},{_num(err)},converged{jumps}")
    _write_lines(os.path.join(outdir, f"{tag}.csv"), lines)


def _reproduce(args):
    case = args.case
    outdir = _outdir(args)
    NH = args.NH
    if case == "three-mass-frc":
        system, forcing = builtin_model("three-mass")
        modal = compute_modes(system)
        rng = (0.7 * 2.0, 1.3 * 2.0)
        runs = {
            "full": system,
            "rom_I1": reduce_model(modal, MasterSplit(3, (1, 2)), forcing),
            "rom_I2": reduce_model(modal, MasterSplit(3, (1, 3)), forcing),
        }
        for name, model in runs.items():
            curve = frequency_sweep(model, forcing, rng, NH=NH, n_steps=args.steps)
            _write_lines(os.path.join(outdir, f"three_mass_frc_{name}.csv"),
                         _curve_lines(args, curve, ()))
        lines = [_header(args, case=case), "param,amp_max"]
        for om in np.linspace(*rng, args.steps):
            sol = linear_response(system, forcing, om)
            lines.append(f"{_num(om)},{_num(sol.amplitude_max())}")
        _write_lines(os.path.join(outdir, "three_mass_frc_linear.csv"), lines)
    elif case == "beam-table1":
        _reproduce_beam_errors(args, outdir, 2.3, "beam_table1")
    elif case == "beam-appendixB":
        _reproduce_beam_errors(args, outdir, 2.44, "beam_appendixB")
    elif case == "beam-asweep":
        system, forcing = builtin_model("straight-beam")
        modal = compute_modes(system)
        axial = _parse_index_list(args.axial_pair) if args.axial_pair else (21, 22)
        runs = {
            "full": system,
            "rom_I1": reduce_model(modal, MasterSplit(modal.n, tuple(range(1, 11))), forcing),
            "rom_I2": reduce_model(
                modal, MasterSplit(modal.n, tuple(range(1, 6)) + tuple(axial)), forcing
            ),
        }
        for name, model in runs.items():
            curve = amplitude_sweep(model, forcing, forcing.omega, (0.05, 2.3),
                                    NH=NH, n_steps=args.steps)
            _write_lines(os.path.join(outdir, f"beam_asweep_{name}.csv"),
                         _curve_lines(args, curve, ()))
    elif case == "curved-frc":
        system, forcing = builtin_model("curved-beam")
        modal = compute_modes(system)
        cfg = SelectionConfig(p=0.05, N=10, repeat=False)
        report = run_selection(modal, forcing, cfg, initial=tuple(range(1, 6)))
        om1 = modal.omega[0]
        rng = (0.85 * om1, 1.08 * om1)
        runs = {
            "full": system,
            "rom_I1": reduce_model(modal, MasterSplit(modal.n, tuple(range(1, 11))), forcing),
            "rom_I2": reduce_model(modal, MasterSplit(modal.n, report.final), forcing),
        }
        for name, model in runs.items():
            curve = frequency_sweep(model, forcing, rng, NH=NH, n_steps=args.steps)
            _write_lines(os.path.join(outdir, f"curved_frc_{name}.csv"),
                         _curve_lines(args, curve, ()))
        lines = [_header(args, case=case, selected=",".join(map(str, report.final))),
                 "param,amp_max"]
        for om in np.linspace(*rng, args.steps):
            sol = linear_response(system, forcing, om)
            lines.append(f"{_num(om)},{_num(sol.amplitude_max())}")
        _write_lines(os.path.join(outdir, "curved_frc_linear.csv"), lines)
    else:
        raise ConfigError(f"unknown case {case!r}; choices: {', '.join(REPRODUCE_CASES)}")
    return 0


# --- parser --------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ssmselect",
        description="curvature-based master-mode selection and forced-response toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, forcing=False):
        p.add_argument("--model", help="built-in model name")
        p.add_argument("--model-file", help="path to a model file")
        p.add_argument("--config", help="flat key-value config file")
        p.add_argument("--outdir", help="output directory (or $SSMSELECT_OUTDIR)")
        p.add_argument("--stdout", action="store_true", help="print instead of writing files")

    p = sub.add_parser("eig", help="natural frequencies and damping ratios")
    add_common(p)
    p.set_defaults(func=_cmd_eig)

    p = sub.add_parser("model", help="write a built-in model to a model file")
    add_common(p)
    p.add_argument("--out", help="target path")
    p.set_defaults(func=_cmd_model)

    p = sub.add_parser("ssm", help="slave-graph coefficient matrices")
    add_common(p)
    p.add_argument("--masters", required=True, help="master modes, e.g. 1,2 or 1:5")
    p.add_argument("--slaves", help="restrict to these slave modes")
    p.set_defaults(func=_cmd_ssm)

    p = sub.add_parser("curvature", help="directional curvature table")
    add_common(p)
    p.add_argument("--masters", required=True)
    p.set_defaults(func=_cmd_curvature)

    p = sub.add_parser("select", help="automated master-mode selection")
    add_common(p)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--repeat", action="store_const", const=1, default=None)
    p.add_argument("--i0", help="override the initial master set")
    p.add_argument("--omega", type=float, default=None, help="forcing frequency override")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("frc", help="frequency response curve")
    add_common(p)
    p.add_argument("--omega-min", type=float, required=True)
    p.add_argument("--omega-max", type=float, required=True)
    p.add_argument("--masters", help="sweep a reduced model on these masters")
    p.add_argument("--scale", type=float, default=None, help="force amplitude override")
    p.add_argument("--NH", type=int, default=7)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--dofs", help="also record these DOF amplitudes")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=_cmd_frc)

    p = sub.add_parser("asweep", help="amplitude sweep at fixed frequency")
    add_common(p)
    p.add_argument("--f-min", type=float, required=True)
    p.add_argument("--f-max", type=float, required=True)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--masters", help="sweep a reduced model on these masters")
    p.add_argument("--NH", type=int, default=7)
    p.add_argument("--steps", type=int, default=51)
    p.add_argument("--dofs", help="also record these DOF amplitudes")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=_cmd_asweep)

    p = sub.add_parser("reproduce", help="one-shot figure/table data bundles")
    p.add_argument("--case", required=True, choices=REPRODUCE_CASES)
    p.add_argument("--outdir", help="output directory")
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--NH", type=int, default=7)
    p.add_argument("--steps", type=int, default=81)
    p.add_argument("--axial-pair", help="override the straight-beam axial mode pair")
    p.set_defaults(func=_reproduce, stdout=False)

    return parser


_SELECT_FILE_KEYS = {
    "p": float,
    "N": int,
    "repeat": int,
    "i0": str,
    "model": str,
    "omega": float,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "select":
        _resolve(args, _SELECT_FILE_KEYS)
        if args.p is None:
            args.p = 0.05
        if args.N is None:
            args.N = 10
        if args.repeat is None:
            args.repeat = 0
    elif getattr(args, "config", None):
        _resolve(args, {"model": str, "outdir": str})
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "kind": "config"}), file=sys.stderr)
        return 2
    except (ValueError, KeyError, RuntimeError, OSError) as exc:
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
