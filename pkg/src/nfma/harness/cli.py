"""Command line entry point.

Subcommands::

    nfma run <config>                          Monte Carlo comparison of all schemes
    nfma bound <config>                        closed-form max-min bound per trial
    nfma beampattern <geometry> <grid spec>    focused-beam gain map as CSV
    nfma construct-apv <scene>                 explicit optimal placement for two users
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from pathlib import Path

import numpy as np

from ..arrays import RegionSpec, format_geometry, load_geometry
from ..bounds import max_min_bound
from ..channel import UserChannel
from ..closedform import (check_analog_condition, check_digital_condition,
                          construct_analog_apv, construct_digital_apv)
from ..exceptions import ConfigError, NFMAError
from .beam import beam_pattern, focused_weights, parse_grid_spec, write_beam_csv
from .config import _error_line, load_config
from .experiment import run_experiment, trial_rng
from .scenario import SPEED_OF_LIGHT, sample_users

__all__ = ["main", "build_parser", "load_scene"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (default: stdout only)")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--seed", type=int, help="override the configured seed")
    mc.add_argument("--trials", type=int, metavar="Q", help="override the trial count")

    parser = argparse.ArgumentParser(prog="nfma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common, mc], help="run a Monte Carlo experiment")
    p.add_argument("config")
    p = sub.add_parser("bound", parents=[common, mc], help="evaluate the max-min bound")
    p.add_argument("config")
    p = sub.add_parser("beampattern", parents=[common], help="focused-beam gain map")
    p.add_argument("geometry")
    p.add_argument("grid", help="grid spec text or a file containing it")
    p = sub.add_parser("construct-apv", parents=[common],
                       help="closed-form placement for two single-path users")
    p.add_argument("scene")
    return parser


def _with_overrides(cfg, args):
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        cfg.trials = args.trials
    return cfg


def _cmd_run(args):
    cfg = _with_overrides(load_config(args.config), args)
    res = run_experiment(cfg, args.out, quiet=args.quiet)
    print("architecture,scheme,trials,mean_db")
    for s in res.summary:
        print(f"{s.architecture},{s.scheme},{s.trials},{s.mean_db:.4f}")
    if not args.quiet:
        print(res.report.format(), file=sys.stderr)


def _cmd_bound(args):
    cfg = _with_overrides(load_config(args.config), args)
    sc = cfg.scenario
    rows = []
    for t in range(cfg.trials):
        users = sample_users(sc, trial_rng(cfg.seed, t))
        b, p = max_min_bound(users, sc.M, sc.N, sc.power, sc.noise)
        rows.append([t, repr(b), repr(float(10 * np.log10(b)))])
    mean = float(np.mean([float(r[1]) for r in rows]))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / "bound.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "bound_linear", "bound_db"])
            w.writerows(rows)
    print(f"mean bound over {cfg.trials} trials: {10 * np.log10(mean):.4f} dB")


def _read_grid(arg: str) -> str:
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read()
    return arg


def _cmd_beampattern(args):
    geom = load_geometry(args.geometry)
    spec = parse_grid_spec(_read_grid(args.grid))
    if spec.focus is None:
        raise ConfigError("grid spec needs focus=x,y,z")
    lam = spec.wavelength or SPEED_OF_LIGHT / 30e9
    grid = beam_pattern(geom, focused_weights(geom, spec.focus, lam), spec, lam)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / "beam_pattern.csv", "w", newline="", encoding="utf-8") as fh:
            write_beam_csv(grid, fh)
        if not args.quiet:
            print(f"peak gain {np.nanmax(grid.gains_db):.3f} dB", file=sys.stderr)
    else:
        write_beam_csv(grid, sys.stdout)


def load_scene(path):
    """Read a ``[scene]`` INI section describing a two-user placement problem.

    Keys: ``architecture`` (digital|analog), ``M``, ``wavelength`` (m),
    ``side_lambda`` or ``side_m``, optional ``d_min`` (m, default half a
    wavelength) and ``user1``/``user2`` as ``x, y, z``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0], line=_error_line(e)) from None
    if not cp.has_section("scene"):
        raise ConfigError("missing [scene] section")
    s = cp["scene"]
    try:
        lam = float(s.get("wavelength", SPEED_OF_LIGHT / 30e9))
        side = float(s["side_m"]) if "side_m" in s else float(s.get("side_lambda", 100)) * lam
        region = RegionSpec(side, float(s.get("d_min", lam / 2)))
        users = []
        for key in ("user1", "user2"):
            xyz = [float(v) for v in s[key].split(",")]
            if len(xyz) != 3:
                raise ValueError(f"{key} needs three coordinates")
            users.append(UserChannel.single_path(xyz, 1.0))
        arch = s.get("architecture", "digital")
        if arch not in ("digital", "analog"):
            raise ValueError(f"unknown architecture {arch!r}")
        return arch, int(s.get("M", 8)), region, lam, users
    except KeyError as e:
        raise ConfigError("missing key", section="scene", key=e.args[0]) from None
    except ValueError as e:
        raise ConfigError(str(e), section="scene") from None


def _cmd_construct(args):
    arch, M, region, lam, users = load_scene(args.scene)
    if arch == "digital":
        geom = construct_digital_apv(users, M, region, lam)
        report = check_digital_condition(geom, users, lam)
    else:
        geom = construct_analog_apv(users, M, region, lam)
        report = check_analog_condition(geom, users, lam)
    text = format_geometry(geom)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "geometry.txt").write_text(text, encoding="utf-8")
        (out / "certification.json").write_text(report.to_json() + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(report.to_json(), file=sys.stderr if not args.out else sys.stdout)


_COMMANDS = {"run": _cmd_run, "bound": _cmd_bound, "beampattern": _cmd_beampattern,
             "construct-apv": _cmd_construct}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (NFMAError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
