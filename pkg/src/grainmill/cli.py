"""Command line entry point: ``grainmill {chipmodel,grainmap,simulate,analyze}``."""

import argparse
import os
import sys
from dataclasses import replace

from . import io
from .analysis import feature_spacing, roughness
from .config import REFERENCE_NAME, load_config
from .material import build_grain_map, isotropic_intercepts, calibration_step
from .kinematics import grid_axis
from .scenario import (
    EXIT_OK, default_threshold, exit_code_for, run_scenario, table_rows, _write,
)
from .surface import extract_profile


def _chipmodel(args):
    cfg = load_config(args.config)
    rows = table_rows(cfg, args.h)
    print("phase,beta_rad,h_m_um,sigma_pa,h_r_um,mode")
    for name, st in rows:
        print(f"{name},{st.beta:.6f},{st.h_m:.4f},{st.sigma:.6g},{st.h_r:.4f},{st.mode.value}")
    return EXIT_OK


def _grainmap(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = args.out or cfg.output_dir
    gmap = build_grain_map(cfg.material, cfg.width, cfg.height, cfg.seed)
    xs = grid_axis(cfg.width, cfg.dx)
    ys = grid_axis(cfg.height, cfg.dy)
    img = io.phase_pgm(gmap.phase_raster(xs, ys), gmap.n_phases)
    with io.atomic_output(out) as stage:
        _write(stage, "grainmap.txt", gmap.to_text())
        _write(stage, "phases.pgm", img)
    for p, m in zip(cfg.material.phases, isotropic_intercepts(gmap, 100, calibration_step(cfg.material))):
        print(f"{p.name}: {gmap.phase_names.index(p.name)} target {p.target_intercept:.4f} um, "
              f"measured {m:.4f} um" if m is not None else f"{p.name}: absent")
    return EXIT_OK


def _simulate(args):
    cfg = load_config(args.config)
    code, files = run_scenario(cfg, args.out, seed=args.seed, dump_passes=args.dump_passes)
    for f in files:
        print(f)
    return code


def _analyze(args):
    with open(args.heightmap, encoding="ascii") as fh:
        hm = io.heightmap_from_csv(fh.read())
    cutoff, threshold = args.cutoff, args.threshold
    if args.config:
        cfg = load_config(args.config)
        cutoff = cutoff if cutoff is not None else cfg.cutoff
        if threshold is None:
            threshold = cfg.threshold if cfg.threshold is not None else default_threshold(cfg)
    cutoff = 5.0 if cutoff is None else cutoff
    y = hm.height / 2 if args.y is None else args.y
    profile = extract_profile(hm, y)
    report = roughness(profile, cutoff, threshold)
    text = report.to_text()
    if threshold:
        sp = feature_spacing(profile, threshold)
        text += io.key_value_text([("concave_count", sp.n_features), ("concave_mean_spacing", sp.mean)])
    if args.out:
        with io.atomic_output(args.out) as stage:
            _write(stage, "analysis.txt", text)
            _write(stage, "profile.csv", io.profile_to_csv(profile))
    sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="grainmill", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p, required=True):
        p.add_argument("--config", required=required,
                       help=f"scenario file, or '{REFERENCE_NAME}' for the bundled scenario")

    p = sub.add_parser("chipmodel", help="per-phase chip formation table")
    add_config(p)
    p.add_argument("--h", type=float, default=None, help="uncut thickness for the mode column (um)")
    p.set_defaults(func=_chipmodel)

    p = sub.add_parser("grainmap", help="build the grain map and its phase image")
    add_config(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_grainmap)

    p = sub.add_parser("simulate", help="full scenario run")
    add_config(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--dump-passes", action="store_true", help="also write passes.csv")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("analyze", help="re-run profile analysis on a heightmap.csv")
    p.add_argument("heightmap")
    add_config(p, required=False)
    p.add_argument("--y", type=float, help="profile line (um); default mid-height")
    p.add_argument("--cutoff", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_analyze)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = exit_code_for(exc)
        if code == 1 and not isinstance(exc, ValueError):
            raise
        print(f"grainmill {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
