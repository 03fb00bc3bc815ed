"""End-to-end scenario runs: grain map, surface, profile analysis, files."""

import hashlib
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import io
from .analysis import feature_spacing, roughness, scale_decomposition, waviness_minima
from .chipmodel import chip_state
from .config import serialize_config
from .errors import CalibrationError, ConfigError, ModelViolationError
from .kinematics import feed_per_tooth, generate_tooth_passes, grid_axis, passes_to_csv
from .material import build_grain_map, isotropic_intercepts, calibration_step
from .surface import GridSpec, chip_statistics, extract_profile, phase_tables, synthesize_surface

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_IO = 4


@dataclass
class ScenarioResult:
    grain_map: object
    heightmap: object
    segments: object
    profile: object
    report: object
    spacing: object
    summary: list = field(default_factory=list)


def default_threshold(cfg):
    """Half the spread of the per-phase recovery heights (0 for a single phase)."""
    _, hr, _ = phase_tables(cfg.material, cfg.tool.edge_radius_r)
    hr = hr[np.isfinite(hr)]
    return float((hr.max() - hr.min()) / 2) if len(hr) > 1 else 0.0


def table_rows(cfg, h=None):
    """Per-phase (name, state) rows of the chip-formation model."""
    r = cfg.tool.edge_radius_r
    return [(p.name, chip_state(p.cut_params(r), h)) for p in cfg.material.phases]


def simulate(cfg):
    """Run the full pipeline in memory and return a :class:`ScenarioResult`."""
    gmap = build_grain_map(cfg.material, cfg.width, cfg.height, cfg.seed)
    grid = GridSpec(cfg.dx, cfg.dy, gmap.width, gmap.height)
    hm, segments = synthesize_surface(gmap, cfg.tool, cfg.milling, grid, cfg.material)
    profile = extract_profile(hm, cfg.height / 2)
    threshold = cfg.threshold if cfg.threshold is not None else default_threshold(cfg)
    report = roughness(profile, cfg.cutoff, threshold if threshold > 0 else None)
    spacing = feature_spacing(profile, threshold) if threshold > 0 else None

    f_t = feed_per_tooth(cfg.tool, cfg.milling)
    summary = [("seed", cfg.seed), ("feed_per_tooth_um", f_t)]
    for name, st in table_rows(cfg):
        summary += [
            (f"phase.{name}.beta_rad", st.beta),
            (f"phase.{name}.h_m_um", st.h_m),
            (f"phase.{name}.sigma_pa", st.sigma),
            (f"phase.{name}.h_r_um", st.h_r),
        ]
    measured = isotropic_intercepts(gmap, 100, calibration_step(cfg.material))
    for p, m in zip(cfg.material.phases, measured):
        summary.append((f"phase.{p.name}.measured_intercept_um", m))
    summary.append(("grains", gmap.n_grains))
    summary += [
        ("profile_y_um", float(hm.ys[np.argmin(np.abs(hm.ys - cfg.height / 2))])),
        ("Ra_um", report.Ra),
        ("Rq_um", report.Rq),
        ("Rz_um", report.Rz),
        ("cutoff_um", report.cutoff_used),
        ("roughness_feature_spacing_um", report.mean_feature_spacing),
        ("concave_threshold_um", threshold),
        ("concave_count", spacing.n_features if spacing else 0),
        ("concave_mean_spacing_um", spacing.mean if spacing else None),
    ]
    stats = chip_statistics(segments)
    summary += [
        ("chip_count", stats.count),
        ("chip_mean_length_um", stats.mean_length),
        ("chip_max_length_um", stats.max_length),
    ]
    for ph, n in sorted(stats.per_phase_counts.items()):
        summary.append((f"chip_count.{cfg.material.phases[ph].name}", n))
    return ScenarioResult(gmap, hm, segments, profile, report, spacing, summary)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write(stage, name, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    kw = {} if mode == "wb" else {"encoding": "ascii", "newline": "\n"}
    with open(os.path.join(stage, name), mode, **kw) as fh:
        fh.write(data)


def write_manifest(stage, cfg, names):
    config_text = serialize_config(cfg)
    items = [
        ("config_sha256", hashlib.sha256(config_text.encode("ascii")).hexdigest()),
        ("seed", cfg.seed),
    ]
    for name in sorted(names):
        items.append((f"file.{name}", _sha256(os.path.join(stage, name))))
    _write(stage, "manifest.txt", io.key_value_text(items))


def write_outputs(result, cfg, directory, dump_passes=False):
    """Write every scenario artifact into `directory` atomically; returns the file names."""
    hm_pgm, sidecar = io.heightmap_pgm(result.heightmap)
    files = {
        "heightmap.csv": io.heightmap_to_csv(result.heightmap),
        "heightmap.pgm": hm_pgm,
        "heightmap.pgm.txt": sidecar,
        "profile.csv": io.profile_to_csv(result.profile),
        "chips.csv": io.chips_to_csv(result.segments),
        "report.txt": io.key_value_text(result.summary),
    }
    if dump_passes:
        gm = result.grain_map
        xs = grid_axis(gm.width, cfg.dx)
        ys = grid_axis(gm.height, cfg.dy)
        passes = generate_tooth_passes(cfg.tool, cfg.milling, gm.width, gm.width / len(xs),
                                       cross_step=gm.height / len(ys), xs=xs, ys=ys)
        files["passes.csv"] = passes_to_csv(passes)
    with io.atomic_output(directory) as stage:
        for name, data in files.items():
            _write(stage, name, data)
        write_manifest(stage, cfg, files)
    return sorted(files) + ["manifest.txt"]


def exit_code_for(exc):
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (ModelViolationError, CalibrationError)):
        return EXIT_MODEL
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_FAILURE


def run_scenario(cfg, out=None, *, seed=None, dump_passes=False, stderr=None):
    """Simulate `cfg` and write its artifacts; returns ``(exit_status, files)``.

    Errors are reported on `stderr` (default ``sys.stderr``) with the stage
    that failed, and map to the exit codes 2 (config), 3 (model), 4 (I/O).
    """
    stderr = sys.stderr if stderr is None else stderr
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    directory = cfg.output_dir if out is None else out
    stage = "simulate"
    try:
        result = simulate(cfg)
        stage = "write"
        files = write_outputs(result, cfg, directory, dump_passes)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = exit_code_for(exc)
        if code == EXIT_FAILURE and not isinstance(exc, ValueError):
            raise
        print(f"grainmill {stage}: {type(exc).__name__}: {exc}", file=stderr)
        return code, []
    return EXIT_OK, [os.path.join(directory, f) for f in files]
