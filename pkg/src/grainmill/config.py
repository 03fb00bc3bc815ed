"""Scenario configuration: a line-oriented ``key = value`` document.

Keys are dotted (``tool.diameter_um``) and carry their unit as a suffix.
Pressures are converted to Pa, feed rates to um/min; everything else is
kept in the unit the key names.
"""

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .errors import ConfigError
from .kinematics import MillingParams, ToolSpec, feed_per_tooth
from .material import MaterialSpec, PhaseSpec

REFERENCE_NAME = "al6061_reference"

_UNIT_SUFFIXES = (
    "_mm_per_min", "_um_per_min", "_m_per_min", "_um", "_mm", "_m", "_nm",
    "_gpa", "_mpa", "_pa", "_rpm", "_rps", "_rad", "_deg",
)

# key -> (kind, required); kinds: pos (> 0), int_pos, int, float
_FIXED_KEYS = {
    "tool.diameter_um": ("pos", True),
    "tool.flutes": ("int_pos", True),
    "tool.edge_radius_um": ("pos", True),
    "milling.spindle_speed_rpm": ("pos", True),
    "milling.feed_rate_mm_per_min": ("pos", True),
    "milling.axial_depth_um": ("pos", True),
    "domain.width_um": ("pos", True),
    "domain.height_um": ("pos", True),
    "grid.dx_um": ("pos", False),
    "grid.dy_um": ("pos", False),
    "seed": ("int", True),
    "analysis.cutoff_um": ("pos", False),
    "analysis.threshold_um": ("pos", False),
    "output_dir": ("str", False),
}

_PHASE_KEYS = {
    "E_gpa": ("pos", True),
    "mu": ("nonneg", True),
    "sigma_p_mpa": ("pos", True),
    "intercept_um": ("pos", True),
    "volume_fraction": ("frac", True),
    "elongation_ratio": ("ge1", False),
}

_PHASE_KEY = re.compile(r"^material\.([A-Za-z][A-Za-z0-9_-]*)\.([A-Za-z_]+)$")


@dataclass(frozen=True)
class ScenarioConfig:
    material: MaterialSpec
    tool: ToolSpec
    milling: MillingParams
    width: float
    height: float
    dx: float
    dy: float
    seed: int
    cutoff: float = 5.0
    threshold: Optional[float] = None
    output_dir: str = "out"

    @property
    def feed_per_tooth(self):
        return feed_per_tooth(self.tool, self.milling)


def _stem(key):
    for suffix in _UNIT_SUFFIXES:
        if key.endswith(suffix):
            return key[: -len(suffix)]
    return key


def _convert(kind, raw, key, line):
    if kind == "str":
        return raw
    try:
        value = int(raw) if kind in ("int", "int_pos") else float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as a number", key=key, line=line) from None
    name = _stem(key)
    if kind == "int" and value < 0:
        raise ConfigError(f"invariant violated: {name} must be >= 0, got {raw}", key=key, line=line)
    if kind != "int" and not math.isfinite(value):
        raise ConfigError(f"{name} must be finite", key=key, line=line)
    if kind in ("pos", "int_pos") and not value > 0:
        raise ConfigError(f"invariant violated: {name} must be > 0, got {raw}", key=key, line=line)
    if kind == "nonneg" and not value >= 0:
        raise ConfigError(f"invariant violated: {name} must be >= 0, got {raw}", key=key, line=line)
    if kind == "frac" and not 0 < value <= 1:
        raise ConfigError(f"invariant violated: {name} must be in (0, 1], got {raw}", key=key, line=line)
    if kind == "ge1" and not value >= 1:
        raise ConfigError(f"invariant violated: {name} must be >= 1, got {raw}", key=key, line=line)
    return value


def _known_stems():
    stems = {_stem(k): k for k in _FIXED_KEYS}
    return stems


def parse_config(text):
    """Parse and validate a scenario document.

    Raises
    ------
    ConfigError
        On unknown keys, unit-suffix mismatches, duplicates, malformed lines,
        invariant violations (naming the key and line) or missing required
        keys (all of them listed at once).
    """
    values = {}
    lines = {}
    phases = {}  # name -> {field: value}
    phase_lines = {}
    stems = _known_stems()
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=n)
        if key in values or key in lines:
            raise ConfigError("duplicate key", key=key, line=n)
        m = _PHASE_KEY.match(key)
        if m:
            name, fld = m.groups()
            if fld not in _PHASE_KEYS:
                known = {_stem(f): f for f in _PHASE_KEYS}
                if _stem(fld) in known:
                    raise ConfigError(
                        f"unit-suffix mismatch, expected material.{name}.{known[_stem(fld)]}",
                        key=key, line=n,
                    )
                raise ConfigError("unknown key", key=key, line=n)
            kind, _ = _PHASE_KEYS[fld]
            phases.setdefault(name, {})[fld] = _convert(kind, value, key, n)
            phase_lines.setdefault(name, n)
            lines[key] = n
            continue
        if key not in _FIXED_KEYS:
            if _stem(key) in stems:
                raise ConfigError(
                    f"unit-suffix mismatch, expected {stems[_stem(key)]}", key=key, line=n
                )
            raise ConfigError("unknown key", key=key, line=n)
        kind, _ = _FIXED_KEYS[key]
        values[key] = _convert(kind, value, key, n)
        lines[key] = n

    missing = [k for k, (_, req) in _FIXED_KEYS.items() if req and k not in values]
    if not phases:
        missing.insert(0, "material.<phase>.{" + ",".join(k for k, (_, r) in _PHASE_KEYS.items() if r) + "}")
    for name, fields in phases.items():
        missing += [f"material.{name}.{f}" for f, (_, req) in _PHASE_KEYS.items() if req and f not in fields]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    try:
        material = MaterialSpec(
            phases=tuple(
                PhaseSpec(
                    name=name,
                    elastic_modulus_E=f["E_gpa"] * 1e9,
                    friction_mu=f["mu"],
                    proportional_limit_sigma_p=f["sigma_p_mpa"] * 1e6,
                    target_intercept=f["intercept_um"],
                    volume_fraction=f["volume_fraction"],
                    elongation_ratio=f.get("elongation_ratio", 1.0),
                )
                for name, f in phases.items()
            )
        )
    except ValueError as exc:
        raise ConfigError(f"invariant violated: {exc}", key="material") from None
    tool = ToolSpec(
        diameter=values["tool.diameter_um"],
        flutes=values["tool.flutes"],
        edge_radius_r=values["tool.edge_radius_um"],
    )
    milling = MillingParams(
        spindle_speed=values["milling.spindle_speed_rpm"],
        feed_rate=values["milling.feed_rate_mm_per_min"] * 1000.0,
        axial_depth_a=values["milling.axial_depth_um"],
    )
    f_t = feed_per_tooth(tool, milling)
    min_intercept = min(p.target_intercept for p in material.phases)
    dx = values.get("grid.dx_um", min(f_t, min_intercept) / 5)
    dy = values.get("grid.dy_um", min_intercept / 5)
    if dx > f_t / 4 * (1 + 1e-9):
        raise ConfigError(
            f"invariant violated: grid.dx must be <= feed per tooth / 4 = {f_t / 4:.6g} um",
            key="grid.dx_um", line=lines.get("grid.dx_um"),
        )
    if dy > min_intercept / 4 * (1 + 1e-9):
        raise ConfigError(
            f"invariant violated: grid.dy must be <= smallest intercept / 4 = {min_intercept / 4:.6g} um",
            key="grid.dy_um", line=lines.get("grid.dy_um"),
        )
    return ScenarioConfig(
        material=material,
        tool=tool,
        milling=milling,
        width=values["domain.width_um"],
        height=values["domain.height_um"],
        dx=dx,
        dy=dy,
        seed=values["seed"],
        cutoff=values.get("analysis.cutoff_um", 5.0),
        threshold=values.get("analysis.threshold_um"),
        output_dir=values.get("output_dir", "out"),
    )


def _exact(value, factor):
    """Shortest decimal string s with float(s) * factor == value."""
    guess = value / factor
    for _ in range(64):
        s = repr(guess)
        back = float(s) * factor
        if back == value:
            return s
        guess = math.nextafter(guess, math.inf if back < value else -math.inf)
    raise ValueError(f"cannot represent {value!r} exactly in units of {factor}")


def serialize_config(cfg):
    """Inverse of :func:`parse_config`: ``parse_config(serialize_config(c)) == c``."""
    out = []
    for p in cfg.material.phases:
        base = f"material.{p.name}"
        out += [
            f"{base}.E_gpa = {_exact(p.elastic_modulus_E, 1e9)}",
            f"{base}.mu = {p.friction_mu!r}",
            f"{base}.sigma_p_mpa = {_exact(p.proportional_limit_sigma_p, 1e6)}",
            f"{base}.intercept_um = {p.target_intercept!r}",
            f"{base}.volume_fraction = {p.volume_fraction!r}",
            f"{base}.elongation_ratio = {p.elongation_ratio!r}",
        ]
    out += [
        f"tool.diameter_um = {cfg.tool.diameter!r}",
        f"tool.flutes = {int(cfg.tool.flutes)}",
        f"tool.edge_radius_um = {cfg.tool.edge_radius_r!r}",
        f"milling.spindle_speed_rpm = {cfg.milling.spindle_speed!r}",
        f"milling.feed_rate_mm_per_min = {_exact(cfg.milling.feed_rate, 1000.0)}",
        f"milling.axial_depth_um = {cfg.milling.axial_depth_a!r}",
        f"domain.width_um = {cfg.width!r}",
        f"domain.height_um = {cfg.height!r}",
        f"grid.dx_um = {cfg.dx!r}",
        f"grid.dy_um = {cfg.dy!r}",
        f"seed = {cfg.seed}",
        f"analysis.cutoff_um = {cfg.cutoff!r}",
    ]
    if cfg.threshold is not None:
        out.append(f"analysis.threshold_um = {cfg.threshold!r}")
    out.append(f"output_dir = {cfg.output_dir}")
    return "\n".join(out) + "\n"


def reference_config_text():
    """The bundled Al6061 reference scenario document."""
    return resources.files("grainmill").joinpath("data", f"{REFERENCE_NAME}.cfg").read_text("ascii")


def load_config(path_or_name):
    """Parse a config file, or the bundled scenario when given its name."""
    if path_or_name == REFERENCE_NAME:
        return parse_config(reference_config_text())
    with open(path_or_name, encoding="ascii") as fh:
        return parse_config(fh.read())
