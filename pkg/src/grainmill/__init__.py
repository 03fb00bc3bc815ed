"""Grain-aware bottom-surface simulation for micro end-milling."""

from .analysis import (
    Profile,
    RoughnessReport,
    feature_spacing,
    roughness,
    scale_decomposition,
)
from .chipmodel import (
    ChipFormationState,
    GrainCutParams,
    Mode,
    classify_engagement,
    contact_stress,
    elastic_recovery,
    friction_angle,
    min_chip_thickness,
)
from .errors import CalibrationError, ConfigError, ModelViolationError
from .kinematics import (
    MillingParams,
    ToolSpec,
    ToothPass,
    feed_per_tooth,
    generate_tooth_passes,
    uncut_thickness_at,
)
from .material import (
    GrainMap,
    InterceptStats,
    MaterialSpec,
    PhaseSpec,
    al6061,
    build_grain_map,
    crosses_grain_boundary,
    measure_intercept_length,
    phase_at,
)
from .surface import (
    ChipSegment,
    GridSpec,
    HeightMap,
    Provenance,
    chip_statistics,
    extract_profile,
    synthesize_surface,
)

__version__ = "0.1.0"
