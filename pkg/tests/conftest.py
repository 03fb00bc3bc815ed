import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from grainmill import GridSpec, al6061, build_grain_map, synthesize_surface  # noqa: E402
from grainmill.config import parse_config, reference_config_text  # noqa: E402


@pytest.fixture(scope="session")
def reference_config():
    return parse_config(reference_config_text())


@pytest.fixture(scope="session")
def reference_map(reference_config):
    cfg = reference_config
    return build_grain_map(cfg.material, cfg.width, cfg.height, cfg.seed)


@pytest.fixture(scope="session")
def reference_surface(reference_config, reference_map):
    cfg = reference_config
    grid = GridSpec(cfg.dx, cfg.dy)
    return synthesize_surface(reference_map, cfg.tool, cfg.milling, grid, cfg.material)


@pytest.fixture(scope="session")
def material():
    return al6061()
