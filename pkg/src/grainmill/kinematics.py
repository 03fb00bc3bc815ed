"""Tool geometry and feed kinematics of the slot bottom.

The bottom face is modelled as a 1.5-D sweep. Pass ``p`` puts the cutting
edge at feed position ``center_x = p * f_t`` and sweeps the full slot width
(y) over the strip of grid columns within one edge radius behind the edge.
The tool-floor datum of pass ``p`` is ``-p * f_t``: each engagement reaches
one feed-per-tooth deeper into whatever material a point still carries, so
material a ploughing pass leaves behind accumulates until it reaches the
minimum chip thickness.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class ToolSpec:
    diameter: float
    flutes: int
    edge_radius_r: float

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError(f"tool diameter must be > 0, got {self.diameter}")
        if int(self.flutes) != self.flutes or self.flutes < 1:
            raise ValueError(f"flutes must be a positive integer, got {self.flutes}")
        if not self.edge_radius_r > 0:
            raise ValueError(f"edge radius must be > 0, got {self.edge_radius_r}")
        if self.edge_radius_r > self.diameter / 20:
            warnings.warn(
                f"edge radius {self.edge_radius_r} um is large for a {self.diameter} um tool",
                stacklevel=2,
            )


@dataclass(frozen=True)
class MillingParams:
    spindle_speed: float  # rev/min
    feed_rate: float  # um/min
    axial_depth_a: float  # um

    def __post_init__(self):
        for name in ("spindle_speed", "feed_rate", "axial_depth_a"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True, eq=False)
class ToothPass:
    """One flute engagement.

    ``columns`` indexes the feed-axis grid columns swept by the pass, ``x``
    and ``y`` are the sample coordinates; samples are ordered column by
    column and, within a column, along the sweep (increasing y).
    ``h_uncut`` is filled in when the pass is replayed over a surface.
    """

    pass_index: int
    flute_index: int
    center_x: float
    floor: float
    columns: slice
    x: np.ndarray
    y: np.ndarray
    h_uncut: Optional[np.ndarray] = None

    @property
    def n_samples(self):
        return len(self.x) * len(self.y)

    def sample_points(self):
        gx, gy = np.meshgrid(self.x, self.y, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def with_uncut(self, h_uncut):
        h = np.asarray(h_uncut, dtype=np.float64).reshape(len(self.x), len(self.y))
        return ToothPass(self.pass_index, self.flute_index, self.center_x, self.floor,
                         self.columns, self.x, self.y, h)


def feed_per_tooth(tool, params):
    """Tool advance per flute engagement, um."""
    return params.feed_rate / (params.spindle_speed * tool.flutes)


def grid_axis(length, step):
    """Cell-centre coordinates covering ``[0, length]`` at spacing close to `step`."""
    n = max(1, int(round(length / step)))
    return (np.arange(n) + 0.5) * (length / n)


def generate_tooth_passes(
    tool,
    params,
    domain_width,
    sample_step,
    *,
    domain_height=None,
    cross_step=None,
    min_intercept=None,
    xs=None,
    ys=None,
):
    """Time-ordered tooth passes over a ``domain_width`` long strip.

    Pass centres advance by exactly one feed per tooth, starting at 0 and
    continuing until the swept strip has left the domain, so every column is
    swept by about ``r / f_t`` consecutive passes. A domain shorter than one
    feed per tooth gives an empty list.

    `sample_step` is the feed-axis grid spacing and must resolve the feed
    (``<= f_t / 4``); `cross_step` is the sweep spacing and, when
    `min_intercept` is given, must be ``<= min_intercept / 4``. Explicit
    `xs`/`ys` cell centres override the generated grid.
    """
    f_t = feed_per_tooth(tool, params)
    if not sample_step > 0 or sample_step > f_t / 4 * (1 + 1e-9):
        raise ValueError(f"sample_step {sample_step} must be in (0, f_t/4 = {f_t / 4}]")
    if cross_step is None:
        cross_step = sample_step
    if not cross_step > 0:
        raise ValueError("cross_step must be > 0")
    if min_intercept is not None and cross_step > min_intercept / 4 * (1 + 1e-9):
        raise ValueError(
            f"cross_step {cross_step} must be <= min intercept / 4 = {min_intercept / 4}"
        )
    if domain_width < f_t:
        return []
    xs = grid_axis(domain_width, sample_step) if xs is None else np.asarray(xs, float)
    if ys is None:
        ys = grid_axis(domain_height if domain_height is not None else cross_step, cross_step)
    ys = np.asarray(ys, float)
    r = tool.edge_radius_r

    passes = []
    p = 0
    while True:
        center = p * f_t
        if center - r >= domain_width:
            break
        lo, hi = np.searchsorted(xs, [center - r, center], side="right")
        passes.append(
            ToothPass(
                pass_index=p,
                flute_index=p % tool.flutes,
                center_x=center,
                floor=-p * f_t,
                columns=slice(int(lo), int(hi)),
                x=xs[lo:hi],
                y=ys,
            )
        )
        p += 1
    return passes


def uncut_thickness_at(tooth_pass, prev_surface_height, tool_floor_height=None):
    """Material standing above the tool's bottom envelope, clamped at zero.

    Heights share the datum of the pass floors; `tool_floor_height` defaults
    to the pass's own floor. Accepts scalars or arrays.
    """
    floor = tooth_pass.floor if tool_floor_height is None else tool_floor_height
    h = np.maximum(0.0, np.asarray(prev_surface_height, dtype=np.float64) - floor)
    return float(h) if h.ndim == 0 else h


def passes_to_csv(passes):
    """Debug dump of pass geometry, one row per pass."""
    lines = ["pass_index,flute_index,center_x_um,floor_um,x_start_um,x_end_um,n_samples"]
    for tp in passes:
        x0 = float(tp.x[0]) if len(tp.x) else math.nan
        x1 = float(tp.x[-1]) if len(tp.x) else math.nan
        lines.append(
            f"{tp.pass_index},{tp.flute_index},{tp.center_x:.10g},{tp.floor:.10g},"
            f"{x0:.10g},{x1:.10g},{tp.n_samples}"
        )
    return "\n".join(lines) + "\n"
