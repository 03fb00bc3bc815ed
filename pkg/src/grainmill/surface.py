"""Replay tooth passes over a grain map to build the residual bottom surface.

Each grid cell carries the material height above the floor of the last pass
that swept it. A pass adds one feed per tooth (per elapsed pass) to that
height; if the result reaches the minimum chip thickness of the cell's phase
the material shears and the cell springs back to the phase's recovery height,
otherwise it is ploughed and the material stays. Sheared samples along each
sweep line are grouped into chip segments that break at grain boundaries.
"""

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .analysis import Profile
from .chipmodel import elastic_recovery, min_chip_thickness
from .errors import ModelViolationError
from .kinematics import feed_per_tooth, generate_tooth_passes, grid_axis, uncut_thickness_at


class Provenance(enum.IntEnum):
    UNCUT = 0
    PLOUGHED = 1
    SHEARED = 2


@dataclass(frozen=True)
class GridSpec:
    """Cell spacing of the height map; `width`/`height`, if set, must match the grain map."""

    dx: float
    dy: float
    width: Optional[float] = None
    height: Optional[float] = None

    def __post_init__(self):
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"grid spacing must be positive, got dx={self.dx}, dy={self.dy}")


def _ro(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HeightMap:
    """Residual surface; ``heights[j, i]`` is the height at ``(xs[i], ys[j])`` in um.

    Heights are relative to the floor of the last pass that swept the cell.
    ``first_ploughed``/``first_sheared`` hold the pass index of each cell's
    first event of that kind (-1 if none).
    """

    dx: float
    dy: float
    xs: np.ndarray
    ys: np.ndarray
    heights: np.ndarray
    provenance: np.ndarray
    grain_id: Optional[np.ndarray] = None
    phase: Optional[np.ndarray] = None
    first_ploughed: Optional[np.ndarray] = None
    first_sheared: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("xs", "ys", "heights", "provenance", "grain_id", "phase",
                     "first_ploughed", "first_sheared"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _ro(value))
        if self.heights.shape != (len(self.ys), len(self.xs)):
            raise ValueError("heights must have shape (len(ys), len(xs))")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")

    @property
    def nx(self):
        return len(self.xs)

    @property
    def ny(self):
        return len(self.ys)

    @property
    def width(self):
        return self.nx * self.dx

    @property
    def height(self):
        return self.ny * self.dy


class ChipSegment(NamedTuple):
    pass_index: int
    column: int
    start: int
    end: int
    length: float
    grain_id: int
    phase: int
    x: float
    start_y: float
    end_y: float

    @property
    def grains_crossed(self):
        return (self.grain_id,)


class ChipSegments:
    """Column store of chip segments; iterates as :class:`ChipSegment`.

    ``start``/``end`` are inclusive row indices along the sweep.
    """

    _FIELDS = ("pass_index", "column", "start", "end", "grain_id", "phase")

    def __init__(self, pass_index, column, start, end, grain_id, phase, xs, ys, dy):
        self.pass_index = _ro(np.asarray(pass_index, np.int64))
        self.column = _ro(np.asarray(column, np.int64))
        self.start = _ro(np.asarray(start, np.int64))
        self.end = _ro(np.asarray(end, np.int64))
        self.grain_id = _ro(np.asarray(grain_id, np.int64))
        self.phase = _ro(np.asarray(phase, np.int64))
        self.xs = xs
        self.ys = ys
        self.dy = dy
        self.length = _ro((self.end - self.start + 1) * dy)

    def __len__(self):
        return len(self.pass_index)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        return ChipSegment(
            int(self.pass_index[k]), int(self.column[k]), int(self.start[k]), int(self.end[k]),
            float(self.length[k]), int(self.grain_id[k]), int(self.phase[k]),
            float(self.xs[self.column[k]]), float(self.ys[self.start[k]]), float(self.ys[self.end[k]]),
        )

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def __eq__(self, other):
        if not isinstance(other, ChipSegments):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in self._FIELDS)


def _column_runs(key):
    """Runs of equal non-negative values along axis 1 of a 2-D int array.

    Returns (row, start, end) arrays with inclusive ends.
    """
    ncol, n = key.shape
    padded = np.full((ncol, n + 2), -1, dtype=key.dtype)
    padded[:, 1:-1] = key
    flat = padded.ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [len(flat)]])
    starts = bounds[:-1]
    ends = bounds[1:] - 1
    keep = flat[starts] >= 0
    starts, ends = starts[keep], ends[keep]
    row = starts // (n + 2)
    return row, starts % (n + 2) - 1, ends % (n + 2) - 1


def phase_tables(material, edge_radius):
    """Per-phase (h_m, h_r); h_r is NaN where the recovery model is violated."""
    hm = np.empty(len(material.phases))
    hr = np.empty(len(material.phases))
    errors = {}
    for i, ph in enumerate(material.phases):
        hm[i] = min_chip_thickness(ph.friction_mu, edge_radius)
        try:
            hr[i] = elastic_recovery(ph.cut_params(edge_radius), hm[i])
        except ModelViolationError as exc:
            hr[i] = math.nan
            errors[i] = exc
    return hm, hr, errors


def synthesize_surface(gmap, tool, params, grid, material, *, passes=None):
    """Residual height map and chip segments of a straight slot over `gmap`.

    Every cell enters at one feed per tooth above the floor of the first pass
    that sweeps it. Returns ``(HeightMap, ChipSegments)``.

    Raises
    ------
    ValueError
        If the grid does not cover the grain map domain or the material's
        phases do not match the map.
    ModelViolationError
        If a phase with an inconsistent recovery is sheared; the message
        names the pass and sample.
    """
    if grid.width is not None and not math.isclose(grid.width, gmap.width, rel_tol=1e-12):
        raise ValueError(f"grid width {grid.width} does not match grain map width {gmap.width}")
    if grid.height is not None and not math.isclose(grid.height, gmap.height, rel_tol=1e-12):
        raise ValueError(f"grid height {grid.height} does not match grain map height {gmap.height}")
    if len(material.phases) != gmap.n_phases:
        raise ValueError("material and grain map have different phase counts")

    xs = grid_axis(gmap.width, grid.dx)
    ys = grid_axis(gmap.height, grid.dy)
    dx = gmap.width / len(xs)
    dy = gmap.height / len(ys)
    f_t = feed_per_tooth(tool, params)
    if passes is None:
        passes = generate_tooth_passes(
            tool, params, gmap.width, dx, cross_step=dy, xs=xs, ys=ys,
            min_intercept=min(p.target_intercept for p in material.phases),
        )

    grain = gmap.rasterize(xs, ys)
    phase = gmap.phase_index[grain]
    hm_tab, hr_tab, bad = phase_tables(material, tool.edge_radius_r)
    hm_cell = hm_tab[phase]
    hr_cell = hr_tab[phase]

    shape = grain.shape
    stock = np.full(shape, f_t)
    last = np.full(shape, -1, dtype=np.int64)
    prov = np.zeros(shape, dtype=np.int8)
    first_plough = np.full(shape, -1, dtype=np.int64)
    first_shear = np.full(shape, -1, dtype=np.int64)

    seg_cols = {k: [] for k in ("pass_index", "column", "start", "end", "grain_id", "phase")}
    for tp in passes:
        cols = tp.columns
        if cols.stop <= cols.start:
            continue
        p = tp.pass_index
        blk_last = last[:, cols]
        blk_stock = stock[:, cols]
        fresh = blk_last < 0
        blk_last[fresh] = p
        # height above this pass's floor
        h = uncut_thickness_at(tp, blk_stock + (p - blk_last) * f_t, 0.0)
        shear = h >= hm_cell[:, cols]
        if bad and np.any(shear):
            hr_blk = hr_cell[:, cols]
            broken = shear & np.isnan(hr_blk)
            if np.any(broken):
                j, i = np.argwhere(broken)[0]
                ph = int(phase[j, cols.start + i])
                raise ModelViolationError(
                    f"pass {p}, sample (x={xs[cols.start + i]:.6g}, y={ys[j]:.6g}) um: {bad[ph]}"
                )
        stock[:, cols] = np.where(shear, hr_cell[:, cols], h)
        last[:, cols] = p
        prov[:, cols] = np.where(shear, Provenance.SHEARED, Provenance.PLOUGHED)
        fp = first_plough[:, cols]
        fp[(fp < 0) & ~shear] = p
        fs = first_shear[:, cols]
        fs[(fs < 0) & shear] = p

        key = np.where(shear, grain[:, cols], -1).T
        row, start, end = _column_runs(key)
        if len(row):
            col = row + cols.start
            gid = grain[start, col]
            seg_cols["pass_index"].append(np.full(len(row), p))
            seg_cols["column"].append(col)
            seg_cols["start"].append(start)
            seg_cols["end"].append(end)
            seg_cols["grain_id"].append(gid)
            seg_cols["phase"].append(gmap.phase_index[gid])

    hm = HeightMap(
        dx=dx, dy=dy, xs=xs, ys=ys, heights=stock, provenance=prov, grain_id=grain,
        phase=phase, first_ploughed=first_plough, first_sheared=first_shear,
    )
    cat = {k: (np.concatenate(v) if v else np.empty(0, np.int64)) for k, v in seg_cols.items()}
    return hm, ChipSegments(**cat, xs=xs, ys=ys, dy=dy)


def extract_profile(hm, y):
    """Height row nearest to `y`, as a :class:`Profile` along x."""
    if not 0 <= y <= hm.height:
        raise ValueError(f"y={y} outside [0, {hm.height}]")
    j = int(np.argmin(np.abs(hm.ys - y)))
    return Profile(hm.xs.copy(), np.array(hm.heights[j], dtype=np.float64))


class ChipStats(NamedTuple):
    mean_length: Optional[float]
    max_length: Optional[float]
    count: int
    per_phase_counts: dict


def chip_statistics(segments):
    """Length summary of chip segments; an empty input gives count 0 and no means."""
    if isinstance(segments, ChipSegments):
        lengths = np.asarray(segments.length)
        phases = np.asarray(segments.phase)
    else:
        segments = list(segments)
        lengths = np.array([s.length for s in segments], dtype=np.float64)
        phases = np.array([s.phase for s in segments], dtype=np.int64)
    if len(lengths) == 0:
        return ChipStats(None, None, 0, {})
    ph, counts = np.unique(phases, return_counts=True)
    return ChipStats(
        float(lengths.mean()),
        float(lengths.max()),
        int(len(lengths)),
        {int(a): int(b) for a, b in zip(ph, counts)},
    )
