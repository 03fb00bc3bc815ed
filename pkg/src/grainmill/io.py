"""File formats: CSV grids, portable graymaps and small key/value documents.

Text outputs are ASCII with a trailing newline; CSV files carry a header row.
"""

import os
import shutil
import tempfile
from contextlib import contextmanager

import numpy as np

from .surface import HeightMap


def heightmap_to_csv(hm):
    """Grid CSV: header ``y_um,<x_0>,...``, then one row per y with heights in um."""
    out = ["y_um," + ",".join(f"{x:.10g}" for x in hm.xs)]
    for y, row in zip(hm.ys, hm.heights):
        out.append(f"{y:.10g}," + ",".join(f"{v:.10g}" for v in row.tolist()))
    return "\n".join(out) + "\n"


def heightmap_from_csv(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("height map CSV needs a header and at least one row")
    header = lines[0].split(",")
    if header[0] != "y_um":
        raise ValueError("height map CSV must start with a y_um column")
    xs = np.array([float(v) for v in header[1:]])
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    ys = data[:, 0]
    heights = data[:, 1:]
    dx = float(xs[1] - xs[0]) if len(xs) > 1 else 2 * float(xs[0])
    dy = float(ys[1] - ys[0]) if len(ys) > 1 else 2 * float(ys[0])
    return HeightMap(dx=dx, dy=dy, xs=xs, ys=ys, heights=heights,
                     provenance=np.zeros(heights.shape, dtype=np.int8))


def pgm_bytes(values, maxval):
    """Binary (P5) portable graymap of an integer array, rows top to bottom."""
    values = np.asarray(values)
    ny, nx = values.shape
    if maxval < 256:
        body = values.astype(">u1").tobytes()
    else:
        body = values.astype(">u2").tobytes()
    return f"P5\n{nx} {ny}\n{maxval}\n".encode("ascii") + body


def read_pgm(data):
    """Parse a P5 graymap written by :func:`pgm_bytes`; returns (array, maxval)."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    nx, ny = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    dtype = ">u1" if maxval < 256 else ">u2"
    return np.frombuffer(parts[3], dtype=dtype).reshape(ny, nx), maxval


def heightmap_pgm(hm):
    """16-bit graymap scaled min -> 0, max -> 65535, plus its scale sidecar text.

    Image row 0 is the largest y so the picture is not mirrored.
    """
    h = np.asarray(hm.heights)
    lo, hi = float(h.min()), float(h.max())
    span = hi - lo
    if span > 0:
        levels = np.rint((h - lo) / span * 65535).astype(np.int64)
    else:
        levels = np.zeros(h.shape, dtype=np.int64)
    sidecar = (
        f"min_um: {lo:.10g}\n"
        f"max_um: {hi:.10g}\n"
        f"scale_um_per_level: {span / 65535:.10g}\n"
        f"maxval: 65535\n"
        f"row_order: top_is_max_y\n"
    )
    return pgm_bytes(levels[::-1], 65535), sidecar


def phase_pgm(phase_raster, n_phases):
    """8-bit phase image, phase index spread over 0..255 (row 0 is the largest y)."""
    p = np.asarray(phase_raster, dtype=np.int64)
    scale = 255 // (n_phases - 1) if n_phases > 1 else 0
    return pgm_bytes((p * scale)[::-1], 255)


def profile_to_csv(profile):
    rows = [f"{x:.10g},{z:.10g}" for x, z in zip(profile.x.tolist(), profile.z.tolist())]
    return "x_um,height_um\n" + "\n".join(rows) + "\n"


def chips_to_csv(segments):
    """One row per chip segment.

    Segments run along the sweep (y) at a fixed feed position, so
    ``start_x == end_x``; the sweep extent is in ``start_y``/``end_y``.
    """
    lines = ["pass_index,start_x,end_x,length_um,grain_id,phase,start_y,end_y"]
    x = segments.xs[segments.column]
    y0 = segments.ys[segments.start]
    y1 = segments.ys[segments.end]
    for p, xx, ln, g, ph, a, b in zip(
        segments.pass_index.tolist(), x.tolist(), segments.length.tolist(),
        segments.grain_id.tolist(), segments.phase.tolist(), y0.tolist(), y1.tolist(),
    ):
        lines.append(f"{p},{xx:.10g},{xx:.10g},{ln:.10g},{g},{ph},{a:.10g},{b:.10g}")
    return "\n".join(lines) + "\n"


def key_value_text(items):
    """``key: value`` lines from (key, value) pairs; floats use 10 significant digits."""
    out = []
    for k, v in items:
        if isinstance(v, float):
            v = f"{v:.10g}"
        elif v is None:
            v = "NA"
        out.append(f"{k}: {v}")
    return "\n".join(out) + "\n"


def parse_key_value(text):
    out = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        k, sep, v = line.partition(":")
        if not sep:
            raise ValueError(f"malformed line {line!r}")
        out[k.strip()] = v.strip()
    return out


@contextmanager
def atomic_output(directory):
    """Stage files in a temporary directory and move them into `directory` on success.

    Yields the staging path. On any error the staging directory is removed and
    nothing is moved.
    """
    os.makedirs(directory, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".staging-", dir=directory)
    try:
        yield stage
        for name in sorted(os.listdir(stage)):
            os.replace(os.path.join(stage, name), os.path.join(directory, name))
    finally:
        shutil.rmtree(stage, ignore_errors=True)
