"""Profile roughness and scale separation.

The waviness filter is a centred moving average with truncated windows at the
ends, not the Gaussian filter of the metrology standards, so Ra values here
are not comparable with ISO-filtered instrument readings.
"""

from dataclasses import dataclass, asdict
from typing import NamedTuple, Optional

import numpy as np
from scipy.signal import find_peaks


@dataclass(frozen=True, eq=False)
class Profile:
    """Heights `z` (um) sampled at uniformly spaced, increasing `x` (um)."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        z = np.asarray(self.z, dtype=np.float64)
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z must be 1-D arrays of equal length")
        if len(x) > 1:
            d = np.diff(x)
            if np.any(d <= 0):
                raise ValueError("x must be strictly increasing")
            if np.max(np.abs(d - d.mean())) > 1e-9:
                raise ValueError("x must be uniformly spaced")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    def __len__(self):
        return len(self.x)

    @property
    def spacing(self):
        return float((self.x[-1] - self.x[0]) / (len(self.x) - 1)) if len(self.x) > 1 else 0.0

    def with_heights(self, z):
        return Profile(self.x, z)


@dataclass(frozen=True)
class RoughnessReport:
    Ra: float
    Rq: float
    Rz: float
    mean_feature_spacing: Optional[float]
    cutoff_used: Optional[float]

    def to_text(self):
        return "".join(f"{k}: {_fmt(v)}\n" for k, v in asdict(self).items())

    @staticmethod
    def csv_header():
        return "Ra_um,Rq_um,Rz_um,mean_feature_spacing_um,cutoff_um"

    def csv_row(self):
        return ",".join(_fmt(v) for v in asdict(self).values())


def _fmt(v):
    return "NA" if v is None else f"{v:.10g}"


class SpacingStats(NamedTuple):
    n_features: int
    mean: Optional[float]
    std: Optional[float]
    spacings: np.ndarray


def _window(profile, cutoff):
    if not cutoff > 2 * profile.spacing:
        raise ValueError(f"cutoff {cutoff} must exceed twice the sample spacing {profile.spacing}")
    n = int(round(cutoff / profile.spacing))
    return n // 2


def moving_average(z, half):
    """Centred moving average over ``2*half + 1`` samples, windows truncated at the ends."""
    z = np.asarray(z, dtype=np.float64)
    n = len(z)
    cs = np.concatenate([[0.0], np.cumsum(z)])
    i = np.arange(n)
    lo = np.maximum(0, i - half)
    hi = np.minimum(n, i + half + 1)
    return (cs[hi] - cs[lo]) / (hi - lo)


def scale_decomposition(profile, cutoff):
    """Split a profile into (waviness, roughness) with a moving average of width `cutoff`.

    ``waviness.z + roughness.z`` reproduces the input to rounding error.
    """
    if len(profile) < 3:
        raise ValueError("profile too short to filter")
    wav = moving_average(profile.z, _window(profile, cutoff))
    return profile.with_heights(wav), profile.with_heights(profile.z - wav)


def feature_spacing(profile, threshold):
    """Spacing of concaves, i.e. runs of samples below ``mean - threshold``.

    Each run's centroid is the mean x of its samples; the result holds the
    spacings between consecutive centroids.
    """
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    below = profile.z < profile.z.mean() - threshold
    padded = np.concatenate([[False], below, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    starts, ends = edges[0::2], edges[1::2]
    cs = np.concatenate([[0.0], np.cumsum(profile.x)])
    centroids = (cs[ends] - cs[starts]) / (ends - starts)
    spacings = np.diff(centroids)
    if len(spacings) == 0:
        return SpacingStats(len(centroids), None, None, spacings)
    return SpacingStats(len(centroids), float(spacings.mean()), float(spacings.std()), spacings)


def roughness(profile, cutoff=None, threshold=None):
    """Ra, Rq, Rz and concave spacing of a profile.

    With a `cutoff` the parameters are taken on the roughness component of
    :func:`scale_decomposition`; without one, on the mean-levelled profile.
    Rz is the mean peak-to-valley height of five equal sub-lengths. The
    spacing uses `threshold`, or Rq when none is given.
    """
    if len(profile) < 10:
        raise ValueError(f"need at least 10 samples, got {len(profile)}")
    comp = profile if cutoff is None else scale_decomposition(profile, cutoff)[1]
    dev = comp.z - comp.z.mean()
    ra = float(np.mean(np.abs(dev)))
    rq = float(np.sqrt(np.mean(dev * dev)))
    rz = float(np.mean([seg.max() - seg.min() for seg in np.array_split(comp.z, 5)]))
    if threshold is None:
        threshold = rq
    spacing = feature_spacing(comp, threshold).mean if threshold > 0 else None
    return RoughnessReport(Ra=ra, Rq=rq, Rz=rz, mean_feature_spacing=spacing, cutoff_used=cutoff)


def waviness_minima(profile, cutoff, prominence):
    """x positions of the local minima of the waviness that stand out by `prominence`."""
    wav, _ = scale_decomposition(profile, cutoff)
    idx, _ = find_peaks(-wav.z, prominence=prominence)
    return wav.x[idx]


def linear_density(labels, spacing, value):
    """Number of distinct runs of `value` per unit length in a 1-D label sequence."""
    labels = np.asarray(labels)
    hit = np.concatenate([[False], labels == value, [False]])
    n_runs = int(np.count_nonzero(hit[1:] & ~hit[:-1]))
    return n_runs / (len(labels) * spacing)
