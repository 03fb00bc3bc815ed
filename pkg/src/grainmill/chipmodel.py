"""Per-grain cutting physics: friction angle, minimum chip thickness,
contact stress and elastic recovery of a rounded cutting edge.

Lengths are in micrometres and pressures in pascals. Every function here is
pure; phase lookup is the caller's job.
"""

import enum
import math
from dataclasses import dataclass

from .errors import ModelViolationError


class Mode(enum.Enum):
    PLOUGHING = "Ploughing"
    SHEARING = "Shearing"


@dataclass(frozen=True)
class GrainCutParams:
    friction_mu: float
    edge_radius_r: float
    elastic_modulus_E: float
    proportional_limit_sigma_p: float

    def __post_init__(self):
        if not self.friction_mu >= 0:
            raise ValueError(f"friction_mu must be >= 0, got {self.friction_mu}")
        if not self.edge_radius_r > 0:
            raise ValueError(f"edge_radius_r must be > 0, got {self.edge_radius_r}")
        if not self.elastic_modulus_E > 0:
            raise ValueError(f"elastic_modulus_E must be > 0, got {self.elastic_modulus_E}")
        if not self.proportional_limit_sigma_p > 0:
            raise ValueError(
                f"proportional_limit_sigma_p must be > 0, got {self.proportional_limit_sigma_p}"
            )


@dataclass(frozen=True)
class ChipFormationState:
    beta: float
    h_m: float
    sigma: float
    h_r: float
    mode: Mode


def friction_angle(mu):
    """Friction angle beta (rad) from cos(beta) = 1 / sqrt(1 + mu**2)."""
    if not mu >= 0:
        raise ValueError(f"friction coefficient must be >= 0, got {mu}")
    # acos loses precision near 1; take the angle from (cos, sin) instead
    s = math.sqrt(1.0 + mu * mu)
    return math.atan2(mu / s, 1.0 / s)


def min_chip_thickness(mu, r):
    """Minimum chip thickness for friction coefficient `mu` and edge radius `r`.

    h_m = r * (1 - cos(pi/4 - beta/2)). Decreases with friction, linear in r.
    """
    if not r > 0:
        raise ValueError(f"edge radius must be > 0, got {r}")
    beta = friction_angle(mu)
    return r * (1.0 - math.cos(math.pi / 4 - beta / 2))


def _contact_length(h_m, r):
    # chord of the edge arc below the flank: sqrt(r^2 - (r - h_m)^2)
    return math.sqrt(r * r - (r - h_m) ** 2)


def contact_stress(E, h_m, r):
    """Compressive stress on the grain under the flank, in the units of `E`."""
    if not 0 < h_m < r:
        raise ValueError(f"need 0 < h_m < r, got h_m={h_m}, r={r}")
    return E * h_m / _contact_length(h_m, r)


def elastic_recovery(params, h_m):
    """Spring-back height left under the flank after the edge passes.

    Below the proportional limit the grain recovers the full `h_m`; at or
    above it the recovery is reduced by ``sigma_p * contact_length / E``.
    The branch switch is a strict ``sigma < sigma_p`` test and is
    discontinuous by construction.

    Raises
    ------
    ValueError
        If `h_m` is outside (0, r).
    ModelViolationError
        If the reduced recovery comes out negative.
    """
    r = params.edge_radius_r
    E = params.elastic_modulus_E
    sigma_p = params.proportional_limit_sigma_p
    sigma = contact_stress(E, h_m, r)
    if sigma < sigma_p:
        return h_m
    h_r = h_m - sigma_p * _contact_length(h_m, r) / E
    # exactly h_m * (1 - sigma_p / sigma) >= 0; only rounding can dip below
    if -1e-12 * h_m <= h_r < 0:
        h_r = 0.0
    if h_r < 0:
        raise ModelViolationError(
            f"negative elastic recovery h_r={h_r:.6g} um (h_m={h_m}, E={E}, sigma_p={sigma_p})"
        )
    return h_r


def classify_engagement(h, h_m):
    """Ploughing below the minimum chip thickness, shearing at or above it."""
    return Mode.SHEARING if h >= h_m else Mode.PLOUGHING


def chip_state(params, h=None):
    """Bundle beta, h_m, sigma, h_r and the mode at uncut thickness `h`.

    With ``h=None`` the mode is evaluated at ``h = h_m``.
    """
    beta = friction_angle(params.friction_mu)
    h_m = min_chip_thickness(params.friction_mu, params.edge_radius_r)
    sigma = contact_stress(params.elastic_modulus_E, h_m, params.edge_radius_r)
    h_r = elastic_recovery(params, h_m)
    mode = classify_engagement(h_m if h is None else h, h_m)
    return ChipFormationState(beta=beta, h_m=h_m, sigma=sigma, h_r=h_r, mode=mode)
