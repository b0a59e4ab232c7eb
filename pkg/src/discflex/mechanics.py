"""Closed-form mechanics of a six-link flexible disc element.

Resolves the reaction forces at a disc joint under torque transmission and
converts between the buckling load a link can carry and the torque capacity
of the whole disc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Included angle between the two links meeting at a joint of a six-link disc.
SIX_LINK_JOINT_ANGLE_RAD = math.pi / 3.0


@dataclass(frozen=True)
class LinkForces:
    """Reactions of the two links meeting at a loaded joint.

    ``tensile_n`` is the pull in the stretched link, ``compressive_n`` the
    push in the buckling-prone link, ``included_angle_rad`` the angle between
    them.
    """

    tensile_n: float
    compressive_n: float
    included_angle_rad: float = SIX_LINK_JOINT_ANGLE_RAD

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tensile_n) and self.tensile_n >= 0.0):
            raise ValueError(f"tensile force must be finite and >= 0, got {self.tensile_n}")
        if not (math.isfinite(self.compressive_n) and self.compressive_n >= 0.0):
            raise ValueError(f"compressive force must be finite and >= 0, got {self.compressive_n}")
        if not (0.0 < self.included_angle_rad < math.pi):
            raise ValueError(f"included angle must lie in (0, pi), got {self.included_angle_rad}")


@dataclass(frozen=True)
class DiscGeometry:
    """Pitch circle diameter and the number of links loaded in compression."""

    pitch_circle_diameter_mm: float
    n_buckling_links: int = 3

    def __post_init__(self) -> None:
        if not (math.isfinite(self.pitch_circle_diameter_mm) and self.pitch_circle_diameter_mm > 0.0):
            raise ValueError(f"pitch circle diameter must be positive, got {self.pitch_circle_diameter_mm}")
        if self.n_buckling_links < 1:
            raise ValueError(f"need at least one buckling link, got {self.n_buckling_links}")


def pcd_from_length(length_mm: float) -> float:
    """Pitch circle diameter implied by a link length.

    For a six-link disc each link subtends 60 degrees, so the chord (link
    length) equals the pitch circle radius and d = 2*l.  Isolated here so the
    convention can be swapped in one place.
    """
    return 2.0 * length_mm


def resultant_force(forces: LinkForces) -> float:
    """Resultant of the two link reactions at the joint, in newtons."""
    f1 = forces.tensile_n
    f2 = forces.compressive_n
    sq = f1 * f1 + f2 * f2 + 2.0 * f1 * f2 * math.cos(forces.included_angle_rad)
    # Guard tiny negative round-off for obtuse angles with near-cancelling forces.
    return math.sqrt(max(sq, 0.0))


def torque_capacity(f2_n: float, geom: DiscGeometry) -> float:
    """Torque the disc transmits when each compressive link carries ``f2_n``.

    Equal tensile and compressive reactions are assumed, so the joint resultant
    is sqrt(3)*F2 and the torque is n_links * sqrt(3) * F2 * d/2 with the pitch
    circle diameter converted from millimetres to metres.  Result in N*m.
    """
    if f2_n < 0.0:
        raise ValueError(f"link force must be >= 0, got {f2_n}")
    radius_m = geom.pitch_circle_diameter_mm / 1000.0 / 2.0
    return geom.n_buckling_links * math.sqrt(3.0) * f2_n * radius_m


def min_buckling_for_torque(torque_nm: float, geom: DiscGeometry) -> float:
    """Smallest per-link buckling load that still transmits ``torque_nm``.

    Exact inverse of :func:`torque_capacity`.
    """
    if torque_nm < 0.0:
        raise ValueError(f"torque must be >= 0, got {torque_nm}")
    radius_m = geom.pitch_circle_diameter_mm / 1000.0 / 2.0
    return torque_nm / (geom.n_buckling_links * math.sqrt(3.0) * radius_m)
