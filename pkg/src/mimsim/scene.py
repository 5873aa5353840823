"""Geometric and thermal model of the warehouse scene.

Fixture points, ORU surface patches, injectable defects and temperature
fields form the ground truth that every synthetic sensor samples.  Scene
values are immutable; mutators return new scenes.

Conventions: positions and patch coordinates in meters, defect sizes in
millimeters, temperatures in degrees Celsius.  Patch coordinates (u, v)
run from (0, 0) at the patch origin to (extent_u, extent_v); a scratch
groove runs parallel to the patch u axis.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import OutOfBounds, UnknownPatch
from .geometry import IDENTITY_QUAT, quat_norm, quat_rotate

QUAT_NORM_TOL = 1e-9


class LocationClass(Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Pose:
    """Rigid-body pose: position in meters, unit quaternion (w, x, y, z)."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = IDENTITY_QUAT

    def __post_init__(self):
        if len(self.position) != 3 or not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"position must be 3 finite components, got {self.position}")
        if abs(quat_norm(self.orientation) - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"orientation must be a unit quaternion, got {self.orientation}")
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        object.__setattr__(self, "orientation", tuple(float(c) for c in self.orientation))

    def transform(self, local) -> np.ndarray:
        """Map a point from this pose's frame into the world frame."""
        return np.asarray(self.position, dtype=float) + quat_rotate(self.orientation, local)

    def rotate(self, v) -> np.ndarray:
        return quat_rotate(self.orientation, v)

    @property
    def z_axis(self) -> np.ndarray:
        return quat_rotate(self.orientation, [0.0, 0.0, 1.0])


@dataclass(frozen=True)
class FixturePoint:
    """Designated structural attachment point a walking leg can latch onto."""

    id: str
    pose: Pose
    location_class: LocationClass = LocationClass.EXTERNAL
    occupant: Optional[str] = None  # port id currently latched here


@dataclass(frozen=True)
class SurfacePatch:
    """Planar rectangular surface element, u along frame x, v along frame y."""

    id: str
    frame: Pose
    extent_u: float
    extent_v: float
    emissivity: float = 0.9
    base_temperature: float = 20.0
    reachable: bool = True

    def __post_init__(self):
        if self.extent_u <= 0 or self.extent_v <= 0:
            raise ValueError(f"patch {self.id}: extents must be positive")
        if not 0.0 <= self.emissivity <= 1.0:
            raise ValueError(f"patch {self.id}: emissivity must lie in [0, 1]")
        if not math.isfinite(self.base_temperature):
            raise ValueError(f"patch {self.id}: base_temperature must be finite")

    @property
    def area(self) -> float:
        return self.extent_u * self.extent_v

    def center_uv(self) -> tuple[float, float]:
        return (0.5 * self.extent_u, 0.5 * self.extent_v)

    def point_world(self, uv) -> np.ndarray:
        return self.frame.transform([uv[0], uv[1], 0.0])

    @property
    def center_world(self) -> np.ndarray:
        cu, cv = self.center_uv()
        return self.point_world((cu, cv))

    @property
    def normal_world(self) -> np.ndarray:
        return self.frame.z_axis

    def contains_uv(self, uv) -> bool:
        return 0.0 <= uv[0] <= self.extent_u and 0.0 <= uv[1] <= self.extent_v


@dataclass(frozen=True)
class Scratch:
    """Groove with parabolic cross-section, long axis parallel to patch u."""

    depth_mm: float
    width_mm: float
    length_mm: float

    def __post_init__(self):
        if min(self.depth_mm, self.width_mm, self.length_mm) <= 0:
            raise ValueError("scratch dimensions must be positive")


@dataclass(frozen=True)
class ImpactCrater:
    """Paraboloidal pit: h(r) = -depth * (1 - (r/R)^2) inside r < R."""

    diameter_mm: float
    depth_mm: float

    def __post_init__(self):
        if min(self.diameter_mm, self.depth_mm) <= 0:
            raise ValueError("crater dimensions must be positive")


@dataclass(frozen=True)
class ThermalHotspot:
    """Temperature offset falling linearly to zero at radius_mm."""

    delta_c: float
    radius_mm: float

    def __post_init__(self):
        if self.radius_mm <= 0:
            raise ValueError("hotspot radius must be positive")
        if self.delta_c == 0:
            raise ValueError("hotspot delta must be nonzero")


DefectKind = Union[Scratch, ImpactCrater, ThermalHotspot]


@dataclass(frozen=True)
class Defect:
    kind: DefectKind
    patch_id: str
    uv: tuple[float, float]  # meters, patch coordinates

    def __post_init__(self):
        object.__setattr__(self, "uv", (float(self.uv[0]), float(self.uv[1])))


@dataclass(frozen=True)
class Oru:
    """Orbital replacement unit: a serviced payload with external patches."""

    id: str
    patches: tuple[SurfacePatch, ...]
    bounding_box: tuple[float, float, float]
    pose: Pose = Pose((0.0, 0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        if not self.patches:
            raise ValueError(f"oru {self.id}: needs at least one patch")
        ids = [p.id for p in self.patches]
        if len(set(ids)) != len(ids):
            raise ValueError(f"oru {self.id}: duplicate patch ids")


@dataclass(frozen=True)
class WarehouseScene:
    fixtures: tuple[FixturePoint, ...] = ()
    orus: tuple[Oru, ...] = ()
    structure_patches: tuple[SurfacePatch, ...] = ()
    defects: tuple[Defect, ...] = ()
    ambient_temperature: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "fixtures", tuple(self.fixtures))
        object.__setattr__(self, "orus", tuple(self.orus))
        object.__setattr__(self, "structure_patches", tuple(self.structure_patches))
        object.__setattr__(self, "defects", tuple(self.defects))
        fixture_ids = [f.id for f in self.fixtures]
        if len(set(fixture_ids)) != len(fixture_ids):
            raise ValueError("duplicate fixture ids")
        patch_ids = [p.id for p in self.iter_patches()]
        if len(set(patch_ids)) != len(patch_ids):
            raise ValueError("patch ids must be unique scene-wide")
        for d in self.defects:
            patch = self._find_patch(d.patch_id)
            if patch is None:
                raise UnknownPatch(f"defect references unknown patch {d.patch_id!r}")
            if not patch.contains_uv(d.uv):
                raise OutOfBounds(f"defect uv {d.uv} outside patch {d.patch_id!r}")

    def iter_patches(self):
        for oru in self.orus:
            yield from oru.patches
        yield from self.structure_patches

    def _find_patch(self, patch_id: str) -> Optional[SurfacePatch]:
        for p in self.iter_patches():
            if p.id == patch_id:
                return p
        return None

    def patch(self, patch_id: str) -> SurfacePatch:
        p = self._find_patch(patch_id)
        if p is None:
            raise UnknownPatch(f"no patch {patch_id!r} in scene")
        return p

    def fixture(self, fixture_id: str) -> FixturePoint:
        for f in self.fixtures:
            if f.id == fixture_id:
                return f
        raise KeyError(f"no fixture {fixture_id!r} in scene")

    def defects_on(self, patch_id: str) -> tuple[Defect, ...]:
        return tuple(d for d in self.defects if d.patch_id == patch_id)


def add_defect(scene: WarehouseScene, defect: Defect) -> WarehouseScene:
    """Return a new scene with the defect appended.

    Raises UnknownPatch when the target patch does not exist and OutOfBounds
    when the uv coordinate falls outside the patch extents.
    """
    patch = scene._find_patch(defect.patch_id)
    if patch is None:
        raise UnknownPatch(f"no patch {defect.patch_id!r} in scene")
    if not patch.contains_uv(defect.uv):
        raise OutOfBounds(f"uv {defect.uv} outside patch {defect.patch_id!r}")
    return dataclasses.replace(scene, defects=scene.defects + (defect,))


def height_field(scene: WarehouseScene, patch_id: str, u, v) -> np.ndarray:
    """Signed surface height in millimeters at patch coordinates (u, v).

    Accepts scalars or broadcastable arrays (meters).  Height is the sum of
    all displacement profiles on the patch; thermal hotspots do not displace
    the surface.
    """
    patch = scene.patch(patch_id)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    h = np.zeros(np.broadcast(u, v).shape, dtype=float)
    for d in scene.defects_on(patch.id):
        du_mm = (u - d.uv[0]) * 1000.0
        dv_mm = (v - d.uv[1]) * 1000.0
        kind = d.kind
        if isinstance(kind, ImpactCrater):
            radius = 0.5 * kind.diameter_mm
            r2 = du_mm * du_mm + dv_mm * dv_mm
            inside = r2 < radius * radius
            h -= np.where(inside, kind.depth_mm * (1.0 - r2 / (radius * radius)), 0.0)
        elif isinstance(kind, Scratch):
            half_w = 0.5 * kind.width_mm
            inside = (np.abs(du_mm) <= 0.5 * kind.length_mm) & (np.abs(dv_mm) < half_w)
            cross = dv_mm / half_w
            h -= np.where(inside, kind.depth_mm * (1.0 - cross * cross), 0.0)
        # ThermalHotspot: no surface displacement
    return h


def surface_height(scene: WarehouseScene, patch_id: str, uv) -> float:
    """Scalar height in mm, validating that uv lies inside the patch."""
    patch = scene.patch(patch_id)
    if not patch.contains_uv(uv):
        raise OutOfBounds(f"uv {uv} outside patch {patch_id!r}")
    return float(height_field(scene, patch_id, uv[0], uv[1]))


def temperature_field(scene: WarehouseScene, patch_id: str, u, v) -> np.ndarray:
    """Surface temperature in Celsius at patch coordinates (arrays ok)."""
    patch = scene.patch(patch_id)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    t = np.full(np.broadcast(u, v).shape, patch.base_temperature, dtype=float)
    for d in scene.defects_on(patch.id):
        if not isinstance(d.kind, ThermalHotspot):
            continue
        du_mm = (u - d.uv[0]) * 1000.0
        dv_mm = (v - d.uv[1]) * 1000.0
        r = np.sqrt(du_mm * du_mm + dv_mm * dv_mm)
        t += d.kind.delta_c * np.clip(1.0 - r / d.kind.radius_mm, 0.0, None)
    return t


def surface_temperature(scene: WarehouseScene, patch_id: str, uv) -> float:
    return float(temperature_field(scene, patch_id, uv[0], uv[1]))


def external_area(oru: Oru) -> float:
    """Total external surface area of the ORU in square meters."""
    return sum(p.area for p in oru.patches)
