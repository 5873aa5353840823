"""Parameterized sensor models producing synthetic, seeded measurements.

All captures are pure functions of (scene, head, seed): the camera model
reports which surface features are optically resolvable, the profilometer
returns a gridded point cloud of surface heights, and the thermal imager
returns an 80x62 temperature frame.  Inspection standoff is limited to
0.2-2.0 m for every sensor.

Default optics (8 mm focal length, 1.2 um pixel pitch, Nyquist factor 2)
resolve a 0.6 mm feature exactly at the 2 m standoff limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonPositiveDistance, NotInView, OutOfRange
from .geometry import angle_between
from .scene import (
    Defect,
    ImpactCrater,
    Pose,
    Scratch,
    SurfacePatch,
    WarehouseScene,
    height_field,
    temperature_field,
)

INSPECTION_RANGE_M = (0.2, 2.0)
# half-angle of the cone around the head boresight inside which a target
# counts as observed (also the eye-to-hand check used by maintenance)
VIEW_CONE_HALF_ANGLE_DEG = 60.0

THERMAL_RESOLUTION_PX = (80, 62)
THERMAL_RANGE_C = (-40.0, 150.0)


@dataclass(frozen=True)
class CameraModel:
    """Pinhole visible-light camera at one corner of the sensor enclosure."""

    focal_length_m: float = 8e-3
    pixel_pitch_m: float = 1.2e-6
    resolution_px: tuple[int, int] = (4608, 2592)
    mount_offset_m: tuple[float, float, float] = (0.0, 0.0, 0.0)
    min_feature_px: float = 2.0

    def __post_init__(self):
        if self.focal_length_m <= 0 or self.pixel_pitch_m <= 0 or self.min_feature_px <= 0:
            raise ValueError("camera parameters must be positive")
        if min(self.resolution_px) <= 0:
            raise ValueError("camera resolution must be positive")

    @property
    def fov_deg(self) -> float:
        half = math.atan(0.5 * self.resolution_px[0] * self.pixel_pitch_m / self.focal_length_m)
        return math.degrees(2.0 * half)

    def footprint_m(self, distance_m: float) -> tuple[float, float]:
        """Imaged area (width, height) on a fronto-parallel surface."""
        scale = distance_m / self.focal_length_m
        return (
            self.resolution_px[0] * self.pixel_pitch_m * scale,
            self.resolution_px[1] * self.pixel_pitch_m * scale,
        )


def default_corner_cameras() -> tuple[CameraModel, ...]:
    """Four identical cameras at the corners of the enclosure front panel."""
    offsets = [(-0.05, -0.04, 0.0), (0.05, -0.04, 0.0), (-0.05, 0.04, 0.0), (0.05, 0.04, 0.0)]
    return tuple(CameraModel(mount_offset_m=o) for o in offsets)


@dataclass(frozen=True)
class ProfilometerModel:
    """Structured-light scanner sampling surface heights on a regular grid."""

    sample_pitch_mm: float = 0.1
    depth_noise_sigma_mm: float = 0.02
    scan_area_m: tuple[float, float] = (0.02, 0.02)
    working_range_m: tuple[float, float] = (0.2, 2.0)

    def __post_init__(self):
        if self.sample_pitch_mm <= 0:
            raise ValueError("sample pitch must be positive")
        if self.depth_noise_sigma_mm < 0:
            raise ValueError("noise sigma must be >= 0")
        lo, hi = self.working_range_m
        if not (INSPECTION_RANGE_M[0] <= lo < hi <= INSPECTION_RANGE_M[1]):
            raise ValueError(f"working range must lie within {INSPECTION_RANGE_M}")


@dataclass(frozen=True)
class ThermalModel:
    """Long-wave IR imager; resolution and range are fixed by requirement."""

    resolution_px: tuple[int, int] = THERMAL_RESOLUTION_PX
    range_c: tuple[float, float] = THERMAL_RANGE_C
    netd_c: float = 0.5

    def __post_init__(self):
        if tuple(self.resolution_px) != THERMAL_RESOLUTION_PX:
            raise ValueError(f"thermal resolution is fixed at {THERMAL_RESOLUTION_PX}")
        if tuple(self.range_c) != THERMAL_RANGE_C:
            raise ValueError(f"thermal range is fixed at {THERMAL_RANGE_C}")
        if self.netd_c < 0:
            raise ValueError("NETD must be >= 0")


@dataclass(frozen=True)
class SensorHead:
    """Tilting sensor enclosure: four corner cameras, scanner, thermal imager."""

    base_pose: Pose
    tilt_deg: float = 0.0
    illumination_on: bool = False
    cameras: tuple[CameraModel, ...] = field(default_factory=default_corner_cameras)
    profilometer: ProfilometerModel = ProfilometerModel()
    thermal: ThermalModel = ThermalModel()

    def __post_init__(self):
        if not -90.0 <= self.tilt_deg <= 90.0:
            raise ValueError("tilt must lie within [-90, +90] degrees")
        if len(self.cameras) != 4:
            raise ValueError("sensor head carries exactly four cameras")

    @property
    def position(self) -> np.ndarray:
        return np.asarray(self.base_pose.position, dtype=float)

    @property
    def boresight(self) -> np.ndarray:
        """Optical axis: base +z tilted about the head x axis."""
        t = math.radians(self.tilt_deg)
        local = np.array([0.0, -math.sin(t), math.cos(t)])
        return self.base_pose.rotate(local)

    def camera_position(self, cam: CameraModel) -> np.ndarray:
        return self.base_pose.transform(cam.mount_offset_m)


@dataclass(frozen=True)
class PointCloud:
    """Gridded profilometer samples in the sensor frame (meters).

    x/y are in-plane offsets from the scan center, z the measured height
    deviation.  Grid metadata (origin in patch coordinates, pitch, shape)
    lets detectors reason on the sample lattice.
    """

    points: np.ndarray  # (N, 3), row-major over (v, u) grid
    patch_id: str
    seed: int
    grid_origin_uv: tuple[float, float]  # patch coords of grid node (0, 0), meters
    pitch_mm: float
    shape: tuple[int, int]  # (rows along v, cols along u)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must be an (N, 3) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        if pts.shape[0] != self.shape[0] * self.shape[1]:
            raise ValueError("shape metadata inconsistent with point count")
        object.__setattr__(self, "points", pts)

    def z_grid_mm(self) -> np.ndarray:
        return self.points[:, 2].reshape(self.shape) * 1000.0

    def node_uv(self, row: int, col: int) -> tuple[float, float]:
        pitch = self.pitch_mm / 1000.0
        return (self.grid_origin_uv[0] + col * pitch, self.grid_origin_uv[1] + row * pitch)

    def to_xyz(self) -> str:
        """ASCII export, one `x y z` triple per line, 9 significant digits."""
        lines = [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in self.points]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ThermalFrame:
    """80x62 grid of Celsius values, clamped to the sensor range."""

    values: np.ndarray  # (62, 80): rows x cols
    patch_id: str
    seed: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expected = (THERMAL_RESOLUTION_PX[1], THERMAL_RESOLUTION_PX[0])
        if vals.shape != expected:
            raise ValueError(f"thermal frame must be {expected}, got {vals.shape}")
        if vals.min() < THERMAL_RANGE_C[0] - 1e-9 or vals.max() > THERMAL_RANGE_C[1] + 1e-9:
            raise ValueError("thermal frame values outside sensor range")
        object.__setattr__(self, "values", vals)

    def to_csv(self) -> str:
        lines = [",".join(f"{v:.6f}" for v in row) for row in self.values]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Image:
    """Visible-light capture: footprint on the patch plus resolvable features."""

    patch_id: str
    footprint_uv: tuple[float, float, float, float]  # (u0, v0, u1, v1), meters
    resolvable_features: tuple[tuple[int, float], ...]  # (defect index, apparent px)
    illumination_used: bool
    distance_m: float

    def contains_uv(self, uv) -> bool:
        u0, v0, u1, v1 = self.footprint_uv
        return u0 <= uv[0] <= u1 and v0 <= uv[1] <= v1


def gsd(camera: CameraModel, distance_m: float) -> float:
    """Ground sample distance in mm per pixel at the given standoff."""
    if distance_m <= 0:
        raise NonPositiveDistance(f"distance must be positive, got {distance_m}")
    return distance_m * camera.pixel_pitch_m / camera.focal_length_m * 1000.0


def visible_feature_size_mm(defect: Defect) -> Optional[float]:
    """Apparent optical size of a defect; None for non-visual defects."""
    if isinstance(defect.kind, ImpactCrater):
        return defect.kind.diameter_mm
    if isinstance(defect.kind, Scratch):
        return defect.kind.width_mm
    return None


def _standoff(head: SensorHead, patch: SurfacePatch) -> float:
    return float(np.linalg.norm(patch.center_world - head.position))


def _check_view_cone(origin: np.ndarray, boresight: np.ndarray, target: np.ndarray, what: str):
    angle = math.degrees(angle_between(boresight, target - origin))
    if angle > VIEW_CONE_HALF_ANGLE_DEG:
        raise NotInView(f"{what}: {angle:.1f} deg off boresight")


def _aim_point_uv(head: SensorHead, patch: SurfacePatch) -> tuple[float, float]:
    """Patch uv where the boresight meets the patch plane, clamped in bounds."""
    origin = np.asarray(patch.frame.position, dtype=float)
    normal = patch.normal_world
    b = head.boresight
    denom = float(np.dot(b, normal))
    if abs(denom) < 1e-12:
        raise NotInView(f"boresight parallel to patch {patch.id!r}")
    t = float(np.dot(origin - head.position, normal)) / denom
    if t <= 0.0:
        raise NotInView(f"patch {patch.id!r} behind the sensor head")
    hit = head.position + t * b - origin
    u = float(np.dot(hit, patch.frame.rotate([1.0, 0.0, 0.0])))
    v = float(np.dot(hit, patch.frame.rotate([0.0, 1.0, 0.0])))
    return (min(max(u, 0.0), patch.extent_u), min(max(v, 0.0), patch.extent_v))


def capture_image(
    scene: WarehouseScene,
    head: SensorHead,
    target_patch: str,
    ambient_light: bool = False,
) -> Image:
    """Image the target patch and list optically resolvable defects.

    The cameras look where the boresight meets the patch.  A feature
    resolves when it spans at least min_feature_px pixels and the scene is
    lit (head illumination or ambient light).
    """
    patch = scene.patch(target_patch)
    aim_uv = _aim_point_uv(head, patch)
    aim_world = patch.point_world(aim_uv)
    distance = float(np.linalg.norm(aim_world - head.position))
    lo, hi = INSPECTION_RANGE_M
    if not lo <= distance <= hi:
        raise OutOfRange(f"standoff {distance:.3f} m outside [{lo}, {hi}] m")

    seeing = []
    for cam in head.cameras:
        pos = head.camera_position(cam)
        off_axis = math.degrees(angle_between(head.boresight, aim_world - pos))
        if off_axis <= 0.5 * cam.fov_deg:
            seeing.append((float(np.linalg.norm(aim_world - pos)), cam))
    if not seeing:
        raise NotInView(f"patch {target_patch!r} outside every camera frustum")
    cam_distance, cam = min(seeing, key=lambda t: t[0])

    fw, fh = cam.footprint_m(cam_distance)
    cu, cv = aim_uv
    footprint = (
        max(0.0, cu - 0.5 * fw),
        max(0.0, cv - 0.5 * fh),
        min(patch.extent_u, cu + 0.5 * fw),
        min(patch.extent_v, cv + 0.5 * fh),
    )

    lit = head.illumination_on or ambient_light
    resolution_floor = cam.min_feature_px * gsd(cam, cam_distance)
    resolvable = []
    for idx, defect in enumerate(scene.defects):
        if defect.patch_id != patch.id:
            continue
        size = visible_feature_size_mm(defect)
        if size is None:
            continue
        u0, v0, u1, v1 = footprint
        if not (u0 <= defect.uv[0] <= u1 and v0 <= defect.uv[1] <= v1):
            continue
        if lit and size >= resolution_floor:
            resolvable.append((idx, size / gsd(cam, cam_distance)))

    return Image(
        patch_id=patch.id,
        footprint_uv=footprint,
        resolvable_features=tuple(resolvable),
        illumination_used=lit,
        distance_m=cam_distance,
    )


def scan_profile(
    scene: WarehouseScene,
    head: SensorHead,
    target_patch: str,
    seed: int,
) -> PointCloud:
    """Structured-light height scan of the patch region around its center.

    Samples a regular grid at the profilometer pitch; measured z is the
    true surface height plus seeded gaussian depth noise.
    """
    patch = scene.patch(target_patch)
    prof = head.profilometer
    distance = _standoff(head, patch)
    lo, hi = prof.working_range_m
    if not lo <= distance <= hi:
        raise OutOfRange(f"standoff {distance:.3f} m outside working range [{lo}, {hi}] m")

    pitch = prof.sample_pitch_mm / 1000.0
    cu, cv = patch.center_uv()
    u0 = max(0.0, cu - 0.5 * prof.scan_area_m[0])
    u1 = min(patch.extent_u, cu + 0.5 * prof.scan_area_m[0])
    v0 = max(0.0, cv - 0.5 * prof.scan_area_m[1])
    v1 = min(patch.extent_v, cv + 0.5 * prof.scan_area_m[1])
    n_u = int(math.floor((u1 - u0) / pitch + 1e-9)) + 1
    n_v = int(math.floor((v1 - v0) / pitch + 1e-9)) + 1

    us = u0 + np.arange(n_u) * pitch
    vs = v0 + np.arange(n_v) * pitch
    uu, vv = np.meshgrid(us, vs)  # (n_v, n_u)
    heights_mm = height_field(scene, patch.id, uu, vv)
    if prof.depth_noise_sigma_mm > 0:
        rng = np.random.default_rng(seed)
        heights_mm = heights_mm + rng.normal(0.0, prof.depth_noise_sigma_mm, size=heights_mm.shape)

    points = np.column_stack(
        [(uu - cu).ravel(), (vv - cv).ravel(), heights_mm.ravel() / 1000.0]
    )
    return PointCloud(
        points=points,
        patch_id=patch.id,
        seed=seed,
        grid_origin_uv=(float(us[0]), float(vs[0])),
        pitch_mm=prof.sample_pitch_mm,
        shape=(n_v, n_u),
    )


def capture_thermal(
    scene: WarehouseScene,
    head: SensorHead,
    target_patch: str,
    seed: int = 0,
) -> ThermalFrame:
    """Thermal frame of the patch: per-pixel mean temperature plus NETD noise.

    The patch fills the frame; each pixel averages a 2x2 subsample of its
    footprint and the result is clamped to the sensor range.
    """
    patch = scene.patch(target_patch)
    distance = _standoff(head, patch)
    lo, hi = INSPECTION_RANGE_M
    if not lo <= distance <= hi:
        raise OutOfRange(f"standoff {distance:.3f} m outside [{lo}, {hi}] m")
    _check_view_cone(head.position, head.boresight, patch.center_world, f"patch {target_patch!r}")

    cols, rows = head.thermal.resolution_px
    du = patch.extent_u / cols
    dv = patch.extent_v / rows
    # 2x2 subsamples at the quarter points of each pixel footprint
    sub = np.array([0.25, 0.75])
    u_centers = np.arange(cols)[None, :, None] * du + sub[None, None, :] * du  # (1, cols, 2)
    v_centers = np.arange(rows)[:, None, None] * dv + sub[None, None, :] * dv  # (rows, 1, 2)
    temps = np.zeros((rows, cols))
    for i in range(2):
        for j in range(2):
            temps += temperature_field(
                scene, patch.id, u_centers[:, :, j], v_centers[:, :, i]
            )
    temps *= 0.25

    if head.thermal.netd_c > 0:
        rng = np.random.default_rng(seed)
        temps = temps + rng.normal(0.0, head.thermal.netd_c, size=temps.shape)
    temps = np.clip(temps, *head.thermal.range_c)
    return ThermalFrame(values=temps, patch_id=patch.id, seed=seed)
