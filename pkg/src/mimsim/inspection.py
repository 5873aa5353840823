"""Viewpoint planning, surface-defect detection, and coverage accounting.

Viewpoints are planned by greedy set cover over footprint tiles along patch
normals.  Defect detection fits a least-squares plane to a gridded point
cloud, thresholds the residual map at tau = max(3 * MAD-sigma, 0.15 mm),
clusters exceedances 8-connected, and sizes each cluster from its half-peak
support (parabolic profiles cross half depth at extent/sqrt(2), so the
full impact diameter is the half-peak extent times sqrt(2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from shapely.geometry import box
from shapely.ops import unary_union

from .errors import EmptyCloud, NoReachableSurface
from .geometry import quat_align_z
from .scene import Oru, Pose, SurfacePatch, WarehouseScene
from .sensors import PointCloud, SensorHead, ThermalFrame

STANDOFF_RANGE_M = (0.2, 2.0)
DEFAULT_CANDIDATE_STANDOFFS_M = (0.5, 1.0, 2.0)
RESIDUAL_FLOOR_MM = 0.15
MAD_TO_SIGMA = 1.4826
THERMAL_THRESHOLD_C = 5.0
SCRATCH_ELONGATION = 3.0


class DefectClass(Enum):
    SCRATCH = "scratch"
    IMPACT = "impact"


class AnomalyClass(Enum):
    HOT = "hot"
    COLD = "cold"


@dataclass(frozen=True)
class Viewpoint:
    """A sensing pose covering part of one patch."""

    pose: Pose
    standoff_m: float
    patch_id: str
    footprint_uv: tuple[float, float, float, float]  # (u0, v0, u1, v1), meters

    def __post_init__(self):
        lo, hi = STANDOFF_RANGE_M
        if not lo <= self.standoff_m <= hi:
            raise ValueError(f"standoff {self.standoff_m} outside [{lo}, {hi}] m")


@dataclass(frozen=True)
class InspectionPlan:
    viewpoints: tuple[Viewpoint, ...]
    coverage_fraction: float
    unreachable_patch_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class DetectionParams:
    residual_floor_mm: float = RESIDUAL_FLOOR_MM
    sigma_factor: float = 3.0
    min_cluster_samples: int = 2
    scratch_elongation: float = SCRATCH_ELONGATION


@dataclass(frozen=True)
class DetectedDefect:
    patch_id: str
    centroid_uv: tuple[float, float]  # meters, patch coordinates
    kind_guess: DefectClass
    size_mm: float  # diameter for impacts, length for scratches
    peak_residual_mm: float
    elongation: float
    n_samples: int

    def __post_init__(self):
        if self.size_mm <= 0:
            raise ValueError("detected size must be positive")


@dataclass(frozen=True)
class ThermalAnomaly:
    patch_id: str
    pixels: tuple[tuple[int, int], ...]  # (row, col)
    mean_delta_c: float
    classification: AnomalyClass


# -- viewpoint planning ---------------------------------------------------


def _camera_footprint(head: SensorHead, standoff: float) -> tuple[float, float]:
    return head.cameras[0].footprint_m(standoff)


def _tile_rects(patch: SurfacePatch, fw: float, fh: float):
    """Tile centers and covered rectangles for one footprint size."""
    nx = max(1, math.ceil(patch.extent_u / fw - 1e-9))
    ny = max(1, math.ceil(patch.extent_v / fh - 1e-9))
    for iy in range(ny):
        for ix in range(nx):
            cu = (ix + 0.5) * patch.extent_u / nx
            cv = (iy + 0.5) * patch.extent_v / ny
            rect = (
                max(0.0, cu - 0.5 * fw),
                max(0.0, cv - 0.5 * fh),
                min(patch.extent_u, cu + 0.5 * fw),
                min(patch.extent_v, cv + 0.5 * fh),
            )
            yield (cu, cv), rect


def plan_viewpoints(
    scene: WarehouseScene,
    oru: Oru,
    head: SensorHead,
    standoff_range: tuple[float, float] = STANDOFF_RANGE_M,
    candidate_standoffs: tuple[float, ...] = DEFAULT_CANDIDATE_STANDOFFS_M,
) -> InspectionPlan:
    """Greedy set-cover plan over reachable patches of the ORU.

    Candidates sit on patch normals over footprint tiles at each candidate
    standoff; the planner repeatedly takes the viewpoint adding the most
    uncovered area until reachable coverage hits 1.0 or nothing improves.
    """
    reachable = [p for p in oru.patches if p.reachable]
    unreachable = tuple(p.id for p in oru.patches if not p.reachable)
    if not reachable:
        raise NoReachableSurface(f"oru {oru.id!r} has no reachable patch")

    lo, hi = standoff_range
    standoffs = [s for s in candidate_standoffs if lo <= s <= hi]
    if not standoffs:
        raise ValueError("no candidate standoff lies inside the standoff range")

    candidates = []  # deterministic order: patch, standoff, tile
    for patch in reachable:
        for s in standoffs:
            fw, fh = _camera_footprint(head, s)
            for (cu, cv), rect in _tile_rects(patch, fw, fh):
                candidates.append((patch, s, (cu, cv), rect))

    total_area = sum(p.area for p in reachable)
    covered = {p.id: None for p in reachable}  # patch id -> shapely geometry
    covered_area = 0.0
    viewpoints: list[Viewpoint] = []

    while covered_area < total_area * (1.0 - 1e-12):
        best = None
        best_gain = 0.0
        for cand in candidates:
            patch, s, _, rect = cand
            geom = box(*rect)
            already = covered[patch.id]
            gain = geom.area if already is None else geom.difference(already).area
            if gain > best_gain + 1e-12:
                best_gain = gain
                best = cand
        if best is None:
            break
        patch, s, (cu, cv), rect = best
        geom = box(*rect)
        already = covered[patch.id]
        covered[patch.id] = geom if already is None else unary_union([already, geom])
        covered_area = sum(g.area for g in covered.values() if g is not None)
        center = patch.point_world((cu, cv))
        normal = patch.normal_world
        pose = Pose(
            position=tuple(center + s * normal),
            orientation=quat_align_z(-normal),
        )
        viewpoints.append(
            Viewpoint(pose=pose, standoff_m=s, patch_id=patch.id, footprint_uv=rect)
        )

    return InspectionPlan(
        viewpoints=tuple(viewpoints),
        coverage_fraction=min(1.0, covered_area / total_area),
        unreachable_patch_ids=unreachable,
    )


def coverage(plan: InspectionPlan, oru: Oru) -> float:
    """Fraction of reachable external area covered by the plan's footprints."""
    reachable = {p.id: p for p in oru.patches if p.reachable}
    total = sum(p.area for p in reachable.values())
    if total == 0.0:
        return 0.0
    covered = 0.0
    for pid, patch in sorted(reachable.items()):
        rects = [
            box(*vp.footprint_uv).intersection(box(0.0, 0.0, patch.extent_u, patch.extent_v))
            for vp in plan.viewpoints
            if vp.patch_id == pid
        ]
        if rects:
            covered += unary_union(rects).area
    return max(0.0, min(1.0, covered / total))


# -- surface defect detection ---------------------------------------------


def _fit_plane_residuals_mm(cloud: PointCloud) -> np.ndarray:
    """Least-squares plane fit; residual map in mm on the sample grid."""
    pts = cloud.points
    a = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(a, pts[:, 2], rcond=None)
    residual_m = pts[:, 2] - a @ coef
    return residual_m.reshape(cloud.shape) * 1000.0


def _flood_fill(mask: np.ndarray, seed_rc: tuple[int, int], claimed: np.ndarray) -> list[tuple[int, int]]:
    """8-connected component of mask containing seed, marking claimed cells."""
    rows, cols = mask.shape
    stack = [seed_rc]
    out = []
    claimed[seed_rc] = True
    while stack:
        r, c = stack.pop()
        out.append((r, c))
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols and mask[rr, cc] and not claimed[rr, cc]:
                    claimed[rr, cc] = True
                    stack.append((rr, cc))
    return out


def _label_clusters(mask: np.ndarray) -> list[list[tuple[int, int]]]:
    claimed = np.zeros_like(mask, dtype=bool)
    clusters = []
    for r, c in zip(*np.nonzero(mask)):
        if not claimed[r, c]:
            clusters.append(_flood_fill(mask, (int(r), int(c)), claimed))
    return clusters


def _principal_extents_mm(cells: list[tuple[int, int]], pitch_mm: float) -> tuple[float, float]:
    """Extents of the cell set along its principal axes, in mm."""
    pts = np.array(cells, dtype=float) * pitch_mm  # (rows, cols) -> mm
    pts -= pts.mean(axis=0)
    if len(pts) == 1:
        return (0.0, 0.0)
    cov = pts.T @ pts
    _, vecs = np.linalg.eigh(cov)
    proj = pts @ vecs
    spans = proj.max(axis=0) - proj.min(axis=0)
    major, minor = float(max(spans)), float(min(spans))
    return major, minor


def _max_pairwise_mm(cells: list[tuple[int, int]], pitch_mm: float) -> float:
    pts = np.array(cells, dtype=float) * pitch_mm
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=2)).max())


def classify_defect(detection: DetectedDefect) -> DefectClass:
    """Scratch when the cluster is elongated (major/minor >= 3), else impact."""
    if detection.elongation >= SCRATCH_ELONGATION:
        return DefectClass.SCRATCH
    return DefectClass.IMPACT


def detect_surface_defects(
    cloud: PointCloud, params: DetectionParams = DetectionParams()
) -> list[DetectedDefect]:
    """Find surface defects in a gridded height scan.

    Plane-fit residuals are thresholded at tau = max(sigma_factor * MAD-sigma,
    residual_floor); 8-connected exceedance clusters of at least
    min_cluster_samples become detections.  Impact diameter is recovered from
    the half-peak support (x sqrt(2) for the parabolic profile); scratch size
    is the major-axis length of that support.
    """
    if cloud.points.shape[0] == 0:
        raise EmptyCloud("cannot detect on an empty cloud")

    residuals = _fit_plane_residuals_mm(cloud)
    med = float(np.median(residuals))
    sigma_est = MAD_TO_SIGMA * float(np.median(np.abs(residuals - med)))
    tau = max(params.sigma_factor * sigma_est, params.residual_floor_mm)

    mask = np.abs(residuals) > tau
    pitch = cloud.pitch_mm
    detections: list[DetectedDefect] = []
    for cluster in _label_clusters(mask):
        if len(cluster) < params.min_cluster_samples:
            continue
        idx = np.array(cluster)
        mags = np.abs(residuals[idx[:, 0], idx[:, 1]])
        peak = float(mags.max())
        peak_rc = cluster[int(np.argmax(mags))]

        # grow to the half-peak support for sizing
        half_mask = np.abs(residuals) >= 0.5 * peak
        support = _flood_fill(half_mask, peak_rc, np.zeros_like(half_mask, dtype=bool))

        major, minor = _principal_extents_mm(cluster, pitch)
        elongation = (major + pitch) / (minor + pitch)

        weights = mags / mags.sum()
        crow = float((idx[:, 0] * weights).sum())
        ccol = float((idx[:, 1] * weights).sum())
        pitch_m = pitch / 1000.0
        centroid = (
            cloud.grid_origin_uv[0] + ccol * pitch_m,
            cloud.grid_origin_uv[1] + crow * pitch_m,
        )

        if elongation >= params.scratch_elongation:
            kind = DefectClass.SCRATCH
            sup_major, _ = _principal_extents_mm(support, pitch)
            size = sup_major + pitch
        else:
            kind = DefectClass.IMPACT
            size = _max_pairwise_mm(support, pitch) * math.sqrt(2.0)
        detections.append(
            DetectedDefect(
                patch_id=cloud.patch_id,
                centroid_uv=centroid,
                kind_guess=kind,
                size_mm=max(size, pitch),
                peak_residual_mm=peak,
                elongation=elongation,
                n_samples=len(cluster),
            )
        )
    detections.sort(key=lambda d: (d.centroid_uv[1], d.centroid_uv[0]))
    return detections


# -- thermal anomaly detection --------------------------------------------


def detect_thermal_anomalies(
    frame: ThermalFrame,
    expected_c: float,
    threshold_c: float = THERMAL_THRESHOLD_C,
) -> list[ThermalAnomaly]:
    """Cluster pixels deviating from the expected temperature by > threshold."""
    delta = frame.values - expected_c
    anomalies: list[ThermalAnomaly] = []
    for sign, cls in ((1.0, AnomalyClass.HOT), (-1.0, AnomalyClass.COLD)):
        mask = sign * delta > threshold_c
        for cluster in _label_clusters(mask):
            idx = np.array(cluster)
            mean_delta = float(delta[idx[:, 0], idx[:, 1]].mean())
            anomalies.append(
                ThermalAnomaly(
                    patch_id=frame.patch_id,
                    pixels=tuple(sorted(cluster)),
                    mean_delta_c=mean_delta,
                    classification=cls,
                )
            )
    anomalies.sort(key=lambda a: a.pixels[0])
    return anomalies
