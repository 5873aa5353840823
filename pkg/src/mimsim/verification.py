"""Statistical verification of detection reliability (the 90/95 rule).

A hit/miss campaign injects one boundary-size defect per trial, runs the
scan-and-detect pipeline, and certifies the probability of detection with
the exact one-sided Clopper-Pearson lower confidence bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidArguments
from .inspection import DetectionParams, detect_surface_defects
from .scene import Defect, ImpactCrater, Scratch, WarehouseScene, add_defect
from .sensors import SensorHead, scan_profile

DEFAULT_TARGET_POD = 0.90
DEFAULT_CONFIDENCE = 0.95
HIT_RADIUS_MM = 2.0
BISECTION_TOL = 1e-10

# requirement-boundary defect templates
BOUNDARY_CRATER = ImpactCrater(diameter_mm=0.6, depth_mm=0.2)
BOUNDARY_SCRATCH = Scratch(depth_mm=0.3, width_mm=1.0, length_mm=5.0)


def _log_binomial_tail(n: int, k: int, p: float, log_comb: np.ndarray) -> float:
    """log P[Binomial(n, p) >= k], accumulated in the log domain."""
    if p <= 0.0:
        return -math.inf if k > 0 else 0.0
    if p >= 1.0:
        return 0.0
    i = np.arange(k, n + 1)
    log_terms = log_comb[k:] + i * math.log(p) + (n - i) * math.log1p(-p)
    m = log_terms.max()
    return float(m + math.log(np.exp(log_terms - m).sum()))


def clopper_pearson_lower(k: int, n: int, alpha: float) -> float:
    """Exact one-sided lower confidence bound for a binomial proportion.

    Returns the largest p with P[Binomial(n, p) >= k] <= alpha: 0 for k = 0,
    alpha**(1/n) for k = n, otherwise bisection on the exact binomial tail
    to 1e-10.
    """
    if not isinstance(k, (int, np.integer)) or not isinstance(n, (int, np.integer)):
        raise InvalidArguments("k and n must be integers")
    if n < 1 or not 0 <= k <= n:
        raise InvalidArguments(f"need 0 <= k <= n with n >= 1, got k={k}, n={n}")
    if not 0.0 < alpha < 1.0:
        raise InvalidArguments(f"alpha must lie in (0, 1), got {alpha}")
    if k == 0:
        return 0.0
    if k == n:
        return alpha ** (1.0 / n)

    log_alpha = math.log(alpha)
    i = np.arange(0, n + 1)
    log_comb = (
        math.lgamma(n + 1)
        - np.array([math.lgamma(j + 1) for j in i])
        - np.array([math.lgamma(n - j + 1) for j in i])
    )
    lo, hi = 0.0, 1.0  # tail is increasing in p; root of tail(p) = alpha
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _log_binomial_tail(n, k, mid, log_comb) > log_alpha:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def min_trials_zero_failure(target_pod: float, confidence: float) -> int:
    """Smallest zero-failure sample size demonstrating the POD target."""
    if not 0.0 < target_pod < 1.0:
        raise InvalidArguments(f"target_pod must lie in (0, 1), got {target_pod}")
    if not 0.0 < confidence < 1.0:
        raise InvalidArguments(f"confidence must lie in (0, 1), got {confidence}")
    x = math.log(1.0 - confidence) / math.log(target_pod)
    return max(1, math.ceil(x - 1e-9))


@dataclass(frozen=True)
class PodSpec:
    """Campaign description: defect template, target patch, trial count."""

    template: Union[ImpactCrater, Scratch] = BOUNDARY_CRATER
    patch_id: str = "coupon"
    n_trials: int = 29
    base_seed: int = 0
    target_pod: float = DEFAULT_TARGET_POD
    confidence: float = DEFAULT_CONFIDENCE
    detection: DetectionParams = field(default_factory=DetectionParams)

    def __post_init__(self):
        if self.n_trials < 1:
            raise InvalidArguments("n_trials must be >= 1")


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    placement_uv: tuple[float, float]
    detected: bool


@dataclass(frozen=True)
class PodResult:
    hits: int
    trials: int
    pod_lower_bound: float
    confidence: float
    target_pod: float
    records: tuple[TrialRecord, ...]

    @property
    def passed(self) -> bool:
        return self.pod_lower_bound >= self.target_pod


def _placement_inset_m(template: Union[ImpactCrater, Scratch]) -> tuple[float, float]:
    """Inset from the patch border so the defect never truncates."""
    if isinstance(template, ImpactCrater):
        r = 0.5 * template.diameter_mm / 1000.0
        return (r, r)
    return (0.5 * template.length_mm / 1000.0, 0.5 * template.width_mm / 1000.0)


def run_pod_campaign(scene: WarehouseScene, head: SensorHead, spec: PodSpec) -> PodResult:
    """Monte-Carlo hit/miss campaign against the scan-and-detect pipeline.

    Trial i clones the scene, injects one template defect at a placement
    drawn from seed base_seed + i, scans, detects, and scores a hit when a
    detection centroid lies within 2 mm of the injected location.
    """
    patch = scene.patch(spec.patch_id)
    inset_u, inset_v = _placement_inset_m(spec.template)
    if patch.extent_u <= 2 * inset_u or patch.extent_v <= 2 * inset_v:
        raise InvalidArguments(
            f"patch {spec.patch_id!r} is too small for the defect template"
        )

    records = []
    hits = 0
    for i in range(spec.n_trials):
        trial_seed = spec.base_seed + i
        rng = np.random.default_rng([trial_seed, 1])  # placement stream
        u = rng.uniform(inset_u, patch.extent_u - inset_u)
        v = rng.uniform(inset_v, patch.extent_v - inset_v)
        trial_scene = add_defect(
            scene, Defect(kind=spec.template, patch_id=spec.patch_id, uv=(u, v))
        )
        cloud = scan_profile(trial_scene, head, spec.patch_id, seed=trial_seed)
        detections = detect_surface_defects(cloud, spec.detection)
        hit = any(
            math.dist((d.centroid_uv[0] * 1000.0, d.centroid_uv[1] * 1000.0),
                      (u * 1000.0, v * 1000.0)) <= HIT_RADIUS_MM
            for d in detections
        )
        hits += hit
        records.append(TrialRecord(seed=trial_seed, placement_uv=(u, v), detected=hit))

    alpha = 1.0 - spec.confidence
    bound = clopper_pearson_lower(hits, spec.n_trials, alpha)
    return PodResult(
        hits=hits,
        trials=spec.n_trials,
        pod_lower_bound=bound,
        confidence=spec.confidence,
        target_pod=spec.target_pod,
        records=tuple(records),
    )
