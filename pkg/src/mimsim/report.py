"""Scenario execution and report assembly.

Runs the scenario task, fills the requirement-traceability table (one row
per inspection-and-maintenance requirement, status pass / fail /
not-exercised), and serializes everything into a JSON report with stable
key order so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import interconnect as ic
from . import locomotion as loco
from . import maintenance as mt
from .errors import ConfigError, IoError, MimError, NoPath
from .inspection import (
    THERMAL_THRESHOLD_C,
    DetectionParams,
    detect_surface_defects,
    detect_thermal_anomalies,
    plan_viewpoints,
)
from .scene import ImpactCrater, Oru, Scratch, ThermalHotspot, WarehouseScene
from .scenario import Scenario, parse_defect_kind
from .sensors import SensorHead, capture_image, capture_thermal, scan_profile
from .verification import BOUNDARY_CRATER, PodSpec, run_pod_campaign
from .presets import head_over_patch

# requirement rows, in table order; every report carries each exactly once
REQUIREMENT_ROWS: tuple[tuple[str, str], ...] = (
    ("payloads", "full NDT coverage of reachable external surfaces"),
    ("spacecraft", "external inspection without disassembly"),
    ("profilometry", "scratch damage detectable from 0.3 mm depth"),
    ("resolution", "impact damage detectable from 0.6 mm diameter"),
    ("reliability", "90% detection probability at 95% confidence"),
    ("range", "inspection standoff between 0.2 m and 2 m"),
    ("thermal", "temperature anomalies resolved across -40 to 150 C"),
    ("illumination", "onboard ring illumination used for vision"),
    ("handling", "parts handled with dedicated robotic tools"),
    ("grasping", "gripper envelope 0.5 cm to 10 cm"),
    ("torque", "torque envelope 2.7 Nm to 30 Nm"),
)

MATCH_RADIUS_MM = 2.0


@dataclass
class RunResult:
    report: dict[str, Any]
    exit_code: int
    artifacts: dict[str, str] = field(default_factory=dict)
    stdout_lines: list[str] = field(default_factory=list)


class _Trace:
    def __init__(self):
        self.rows = {key: ("not-exercised", "") for key, _ in REQUIREMENT_ROWS}

    def set(self, key: str, ok: bool, detail: str):
        self.rows[key] = ("pass" if ok else "fail", detail)

    def table(self) -> list[dict[str, str]]:
        return [
            {
                "element": key,
                "requirement": requirement,
                "status": self.rows[key][0],
                "detail": self.rows[key][1],
            }
            for key, requirement in REQUIREMENT_ROWS
        ]

    def any_failed(self) -> bool:
        return any(status == "fail" for status, _ in self.rows.values())


def _power_dict(report: ic.PowerReport) -> dict[str, Any]:
    return {
        "total_power_w": report.total_power_w,
        "bus_voltage_v": report.bus_voltage_v,
        "total_current_a": report.total_current_a,
        "limit_a": report.limit_a,
        "within_limit": report.within_limit,
    }


def _configuration_label(assembly: Optional[ic.AssemblyGraph]) -> Optional[str]:
    if assembly is None:
        return None
    try:
        return ic.validate_configuration(assembly).value
    except MimError as exc:
        return f"invalid ({type(exc).__name__})"


def run(scenario: Scenario) -> RunResult:
    """Dispatch the scenario task and assemble the report.

    Exit code 0 when the task and every exercised requirement row pass,
    1 on a requirement violation or task failure.  Configuration problems
    raise ConfigError (exit 2 in the CLI).
    """
    trace = _Trace()
    report: dict[str, Any] = {
        "scenario": {
            "scene": scenario.raw.get("scene"),
            "seed": scenario.seed,
            "task": scenario.task,
        },
        "configuration": _configuration_label(scenario.assembly),
        "power": _power_dict(ic.power_check(scenario.assembly)) if scenario.assembly else None,
        "plan": None,
        "coverage": None,
        "detections": [],
        "thermal_anomalies": [],
        "pod": None,
        "maintenance_log": [],
    }
    artifacts: dict[str, str] = {}
    stdout_lines: list[str] = []

    task_type = scenario.task.get("type")
    if task_type in ("inspect", "inspect_structure"):
        task_ok = _run_inspect(scenario, report, trace, artifacts)
    elif task_type == "walk":
        task_ok = _run_walk(scenario, report, stdout_lines)
    elif task_type == "pod":
        task_ok = _run_pod(scenario, report, trace)
    elif task_type == "maintain":
        task_ok = _run_maintain(scenario, report, trace)
    else:
        raise ConfigError(f"unknown task type {task_type!r}")

    report["traceability"] = trace.table()
    report["task_ok"] = task_ok
    exit_code = 0 if task_ok and not trace.any_failed() else 1
    return RunResult(report=report, exit_code=exit_code, artifacts=artifacts, stdout_lines=stdout_lines)


# -- inspect ---------------------------------------------------------------


def _inspection_target(scenario: Scenario) -> Oru:
    task = scenario.task
    if task["type"] == "inspect":
        oru_id = task.get("oru_id")
        if oru_id is None:
            raise ConfigError("inspect task needs an oru_id")
        for oru in scenario.scene.orus:
            if oru.id == oru_id:
                return oru
        raise ConfigError(f"scenario references missing ORU {oru_id!r}")
    if not scenario.scene.structure_patches:
        raise ConfigError("scene has no structure patches to inspect")
    return Oru(
        id="structure",
        patches=scenario.scene.structure_patches,
        bounding_box=(0.0, 0.0, 0.0),
    )


def _run_inspect(scenario: Scenario, report, trace: _Trace, artifacts) -> bool:
    scene = scenario.scene
    task = scenario.task
    oru = _inspection_target(scenario)
    illumination = bool(task.get("illumination", True))
    head0 = head_over_patch(oru.patches[0], 1.0, illumination_on=illumination)
    standoffs = tuple(task.get("standoffs", (0.5, 1.0, 2.0)))

    plan = plan_viewpoints(scene, oru, head0, candidate_standoffs=standoffs)
    report["plan"] = {
        "kind": "inspection",
        "viewpoints": [
            {
                "patch_id": vp.patch_id,
                "standoff_m": vp.standoff_m,
                "footprint_uv": list(vp.footprint_uv),
            }
            for vp in plan.viewpoints
        ],
        "unreachable_patches": list(plan.unreachable_patch_ids),
    }
    report["coverage"] = plan.coverage_fraction

    capture_errors: list[str] = []
    n_images = 0
    for vp in plan.viewpoints:
        head = SensorHead(base_pose=vp.pose, illumination_on=illumination)
        try:
            capture_image(scene, head, vp.patch_id)
            n_images += 1
        except MimError as exc:
            capture_errors.append(f"{vp.patch_id}: {type(exc).__name__}")

    detections = []
    anomalies = []
    reachable_patches = sorted((p for p in oru.patches if p.reachable), key=lambda p: p.id)
    for idx, patch in enumerate(reachable_patches):
        patch_standoffs = [vp.standoff_m for vp in plan.viewpoints if vp.patch_id == patch.id]
        standoff = min(patch_standoffs) if patch_standoffs else standoffs[0]
        head = head_over_patch(patch, standoff, illumination_on=illumination)
        try:
            cloud = scan_profile(scene, head, patch.id, seed=scenario.seed + idx)
            for det in detect_surface_defects(cloud):
                detections.append(
                    {
                        "patch_id": det.patch_id,
                        "uv_mm": [det.centroid_uv[0] * 1000.0, det.centroid_uv[1] * 1000.0],
                        "kind": det.kind_guess.value,
                        "size_mm": det.size_mm,
                        "peak_residual_mm": det.peak_residual_mm,
                    }
                )
            artifacts[f"cloud_{patch.id}.xyz"] = cloud.to_xyz()
            frame = capture_thermal(scene, head, patch.id, seed=scenario.seed + 1000 + idx)
            for anom in detect_thermal_anomalies(frame, patch.base_temperature):
                anomalies.append(
                    {
                        "patch_id": anom.patch_id,
                        "classification": anom.classification.value,
                        "mean_delta_c": anom.mean_delta_c,
                        "n_pixels": len(anom.pixels),
                    }
                )
            artifacts[f"thermal_{patch.id}.csv"] = frame.to_csv()
        except MimError as exc:
            capture_errors.append(f"{patch.id}: {type(exc).__name__}")
    report["detections"] = detections
    report["thermal_anomalies"] = anomalies

    covered_fully = plan.coverage_fraction >= 1.0 - 1e-9
    trace.set(
        "payloads",
        covered_fully and not plan.unreachable_patch_ids,
        f"coverage {plan.coverage_fraction:.6f} of reachable area, "
        f"{len(plan.unreachable_patch_ids)} unreachable patch(es)",
    )
    standoff_ok = all(0.2 <= vp.standoff_m <= 2.0 for vp in plan.viewpoints)
    trace.set(
        "range",
        standoff_ok,
        f"{len(plan.viewpoints)} viewpoints within [0.2, 2.0] m",
    )
    trace.set(
        "illumination",
        illumination and not capture_errors,
        f"{n_images} captures with illumination {'on' if illumination else 'off'}",
    )
    if task["type"] == "inspect":
        trace.set(
            "spacecraft",
            not capture_errors,
            "external viewpoints only"
            + (f"; capture errors: {', '.join(capture_errors)}" if capture_errors else ""),
        )

    def matched(defect) -> bool:
        for det in detections:
            if det["patch_id"] != defect.patch_id:
                continue
            dist = math.dist(
                det["uv_mm"], (defect.uv[0] * 1000.0, defect.uv[1] * 1000.0)
            )
            if dist <= MATCH_RADIUS_MM:
                return True
        return False

    inspected_ids = {p.id for p in reachable_patches}
    craters = [
        d
        for d in scene.defects
        if d.patch_id in inspected_ids
        and isinstance(d.kind, ImpactCrater)
        and d.kind.diameter_mm >= 0.6
    ]
    if craters:
        found = sum(matched(d) for d in craters)
        trace.set("resolution", found == len(craters), f"{found}/{len(craters)} craters detected")
    scratches = [
        d
        for d in scene.defects
        if d.patch_id in inspected_ids
        and isinstance(d.kind, Scratch)
        and d.kind.depth_mm >= 0.3
    ]
    if scratches:
        found = sum(matched(d) for d in scratches)
        trace.set("profilometry", found == len(scratches), f"{found}/{len(scratches)} scratches detected")
    hotspots = [
        d
        for d in scene.defects
        if d.patch_id in inspected_ids
        and isinstance(d.kind, ThermalHotspot)
        and abs(d.kind.delta_c) > THERMAL_THRESHOLD_C
    ]
    if hotspots:
        def flagged(defect) -> bool:
            want = "hot" if defect.kind.delta_c > 0 else "cold"
            return any(
                a["patch_id"] == defect.patch_id and a["classification"] == want
                for a in anomalies
            )

        found = sum(flagged(d) for d in hotspots)
        trace.set("thermal", found == len(hotspots), f"{found}/{len(hotspots)} hotspots flagged")

    return not capture_errors


# -- walk ------------------------------------------------------------------


def _run_walk(scenario: Scenario, report, stdout_lines) -> bool:
    scene = scenario.scene
    task = scenario.task
    if scenario.assembly is None:
        raise ConfigError("walk task needs an assembly in the scene file")
    goal = task.get("goal")
    if goal is None:
        raise ConfigError("walk task needs a goal fixture")
    if goal not in {f.id for f in scene.fixtures}:
        raise ConfigError(f"scenario references missing fixture {goal!r}")
    reach = float(task.get("reach_m", loco.DEFAULT_REACH_M))

    assembly = scenario.assembly
    legs = loco.leg_assignment(assembly)
    left_fix = assembly.port(legs.left_foot_port).fixture
    rear_fix = assembly.port(legs.rear_foot_port).fixture
    left_fix = task.get("left", left_fix)
    rear_fix = task.get("rear", rear_fix)
    if left_fix is None or rear_fix is None:
        raise ConfigError("walking legs are not anchored and no start was given")

    own_ports = {p.id for m in assembly.modules for p in m.ports}
    occupied = {
        f.id
        for f in scene.fixtures
        if f.occupant is not None and f.occupant not in own_ports
    }
    graph = loco.FixtureGraph(
        positions={f.id: f.pose.position for f in scene.fixtures},
        reach_m=reach,
        occupied=frozenset(occupied),
    )

    try:
        plan = loco.plan_walk(graph, (left_fix, rear_fix), goal)
    except (NoPath, MimError) as exc:
        report["plan"] = {"kind": "gait", "error": type(exc).__name__, "detail": str(exc)}
        stdout_lines.append(f"no walk plan: {exc}")
        return False

    replay_ok = True
    current = assembly
    for step in plan.steps:
        try:
            current = loco.execute_step(current, scene, step, reach_m=reach)
        except MimError as exc:
            replay_ok = False
            report["plan"] = {"kind": "gait", "error": type(exc).__name__, "detail": str(exc)}
            break

    stdout_lines.extend(loco.format_plan(plan).splitlines())
    if replay_ok:
        report["plan"] = {
            "kind": "gait",
            "start": [plan.start[0], plan.start[1]],
            "goal": plan.goal,
            "steps": [
                {"leg": s.leg.value, "from": s.detach_from, "to": s.attach_to}
                for s in plan.steps
            ],
            "final_anchors": sorted(a.fixture for a in current.anchors),
        }
    return replay_ok


# -- pod -------------------------------------------------------------------


def _run_pod(scenario: Scenario, report, trace: _Trace) -> bool:
    scene = scenario.scene
    task = scenario.task
    patch_id = task.get("patch_id")
    if patch_id is None:
        raise ConfigError("pod task needs a patch_id")
    try:
        patch = scene.patch(patch_id)
    except MimError as exc:
        raise ConfigError(str(exc)) from exc

    template = parse_defect_kind(task["defect"]) if "defect" in task else BOUNDARY_CRATER
    if isinstance(template, ThermalHotspot):
        raise ConfigError("pod campaigns verify surface damage, not hotspots")
    detection = DetectionParams(
        residual_floor_mm=float(task.get("residual_floor_mm", DetectionParams().residual_floor_mm))
    )
    spec = PodSpec(
        template=template,
        patch_id=patch_id,
        n_trials=int(task.get("trials", 29)),
        base_seed=int(task.get("base_seed", scenario.seed)),
        target_pod=float(task.get("target_pod", 0.90)),
        confidence=float(task.get("confidence", 0.95)),
        detection=detection,
    )
    head = head_over_patch(patch, float(task.get("standoff", 1.0)), illumination_on=True)
    result = run_pod_campaign(scene, head, spec)

    report["pod"] = {
        "k": result.hits,
        "n": result.trials,
        "alpha": 1.0 - result.confidence,
        "pod_lower_bound": result.pod_lower_bound,
        "target_pod": result.target_pod,
        "pass": result.passed,
        "trials": [
            {
                "seed": r.seed,
                "placement_uv_mm": [r.placement_uv[0] * 1000.0, r.placement_uv[1] * 1000.0],
                "detected": r.detected,
            }
            for r in result.records
        ],
    }
    detail = f"k={result.hits}/{result.trials}, lower bound {result.pod_lower_bound:.5f}"
    trace.set("reliability", result.passed, detail)
    if isinstance(template, ImpactCrater):
        trace.set("resolution", result.passed, f"{template.diameter_mm} mm craters: {detail}")
    else:
        trace.set("profilometry", result.passed, f"{template.depth_mm} mm scratches: {detail}")
    return True


# -- maintain ----------------------------------------------------------------


def _run_maintain(scenario: Scenario, report, trace: _Trace) -> bool:
    task = scenario.task
    if scenario.assembly is None:
        raise ConfigError("maintain task needs an assembly in the scene file")
    assembly = scenario.assembly
    head = _maintain_head(scenario)

    log: list[dict[str, Any]] = []
    fasteners: dict[str, mt.Fastener] = {}
    handling_results: list[bool] = []
    grasp_results: list[bool] = []  # outcome matched the envelope expectation
    torque_results: list[bool] = []

    for action in task.get("actions", []):
        op = action.get("op")
        entry: dict[str, Any] = {"op": op}
        try:
            if op == "open_lid":
                assembly = mt.open_lid(assembly)
                entry["ok"] = True
                handling_results.append(True)
            elif op == "close_lid":
                assembly = mt.close_lid(assembly)
                entry["ok"] = True
                handling_results.append(True)
            elif op == "retrieve":
                assembly = mt.retrieve_tool(assembly, action["arm"], action["slot"])
                entry.update(ok=True, arm=action["arm"], slot=action["slot"])
                handling_results.append(True)
            elif op == "stow":
                assembly = mt.stow_tool(assembly, action["arm"], action["slot"])
                entry.update(ok=True, arm=action["arm"], slot=action["slot"])
                handling_results.append(True)
            elif op == "grasp":
                dim = float(action["dim_cm"])
                outcome = mt.grasp(assembly, head, action["arm"], dim, action["worksite"])
                expected = mt.GRIPPER_RANGE_CM[0] <= dim <= mt.GRIPPER_RANGE_CM[1]
                grasp_results.append(outcome.success == expected)
                entry.update(
                    ok=True,
                    dim_cm=dim,
                    success=outcome.success,
                    reason=outcome.reason,
                    observations=[[o.view, o.source] for o in outcome.observations],
                )
            elif op == "torque":
                t = float(action["torque_nm"])
                fid = action["fastener"]
                fastener = fasteners.get(
                    fid, mt.Fastener(id=fid, position=tuple(action["position"]))
                )
                outcome = mt.apply_torque(assembly, head, action["arm"], fastener, t)
                if outcome.fastener is not None:
                    fasteners[fid] = outcome.fastener
                expected = mt.TORQUE_RANGE_NM[0] <= t <= mt.TORQUE_RANGE_NM[1]
                torque_results.append(outcome.success == expected)
                entry.update(
                    ok=True,
                    torque_nm=t,
                    success=outcome.success,
                    reason=outcome.reason,
                    fastened=outcome.fastener.fastened if outcome.fastener else None,
                    observations=[[o.view, o.source] for o in outcome.observations],
                )
            else:
                raise ConfigError(f"unknown maintenance op {op!r}")
        except ConfigError:
            raise
        except (MimError, KeyError, IndexError) as exc:
            entry.update(ok=False, error=type(exc).__name__, detail=str(exc))
            if op in ("open_lid", "close_lid", "retrieve", "stow"):
                handling_results.append(False)
            elif op == "grasp":
                grasp_results.append(False)
            elif op == "torque":
                torque_results.append(False)
        log.append(entry)

    report["maintenance_log"] = log
    if handling_results:
        trace.set(
            "handling",
            all(handling_results),
            f"{sum(handling_results)}/{len(handling_results)} tool handling actions ok",
        )
    if grasp_results:
        trace.set(
            "grasping",
            all(grasp_results),
            f"{sum(grasp_results)}/{len(grasp_results)} grasp outcomes matched the envelope",
        )
    if torque_results:
        trace.set(
            "torque",
            all(torque_results),
            f"{sum(torque_results)}/{len(torque_results)} torque outcomes matched the envelope",
        )
    return all(e.get("ok", False) for e in log)


def _maintain_head(scenario: Scenario) -> SensorHead:
    """Head for eye-to-hand checks; scenario may pin its pose."""
    from .scene import Pose

    task = scenario.task
    position = tuple(task.get("head_position", (0.0, 0.0, 0.0)))
    return SensorHead(base_pose=Pose(position), illumination_on=True)


# -- emission ----------------------------------------------------------------


def render_report(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2) + "\n"


def emit_report(report: dict[str, Any], path) -> Path:
    """Write the report JSON; rerenders identically for identical reports."""
    path = Path(path)
    try:
        path.write_text(render_report(report))
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc
    return path


def parse_report(path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read report from {path}: {exc}") from exc
