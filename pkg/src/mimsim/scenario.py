"""Load scene, assembly and scenario files (JSON, schema-validated).

Key names and units are documented in data/scene_schema.json and
data/scenario_schema.json.  All load failures surface as ConfigError.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema

from . import interconnect as ic
from .errors import ConfigError, MimError
from .maintenance import Tool, ToolKind, ToolStore
from .scene import (
    Defect,
    FixturePoint,
    ImpactCrater,
    LocationClass,
    Oru,
    Pose,
    Scratch,
    SurfacePatch,
    ThermalHotspot,
    WarehouseScene,
)

_STATE_NAMES = {
    "free": ic.CouplingState.FREE,
    "latched": ic.CouplingState.LATCHED,
    "power": ic.CouplingState.POWER_COUPLED,
    "full": ic.CouplingState.FULL_COUPLED,
}


def _schema(name: str) -> dict:
    with resources.files("mimsim.data").joinpath(name).open("r") as fh:
        return json.load(fh)


def _validate(payload: dict, schema_name: str, what: str):
    try:
        jsonschema.validate(payload, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{what}: {exc.message}") from exc


@dataclass(frozen=True)
class Scenario:
    scene_path: Path
    scene: WarehouseScene
    assembly: Optional[ic.AssemblyGraph]
    task: dict[str, Any]
    seed: int
    raw: dict[str, Any] = field(repr=False, default_factory=dict)


def _parse_pose(obj: dict) -> Pose:
    return Pose(
        position=tuple(obj["position"]),
        orientation=tuple(obj.get("orientation", (1.0, 0.0, 0.0, 0.0))),
    )


def _parse_patch(obj: dict) -> SurfacePatch:
    return SurfacePatch(
        id=obj["id"],
        frame=_parse_pose(obj["frame"]),
        extent_u=obj["extent_u"],
        extent_v=obj["extent_v"],
        emissivity=obj.get("emissivity", 0.9),
        base_temperature=obj.get("base_temperature", 20.0),
        reachable=obj.get("reachable", True),
    )


def parse_defect_kind(obj: dict):
    kind = obj.get("kind")
    try:
        if kind == "scratch":
            return Scratch(
                depth_mm=obj["depth_mm"], width_mm=obj["width_mm"], length_mm=obj["length_mm"]
            )
        if kind == "impact_crater":
            return ImpactCrater(diameter_mm=obj["diameter_mm"], depth_mm=obj["depth_mm"])
        if kind == "thermal_hotspot":
            return ThermalHotspot(delta_c=obj["delta_c"], radius_mm=obj["radius_mm"])
    except KeyError as exc:
        raise ConfigError(f"defect kind {kind!r} is missing field {exc}") from exc
    raise ConfigError(f"unknown defect kind {kind!r}")


def _parse_defect(obj: dict) -> Defect:
    return Defect(kind=parse_defect_kind(obj), patch_id=obj["patch_id"], uv=tuple(obj["uv"]))


def _parse_assembly(obj: dict) -> ic.AssemblyGraph:
    modules = []
    for m in obj["modules"]:
        ports = [ic.SiPort(id=pid, owner=m["id"]) for pid in m["ports"]]
        modules.append(
            ic.ModuleAsset(
                id=m["id"],
                kind=ic.ModuleKind(m["kind"]),
                ports=ports,
                power_draw_w=m.get("power_draw_w", 0.0),
                internal_units=[(n, float(w)) for n, w in m.get("internal_units", [])],
            )
        )

    store = None
    if "tool_store" in obj:
        slots = [
            Tool(kind=ToolKind(s)) if s is not None else None
            for s in obj["tool_store"].get("slots", [None, None])
        ]
        store = ToolStore(slots=slots, lid_open=obj["tool_store"].get("lid_open", False))

    assembly = ic.AssemblyGraph(modules=modules, tool_store=store)
    by_id = {p.id: p for m in modules for p in m.ports}
    for pa, pb, state_name in obj.get("couplings", []):
        for pid in (pa, pb):
            if pid not in by_id:
                raise ConfigError(f"coupling references unknown port {pid!r}")
        state = _STATE_NAMES[state_name]
        by_id[pa].state = by_id[pb].state = state
        by_id[pa].peer, by_id[pb].peer = pb, pa
        assembly.couplings.append(ic.Coupling(pa, pb, state))
    for pid, fixture, state_name in obj.get("anchors", []):
        if pid not in by_id:
            raise ConfigError(f"anchor references unknown port {pid!r}")
        by_id[pid].state = _STATE_NAMES[state_name]
        by_id[pid].fixture = fixture
        assembly.anchors.append(ic.Anchor(pid, fixture))
    try:
        assembly.validate()
    except (ValueError, MimError) as exc:
        raise ConfigError(f"inconsistent assembly: {exc}") from exc
    return assembly


def load_scene_file(path: Path) -> tuple[WarehouseScene, Optional[ic.AssemblyGraph]]:
    """Parse a scene file; returns the scene and the assembly riding in it."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scene file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene file {path} is not valid JSON: {exc}") from exc
    _validate(payload, "scene_schema.json", f"scene file {path}")

    assembly = _parse_assembly(payload["assembly"]) if "assembly" in payload else None

    anchored_by = {}
    if assembly is not None:
        anchored_by = {a.fixture: a.port for a in assembly.anchors}

    fixtures = []
    for f in payload["fixtures"]:
        declared = f.get("occupant")
        actual = anchored_by.get(f["id"])
        if declared is not None and actual is not None and declared != actual:
            raise ConfigError(
                f"fixture {f['id']!r} occupant {declared!r} conflicts with anchor {actual!r}"
            )
        fixtures.append(
            FixturePoint(
                id=f["id"],
                pose=_parse_pose(f),
                location_class=LocationClass(f.get("location_class", "external")),
                occupant=actual if actual is not None else declared,
            )
        )

    try:
        scene = WarehouseScene(
            fixtures=tuple(fixtures),
            orus=tuple(
                Oru(
                    id=o["id"],
                    patches=tuple(_parse_patch(p) for p in o["patches"]),
                    bounding_box=tuple(o["bounding_box"]),
                    pose=_parse_pose(o["pose"]) if "pose" in o else Pose((0.0, 0.0, 0.0)),
                )
                for o in payload["orus"]
            ),
            structure_patches=tuple(_parse_patch(p) for p in payload["structure_patches"]),
            defects=tuple(_parse_defect(d) for d in payload["defects"]),
            ambient_temperature=payload["ambient_temperature"],
        )
    except (ValueError, MimError) as exc:
        raise ConfigError(f"invalid scene: {exc}") from exc

    if assembly is not None:
        fixture_ids = {f.id for f in scene.fixtures}
        for a in assembly.anchors:
            if a.fixture not in fixture_ids:
                raise ConfigError(f"anchor references unknown fixture {a.fixture!r}")
    return scene, assembly


def load_scenario(path: Path) -> Scenario:
    """Parse a scenario file and the scene file it references."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from exc
    _validate(payload, "scenario_schema.json", f"scenario file {path}")

    scene_path = (path.parent / payload["scene"]).resolve()
    scene, assembly = load_scene_file(scene_path)
    return Scenario(
        scene_path=scene_path,
        scene=scene,
        assembly=assembly,
        task=payload["task"],
        seed=int(payload.get("seed", 0)),
        raw=payload,
    )
