"""Default builders: stock modules, a walking assembly, and coupon scenes."""

from __future__ import annotations

from . import interconnect as ic
from .maintenance import Tool, ToolKind, ToolStore
from .scene import FixturePoint, Oru, Pose, SurfacePatch, WarehouseScene
from .sensors import SensorHead

# MIM internal electronics: five ~5 W units plus the two exceptions
# (on-board computer and illumination ring).
DEFAULT_MIM_UNITS = [
    ("hd_controller_left", 5.0),
    ("hd_controller_rear", 5.0),
    ("hd_controller_right", 5.0),
    ("profilometer", 5.0),
    ("thermal_imager", 5.0),
    ("obc", 25.0),
    ("illumination", 20.0),
]


def make_mim(module_id: str = "mim", with_tools: bool = True) -> ic.ModuleAsset:
    """MIM chassis with its three ports ordered [left, rear, right]."""
    ports = [
        ic.SiPort(id=f"{module_id}.left", owner=module_id),
        ic.SiPort(id=f"{module_id}.rear", owner=module_id),
        ic.SiPort(id=f"{module_id}.right", owner=module_id),
    ]
    return ic.ModuleAsset(
        id=module_id,
        kind=ic.ModuleKind.MIM,
        ports=ports,
        power_draw_w=0.0,
        internal_units=list(DEFAULT_MIM_UNITS),
    )


def make_wm(module_id: str, power_draw_w: float = 0.0) -> ic.ModuleAsset:
    ports = [
        ic.SiPort(id=f"{module_id}.a", owner=module_id),
        ic.SiPort(id=f"{module_id}.b", owner=module_id),
    ]
    return ic.ModuleAsset(
        id=module_id,
        kind=ic.ModuleKind.WALKING_MANIPULATOR,
        ports=ports,
        power_draw_w=power_draw_w,
    )


def default_tool_store(lid_open: bool = False) -> ToolStore:
    return ToolStore(
        slots=[Tool(kind=ToolKind.GRIPPER), Tool(kind=ToolKind.TORQUE_WRENCH)],
        lid_open=lid_open,
    )


def walking_assembly(
    left_fixture: str = "f0",
    rear_fixture: str = "f1",
    with_tool_arm: bool = False,
) -> ic.AssemblyGraph:
    """MIM with two leg manipulators fully coupled and anchored.

    Port `.a` of each leg mates with the MIM, `.b` is the foot.  When
    with_tool_arm is set a third manipulator rides the right port.
    """
    modules = [make_mim(), make_wm("wm_left"), make_wm("wm_rear")]
    if with_tool_arm:
        modules.append(make_wm("arm"))
    assembly = ic.AssemblyGraph(modules=modules, tool_store=default_tool_store())

    assembly = ic.couple(assembly, "mim.left", "wm_left.a")
    assembly = ic.couple(assembly, "mim.rear", "wm_rear.a")
    assembly = ic.anchor(assembly, "wm_left.b", left_fixture)
    assembly = ic.anchor(assembly, "wm_rear.b", rear_fixture)
    if with_tool_arm:
        assembly = ic.couple(assembly, "mim.right", "arm.a")
    for port in ("mim.left", "mim.rear", "wm_left.b", "wm_rear.b") + (
        ("mim.right",) if with_tool_arm else ()
    ):
        assembly = ic.advance_coupling(assembly, port)
        assembly = ic.advance_coupling(assembly, port)
    return assembly


def fixture_row(n: int, spacing_m: float = 1.0) -> list[FixturePoint]:
    """Collinear fixtures f0..f{n-1} along x."""
    return [
        FixturePoint(id=f"f{i}", pose=Pose((i * spacing_m, 0.0, 0.0)))
        for i in range(n)
    ]


def coupon_patch(
    patch_id: str = "coupon",
    extent_m: float = 0.02,
    base_temperature: float = 20.0,
    center: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> SurfacePatch:
    """Small flat test coupon fully inside one profilometer scan window."""
    return SurfacePatch(
        id=patch_id,
        frame=Pose(center),
        extent_u=extent_m,
        extent_v=extent_m,
        base_temperature=base_temperature,
    )


def coupon_scene(
    patch_id: str = "coupon",
    extent_m: float = 0.02,
    base_temperature: float = 20.0,
    n_fixtures: int = 3,
) -> WarehouseScene:
    """A coupon patch plus a row of fixtures, ready for scanning tests."""
    return WarehouseScene(
        fixtures=fixture_row(n_fixtures),
        structure_patches=(coupon_patch(patch_id, extent_m, base_temperature),),
        ambient_temperature=20.0,
    )


def box_oru(
    oru_id: str = "oru",
    side_m: float = 0.5,
    unreachable: tuple[str, ...] = (),
) -> Oru:
    """Six-patch box ORU; patch ids are `<oru_id>.face<k>`."""
    patches = []
    for k in range(6):
        pid = f"{oru_id}.face{k}"
        patches.append(
            SurfacePatch(
                id=pid,
                frame=Pose((0.0, 0.0, float(k))),  # faces laid out flat for planning
                extent_u=side_m,
                extent_v=side_m,
                reachable=pid not in unreachable,
            )
        )
    return Oru(id=oru_id, patches=tuple(patches), bounding_box=(side_m, side_m, side_m))


def head_over_patch(
    patch: SurfacePatch,
    standoff_m: float = 1.0,
    illumination_on: bool = True,
    **head_kwargs,
) -> SensorHead:
    """Sensor head on the patch normal, boresight looking at the patch."""
    center = patch.center_world
    normal = patch.normal_world
    position = center + standoff_m * normal
    from .geometry import quat_align_z

    return SensorHead(
        base_pose=Pose(tuple(position), quat_align_z(-normal)),
        illumination_on=illumination_on,
        **head_kwargs,
    )
