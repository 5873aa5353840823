"""Tool storage and tool-use operations with grasp and torque envelopes.

Tools live in two lidded compartments on the MIM body and are handled by
an arm on the reserved right port.  Grasp and torque actions succeed only
inside the tool envelopes (0.5-10 cm, 2.7-30 Nm, boundaries inclusive) and
only when the worksite is observed by the MIM sensor head (eye-to-hand)
while the acting arm provides the eye-in-hand view.
"""

from __future__ import annotations

import copy
import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import interconnect as ic
from .errors import (
    EmptySlot,
    HandsFull,
    LidClosed,
    NoArmOnToolPort,
    NothingHeld,
    NotObserved,
    SlotOccupied,
    WrongTool,
)
from .geometry import angle_between
from .sensors import VIEW_CONE_HALF_ANGLE_DEG, SensorHead

GRIPPER_RANGE_CM = (0.5, 10.0)
TORQUE_RANGE_NM = (2.7, 30.0)
OBSERVATION_RANGE_M = 2.0
N_TOOL_SLOTS = 2


class ToolKind(Enum):
    GRIPPER = "gripper"
    TORQUE_WRENCH = "torque_wrench"


@dataclass
class Tool:
    kind: ToolKind
    holder: Optional[str] = None  # arm module id when held


@dataclass
class ToolStore:
    """Two tool compartments under the body lid."""

    slots: list[Optional[Tool]] = field(default_factory=lambda: [None, None])
    lid_open: bool = False

    def __post_init__(self):
        if len(self.slots) != N_TOOL_SLOTS:
            raise ValueError(f"tool store has exactly {N_TOOL_SLOTS} slots")


@dataclass(frozen=True)
class Fastener:
    id: str
    position: tuple[float, float, float]
    fastened: bool = True


@dataclass(frozen=True)
class Observation:
    view: str  # "eye_in_hand" | "eye_to_hand"
    source: str


@dataclass(frozen=True)
class GraspOutcome:
    success: bool
    reason: Optional[str] = None  # "too_small" | "too_big"
    observations: tuple[Observation, ...] = ()


@dataclass(frozen=True)
class TorqueOutcome:
    success: bool
    reason: Optional[str] = None  # "below_minimum" | "above_maximum"
    fastener: Optional[Fastener] = None
    observations: tuple[Observation, ...] = ()


def _arm_on_tool_port(assembly: ic.AssemblyGraph, arm_id: str) -> None:
    right = ic.mim_port_roles(assembly)["right"]
    if right.peer is None or assembly.owner_of(right.peer).id != arm_id:
        raise NoArmOnToolPort(f"module {arm_id!r} is not coupled to the MIM right port")


def open_lid(assembly: ic.AssemblyGraph) -> ic.AssemblyGraph:
    out = copy.deepcopy(assembly)
    if out.tool_store is None:
        out.tool_store = ToolStore(lid_open=True)
    else:
        out.tool_store.lid_open = True
    return out


def close_lid(assembly: ic.AssemblyGraph) -> ic.AssemblyGraph:
    out = copy.deepcopy(assembly)
    if out.tool_store is None:
        out.tool_store = ToolStore()
    else:
        out.tool_store.lid_open = False
    return out


def retrieve_tool(assembly: ic.AssemblyGraph, arm_id: str, slot: int) -> ic.AssemblyGraph:
    """Move a tool from a storage slot to the arm on the tool port."""
    _arm_on_tool_port(assembly, arm_id)
    store = assembly.tool_store
    if store is None or not store.lid_open:
        raise LidClosed("tool compartments are closed")
    if store.slots[slot] is None:
        raise EmptySlot(f"slot {slot} is empty")
    if arm_id in assembly.held_tools:
        raise HandsFull(f"arm {arm_id!r} already holds a tool")
    out = copy.deepcopy(assembly)
    tool = out.tool_store.slots[slot]
    out.tool_store.slots[slot] = None
    tool.holder = arm_id
    out.held_tools[arm_id] = tool
    return out


def stow_tool(assembly: ic.AssemblyGraph, arm_id: str, slot: int) -> ic.AssemblyGraph:
    """Inverse of retrieve_tool."""
    _arm_on_tool_port(assembly, arm_id)
    store = assembly.tool_store
    if store is None or not store.lid_open:
        raise LidClosed("tool compartments are closed")
    if arm_id not in assembly.held_tools:
        raise NothingHeld(f"arm {arm_id!r} holds no tool")
    if store.slots[slot] is not None:
        raise SlotOccupied(f"slot {slot} is occupied")
    out = copy.deepcopy(assembly)
    tool = out.held_tools.pop(arm_id)
    tool.holder = None
    out.tool_store.slots[slot] = tool
    return out


def worksite_observed(head: SensorHead, worksite) -> bool:
    """Eye-to-hand check: worksite inside the head's view cone and range."""
    target = np.asarray(worksite, dtype=float)
    offset = target - head.position
    dist = float(np.linalg.norm(offset))
    if dist > OBSERVATION_RANGE_M:
        return False
    if dist == 0.0:
        return True
    return math.degrees(angle_between(head.boresight, offset)) <= VIEW_CONE_HALF_ANGLE_DEG


def _held_tool(assembly: ic.AssemblyGraph, arm_id: str, kind: ToolKind) -> Tool:
    tool = assembly.held_tools.get(arm_id)
    if tool is None or tool.kind is not kind:
        raise WrongTool(f"arm {arm_id!r} does not hold a {kind.value}")
    return tool


def _observations(arm_id: str) -> tuple[Observation, ...]:
    return (
        Observation(view="eye_in_hand", source=arm_id),
        Observation(view="eye_to_hand", source="sensor_head"),
    )


def grasp(
    assembly: ic.AssemblyGraph,
    head: SensorHead,
    arm_id: str,
    object_dim_cm: float,
    worksite,
) -> GraspOutcome:
    """Grasp an object of the given dimension at the worksite."""
    _held_tool(assembly, arm_id, ToolKind.GRIPPER)
    if not worksite_observed(head, worksite):
        raise NotObserved("worksite outside the sensor head's view")
    lo, hi = GRIPPER_RANGE_CM
    if object_dim_cm < lo:
        return GraspOutcome(success=False, reason="too_small")
    if object_dim_cm > hi:
        return GraspOutcome(success=False, reason="too_big")
    return GraspOutcome(success=True, observations=_observations(arm_id))


def apply_torque(
    assembly: ic.AssemblyGraph,
    head: SensorHead,
    arm_id: str,
    fastener: Fastener,
    torque_nm: float,
) -> TorqueOutcome:
    """Drive a fastener; success toggles its fastened state."""
    _held_tool(assembly, arm_id, ToolKind.TORQUE_WRENCH)
    if not worksite_observed(head, fastener.position):
        raise NotObserved("fastener outside the sensor head's view")
    lo, hi = TORQUE_RANGE_NM
    if torque_nm < lo:
        return TorqueOutcome(success=False, reason="below_minimum", fastener=fastener)
    if torque_nm > hi:
        return TorqueOutcome(success=False, reason="above_maximum", fastener=fastener)
    toggled = dataclasses.replace(fastener, fastened=not fastener.fastened)
    return TorqueOutcome(success=True, fastener=toggled, observations=_observations(arm_id))
