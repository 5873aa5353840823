"""Walking-gait planning and execution over the fixture graph.

The robot walks on two leg manipulators by alternately detaching one leg
and latching it onto another fixture within reach of the still-anchored
leg, so at least one leg stays anchored at every instant.  Planning is a
breadth-first search over leg placements; ties prefer alternating legs and
then lexicographic fixture ids, so plans are reproducible.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import interconnect as ic
from .errors import IllegalStep, InvalidStart, NoPath, UnknownFixture
from .scene import WarehouseScene

DEFAULT_REACH_M = 1.5


class Leg(Enum):
    LEFT = "left"
    REAR = "rear"


@dataclass(frozen=True)
class GaitStep:
    leg: Leg
    detach_from: str
    attach_to: str

    def __post_init__(self):
        if self.detach_from == self.attach_to:
            raise ValueError("gait step must move between distinct fixtures")


@dataclass(frozen=True)
class GaitPlan:
    steps: tuple[GaitStep, ...]
    start: tuple[str, str]  # (left fixture, rear fixture)
    goal: str

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))


@dataclass(frozen=True)
class FixtureGraph:
    """Fixture positions plus the scalar reach of a free leg."""

    positions: dict[str, tuple[float, float, float]]
    reach_m: float = DEFAULT_REACH_M
    occupied: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.reach_m <= 0:
            raise ValueError("reach_m must be positive")
        object.__setattr__(
            self,
            "positions",
            {k: tuple(float(c) for c in v) for k, v in self.positions.items()},
        )
        object.__setattr__(self, "occupied", frozenset(self.occupied))

    @classmethod
    def from_scene(
        cls,
        scene: WarehouseScene,
        reach_m: float = DEFAULT_REACH_M,
        occupied=(),
    ) -> "FixtureGraph":
        positions = {f.id: f.pose.position for f in scene.fixtures}
        busy = set(occupied)
        busy.update(f.id for f in scene.fixtures if f.occupant is not None)
        return cls(positions=positions, reach_m=reach_m, occupied=frozenset(busy))

    def distance(self, a: str, b: str) -> float:
        pa, pb = self.positions[a], self.positions[b]
        return math.dist(pa, pb)


def reachable_fixtures(graph: FixtureGraph, anchored_fixture: str) -> set[str]:
    """Unoccupied fixtures a free leg can reach from the anchored one."""
    if anchored_fixture not in graph.positions:
        raise UnknownFixture(f"no fixture {anchored_fixture!r}")
    out = set()
    for fid in graph.positions:
        if fid == anchored_fixture or fid in graph.occupied:
            continue
        if graph.distance(anchored_fixture, fid) <= graph.reach_m:
            out.add(fid)
    return out


def plan_walk(graph: FixtureGraph, start: tuple[str, str], goal: str) -> GaitPlan:
    """Minimum-step gait plan moving either leg onto the goal fixture.

    Search state is the pair of anchored fixtures; a successor detaches one
    leg and reattaches it within reach of the other.  Among equal-length
    plans the search prefers alternating legs, then smaller fixture ids.
    """
    left0, rear0 = start
    for fid in (left0, rear0, goal):
        if fid not in graph.positions:
            raise UnknownFixture(f"no fixture {fid!r}")
    if left0 == rear0:
        raise InvalidStart("legs cannot share a fixture")
    if graph.distance(left0, rear0) > graph.reach_m:
        raise InvalidStart(f"start fixtures {left0!r}, {rear0!r} are out of reach of each other")

    if goal in (left0, rear0):
        return GaitPlan(steps=(), start=start, goal=goal)

    start_state = (left0, rear0)
    parents: dict[tuple[str, str], tuple[tuple[str, str], GaitStep]] = {}
    visited = {start_state}
    queue: deque[tuple[tuple[str, str], Optional[Leg]]] = deque([(start_state, None)])

    while queue:
        (left, rear), last_moved = queue.popleft()
        if last_moved is Leg.LEFT:
            leg_order = (Leg.REAR, Leg.LEFT)
        else:
            leg_order = (Leg.LEFT, Leg.REAR)
        for leg in leg_order:
            moving_from = left if leg is Leg.LEFT else rear
            anchored = rear if leg is Leg.LEFT else left
            for target in sorted(reachable_fixtures(graph, anchored)):
                if target in (left, rear):
                    continue
                nxt = (target, rear) if leg is Leg.LEFT else (left, target)
                if nxt in visited:
                    continue
                visited.add(nxt)
                step = GaitStep(leg=leg, detach_from=moving_from, attach_to=target)
                parents[nxt] = ((left, rear), step)
                if target == goal:
                    return GaitPlan(steps=_reconstruct(parents, start_state, nxt), start=start, goal=goal)
                queue.append((nxt, leg))

    raise NoPath(f"no gait from {start} to {goal!r}")


def _reconstruct(parents, start_state, end_state) -> tuple[GaitStep, ...]:
    steps = []
    state = end_state
    while state != start_state:
        state, step = parents[state]
        steps.append(step)
    steps.reverse()
    return tuple(steps)


@dataclass(frozen=True)
class LegAssignment:
    """Maps the named legs onto their manipulator modules and anchor ports."""

    left_module: str
    rear_module: str
    left_foot_port: str
    rear_foot_port: str


def leg_assignment(assembly: ic.AssemblyGraph) -> LegAssignment:
    """Identify leg manipulators in a walking assembly."""
    roles = ic.mim_port_roles(assembly)
    legs = {}
    for name in ("left", "rear"):
        port = roles[name]
        if port.peer is None:
            raise IllegalStep(f"MIM {name} port has no leg attached")
        wm = assembly.owner_of(port.peer)
        if wm.kind is not ic.ModuleKind.WALKING_MANIPULATOR:
            raise IllegalStep(f"module on MIM {name} port is not a walking manipulator")
        foot_ports = [p for p in wm.ports if p.id != port.peer]
        legs[name] = (wm.id, foot_ports[0].id)
    return LegAssignment(
        left_module=legs["left"][0],
        rear_module=legs["rear"][0],
        left_foot_port=legs["left"][1],
        rear_foot_port=legs["rear"][1],
    )


def execute_step(
    assembly: ic.AssemblyGraph,
    scene: WarehouseScene,
    step: GaitStep,
    reach_m: float = DEFAULT_REACH_M,
) -> ic.AssemblyGraph:
    """Replay one gait step through the interconnect operations.

    Detaches the moving leg's foot, latches it onto the target fixture and
    advances the new anchor to FullCoupled.  The other leg is untouched; the
    decouple guard propagates WouldDetachAssembly if the step would cast the
    assembly adrift.
    """
    if ic.validate_configuration(assembly) is not ic.Configuration.WALKING:
        raise IllegalStep("assembly is not in the walking configuration")
    legs = leg_assignment(assembly)
    foot_port = legs.left_foot_port if step.leg is Leg.LEFT else legs.rear_foot_port
    other_port = legs.rear_foot_port if step.leg is Leg.LEFT else legs.left_foot_port

    try:
        scene.fixture(step.attach_to)
    except KeyError:
        raise UnknownFixture(f"no fixture {step.attach_to!r}") from None

    foot = assembly.port(foot_port)
    if foot.fixture != step.detach_from:
        raise IllegalStep(
            f"{step.leg.value} leg is anchored at {foot.fixture!r}, not {step.detach_from!r}"
        )
    if step.attach_to in assembly.anchored_fixtures():
        raise IllegalStep(f"fixture {step.attach_to!r} is occupied")
    # scene occupants are load-time state; the assembly's own anchors are
    # authoritative for its own ports, so only foreign ports block here
    own_ports = {p.id for m in assembly.modules for p in m.ports}
    foreign = scene.fixture(step.attach_to).occupant
    if foreign is not None and foreign not in own_ports:
        raise IllegalStep(f"fixture {step.attach_to!r} is occupied by {foreign!r}")

    other = assembly.port(other_port)
    if other.fixture is not None:
        support = np.asarray(scene.fixture(other.fixture).pose.position)
        target = np.asarray(scene.fixture(step.attach_to).pose.position)
        if float(np.linalg.norm(target - support)) > reach_m + 1e-12:
            raise IllegalStep(
                f"fixture {step.attach_to!r} is beyond reach from {other.fixture!r}"
            )

    out = ic.decouple(assembly, foot_port)  # may raise WouldDetachAssembly
    out = ic.anchor(out, foot_port, step.attach_to)
    out = ic.advance_coupling(out, foot_port)
    out = ic.advance_coupling(out, foot_port)
    return out


def format_plan(plan: GaitPlan) -> str:
    """One `step <n>: <leg> <from> -> <to>` line per step."""
    lines = [
        f"step {i}: {s.leg.value} {s.detach_from} -> {s.attach_to}"
        for i, s in enumerate(plan.steps)
    ]
    return "\n".join(lines)
