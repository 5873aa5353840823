"""Standard-interconnect ports, module assembly graph, and coupled-link services.

Couplings stage mechanical -> power -> data: Free -> Latched -> PowerCoupled ->
FullCoupled, one step at a time, mirrored on both ends.  Message routing only
traverses FullCoupled links; anchors (port-to-fixture couplings) secure an
assembly but carry no data.

A MIM chassis exposes exactly three ports, by convention ordered
[left, rear, right]; the right port is reserved for the tool arm.  Mutating
operations copy the assembly and return the new value, so snapshots stay
valid for read-only queries.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    AlreadyFull,
    FixtureOccupied,
    NotCoupled,
    PortBusy,
    SelfCoupling,
    UnanchoredAssembly,
    UnknownModule,
    UnknownPort,
    Unrecognized,
    WouldDetachAssembly,
)

DEFAULT_BUS_VOLTAGE_V = 48.0
DEFAULT_CURRENT_LIMIT_A = 14.0

# Module kinds that are part of station infrastructure and therefore count
# as secured even without a fixture anchor of their own.
GROUNDED_KINDS = frozenset({"large_arm", "shuttle"})


class CouplingState(Enum):
    FREE = "free"
    LATCHED = "latched"
    POWER_COUPLED = "power"
    FULL_COUPLED = "full"

    @property
    def stage(self) -> int:
        return _STAGE_ORDER.index(self)


_STAGE_ORDER = [
    CouplingState.FREE,
    CouplingState.LATCHED,
    CouplingState.POWER_COUPLED,
    CouplingState.FULL_COUPLED,
]


class ModuleKind(Enum):
    MIM = "mim"
    WALKING_MANIPULATOR = "walking_manipulator"
    SHUTTLE = "shuttle"
    LARGE_ARM = "large_arm"
    TOOL = "tool"
    ORU_MODULE = "oru_module"


class Configuration(Enum):
    WALKING = "walking"
    EXTERNALLY_MOUNTED = "externally_mounted"
    LARGE_ARM_MOUNTED = "large_arm_mounted"
    MAINTENANCE = "maintenance"


@dataclass
class SiPort:
    """One standard-interconnect port; peer and fixture are mutually exclusive."""

    id: str
    owner: str
    state: CouplingState = CouplingState.FREE
    peer: Optional[str] = None
    fixture: Optional[str] = None

    def check(self):
        if self.peer is not None and self.fixture is not None:
            raise ValueError(f"port {self.id}: peer and fixture both set")
        if self.state is not CouplingState.FREE and self.peer is None and self.fixture is None:
            raise ValueError(f"port {self.id}: non-free state without peer or fixture")
        if self.state is CouplingState.FREE and (self.peer or self.fixture):
            raise ValueError(f"port {self.id}: free state with peer or fixture set")


@dataclass
class ModuleAsset:
    id: str
    kind: ModuleKind
    ports: list[SiPort] = field(default_factory=list)
    power_draw_w: float = 0.0
    internal_units: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.kind is ModuleKind.MIM and len(self.ports) != 3:
            raise ValueError(f"MIM {self.id} must have exactly 3 ports")
        if self.kind is ModuleKind.WALKING_MANIPULATOR and len(self.ports) != 2:
            raise ValueError(f"walking manipulator {self.id} must have exactly 2 ports")
        for p in self.ports:
            if p.owner != self.id:
                raise ValueError(f"port {p.id} owner {p.owner!r} != module {self.id!r}")

    @property
    def total_power_w(self) -> float:
        return self.power_draw_w + sum(w for _, w in self.internal_units)


@dataclass
class Coupling:
    port_a: str
    port_b: str
    state: CouplingState


@dataclass
class Anchor:
    port: str
    fixture: str


@dataclass
class PowerReport:
    total_power_w: float
    bus_voltage_v: float
    total_current_a: float
    limit_a: float
    within_limit: bool


@dataclass(frozen=True)
class RouteResult:
    delivered: bool
    hops: Optional[int] = None


@dataclass
class AssemblyGraph:
    """Modules joined by standard-interconnect couplings and fixture anchors.

    tool_store and held_tools carry the maintenance-module tool state so the
    whole mutable world travels with the assembly value.
    """

    modules: list[ModuleAsset] = field(default_factory=list)
    couplings: list[Coupling] = field(default_factory=list)
    anchors: list[Anchor] = field(default_factory=list)
    tool_store: Optional["ToolStore"] = None  # noqa: F821 - defined in maintenance
    held_tools: dict = field(default_factory=dict)  # arm module id -> Tool

    def __post_init__(self):
        self.validate()

    # -- lookups -------------------------------------------------------

    def module(self, module_id: str) -> ModuleAsset:
        for m in self.modules:
            if m.id == module_id:
                return m
        raise UnknownModule(f"no module {module_id!r}")

    def port(self, port_id: str) -> SiPort:
        for m in self.modules:
            for p in m.ports:
                if p.id == port_id:
                    return p
        raise UnknownPort(f"no port {port_id!r}")

    def owner_of(self, port_id: str) -> ModuleAsset:
        return self.module(self.port(port_id).owner)

    def mim(self) -> ModuleAsset:
        mims = [m for m in self.modules if m.kind is ModuleKind.MIM]
        if len(mims) != 1:
            raise Unrecognized(f"assembly has {len(mims)} MIM modules, expected 1")
        return mims[0]

    def coupling_of(self, port_id: str) -> Optional[Coupling]:
        for c in self.couplings:
            if port_id in (c.port_a, c.port_b):
                return c
        return None

    def anchor_of(self, port_id: str) -> Optional[Anchor]:
        for a in self.anchors:
            if a.port == port_id:
                return a
        return None

    def anchored_fixtures(self) -> set[str]:
        return {a.fixture for a in self.anchors}

    def validate(self):
        port_ids = [p.id for m in self.modules for p in m.ports]
        if len(set(port_ids)) != len(port_ids):
            raise ValueError("port ids must be unique across the assembly")
        seen: set[str] = set()
        for c in self.couplings:
            pa, pb = self.port(c.port_a), self.port(c.port_b)
            for pid in (c.port_a, c.port_b):
                if pid in seen:
                    raise ValueError(f"port {pid} appears in two couplings")
                seen.add(pid)
            if pa.state is not c.state or pb.state is not c.state:
                raise ValueError(f"coupling {c.port_a}<->{c.port_b} state out of sync")
            if pa.peer != pb.id or pb.peer != pa.id:
                raise ValueError(f"coupling {c.port_a}<->{c.port_b} peers out of sync")
        for a in self.anchors:
            p = self.port(a.port)
            if p.id in seen:
                raise ValueError(f"port {p.id} both coupled and anchored")
            if p.fixture != a.fixture:
                raise ValueError(f"anchor {a.port}->{a.fixture} out of sync with port")
        for m in self.modules:
            for p in m.ports:
                p.check()

    # -- connectivity ---------------------------------------------------

    def _adjacency(self, min_state: Optional[CouplingState] = None) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {m.id: set() for m in self.modules}
        for c in self.couplings:
            if min_state is not None and c.state.stage < min_state.stage:
                continue
            a = self.port(c.port_a).owner
            b = self.port(c.port_b).owner
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def component_of(self, module_id: str) -> set[str]:
        """Module ids structurally connected to module_id (any coupling state)."""
        adj = self._adjacency()
        seen = {module_id}
        queue = deque([module_id])
        while queue:
            for nxt in adj[queue.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    def component_secured(self, module_ids: set[str]) -> bool:
        """True when the component holds a fixture anchor or grounded module."""
        for mid in module_ids:
            m = self.module(mid)
            if m.kind.value in GROUNDED_KINDS:
                return True
            for p in m.ports:
                if p.fixture is not None:
                    return True
        return False


# -- mutating operations (copy-on-write) --------------------------------


def couple(assembly: AssemblyGraph, port_a: str, port_b: str) -> AssemblyGraph:
    """Latch two free ports together on distinct modules."""
    if port_a == port_b or assembly.port(port_a).owner == assembly.port(port_b).owner:
        raise SelfCoupling(f"cannot couple {port_a} to {port_b}")
    for pid in (port_a, port_b):
        if assembly.port(pid).state is not CouplingState.FREE:
            raise PortBusy(f"port {pid} is not free")
    out = copy.deepcopy(assembly)
    pa, pb = out.port(port_a), out.port(port_b)
    pa.state = pb.state = CouplingState.LATCHED
    pa.peer, pb.peer = pb.id, pa.id
    out.couplings.append(Coupling(port_a, port_b, CouplingState.LATCHED))
    return out


def anchor(assembly: AssemblyGraph, port_id: str, fixture_id: str) -> AssemblyGraph:
    """Latch a free port onto a fixture point."""
    if assembly.port(port_id).state is not CouplingState.FREE:
        raise PortBusy(f"port {port_id} is not free")
    if fixture_id in assembly.anchored_fixtures():
        raise FixtureOccupied(f"fixture {fixture_id} already occupied")
    out = copy.deepcopy(assembly)
    p = out.port(port_id)
    p.state = CouplingState.LATCHED
    p.fixture = fixture_id
    out.anchors.append(Anchor(port_id, fixture_id))
    return out


def advance_coupling(assembly: AssemblyGraph, port_id: str) -> AssemblyGraph:
    """Advance one staging step (Latched -> PowerCoupled -> FullCoupled)."""
    state = assembly.port(port_id).state
    if state is CouplingState.FREE:
        raise NotCoupled(f"port {port_id} is free")
    if state is CouplingState.FULL_COUPLED:
        raise AlreadyFull(f"port {port_id} already fully coupled")
    out = copy.deepcopy(assembly)
    p = out.port(port_id)
    new_state = _STAGE_ORDER[p.state.stage + 1]
    p.state = new_state
    if p.peer is not None:
        out.port(p.peer).state = new_state
        out.coupling_of(port_id).state = new_state
    return out


def decouple(assembly: AssemblyGraph, port_id: str) -> AssemblyGraph:
    """Release a coupling or anchor, refusing to cast an assembly adrift.

    Raises WouldDetachAssembly when the removal would leave any MIM-bearing
    connected component without a fixture anchor or grounded module.
    """
    p = assembly.port(port_id)
    if p.state is CouplingState.FREE:
        raise NotCoupled(f"port {port_id} is free")
    secured_before = {
        m.id: assembly.component_secured(assembly.component_of(m.id))
        for m in assembly.modules
        if m.kind is ModuleKind.MIM
    }
    out = copy.deepcopy(assembly)
    p = out.port(port_id)
    if p.fixture is not None:
        out.anchors = [a for a in out.anchors if a.port != port_id]
        p.fixture = None
    else:
        peer = out.port(p.peer)
        out.couplings = [c for c in out.couplings if port_id not in (c.port_a, c.port_b)]
        peer.state = CouplingState.FREE
        peer.peer = None
        p.peer = None
    p.state = CouplingState.FREE
    for mim_id, was_secured in secured_before.items():
        if was_secured and not out.component_secured(out.component_of(mim_id)):
            raise WouldDetachAssembly(
                f"decoupling {port_id} would leave MIM {mim_id} without an anchor"
            )
    return out


# -- read-only queries ---------------------------------------------------


def mim_port_roles(assembly: AssemblyGraph) -> dict[str, SiPort]:
    """MIM ports by role; ports are ordered [left, rear, right] by convention."""
    mim = assembly.mim()
    return {"left": mim.ports[0], "rear": mim.ports[1], "right": mim.ports[2]}


def _attached_module(assembly: AssemblyGraph, port: SiPort, kind: ModuleKind) -> Optional[ModuleAsset]:
    if port.peer is None:
        return None
    m = assembly.owner_of(port.peer)
    return m if m.kind is kind else None


def _module_anchored(module: ModuleAsset) -> bool:
    return any(p.fixture is not None for p in module.ports)


def validate_configuration(assembly: AssemblyGraph) -> Configuration:
    """Classify the assembly into one of the deployment configurations.

    Raises UnanchoredAssembly when the MIM's component has no fixture anchor
    or grounded module, Unrecognized when the structure matches no known
    deployment pattern.
    """
    mim = assembly.mim()
    if not assembly.component_secured(assembly.component_of(mim.id)):
        raise UnanchoredAssembly(f"MIM {mim.id} assembly is not secured anywhere")

    roles = mim_port_roles(assembly)
    left_wm = _attached_module(assembly, roles["left"], ModuleKind.WALKING_MANIPULATOR)
    rear_wm = _attached_module(assembly, roles["rear"], ModuleKind.WALKING_MANIPULATOR)
    right_wm = _attached_module(assembly, roles["right"], ModuleKind.WALKING_MANIPULATOR)

    walking = (
        left_wm is not None
        and rear_wm is not None
        and left_wm.id != rear_wm.id
        and (_module_anchored(left_wm) or _module_anchored(rear_wm))
    )

    large_arm = any(
        _attached_module(assembly, p, ModuleKind.LARGE_ARM) is not None for p in mim.ports
    )

    # single anchored WM chain on a non-tool port
    side_wms = [wm for wm in (left_wm, rear_wm) if wm is not None]
    externally_mounted = (
        not walking
        and not large_arm
        and len(side_wms) == 1
        and _module_anchored(side_wms[0])
    )

    if right_wm is not None and (walking or externally_mounted or large_arm):
        return Configuration.MAINTENANCE
    if walking:
        return Configuration.WALKING
    if large_arm:
        return Configuration.LARGE_ARM_MOUNTED
    if externally_mounted:
        return Configuration.EXTERNALLY_MOUNTED
    raise Unrecognized("assembly matches no known configuration")


def power_check(
    assembly: AssemblyGraph,
    bus_voltage_v: float = DEFAULT_BUS_VOLTAGE_V,
    limit_a: float = DEFAULT_CURRENT_LIMIT_A,
) -> PowerReport:
    """Aggregate the power budget of every module on the assembly bus."""
    total = sum(m.total_power_w for m in assembly.modules)
    current = total / bus_voltage_v
    return PowerReport(
        total_power_w=total,
        bus_voltage_v=bus_voltage_v,
        total_current_a=current,
        limit_a=limit_a,
        within_limit=current <= limit_a,
    )


def route_message(
    assembly: AssemblyGraph, from_module: str, to_module: str, topic: str = ""
) -> RouteResult:
    """Shortest-path topic delivery over fully coupled data links."""
    assembly.module(from_module)
    assembly.module(to_module)
    if from_module == to_module:
        return RouteResult(delivered=True, hops=0)
    adj = assembly._adjacency(min_state=CouplingState.FULL_COUPLED)
    dist = {from_module: 0}
    queue = deque([from_module])
    while queue:
        cur = queue.popleft()
        for nxt in sorted(adj[cur]):
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                if nxt == to_module:
                    return RouteResult(delivered=True, hops=dist[nxt])
                queue.append(nxt)
    return RouteResult(delivered=False)
