import copy

import pytest

from mimsim import interconnect as ic
from mimsim import presets
from mimsim.errors import (
    AlreadyFull,
    NotCoupled,
    PortBusy,
    SelfCoupling,
    UnanchoredAssembly,
    UnknownModule,
    WouldDetachAssembly,
)


def bare_pair():
    """MIM plus one free walking manipulator, nothing coupled."""
    return ic.AssemblyGraph(modules=[presets.make_mim(), presets.make_wm("wm")])


class TestCouple:
    def test_two_free_ports_latch(self):
        asm = ic.couple(bare_pair(), "mim.left", "wm.a")
        assert asm.port("mim.left").state is ic.CouplingState.LATCHED
        assert asm.port("wm.a").state is ic.CouplingState.LATCHED
        assert asm.port("mim.left").peer == "wm.a"
        assert len(asm.couplings) == 1

    def test_busy_port_rejected(self):
        asm = ic.couple(bare_pair(), "mim.left", "wm.a")
        with pytest.raises(PortBusy):
            ic.couple(asm, "mim.left", "wm.b")

    def test_self_coupling_rejected(self):
        with pytest.raises(SelfCoupling):
            ic.couple(bare_pair(), "wm.a", "wm.b")

    def test_mim_rear_to_wm_recorded(self):
        asm = ic.couple(bare_pair(), "mim.rear", "wm.a")
        assert any({c.port_a, c.port_b} == {"mim.rear", "wm.a"} for c in asm.couplings)


class TestAdvanceCoupling:
    def test_full_progression_mirrors_peer(self):
        asm = ic.couple(bare_pair(), "mim.left", "wm.a")
        for expected in (ic.CouplingState.POWER_COUPLED, ic.CouplingState.FULL_COUPLED):
            asm = ic.advance_coupling(asm, "mim.left")
            assert asm.port("mim.left").state is expected
            assert asm.port("wm.a").state is expected
            assert asm.couplings[0].state is expected

    def test_already_full(self):
        asm = ic.couple(bare_pair(), "mim.left", "wm.a")
        asm = ic.advance_coupling(asm, "mim.left")
        asm = ic.advance_coupling(asm, "mim.left")
        with pytest.raises(AlreadyFull):
            ic.advance_coupling(asm, "mim.left")

    def test_free_port_not_coupled(self):
        with pytest.raises(NotCoupled):
            ic.advance_coupling(bare_pair(), "mim.left")


class TestDecouple:
    def test_round_trip_restores_assembly(self):
        base = bare_pair()
        snapshot = copy.deepcopy(base)
        asm = ic.couple(base, "mim.left", "wm.a")
        restored = ic.decouple(asm, "mim.left")
        assert restored == snapshot

    def test_free_port_not_coupled(self):
        with pytest.raises(NotCoupled):
            ic.decouple(bare_pair(), "mim.left")

    def test_sole_anchor_guard(self, walking_assembly):
        asm = ic.decouple(walking_assembly, "wm_rear.b")  # one anchor left: fine
        with pytest.raises(WouldDetachAssembly):
            ic.decouple(asm, "wm_left.b")

    def test_one_of_two_anchors_ok(self, walking_assembly):
        asm = ic.decouple(walking_assembly, "wm_left.b")
        assert len(asm.anchors) == 1
        assert asm.port("wm_left.b").state is ic.CouplingState.FREE

    def test_detaching_mim_from_anchored_leg_guarded(self, walking_assembly):
        # rear anchor released, so the left leg coupling is all that secures the MIM
        asm = ic.decouple(walking_assembly, "wm_rear.b")
        with pytest.raises(WouldDetachAssembly):
            ic.decouple(asm, "mim.left")


class TestValidateConfiguration:
    def test_walking(self, walking_assembly):
        assert ic.validate_configuration(walking_assembly) is ic.Configuration.WALKING

    def test_walking_with_one_leg_in_swing(self, walking_assembly):
        asm = ic.decouple(walking_assembly, "wm_left.b")
        assert ic.validate_configuration(asm) is ic.Configuration.WALKING

    def test_maintenance(self, maintenance_assembly):
        assert (
            ic.validate_configuration(maintenance_assembly)
            is ic.Configuration.MAINTENANCE
        )

    def test_unanchored(self):
        with pytest.raises(UnanchoredAssembly):
            ic.validate_configuration(bare_pair())

    def test_externally_mounted(self):
        asm = ic.AssemblyGraph(modules=[presets.make_mim(), presets.make_wm("wm")])
        asm = ic.couple(asm, "mim.rear", "wm.a")
        asm = ic.anchor(asm, "wm.b", "f0")
        assert ic.validate_configuration(asm) is ic.Configuration.EXTERNALLY_MOUNTED

    def test_large_arm_mounted(self):
        arm = ic.ModuleAsset(
            id="biggie",
            kind=ic.ModuleKind.LARGE_ARM,
            ports=[ic.SiPort(id="biggie.tip", owner="biggie")],
        )
        asm = ic.AssemblyGraph(modules=[presets.make_mim(), arm])
        asm = ic.couple(asm, "mim.rear", "biggie.tip")
        assert ic.validate_configuration(asm) is ic.Configuration.LARGE_ARM_MOUNTED

    def test_pure_function_of_structure(self, walking_assembly):
        a = ic.validate_configuration(walking_assembly)
        b = ic.validate_configuration(copy.deepcopy(walking_assembly))
        assert a is b


class TestPowerCheck:
    def test_empty_assembly(self):
        report = ic.power_check(ic.AssemblyGraph())
        assert report.total_power_w == 0.0
        assert report.total_current_a == 0.0
        assert report.within_limit

    def test_default_mim_budget(self, walking_assembly):
        # five 5 W units + 25 W computer + 20 W illumination = 70 W at 48 V
        report = ic.power_check(walking_assembly)
        assert report.total_power_w == pytest.approx(70.0, abs=1e-9)
        assert report.total_current_a == pytest.approx(70.0 / 48.0, abs=1e-9)
        assert report.within_limit

    def test_overload_assembly(self):
        hog = ic.ModuleAsset(id="hog", kind=ic.ModuleKind.ORU_MODULE, power_draw_w=700.0)
        report = ic.power_check(ic.AssemblyGraph(modules=[hog]))
        assert report.total_current_a == pytest.approx(700.0 / 48.0, abs=1e-9)
        assert report.total_current_a > 14.0
        assert not report.within_limit

    def test_equals_brute_force_sum(self, maintenance_assembly):
        report = ic.power_check(maintenance_assembly)
        brute = 0.0
        for m in maintenance_assembly.modules:
            brute += m.power_draw_w
            for _, watts in m.internal_units:
                brute += watts
        assert abs(report.total_power_w - brute) <= 1e-9

    def test_invariant_current_from_power(self, walking_assembly):
        report = ic.power_check(walking_assembly, bus_voltage_v=24.0, limit_a=2.0)
        assert report.total_current_a == pytest.approx(report.total_power_w / 24.0)
        assert report.within_limit == (report.total_current_a <= 2.0)


class TestRouteMessage:
    def test_self_delivery(self, walking_assembly):
        assert ic.route_message(walking_assembly, "mim", "mim") == ic.RouteResult(True, 0)

    def test_one_hop_over_full_coupling(self, walking_assembly):
        assert ic.route_message(walking_assembly, "mim", "wm_left") == ic.RouteResult(True, 1)

    def test_latched_link_carries_no_data(self):
        asm = ic.couple(bare_pair(), "mim.left", "wm.a")
        assert ic.route_message(asm, "mim", "wm") == ic.RouteResult(False)
        # one staging step short: power-coupled still is not a data link
        asm = ic.advance_coupling(asm, "mim.left")
        assert ic.route_message(asm, "mim", "wm") == ic.RouteResult(False)
        asm = ic.advance_coupling(asm, "mim.left")
        assert ic.route_message(asm, "mim", "wm") == ic.RouteResult(True, 1)

    def test_symmetry(self, maintenance_assembly):
        modules = [m.id for m in maintenance_assembly.modules]
        for a in modules:
            for b in modules:
                fwd = ic.route_message(maintenance_assembly, a, b)
                back = ic.route_message(maintenance_assembly, b, a)
                assert fwd == back

    def test_unknown_module(self, walking_assembly):
        with pytest.raises(UnknownModule):
            ic.route_message(walking_assembly, "mim", "ghost")


class TestStateMachine:
    def test_peer_states_always_equal_under_fuzz(self):
        # random legal op sequences never desynchronize the two ends
        import random

        rng = random.Random(7)
        for _ in range(50):
            asm = bare_pair()
            for _ in range(12):
                op = rng.choice(["couple", "advance", "decouple"])
                port = rng.choice(["mim.left", "mim.rear", "wm.a", "wm.b"])
                try:
                    if op == "couple":
                        other = rng.choice([p for p in ["mim.left", "wm.a", "wm.b"] if p != port])
                        asm = ic.couple(asm, port, other)
                    elif op == "advance":
                        asm = ic.advance_coupling(asm, port)
                    else:
                        asm = ic.decouple(asm, port)
                except Exception:
                    continue
                asm.validate()  # raises if any invariant is broken
                for c in asm.couplings:
                    assert asm.port(c.port_a).state is asm.port(c.port_b).state
