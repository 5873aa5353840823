import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimsim.errors import OutOfBounds, UnknownPatch
from mimsim.scene import (
    Defect,
    FixturePoint,
    ImpactCrater,
    Oru,
    Pose,
    Scratch,
    SurfacePatch,
    ThermalHotspot,
    WarehouseScene,
    add_defect,
    external_area,
    surface_height,
    surface_temperature,
)


def scene_with_patch(extent=1.0, base_temperature=20.0):
    patch = SurfacePatch(
        id="p",
        frame=Pose((0.0, 0.0, 0.0)),
        extent_u=extent,
        extent_v=extent,
        base_temperature=base_temperature,
    )
    return WarehouseScene(structure_patches=(patch,))


class TestPose:
    def test_rejects_non_unit_quaternion(self):
        with pytest.raises(ValueError):
            Pose((0, 0, 0), (1.0, 0.1, 0.0, 0.0))

    def test_rejects_non_finite_position(self):
        with pytest.raises(ValueError):
            Pose((float("nan"), 0, 0))

    def test_transform_identity(self):
        p = Pose((1.0, 2.0, 3.0))
        assert np.allclose(p.transform([1, 0, 0]), [2, 2, 3])


class TestInvariants:
    def test_patch_extents_positive(self):
        with pytest.raises(ValueError):
            SurfacePatch(id="p", frame=Pose((0, 0, 0)), extent_u=0.0, extent_v=1.0)

    def test_defect_sizes_positive(self):
        with pytest.raises(ValueError):
            ImpactCrater(diameter_mm=0.6, depth_mm=0.0)
        with pytest.raises(ValueError):
            Scratch(depth_mm=-0.1, width_mm=1.0, length_mm=5.0)

    def test_oru_needs_patches(self):
        with pytest.raises(ValueError):
            Oru(id="o", patches=(), bounding_box=(1, 1, 1))

    def test_scene_rejects_defect_on_missing_patch(self):
        with pytest.raises(UnknownPatch):
            WarehouseScene(
                defects=(Defect(ImpactCrater(0.6, 0.2), "ghost", (0.0, 0.0)),)
            )

    def test_duplicate_fixture_ids_rejected(self):
        f = FixturePoint(id="f0", pose=Pose((0, 0, 0)))
        with pytest.raises(ValueError):
            WarehouseScene(fixtures=(f, f))


class TestAddDefect:
    def test_appends_defect(self):
        scene = scene_with_patch()
        # 0.6 mm crater: smallest impact size the system must resolve
        out = add_defect(scene, Defect(ImpactCrater(0.6, 0.2), "p", (0.5, 0.5)))
        assert len(out.defects) == 1
        assert len(scene.defects) == 0  # original untouched

    def test_unknown_patch(self):
        scene = scene_with_patch()
        with pytest.raises(UnknownPatch):
            add_defect(scene, Defect(ImpactCrater(0.6, 0.2), "nope", (0.5, 0.5)))

    def test_out_of_bounds(self):
        scene = scene_with_patch()
        with pytest.raises(OutOfBounds):
            add_defect(scene, Defect(ImpactCrater(0.6, 0.2), "p", (1.5, 0.5)))

    def test_crater_center_is_negative(self):
        scene = add_defect(
            scene_with_patch(), Defect(ImpactCrater(0.6, 0.2), "p", (0.5, 0.5))
        )
        assert surface_height(scene, "p", (0.5, 0.5)) < 0.0


class TestSurfaceHeight:
    def test_flat_patch_is_zero(self):
        assert surface_height(scene_with_patch(), "p", (0.3, 0.7)) == 0.0

    def test_crater_center_depth(self):
        scene = add_defect(
            scene_with_patch(), Defect(ImpactCrater(0.6, 0.2), "p", (0.5, 0.5))
        )
        assert surface_height(scene, "p", (0.5, 0.5)) == pytest.approx(-0.2, abs=1e-12)

    def test_crater_half_radius(self):
        # h(R/2) = -depth * (1 - 1/4); R = 0.3 mm
        scene = add_defect(
            scene_with_patch(), Defect(ImpactCrater(0.6, 0.2), "p", (0.5, 0.5))
        )
        uv = (0.5 + 0.15e-3, 0.5)
        assert surface_height(scene, "p", uv) == pytest.approx(-0.15, abs=1e-9)

    def test_crater_zero_outside_radius(self):
        scene = add_defect(
            scene_with_patch(), Defect(ImpactCrater(0.6, 0.2), "p", (0.5, 0.5))
        )
        assert surface_height(scene, "p", (0.5 + 0.31e-3, 0.5)) == 0.0

    def test_scratch_profile(self):
        scene = add_defect(
            scene_with_patch(),
            Defect(Scratch(depth_mm=0.4, width_mm=1.0, length_mm=5.0), "p", (0.5, 0.5)),
        )
        # groove floor along the axis
        assert surface_height(scene, "p", (0.5, 0.5)) == pytest.approx(-0.4, abs=1e-12)
        assert surface_height(scene, "p", (0.502, 0.5)) == pytest.approx(-0.4, abs=1e-12)
        # parabolic across the width: quarter width from center
        got = surface_height(scene, "p", (0.5, 0.5 + 0.25e-3))
        assert got == pytest.approx(-0.4 * (1 - 0.25), abs=1e-9)
        # beyond the half width and beyond the end
        assert surface_height(scene, "p", (0.5, 0.5 + 0.51e-3)) == 0.0
        assert surface_height(scene, "p", (0.5 + 2.6e-3, 0.5)) == 0.0

    def test_hotspot_does_not_displace(self):
        scene = add_defect(
            scene_with_patch(), Defect(ThermalHotspot(130.0, 10.0), "p", (0.5, 0.5))
        )
        assert surface_height(scene, "p", (0.5, 0.5)) == 0.0

    @given(
        u1=st.floats(0.1, 0.4),
        u2=st.floats(0.6, 0.9),
        probe=st.floats(0.0, 1.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_non_overlapping_defects_commute(self, u1, u2, probe):
        d1 = Defect(ImpactCrater(0.6, 0.2), "p", (u1, 0.5))
        d2 = Defect(Scratch(0.3, 1.0, 5.0), "p", (u2, 0.5))
        base = scene_with_patch()
        ab = add_defect(add_defect(base, d1), d2)
        ba = add_defect(add_defect(base, d2), d1)
        uv = (probe, 0.5)
        assert surface_height(ab, "p", uv) == pytest.approx(
            surface_height(ba, "p", uv), abs=1e-12
        )


class TestSurfaceTemperature:
    def test_no_hotspot_is_base(self):
        assert surface_temperature(scene_with_patch(), "p", (0.1, 0.1)) == 20.0

    def test_hotspot_center_reaches_range_top(self):
        # +130 on a 20 C patch: the hottest temperature the imager must resolve
        scene = add_defect(
            scene_with_patch(), Defect(ThermalHotspot(130.0, 10.0), "p", (0.5, 0.5))
        )
        assert surface_temperature(scene, "p", (0.5, 0.5)) == pytest.approx(150.0)

    def test_boundary_back_to_base(self):
        scene = add_defect(
            scene_with_patch(), Defect(ThermalHotspot(130.0, 10.0), "p", (0.5, 0.5))
        )
        assert surface_temperature(scene, "p", (0.5 + 10e-3, 0.5)) == pytest.approx(20.0)

    def test_linear_falloff(self):
        scene = add_defect(
            scene_with_patch(), Defect(ThermalHotspot(-60.0, 10.0), "p", (0.5, 0.5))
        )
        got = surface_temperature(scene, "p", (0.5 + 5e-3, 0.5))
        assert got == pytest.approx(20.0 - 30.0)

    def test_base_beyond_every_hotspot(self):
        scene = add_defect(
            scene_with_patch(), Defect(ThermalHotspot(130.0, 10.0), "p", (0.2, 0.2))
        )
        for uv in [(0.8, 0.8), (0.2, 0.6), (0.9, 0.1)]:
            assert surface_temperature(scene, "p", uv) == 20.0


class TestExternalArea:
    def test_single_patch(self):
        oru = Oru(
            id="o",
            patches=(SurfacePatch(id="a", frame=Pose((0, 0, 0)), extent_u=1.0, extent_v=1.0),),
            bounding_box=(1, 1, 1),
        )
        assert external_area(oru) == 1.0

    def test_cube_of_six_half_meter_faces(self):
        patches = tuple(
            SurfacePatch(id=f"f{k}", frame=Pose((0, 0, k)), extent_u=0.5, extent_v=0.5)
            for k in range(6)
        )
        oru = Oru(id="cube", patches=patches, bounding_box=(0.5, 0.5, 0.5))
        assert external_area(oru) == pytest.approx(1.5)
