import numpy as np
import pytest

from mimsim import presets
from mimsim import sensors as sn
from mimsim.errors import NonPositiveDistance, NotInView, OutOfRange
from mimsim.scene import (
    Defect,
    ImpactCrater,
    Pose,
    Scratch,
    ThermalHotspot,
    add_defect,
    height_field,
)


@pytest.fixture
def crater_scene(coupon_scene):
    return add_defect(
        coupon_scene, Defect(ImpactCrater(0.6, 0.2), "coupon", (0.01, 0.01))
    )


class TestGsd:
    def test_default_optics_at_max_range(self):
        # 8 mm / 1.2 um optics image 0.3 mm per pixel at 2 m
        cam = sn.CameraModel()
        assert sn.gsd(cam, 2.0) == pytest.approx(0.3, abs=1e-12)

    def test_near_range(self):
        assert sn.gsd(sn.CameraModel(), 0.2) == pytest.approx(0.03, abs=1e-12)

    def test_linear_in_distance(self):
        cam = sn.CameraModel()
        for d in (0.3, 0.77, 1.5):
            assert sn.gsd(cam, 2 * d) == pytest.approx(2 * sn.gsd(cam, d), rel=1e-15)

    def test_zero_distance_rejected(self):
        with pytest.raises(NonPositiveDistance):
            sn.gsd(sn.CameraModel(), 0.0)

    def test_smallest_resolvable_feature_meets_requirement(self):
        # Nyquist factor 2 at the 2 m limit resolves exactly 0.6 mm
        cam = sn.CameraModel()
        assert cam.min_feature_px * sn.gsd(cam, 2.0) == pytest.approx(0.6)


class TestSensorHead:
    def test_tilt_limits(self):
        with pytest.raises(ValueError):
            sn.SensorHead(base_pose=Pose((0, 0, 0)), tilt_deg=91.0)

    def test_four_cameras_required(self):
        with pytest.raises(ValueError):
            sn.SensorHead(base_pose=Pose((0, 0, 0)), cameras=(sn.CameraModel(),))

    def test_boresight_follows_tilt(self):
        head = sn.SensorHead(base_pose=Pose((0, 0, 0)), tilt_deg=90.0)
        assert np.allclose(head.boresight, [0.0, -1.0, 0.0], atol=1e-12)


class TestCaptureImage:
    def test_boundary_crater_resolvable_at_max_range(self, crater_scene):
        patch = crater_scene.patch("coupon")
        head = presets.head_over_patch(patch, standoff_m=2.0, illumination_on=True)
        image = sn.capture_image(crater_scene, head, "coupon")
        assert image.resolvable_features
        idx, apparent_px = image.resolvable_features[0]
        assert apparent_px == pytest.approx(2.0, rel=1e-6)

    def test_illumination_gates_resolvability(self, crater_scene):
        patch = crater_scene.patch("coupon")
        head = presets.head_over_patch(patch, standoff_m=2.0, illumination_on=False)
        image = sn.capture_image(crater_scene, head, "coupon")
        assert image.resolvable_features == ()
        assert image.contains_uv((0.01, 0.01))  # defect in footprint, just unresolved
        assert not image.illumination_used

    def test_ambient_light_substitutes(self, crater_scene):
        patch = crater_scene.patch("coupon")
        head = presets.head_over_patch(patch, standoff_m=2.0, illumination_on=False)
        image = sn.capture_image(crater_scene, head, "coupon", ambient_light=True)
        assert image.resolvable_features

    def test_too_far_out_of_range(self, crater_scene):
        patch = crater_scene.patch("coupon")
        head = presets.head_over_patch(patch, standoff_m=2.5)
        with pytest.raises(OutOfRange):
            sn.capture_image(crater_scene, head, "coupon")

    def test_too_close_out_of_range(self, crater_scene):
        patch = crater_scene.patch("coupon")
        head = presets.head_over_patch(patch, standoff_m=0.19)
        with pytest.raises(OutOfRange):
            sn.capture_image(crater_scene, head, "coupon")

    def test_sub_resolution_feature_not_listed(self, coupon_scene):
        tiny = add_defect(
            coupon_scene, Defect(ImpactCrater(0.3, 0.1), "coupon", (0.01, 0.01))
        )
        patch = tiny.patch("coupon")
        head = presets.head_over_patch(patch, standoff_m=2.0, illumination_on=True)
        image = sn.capture_image(tiny, head, "coupon")
        assert image.resolvable_features == ()

    def test_patch_behind_head_not_in_view(self, crater_scene):
        patch = crater_scene.patch("coupon")
        center = patch.center_world
        # head past the patch looking away from it
        head = sn.SensorHead(
            base_pose=Pose(tuple(center - 1.0 * patch.normal_world)),
            illumination_on=True,
        )
        with pytest.raises(NotInView):
            sn.capture_image(crater_scene, head, "coupon")


class TestScanProfile:
    def test_noiseless_flat_patch_all_zero(self, coupon_scene):
        patch = coupon_scene.patch("coupon")
        quiet = sn.ProfilometerModel(depth_noise_sigma_mm=0.0)
        head = presets.head_over_patch(patch, standoff_m=1.0, profilometer=quiet)
        cloud = sn.scan_profile(coupon_scene, head, "coupon", seed=1)
        assert np.all(cloud.points[:, 2] == 0.0)

    def test_noiseless_reproduces_height_exactly(self, crater_scene):
        patch = crater_scene.patch("coupon")
        quiet = sn.ProfilometerModel(depth_noise_sigma_mm=0.0)
        head = presets.head_over_patch(patch, standoff_m=1.0, profilometer=quiet)
        cloud = sn.scan_profile(crater_scene, head, "coupon", seed=1)
        rows, cols = cloud.shape
        uu = cloud.grid_origin_uv[0] + np.arange(cols) * cloud.pitch_mm / 1000.0
        vv = cloud.grid_origin_uv[1] + np.arange(rows) * cloud.pitch_mm / 1000.0
        expected = height_field(crater_scene, "coupon", uu[None, :], vv[:, None])
        assert np.max(np.abs(cloud.z_grid_mm() - expected)) <= 1e-12

    def test_same_seed_identical(self, crater_scene, coupon_head):
        a = sn.scan_profile(crater_scene, coupon_head, "coupon", seed=99)
        b = sn.scan_profile(crater_scene, coupon_head, "coupon", seed=99)
        assert np.array_equal(a.points, b.points)

    def test_different_seed_differs(self, crater_scene, coupon_head):
        a = sn.scan_profile(crater_scene, coupon_head, "coupon", seed=1)
        b = sn.scan_profile(crater_scene, coupon_head, "coupon", seed=2)
        assert not np.array_equal(a.points, b.points)

    def test_crater_min_depth_within_noise_band(self, crater_scene, coupon_head):
        # profile minimum -0.2 mm, noise sigma 0.02 mm: minimum within +-3 sigma
        cloud = sn.scan_profile(crater_scene, coupon_head, "coupon", seed=5)
        zmin = cloud.points[:, 2].min() * 1000.0
        assert -0.26 <= zmin <= -0.14

    def test_out_of_working_range(self, crater_scene):
        patch = crater_scene.patch("coupon")
        for standoff in (0.19, 2.01):
            head = presets.head_over_patch(patch, standoff_m=standoff)
            with pytest.raises(OutOfRange):
                sn.scan_profile(crater_scene, head, "coupon", seed=0)

    def test_xyz_export_round_trips(self, crater_scene, coupon_head):
        cloud = sn.scan_profile(crater_scene, coupon_head, "coupon", seed=3)
        text = cloud.to_xyz()
        parsed = np.array([[float(t) for t in line.split()] for line in text.splitlines()])
        assert parsed.shape == cloud.points.shape
        assert np.allclose(parsed, cloud.points, atol=1e-9)


class TestCaptureThermal:
    def test_uniform_patch_no_noise(self, coupon_scene):
        patch = coupon_scene.patch("coupon")
        quiet = sn.ThermalModel(netd_c=0.0)
        head = presets.head_over_patch(patch, standoff_m=1.0, thermal=quiet)
        frame = sn.capture_thermal(coupon_scene, head, "coupon")
        assert np.all(frame.values == 20.0)

    def test_hotspot_reaches_range_top(self, coupon_scene):
        hot = add_defect(
            coupon_scene, Defect(ThermalHotspot(130.0, 20.0), "coupon", (0.01, 0.01))
        )
        head = presets.head_over_patch(hot.patch("coupon"), standoff_m=1.0)
        frame = sn.capture_thermal(hot, head, "coupon", seed=4)
        assert frame.values.max() >= 150.0 - 3 * head.thermal.netd_c

    def test_overrange_clamps(self, coupon_scene):
        molten = add_defect(
            coupon_scene, Defect(ThermalHotspot(180.0, 20.0), "coupon", (0.01, 0.01))
        )
        head = presets.head_over_patch(molten.patch("coupon"), standoff_m=1.0)
        frame = sn.capture_thermal(molten, head, "coupon", seed=4)
        assert frame.values.max() == 150.0

    def test_values_never_leave_range(self, coupon_scene):
        cold = add_defect(
            coupon_scene, Defect(ThermalHotspot(-90.0, 20.0), "coupon", (0.01, 0.01))
        )
        head = presets.head_over_patch(cold.patch("coupon"), standoff_m=1.0)
        for seed in range(10):
            frame = sn.capture_thermal(cold, head, "coupon", seed=seed)
            assert frame.values.min() >= -40.0
            assert frame.values.max() <= 150.0

    def test_frame_shape_is_fixed(self, coupon_scene, coupon_head):
        frame = sn.capture_thermal(coupon_scene, coupon_head, "coupon")
        assert frame.values.shape == (62, 80)

    def test_reproducible(self, coupon_scene, coupon_head):
        a = sn.capture_thermal(coupon_scene, coupon_head, "coupon", seed=8)
        b = sn.capture_thermal(coupon_scene, coupon_head, "coupon", seed=8)
        assert np.array_equal(a.values, b.values)

    def test_csv_export_shape(self, coupon_scene, coupon_head):
        frame = sn.capture_thermal(coupon_scene, coupon_head, "coupon")
        lines = frame.to_csv().splitlines()
        assert len(lines) == 62
        assert all(len(line.split(",")) == 80 for line in lines)


class TestModels:
    def test_thermal_resolution_fixed(self):
        with pytest.raises(ValueError):
            sn.ThermalModel(resolution_px=(100, 100))

    def test_profilometer_range_must_nest(self):
        with pytest.raises(ValueError):
            sn.ProfilometerModel(working_range_m=(0.1, 2.0))

    def test_scratch_width_is_the_visible_size(self):
        d = Defect(Scratch(0.3, 1.0, 5.0), "p", (0.0, 0.0))
        assert sn.visible_feature_size_mm(d) == 1.0

    def test_hotspot_not_a_visual_feature(self):
        d = Defect(ThermalHotspot(130.0, 10.0), "p", (0.0, 0.0))
        assert sn.visible_feature_size_mm(d) is None
