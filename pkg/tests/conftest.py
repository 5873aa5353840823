import pytest

from mimsim import presets
from mimsim.scene import Pose, SurfacePatch


@pytest.fixture
def coupon_scene():
    return presets.coupon_scene()


@pytest.fixture
def coupon_head(coupon_scene):
    patch = coupon_scene.patch("coupon")
    return presets.head_over_patch(patch, standoff_m=1.0)


@pytest.fixture
def walking_assembly():
    return presets.walking_assembly()


@pytest.fixture
def maintenance_assembly():
    return presets.walking_assembly(with_tool_arm=True)


def flat_patch(patch_id="p", extent=1.0, **kwargs):
    return SurfacePatch(
        id=patch_id, frame=Pose((0.0, 0.0, 0.0)), extent_u=extent, extent_v=extent, **kwargs
    )
