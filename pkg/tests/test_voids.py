import numpy as np
import pytest

from voltip import (REGION_CONTENT, REGION_OUTER, REGION_VOID, PhantomSpec,
                    ValidationError, VoidParams, Volume, determine_voids, generate)


def hollow_box_volume(dims=(24, 24, 24), shell=1500):
    data = np.zeros(dims, dtype=np.uint16)
    data[4:20, 4:20, 4:20] = shell
    data[6:18, 6:18, 6:18] = 0
    return Volume(data)


def test_hollow_box_regions_are_exact():
    bag = hollow_box_volume()
    cmap = determine_voids(bag)
    expected = np.full(bag.dims, REGION_OUTER, dtype=np.uint8)
    expected[4:20, 4:20, 4:20] = REGION_CONTENT
    expected[6:18, 6:18, 6:18] = REGION_VOID
    np.testing.assert_array_equal(cmap.region, expected)
    assert (cmap.cost[cmap.region == REGION_VOID] == 0).all()
    assert (cmap.cost[cmap.region == REGION_OUTER] == cmap.c).all()


def test_cost_values_follow_intensity_normalisation():
    bag = hollow_box_volume()
    data = bag.data.copy()
    data[12, 12, 12] = 410        # occupied voxel inside the void space
    data[13, 12, 12] = 4095       # forces m = 4095
    bag = Volume(data)
    cmap = determine_voids(bag, VoidParams(content_threshold=150, c=100))
    assert cmap.region[12, 12, 12] == REGION_CONTENT
    assert cmap.cost[12, 12, 12] == pytest.approx(410 * 100 / 4095)
    assert cmap.cost[13, 12, 12] == pytest.approx(100.0)


def test_normalisation_uses_volume_maximum():
    # lower dynamic range still normalises onto (0, c]
    bag = hollow_box_volume(shell=900)
    cmap = determine_voids(bag)
    assert float(cmap.cost.max()) == pytest.approx(cmap.c)


def test_solid_volume_has_no_void():
    data = np.zeros((16, 16, 16), dtype=np.uint16)
    data[4:12, 4:12, 4:12] = 3000
    cmap = determine_voids(Volume(data))
    assert (cmap.region != REGION_VOID).all()


def test_regions_partition_grid():
    bag = hollow_box_volume()
    cmap = determine_voids(bag)
    counts = np.bincount(cmap.region.ravel(), minlength=3)
    assert counts.sum() == np.prod(bag.dims)


def test_cost_bounds_and_monotonicity():
    volume, _ = generate(PhantomSpec("cluttered-bag", (32, 32, 32), seed=21))
    cmap = determine_voids(volume)
    assert float(cmap.cost.min()) >= 0.0
    assert float(cmap.cost.max()) <= cmap.c + 1e-12
    content = cmap.region == REGION_CONTENT
    v = volume.data[content].astype(float)
    c = cmap.cost[content]
    order = np.argsort(v)
    assert (np.diff(c[order]) >= -1e-12).all()
    # equal cost only at equal intensity
    dv, dc = np.diff(v[order]), np.diff(c[order])
    assert (dc[dv > 0] > 0).all()


def test_outer_region_is_corner_connected():
    bag = hollow_box_volume()
    cmap = determine_voids(bag)
    from oracles import bfs_region
    outer = cmap.region == REGION_OUTER
    reach = bfs_region(~outer, (0, 0, 0))
    np.testing.assert_array_equal(outer, reach)


def test_no_outer_inside_closed_boundary():
    bag = hollow_box_volume()
    cmap = determine_voids(bag)
    assert (cmap.region[6:18, 6:18, 6:18] == REGION_VOID).all()


def test_empty_scan_errors():
    with pytest.raises(ValidationError):
        determine_voids(Volume(np.zeros((8, 8, 8), dtype=np.uint16)))


def test_corner_inside_bag_errors():
    data = np.zeros((8, 8, 8), dtype=np.uint16)
    data[0:8, 0:8, 0:8] = 1500
    with pytest.raises(ValidationError):
        determine_voids(Volume(data))


def test_params_validation():
    with pytest.raises(ValidationError):
        VoidParams(c=0)
    with pytest.raises(ValidationError):
        VoidParams(bag_dilate_radius=0)
    with pytest.raises(ValidationError):
        VoidParams(binarize_threshold=-5)
