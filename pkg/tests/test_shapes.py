import numpy as np
import pytest

from geocloud.errors import EmptyRequest
from geocloud.shapes import ShapeSpec, generate_cone, generate_cube, generate_sphere

GENS = [generate_cube, generate_cone, generate_sphere]


@pytest.mark.parametrize("gen", GENS)
def test_deterministic(gen):
    np.testing.assert_array_equal(gen(500, seed=9).points, gen(500, seed=9).points)
    assert not np.array_equal(gen(500, seed=9).points, gen(500, seed=10).points)


@pytest.mark.parametrize("gen", GENS)
def test_empty_request(gen):
    with pytest.raises(EmptyRequest):
        gen(0)


def test_cube_in_box_and_moments():
    pts = generate_cube(100_000, seed=1).points
    assert np.abs(pts).max() <= 0.5
    assert np.all(np.abs(pts.mean(axis=0)) < 0.01)
    assert np.all(np.abs(pts.var(axis=0) - 1 / 12) < 0.005)


def test_cone_surface():
    pts = generate_cone(100_000, seed=2).points
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert np.max(np.abs(r - (1 - pts[:, 2] / 2))) < 1e-9
    assert pts[:, 2].min() >= 0 and pts[:, 2].max() <= 2
    assert abs(pts[:, 2].mean() - 1.0) < 0.02


def test_cone_apex():
    # h = 2 gives radius 0 whatever the angle
    theta = 1.234
    r = 1 - 2 / 2
    assert (r * np.cos(theta), r * np.sin(theta)) == (0.0, 0.0)


def test_sphere_unit_norm_and_symmetry():
    pts = generate_sphere(100_000, seed=3).points
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1)) < 1e-9
    assert abs(pts[:, 2].mean()) < 0.02


def test_sphere_is_pole_heavy():
    # uniform polar angle puts more mass near the poles than an area-uniform sample would
    z = generate_sphere(100_000, seed=4).points[:, 2]
    frac = np.mean(np.abs(z) > 0.9)
    area_uniform = 0.1
    assert frac > 1.5 * area_uniform


def test_shape_spec():
    assert ShapeSpec("cube", 10, 1).generate().n == 10
    with pytest.raises(ValueError):
        ShapeSpec("torus")
