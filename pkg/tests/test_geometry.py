import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxct.geometry import (Lattice, ProjectionGeometry, detector_extent, make_geometry,
                            project_lattice, projected_widths, uniform_angles)


def one_angle(deg, lattice=Lattice(1), **kw):
    return make_geometry(lattice, angles=[math.radians(deg)], **kw)


def test_lattice_positions_centered():
    np.testing.assert_allclose(Lattice(4, 0.5).positions, [-0.75, -0.25, 0.25, 0.75])
    assert Lattice(3).refine(10) == Lattice(30, 0.1)
    with pytest.raises(ValueError):
        Lattice(0)


def test_uniform_angles():
    a = uniform_angles(180)
    assert len(a) == 180 and a[0] == 0.0 and a[90] == pytest.approx(math.pi / 2)


def test_project_lattice_examples():
    lat = Lattice(3)  # pixel centers at -1, 0, 1
    assert project_lattice(one_angle(0), lat, 0).reshape(3, 3)[2, 0] == -1.0  # (a, b) = (1, -1) -> b
    assert project_lattice(one_angle(90), lat, 0).reshape(3, 3)[2, 0] == -1.0  # -> -a
    assert project_lattice(one_angle(45), lat, 0).reshape(3, 3)[2, 2] == pytest.approx(0, abs=1e-15)


def test_projected_widths_examples():
    np.testing.assert_allclose(projected_widths(one_angle(0), 0), [1, 0])
    np.testing.assert_allclose(projected_widths(one_angle(45), 0), [math.sqrt(2) / 2] * 2)
    g = make_geometry(Lattice(1, 2.0), angles=[math.radians(30)], blur=1.0, rate=0.5)
    np.testing.assert_allclose(projected_widths(g, 0), [math.sqrt(3), 1, 1])


@given(st.floats(0, 2 * math.pi))
def test_projected_widths_symmetries(theta):
    lat = Lattice(1)
    base = projected_widths(make_geometry(lat, angles=[theta]), 0)
    for other in (theta + math.pi, -theta):
        np.testing.assert_allclose(projected_widths(make_geometry(lat, angles=[other]), 0),
                                   base, atol=1e-14)


def test_detector_extent_examples():
    assert detector_extent(Lattice(1), one_angle(0)) == 5
    lat = Lattice(64)
    full = detector_extent(lat, make_geometry(lat, rate=1.0))
    half = detector_extent(lat, make_geometry(lat, rate=0.5))
    assert abs(half / full - 2) < 0.1  # odd rounding and the guard cell


@given(st.integers(1, 40), st.floats(0.25, 2.0), st.floats(0, 2))
def test_projected_supports_fit(n, rate, blur):
    lat = Lattice(n)
    g = make_geometry(lat, n_views=12, rate=rate, blur=blur)
    edge = g.lambda_y * (g.detector_count - 1) / 2
    for i in range(g.n_views):
        reach = np.abs(project_lattice(g, lat, i)).max() + sum(projected_widths(g, i)) / 2
        assert reach < edge


def test_project_lattice_linear():
    lat = Lattice(5)
    g = make_geometry(lat, n_views=7)
    x = lat.positions
    for i in range(7):
        c, s = g.cos[i], g.sin[i]
        p = project_lattice(g, lat, i).reshape(5, 5)
        assert p[1, 2] + p[3, 4] == pytest.approx(-s * (x[1] + x[3]) + c * (x[2] + x[4]), abs=1e-12)


def test_snapped_trig():
    g = make_geometry(Lattice(4), n_views=4)
    assert g.cos[2] == 0.0 and g.sin[2] == 1.0


def test_detector_count_must_be_odd():
    with pytest.raises(ValueError):
        ProjectionGeometry((0.0,), 1.0, 1.0, 4)


def test_json_roundtrip(tmp_path):
    lat = Lattice(16, 0.5)
    g = make_geometry(lat, n_views=30, rate=1.5, blur=0.5)
    g.save(tmp_path / "g.json")
    back = ProjectionGeometry.load(tmp_path / "g.json")
    assert back.detector_count == g.detector_count
    np.testing.assert_allclose(back.angles, g.angles, atol=1e-15)
    doc = {"n_views": 10, "lambda_x": 0.5, "lambda_y": 0.5, "detector_count": 0, "blur_width": 0}
    auto = ProjectionGeometry.from_json(json.loads(json.dumps(doc)), lat)
    assert auto.detector_count == detector_extent(lat, auto)
