import math

import numpy as np
import pytest
from PIL import Image as PILImage

from boxct.geometry import Lattice, make_geometry
from boxct.io import write_pgm
from boxct.operators import forward
from boxct.phantom import (EllipseSpec, forbild_like, ground_truth_image, ground_truth_sinogram,
                           ingest_image, rasterize, read_ellipses, spots, write_ellipses)


def test_ellipse_spec_validates():
    with pytest.raises(ValueError):
        EllipseSpec(0, 0, 0, 1)
    with pytest.raises(ValueError):
        EllipseSpec(0, 0, 1, -1)


def test_rasterize_examples():
    lat = Lattice(5)
    img = rasterize([EllipseSpec(0, 0, 1.5, 1.5, 0, 0.7)], lat).coeffs
    assert img[2, 2] == pytest.approx(0.7)  # fully covered
    assert img[0, 0] == 0.0  # outside


def test_rasterize_disk_area():
    lat = Lattice(40, 0.1).refine(10)
    img = rasterize([EllipseSpec(0, 0, 1, 1)], lat)
    assert lat.lambda_x ** 2 * img.coeffs.sum() == pytest.approx(math.pi, rel=1e-2)


def test_rasterize_linear_and_additive():
    lat = Lattice(24)
    a = EllipseSpec(-4, 3, 3, 2, 20, 0.5)
    b = EllipseSpec(5, -5, 2, 4, -40, 0.8)
    both = rasterize([a, b], lat).coeffs
    np.testing.assert_array_equal(both, rasterize([a], lat).coeffs + rasterize([b], lat).coeffs)
    double = EllipseSpec(a.cx, a.cy, a.a, a.b, a.phi_deg, 2 * a.intensity)
    np.testing.assert_allclose(rasterize([double], lat).coeffs, 2 * rasterize([a], lat).coeffs)


def test_rotation_by_180_is_identity():
    lat = Lattice(16)
    e = EllipseSpec(1, -2, 4, 2, 30, 1)
    f = EllipseSpec(1, -2, 4, 2, 210, 1)
    np.testing.assert_allclose(rasterize([e], lat).coeffs, rasterize([f], lat).coeffs)


def test_spots_deterministic_and_inside():
    lat = Lattice(64)
    e1, i1 = spots(7, 12, lat)
    e2, i2 = spots(7, 12, lat)
    assert e1 == e2
    np.testing.assert_array_equal(i1.coeffs, i2.coeffs)
    half = lat.extent / 2
    for e in e1:
        assert math.hypot(e.cx, e.cy) + max(e.a, e.b) <= half
        assert 0.02 * lat.extent <= min(e.a, e.b) and max(e.a, e.b) <= 0.15 * lat.extent
        assert 0.2 <= e.intensity <= 1.0
    assert spots(8, 12, lat)[0] != e1
    with pytest.raises(ValueError):
        spots(1, 0, lat)


def test_ellipse_csv_roundtrip(tmp_path):
    ells = forbild_like(Lattice(32))
    write_ellipses(tmp_path / "e.csv", ells)
    assert read_ellipses(tmp_path / "e.csv") == ells
    head = (tmp_path / "e.csv").read_text().splitlines()[0]
    assert head == "cx,cy,a,b,phi_deg,intensity"


def test_ground_truth_zero_ellipses():
    lat = Lattice(8)
    g = make_geometry(lat, n_views=6)
    assert not ground_truth_sinogram([], lat, g).samples.any()


def test_ground_truth_converges_with_resolution():
    lat = Lattice(5)
    g = make_geometry(lat, n_views=12)
    e = [EllipseSpec(0, 0, 0.5, 0.5)]
    coarse = forward(rasterize(e, lat), g).samples
    gt10 = ground_truth_sinogram(e, lat, g, factor=10).samples
    gt20 = ground_truth_sinogram(e, lat, g, factor=20).samples
    assert np.linalg.norm(gt10 - gt20) < np.linalg.norm(gt10 - coarse)
    assert np.linalg.norm(gt10 - coarse) > 0  # inverse crime avoided


def test_ground_truth_mass():
    lat = Lattice(16)
    g = make_geometry(lat, n_views=10, blur=1.0)
    ells, _ = spots(3, 5, lat)
    s = ground_truth_sinogram(ells, lat, g).samples
    fine = ground_truth_image(ells, lat)
    np.testing.assert_allclose(g.lambda_y * s.sum(axis=1), fine.coeffs.sum(), rtol=1e-9)


def test_ground_truth_rejects_huge():
    lat = Lattice(1024)
    with pytest.raises(MemoryError):
        ground_truth_image([EllipseSpec(0, 0, 1, 1)], lat)


def _png(path, arr, mode):
    PILImage.fromarray(arr, mode=mode).save(path)


def test_ingest_constant_and_checkerboard(tmp_path):
    write_pgm(tmp_path / "c.pgm", np.full((64, 64), 3.0))  # constant maps to 0
    img = ingest_image(tmp_path / "c.pgm", Lattice(64))
    assert np.ptp(img.coeffs) == 0
    board = ((np.indices((128, 128)).sum(axis=0) % 2) * 255).astype(np.uint8)
    _png(tmp_path / "b.png", board, "L")
    np.testing.assert_allclose(ingest_image(tmp_path / "b.png", Lattice(64)).coeffs, 0.5)


def test_ingest_16bit(tmp_path):
    arr = np.full((32, 32), 65535, dtype=np.uint16)
    arr[:16] = 0
    PILImage.fromarray(arr).save(tmp_path / "w.png")
    img = ingest_image(tmp_path / "w.png", Lattice(16))
    assert img.coeffs.max() == 1.0 and img.coeffs.min() == 0.0


def test_ingest_rejects(tmp_path):
    _png(tmp_path / "odd.png", np.zeros((100, 100), np.uint8), "L")
    with pytest.raises(ValueError, match="multiple"):
        ingest_image(tmp_path / "odd.png", Lattice(64))
    _png(tmp_path / "rect.png", np.zeros((64, 32), np.uint8), "L")
    with pytest.raises(ValueError, match="square"):
        ingest_image(tmp_path / "rect.png", Lattice(32))
    (tmp_path / "x.bmp").write_bytes(b"BM not an image")
    with pytest.raises(ValueError):
        ingest_image(tmp_path / "x.bmp", Lattice(8))
