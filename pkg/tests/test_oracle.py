import math

import numpy as np
import pytest

from boxct.geometry import Lattice, make_geometry
from boxct.operators import Image
from boxct.oracle import (convolve_boxes, dense_gram, dense_solve, quadrature_forward,
                          quadrature_gram_tap, siddon_integral)


def test_siddon_examples():
    img = Image(np.ones((1, 1)))
    assert siddon_integral(img, (-5, 0), (1, 0)) == pytest.approx(1.0)
    d = np.array([1, 1]) / math.sqrt(2)
    assert siddon_integral(img, (-3, -3), d) == pytest.approx(math.sqrt(2))
    assert siddon_integral(img, (-5, 3), (1, 0)) == 0.0


def test_siddon_sums_pixels():
    img = Image(np.arange(9.0).reshape(3, 3))
    # ray along x1 through the middle row of x2 = 0 hits coeffs[:, 1]
    assert siddon_integral(img, (-5, 0.2), (1, 0)) == pytest.approx(1 + 4 + 7)


def test_quadrature_forward_zero_image():
    lat = Lattice(4)
    g = make_geometry(lat, n_views=3, blur=0.5)
    assert quadrature_forward(Image.zeros(lat), g, 1, 0.3) == 0.0


def test_gram_tap_examples():
    lat = Lattice(3)
    g0 = make_geometry(lat, angles=[0.0])
    assert quadrature_gram_tap(lat, g0, (1, 0)) == pytest.approx(1.0, abs=1e-12)
    g45 = make_geometry(lat, angles=[math.pi / 4])
    assert quadrature_gram_tap(lat, g45, (0, 0)) == pytest.approx(2 * math.sqrt(2) / 3, rel=1e-12)


def test_convolve_boxes_triangle():
    pp = convolve_boxes([1.0, 1.0])
    np.testing.assert_allclose(pp([-1, -0.5, 0, 0.5, 1]), [0, 0.5, 1, 0.5, 0], atol=1e-14)


def test_dense_solve_examples():
    assert dense_solve(np.array([[4.0]]), np.array([[2.0]]))[0, 0] == 0.5
    taps = np.zeros((5, 5))
    taps[2, 2] = 1.0
    b = np.random.default_rng(0).standard_normal((3, 3))
    np.testing.assert_allclose(dense_solve(taps, b), b)
    np.testing.assert_array_equal(dense_gram(taps), np.eye(9))


def test_dense_solve_diagnoses_indefinite():
    taps = np.zeros((3, 3))
    taps[1, 1] = -1.0
    with pytest.raises(ValueError, match="eigenvalue"):
        dense_solve(taps, np.ones((2, 2)))
