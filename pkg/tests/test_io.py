import numpy as np
import pytest

from boxct.io import (KIND_IMAGE, KIND_SINOGRAM, FormatError, read_csv, read_gtm, read_pgm,
                      write_csv, write_gtm, write_pgm)


def test_gtm_roundtrip(tmp_path):
    a = np.random.default_rng(0).standard_normal((3, 5))
    write_gtm(tmp_path / "a.gtm", a, KIND_SINOGRAM, 0.5)
    raw = (tmp_path / "a.gtm").read_bytes()
    assert raw[:4] == b"GTM1" and len(raw) == 32 + 15 * 8
    b, kind, spacing = read_gtm(tmp_path / "a.gtm")
    np.testing.assert_array_equal(a, b)
    assert kind == KIND_SINOGRAM and spacing == 0.5


@pytest.mark.parametrize("mutate,msg", [
    (lambda r: b"XXXX" + r[4:], "magic"),
    (lambda r: r[:-8], "payload"),
    (lambda r: r[:10], "header"),
    (lambda r: r[:4] + (9).to_bytes(4, "little") + r[8:], "kind"),
])
def test_gtm_corruption(tmp_path, mutate, msg):
    write_gtm(tmp_path / "a.gtm", np.ones((2, 2)), KIND_IMAGE)
    raw = (tmp_path / "a.gtm").read_bytes()
    (tmp_path / "b.gtm").write_bytes(mutate(raw))
    with pytest.raises(FormatError, match=msg):
        read_gtm(tmp_path / "b.gtm")


def test_gtm_kind_check(tmp_path):
    write_gtm(tmp_path / "a.gtm", np.ones((2, 2)), KIND_IMAGE)
    with pytest.raises(FormatError, match="expected a sinogram"):
        read_gtm(tmp_path / "a.gtm", KIND_SINOGRAM)


def test_csv_roundtrip(tmp_path):
    a = np.random.default_rng(1).random((4, 3))
    write_csv(tmp_path / "a.csv", a)
    np.testing.assert_array_equal(read_csv(tmp_path / "a.csv"), a)


def test_pgm_roundtrip_and_range(tmp_path):
    a = np.linspace(-1, 3, 12).reshape(3, 4)
    rng = write_pgm(tmp_path / "a.pgm", a)
    assert rng == {"min": -1.0, "max": 3.0}
    back, maxval = read_pgm(tmp_path / "a.pgm")
    assert maxval == 255 and back.shape == (3, 4)
    np.testing.assert_allclose(back / 255 * 4 - 1, a, atol=4 / 255)


def test_ascii_and_16bit_pgm(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P2\n# comment\n2 2\n1000\n0 1000\n500 250\n")
    a, maxval = read_pgm(tmp_path / "a.pgm")
    assert maxval == 1000
    np.testing.assert_array_equal(a, [[0, 1000], [500, 250]])
    data = np.array([[0, 65535]], dtype=">u2").tobytes()
    (tmp_path / "b.pgm").write_bytes(b"P5 2 1 65535\n" + data)
    np.testing.assert_array_equal(read_pgm(tmp_path / "b.pgm")[0], [[0, 65535]])
