import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maskblur import kernels, model


def supersampled_disk(diameter_px, h, n=500, code=None):
    """Area fractions by midpoint supersampling (n x n points per pixel)."""
    r = diameter_px / 2.0
    side = 2 * h + 1
    t = (np.arange(side * n) + 0.5) / n - side / 2.0
    yy, xx = np.meshgrid(t, t, indexing="ij")
    inside = xx ** 2 + yy ** 2 <= r * r
    if code is not None:
        code = np.asarray(code)
        m = code.shape[0]
        ci = np.clip(np.floor((yy + r) / (2 * r) * m).astype(int), 0, m - 1)
        cj = np.clip(np.floor((xx + r) / (2 * r) * m).astype(int), 0, m - 1)
        box = (np.abs(xx) <= r) & (np.abs(yy) <= r)
        inside &= box & (code[ci, cj] == 1)
    return inside.reshape(side, n, side, n).mean(axis=(1, 3))


def test_in_focus_is_identity_raster():
    k = kernels.in_focus()
    assert k.kind == kernels.IN_FOCUS
    np.testing.assert_array_equal(k.raster, [[1.0]])


def test_library_contents():
    g = model.make_geometry(32, 32, 4)
    lib = kernels.kernel_library(g)
    assert set(lib) == {"in_focus", "disk_1", "disk_1.5", "disk_1.667", "disk_2", "disk_3",
                        "coded_2x2"}
    for k in lib.values():
        assert abs(k.raster.sum() - 1.0) <= 1e-14
        assert k.raster.shape[0] % 2 == 1 and (k.raster >= 0).all()
    assert lib["disk_1.667"].raster.shape == (5, 5)


def test_disk_1_667_support_within_5x5():
    raster = kernels.disk_raster(10 / 3)
    assert raster.shape == (5, 5)
    assert raster[0, 0] == 0.0 and raster[0, 1] > 0


@pytest.mark.parametrize("d", [1.0, 2.0, 10 / 3, 5.0, 6.0])
def test_disk_raster_area_oracle(d):
    raster = kernels.disk_raster(d)
    h = raster.shape[0] // 2
    np.testing.assert_allclose(raster, supersampled_disk(d, h), atol=2e-3)
    assert raster.sum() == pytest.approx(math.pi * d * d / 4, rel=1e-10)


def test_circle_rect_area_closed_forms():
    assert kernels.circle_rect_area(1.0, -1, 1, -1, 1) == pytest.approx(math.pi, rel=1e-12)
    assert kernels.circle_rect_area(1.0, 0, 1, 0, 1) == pytest.approx(math.pi / 4, rel=1e-12)
    assert kernels.circle_rect_area(1.0, 2, 3, 0, 1) == 0.0
    # square inscribed in the circle
    s = 1 / math.sqrt(2)
    assert kernels.circle_rect_area(1.0, -s, s, -s, s) == pytest.approx(2.0, rel=1e-12)


@given(st.floats(0.2, 4.0), st.floats(-3, 3), st.floats(0.1, 3), st.floats(-3, 3),
       st.floats(0.1, 3))
def test_circle_rect_area_additive(r, x0, w, y0, h):
    whole = kernels.circle_rect_area(r, x0, x0 + w, y0, y0 + h)
    xm = x0 + w / 2
    parts = (kernels.circle_rect_area(r, x0, xm, y0, y0 + h)
             + kernels.circle_rect_area(r, xm, x0 + w, y0, y0 + h))
    assert whole == pytest.approx(parts, abs=1e-11)
    assert 0.0 <= whole <= min(w * h, math.pi * r * r) + 1e-12


def test_coded_kernel_oracle():
    k = kernels.coded(2.0, 2)
    h = k.raster.shape[0] // 2
    ref = supersampled_disk(4.0, h, code=kernels.DEFAULT_CODE)
    np.testing.assert_allclose(k.raster, ref / ref.sum(), atol=2e-3)
    # the blocked quadrant (bottom right) is empty
    assert k.raster[h + 1:, h + 1:].sum() == 0.0
    assert k.kind == kernels.CODED


def test_coded_all_open_equals_disk():
    a = kernels.coded(1.5, 2, code=[[1, 1], [1, 1]]).raster
    np.testing.assert_allclose(a, kernels.disk(1.5, 2).raster, atol=1e-13)


def test_kernel_validation():
    with pytest.raises(ValueError):
        kernels.BlurKernel(kernels.EXPLICIT, np.ones((2, 2)) / 4)
    with pytest.raises(ValueError):
        kernels.BlurKernel(kernels.EXPLICIT, np.array([[0.5, 0.6, -0.1]]))
    with pytest.raises(ValueError):
        kernels.BlurKernel(kernels.EXPLICIT, np.ones((3, 3)))
    with pytest.raises(ValueError):
        kernels.explicit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        kernels.coded(2.0, 2, code=[[0, 0], [0, 0]])


def test_explicit_renormalizes_and_is_readonly():
    k = kernels.explicit([[1.0, 2.0, 1.0]], name="tri")
    np.testing.assert_allclose(k.raster, [[0.25, 0.5, 0.25]])
    assert k.name == "tri" and k.normalization == pytest.approx(1.0)
    with pytest.raises(ValueError):
        k.raster[0, 0] = 1.0


def test_by_name():
    g = model.make_geometry(8, 8, 4)
    assert kernels.by_name("disk_1.667", g).raster.shape == (5, 5)
    assert kernels.by_name("disk:2.5", g).diameter_sensor_px == 2.5
    assert kernels.by_name("coded_1.5", g).kind == kernels.CODED
    with pytest.raises(KeyError):
        kernels.by_name("gauss", g)


def test_library_extra_rasters():
    g = model.make_geometry(8, 8, 4)
    lib = kernels.kernel_library(g, extra={"box3": np.ones((3, 3))})
    assert lib["box3"].kind == kernels.EXPLICIT
    np.testing.assert_allclose(lib["box3"].raster, np.full((3, 3), 1 / 9))
