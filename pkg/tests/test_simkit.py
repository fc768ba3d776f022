import numpy as np
import pytest
from hypothesis import given, strategies as st

from maskblur import io as mbio, kernels, model, simkit
from maskblur.errors import NonIntegralDownscale, TooManyPatterns, UnsupportedFormat


def test_philox_is_the_reference_generator():
    # Random123 known-answer vector for philox4x64-10: counter 0, key 0.
    # numpy increments the counter before each block, so start one below zero.
    bg = np.random.Philox(key=0, counter=[2 ** 64 - 1] * 4)
    assert [int(v) for v in bg.random_raw(4)] == [
        0x16554d9eca36314c, 0xdb20fe9d672d0fdc, 0xd7e772cee186176b, 0x7e68b68aec7ba23b]


def test_pattern_reference_sequence():
    # pinned bits for seed 0 so other implementations can check themselves
    g = model.make_geometry(4, 4, 1)
    P = simkit.generate_patterns(g, 3, seed=0)
    assert P.bits.reshape(3, -1).tolist() == [
        [0, 0, 0, 1, 0, 1, 1, 1, 0, 1, 0, 1, 0, 1, 1, 0],
        [0, 1, 1, 0, 0, 0, 0, 1, 0, 1, 1, 1, 1, 1, 0, 0],
        [0, 0, 0, 1, 0, 1, 0, 0, 1, 1, 1, 1, 0, 1, 1, 0],
    ]
    assert simkit.philox(0, 1, 0).integers(0, 2 ** 32, 4).tolist() == [
        3449079904, 2062499482, 670523312, 3722184260]


def test_half_on_exact_count():
    g = model.make_geometry(32, 32, 4)
    P = simkit.generate_patterns(g, 20, seed=5)
    assert P.bits.shape == (20, 32, 32) and P.bits.dtype == np.uint8
    assert (P.bits.reshape(20, -1).sum(axis=1) == 512).all()


@given(st.integers(1, 9), st.integers(1, 6), st.integers(0, 2 ** 63))
def test_half_on_floor(side, K, seed):
    g = model.make_geometry(side, side, 1)
    P = simkit.generate_patterns(g, K, seed=seed)
    assert (P.bits.reshape(K, -1).sum(axis=1) == side * side // 2).all()


def test_patterns_deterministic_and_prefix():
    g = model.make_geometry(8, 8, 4)
    a = simkit.generate_patterns(g, 50, seed=9)
    b = simkit.generate_patterns(g, 50, seed=9)
    np.testing.assert_array_equal(a.bits, b.bits)
    c = simkit.generate_patterns(g, 20, seed=9)
    np.testing.assert_array_equal(a.bits[:20], c.bits)
    np.testing.assert_array_equal(a.prefix(20).bits, c.bits)
    assert not np.array_equal(a.bits, simkit.generate_patterns(g, 50, seed=10).bits)


def test_prefix_property_at_500():
    g = model.make_geometry(32, 32, 4)
    big = simkit.generate_patterns(g, 500, seed=0)
    np.testing.assert_array_equal(big.bits[:100], simkit.generate_patterns(g, 100, seed=0).bits)


def _element_means(seed=0):
    g = model.make_geometry(32, 32, 4)
    return simkit.generate_patterns(g, 500, seed=seed).bits.mean(axis=0)


@pytest.mark.xfail(strict=True, reason=(
    "an element's open fraction over 500 half-on draws has std ~0.022, so a 0.06 bound is "
    "~2.7 sigma and about 7 of 1024 elements are expected to exceed it"))
def test_half_on_balance_every_element_within_006():
    assert np.abs(_element_means() - 0.5).max() <= 0.06


def test_half_on_balance_statistics():
    mean = _element_means()
    assert abs(mean.mean() - 0.5) < 1e-12  # exact: every pattern has 512 ones
    sd = np.sqrt(0.25 / 500)
    assert np.abs(mean - 0.5).max() <= 5 * sd
    assert np.mean(np.abs(mean - 0.5) <= 0.06) >= 0.98
    assert mean.std() == pytest.approx(sd, rel=0.1)


def test_single_element_partition():
    g = model.make_geometry(4, 4, 4)
    P = simkit.generate_patterns(g, 16, simkit.SINGLE_ELEMENT)
    assert (P.bits.reshape(16, -1).sum(axis=1) == 1).all()
    np.testing.assert_array_equal(P.bits.sum(axis=0), np.ones((4, 4)))
    with pytest.raises(TooManyPatterns):
        simkit.generate_patterns(g, 17, simkit.SINGLE_ELEMENT)


def test_bernoulli_and_validation():
    g = model.make_geometry(16, 16, 4)
    P = simkit.generate_patterns(g, 40, simkit.BERNOULLI, seed=1)
    assert set(np.unique(P.bits)) <= {0, 1}
    assert abs(P.bits.mean() - 0.5) < 0.02
    with pytest.raises(ValueError):
        simkit.generate_patterns(g, 0)
    with pytest.raises(ValueError):
        simkit.generate_patterns(g, 2, scheme="random")


def test_noise_sigma_convention():
    nm = simkit.NoiseModel("gaussian_psnr", 40.0)
    scene = np.zeros((8, 8))
    scene[0, 0] = 255.0
    assert nm.sigma_for(scene) == pytest.approx(2.55, rel=1e-15)
    assert simkit.NoiseModel().sigma_for(scene) == 0.0
    with pytest.raises(ValueError):
        simkit.NoiseModel("poisson")
    with pytest.raises(ValueError):
        simkit.NoiseModel("gaussian_psnr", float("inf"))


def test_simulate_without_noise_is_forward(small_op, rng):
    x = rng.random(small_op.geometry.scene_shape) * 255
    np.testing.assert_array_equal(simkit.simulate(small_op, x, simkit.NoiseModel(), seed=3),
                                  model.forward(small_op, x))


def test_simulate_noise_level_and_determinism():
    g = model.make_geometry(32, 32, 4)
    P = simkit.generate_patterns(g, 1000, simkit.BERNOULLI, seed=2)
    op = model.SystemOperator(g, P.bits, kernels.in_focus())
    x = np.full(g.scene_shape, 100.0)
    x[0, 0] = 255.0
    nm = simkit.NoiseModel("gaussian_psnr", 40.0)
    y1 = simkit.simulate(op, x, nm, seed=4)
    y2 = simkit.simulate(op, x, nm, seed=4)
    np.testing.assert_array_equal(y1, y2)
    resid = y1 - model.forward(op, x)
    assert resid.size >= 10 ** 6
    assert resid.std() == pytest.approx(2.55, rel=0.01)
    # noise of measurement k is independent of K
    y_short = simkit.simulate(op.subset(10), x, nm, seed=4)
    np.testing.assert_array_equal(y_short, y1[:10])


def test_block_mean_and_scene_from_array():
    src = np.arange(64.0).reshape(8, 8)
    out = simkit.block_mean(src, 4)
    assert out[0, 0] == pytest.approx(src[:4, :4].mean())
    with pytest.raises(NonIntegralDownscale):
        simkit.block_mean(np.ones((6, 6)), 4)
    g = model.make_geometry(2, 2, 1)
    np.testing.assert_allclose(simkit.scene_from_array(np.full((8, 8), 3.0), g, maxval=255),
                               np.full((2, 2), 3.0))


def test_load_scene_pgm_and_csv(tmp_path, rng):
    g = model.make_geometry(32, 32, 4)
    src = rng.integers(0, 65536, (512, 512)).astype(np.float64)
    mbio.write_pgm(tmp_path / "s.pgm", src, peak=65535)
    scene = simkit.load_scene(tmp_path / "s.pgm", g)
    assert scene.shape == (64, 64)
    blk = src[8:16, 16:24].mean() * 255 / 65535
    assert scene[1, 2] == pytest.approx(blk, rel=1e-12)
    small = rng.random((64, 64))
    mbio.write_image_csv(tmp_path / "s.csv", small)
    np.testing.assert_allclose(simkit.load_scene(tmp_path / "s.csv", g),
                               small * 255 / small.max(), rtol=1e-14)
    mbio.write_image_csv(tmp_path / "c.csv", np.full((128, 128), 9.0))
    np.testing.assert_allclose(simkit.load_scene(tmp_path / "c.csv", g), 255.0)
    with pytest.raises(UnsupportedFormat):
        simkit.load_scene(tmp_path / "s.png", g)
    mbio.write_image_csv(tmp_path / "odd.csv", np.ones((100, 100)))
    with pytest.raises(NonIntegralDownscale):
        simkit.load_scene(tmp_path / "odd.csv", g)


def test_make_kernel_library_reexport():
    g = model.make_geometry(8, 8, 4)
    assert set(simkit.make_kernel_library(g)) == set(kernels.kernel_library(g))


def test_standard_images():
    pytest.importorskip("skimage")
    for name in simkit.STANDARD_IMAGES:
        img = simkit.standard_image(name)
        assert img.shape[0] == img.shape[1] and img.shape[0] % 64 == 0
        assert 0 <= img.min() and img.max() <= 255
