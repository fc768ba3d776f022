import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import signal

from maskblur import kernels, model, simkit
from maskblur.errors import (BudgetExceeded, DimensionMismatch, KernelLargerThanImage,
                             NonIntegralFactor)


# -- geometry -----------------------------------------------------------------

@pytest.mark.parametrize("args, scene, c, block", [
    ((32, 32, 4), 64, 2, 2),
    ((8, 8, 1), 8, 1, 1),
    ((16, 8, 4), 32, 2, 4),
])
def test_make_geometry(args, scene, c, block):
    g = model.make_geometry(*args)
    assert (g.scene_side, g.upscale_c, g.sensor_block) == (scene, c, block)
    assert g.n_mask == args[0] ** 2 and g.n_sensor == args[1] ** 2 and g.n_scene == scene ** 2


@pytest.mark.parametrize("args", [(32, 32, 2), (8, 3, 4), (0, 8, 4), (8, 8, 0)])
def test_make_geometry_rejects(args):
    with pytest.raises(NonIntegralFactor):
        model.make_geometry(*args)


def test_geometry_rejects_non_multiples():
    with pytest.raises(NonIntegralFactor):
        model.Geometry(3, 4, 8)


# -- modulate / blur / subsample ------------------------------------------------

def test_modulate_identities(rng):
    g = model.make_geometry(4, 4, 4)
    x = rng.random(g.scene_shape)
    np.testing.assert_array_equal(model.modulate(x, np.ones(g.mask_shape), g), x)
    np.testing.assert_array_equal(model.modulate(x, np.zeros(g.mask_shape), g), 0 * x)


def test_modulate_hand_example():
    g = model.make_geometry(1, 1, 4)
    out = model.modulate(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[0]]), g)
    np.testing.assert_array_equal(out, np.zeros((2, 2)))


def test_modulate_is_blockwise(rng):
    g = model.make_geometry(4, 4, 9)
    p = rng.integers(0, 2, g.mask_shape)
    out = model.modulate(np.ones(g.scene_shape), p, g)
    for i in range(g.scene_side):
        for j in range(g.scene_side):
            assert out[i, j] == p[i // 3, j // 3]


def test_modulate_shape_check():
    g = model.make_geometry(4, 4, 4)
    with pytest.raises(DimensionMismatch):
        model.modulate(np.ones((7, 7)), np.ones((4, 4)), g)


def test_blur_in_focus_identity(rng):
    x = rng.random((16, 16))
    np.testing.assert_array_equal(model.blur(x, kernels.in_focus()), x)


def test_blur_1d_121():
    k = kernels.explicit(np.array([[1.0, 2.0, 1.0]]))
    out = model.blur(np.array([[0.0, 1.0, 0.0]]), k)
    np.testing.assert_allclose(out, [[0.25, 0.5, 0.25]], atol=1e-15)


@pytest.mark.parametrize("name", ["disk_1", "disk_1.667", "disk_3", "coded_2x2"])
def test_blur_preserves_interior_constant(name):
    g = model.make_geometry(16, 16, 4)
    k = kernels.kernel_library(g)[name]
    out = model.blur(np.full(g.scene_shape, 7.0), k)
    h = k.half_size[0]
    np.testing.assert_allclose(out[h:-h or None, h:-h or None], 7.0, rtol=0, atol=7e-14)


def test_blur_matches_scipy_convolve2d(rng):
    g = model.make_geometry(8, 8, 4)
    k = kernels.kernel_library(g)["coded_2x2"]  # asymmetric: catches flips
    x = rng.random(g.scene_shape)
    np.testing.assert_allclose(model.blur(x, k), signal.convolve2d(x, k.raster, mode="same"),
                               atol=1e-13)


def test_blur_loses_flux_only_at_boundary(rng):
    g = model.make_geometry(8, 8, 4)
    k = kernels.disk(2.0, 2)
    x = np.zeros(g.scene_shape)
    x[5:10, 5:10] = rng.random((5, 5))
    assert model.blur(x, k).sum() == pytest.approx(x.sum(), rel=1e-13)
    edge = np.zeros(g.scene_shape)
    edge[0, 0] = 1.0
    assert model.blur(edge, k).sum() < 1.0


def test_blur_kernel_too_large():
    with pytest.raises(KernelLargerThanImage):
        model.blur(np.ones((3, 3)), kernels.disk(3.0, 2))


def test_subsample_examples():
    g1 = model.make_geometry(4, 4, 1)
    x = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(model.subsample(x, g1), x)
    g2 = model.make_geometry(1, 1, 4)
    np.testing.assert_array_equal(model.subsample(np.array([[1.0, 3.0], [5.0, 7.0]]), g2), [[4.0]])
    g3 = model.make_geometry(4, 2, 4)
    np.testing.assert_array_equal(model.subsample(np.full((8, 8), 3.5), g3), np.full((2, 2), 3.5))


def test_subsample_shape_check():
    with pytest.raises(DimensionMismatch):
        model.subsample(np.ones((5, 5)), model.make_geometry(4, 4, 4))


# -- operator ---------------------------------------------------------------------

def test_forward_identity_configuration(rng):
    g = model.make_geometry(6, 6, 1)
    x = rng.random(g.scene_shape)
    op = model.SystemOperator(g, np.ones((1,) + g.mask_shape), kernels.in_focus())
    np.testing.assert_array_equal(model.forward(op, x)[0], x)
    A = model.materialize(op).toarray()
    np.testing.assert_array_equal(A, np.eye(g.n_scene))
    np.testing.assert_array_equal(model.gram(op).toarray(), np.eye(g.n_scene))


def test_forward_adjoint_zero(small_op):
    g = small_op.geometry
    assert not model.forward(small_op, np.zeros(g.scene_shape)).any()
    assert not model.adjoint(small_op, np.zeros((small_op.K,) + g.sensor_shape)).any()


def test_forward_matches_dense_matrix(small_op, rng):
    g = small_op.geometry
    A = model.materialize(small_op)
    assert A.shape == (small_op.K * g.n_sensor, g.n_scene)
    for _ in range(5):
        x = rng.standard_normal(g.scene_shape)
        ref = A @ x.ravel()
        got = model.forward(small_op, x).ravel()
        assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)


def test_adjoint_matches_dense_transpose(small_op, rng):
    g = small_op.geometry
    A = model.materialize(small_op).toarray()
    ys = rng.standard_normal((small_op.K,) + g.sensor_shape)
    ref = A.T @ ys.ravel()
    got = model.adjoint(small_op, ys).ravel()
    assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)


def test_adjoint_delta_probe(small_op, rng):
    g = small_op.geometry
    ys = rng.standard_normal((small_op.K,) + g.sensor_shape)
    back = model.adjoint(small_op, ys).ravel()
    for i in rng.choice(g.n_scene, 10, replace=False):
        e = np.zeros(g.n_scene)
        e[i] = 1.0
        lhs = np.vdot(model.forward(small_op, e.reshape(g.scene_shape)), ys)
        assert lhs == pytest.approx(back[i], abs=1e-12)


def test_adjoint_shape_check(small_op):
    with pytest.raises(DimensionMismatch):
        model.adjoint(small_op, np.zeros((small_op.K + 1,) + small_op.geometry.sensor_shape))


@given(st.integers(0, 2 ** 32 - 1))
def test_adjoint_identity_property(seed):
    rng = np.random.default_rng(seed)
    g = model.make_geometry(8, 8, 4)
    lib = kernels.kernel_library(g)
    P = simkit.generate_patterns(g, 3, seed=seed % 1000)
    op = model.SystemOperator(g, P.bits, [lib["disk_2"], lib["in_focus"], lib["coded_2x2"]])
    x = rng.standard_normal(g.scene_shape)
    ys = rng.standard_normal((3,) + g.sensor_shape)
    lhs = np.vdot(model.forward(op, x), ys)
    rhs = np.vdot(x, model.adjoint(op, ys))
    assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(ys)


@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_forward_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    g = model.make_geometry(4, 4, 4)
    op = model.SystemOperator(g, simkit.generate_patterns(g, 2, seed=1).bits, kernels.disk(1.5, 2))
    x, z = rng.standard_normal((2,) + g.scene_shape)
    lhs = model.forward(op, a * x + b * z)
    rhs = a * model.forward(op, x) + b * model.forward(op, z)
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale * 10


def test_materialize_row_sums_are_kernel_mass():
    g = model.make_geometry(8, 8, 4)
    k = kernels.disk(5 / 3, 2)
    op = model.SystemOperator(g, np.ones((1,) + g.mask_shape), k)
    A = model.materialize(op)
    # analytic: mean over the sensor block of the kernel mass landing inside the image
    n, b = g.scene_side, g.sensor_block
    inside = signal.convolve2d(np.ones((n, n)), k.raster[::-1, ::-1], mode="same")
    expected = inside.reshape(g.sensor_side, b, g.sensor_side, b).mean(axis=(1, 3)).ravel()
    np.testing.assert_allclose(np.asarray(A.sum(axis=1)).ravel(), expected, atol=1e-14)


def test_gram_matches_dense_oracle(small_op):
    A = model.materialize(small_op).toarray()
    G = model.gram(small_op).toarray()
    ref = A.T @ A
    assert np.abs(G - ref).max() <= 1e-12 * np.abs(ref).max()
    np.testing.assert_array_equal(G, G.T)


def test_gram_psd(small_op):
    w = np.linalg.eigvalsh(model.gram(small_op).toarray())
    assert w.min() >= -1e-10 * w.max()


@given(st.integers(0, 10 ** 6), st.integers(1, 12))
def test_in_focus_rank_at_most_n(seed, K):
    g = model.make_geometry(4, 4, 4)
    op = model.SystemOperator(g, simkit.generate_patterns(g, K, simkit.BERNOULLI, seed).bits,
                              kernels.in_focus())
    w = np.linalg.eigvalsh(model.gram(op).toarray())
    if w.max() > 0:
        assert np.count_nonzero(w > 1e-10 * w.max()) <= g.n_mask


def test_budget_exceeded(small_op):
    with pytest.raises(BudgetExceeded) as exc:
        model.materialize(small_op, budget_bytes=1000)
    assert exc.value.required > exc.value.available == 1000
    with pytest.raises(BudgetExceeded):
        model.gram(small_op, budget_bytes=10)


def test_operator_validation(small_geometry):
    g = small_geometry
    P = np.ones((3,) + g.mask_shape)
    with pytest.raises(DimensionMismatch):
        model.SystemOperator(g, P, [kernels.in_focus()] * 2)
    with pytest.raises(DimensionMismatch):
        model.SystemOperator(g, np.ones((3, 5, 5)), kernels.in_focus())
    op = model.SystemOperator(g, P, kernels.in_focus())
    assert op.K == 3 and op.shape == (3 * g.n_sensor, g.n_scene)
    assert op.subset(2).K == 2


def test_mask_index_maps_blocks():
    g = model.make_geometry(3, 3, 4)
    idx = model.mask_index(g).reshape(g.scene_shape)
    assert idx[0, 0] == idx[1, 1] == 0
    assert idx[0, 2] == 1 and idx[2, 0] == 3 and idx[5, 5] == 8
