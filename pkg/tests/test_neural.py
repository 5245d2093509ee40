import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _gradcheck import numeric_grad, rel_error, skipnet_max_rel_error
from isardip.neural import (AdamState, ConvLayer, NetworkConfig, SkipNet, adam_step,
                            conv2d_backward, conv2d_forward, swish, swish_backward,
                            upsample, upsample_backward)
from isardip.neural import _kernels as K
from isardip.neural.layers import (center_crop, center_crop_backward, instance_norm,
                                   instance_norm_backward, out_size)


def naive_conv(x, w, b, stride, padding):
    C, H, W = x.shape
    mode = "reflect" if padding == "reflect" else "constant"
    xp = np.pad(x, ((0, 0), (2, 2), (2, 2)), mode=mode)
    oh, ow = out_size(H, stride), out_size(W, stride)
    out = np.zeros((w.shape[0], oh, ow))
    for o in range(w.shape[0]):
        for i in range(oh):
            for j in range(ow):
                out[o, i, j] = b[o] + np.sum(w[o] * xp[:, i * stride:i * stride + 5, j * stride:j * stride + 5])
    return out


def test_identity_kernel(rng):
    x = rng.standard_normal((2, 7, 6))
    w = np.zeros((2, 2, 5, 5))
    w[0, 0, 2, 2] = w[1, 1, 2, 2] = 1
    np.testing.assert_array_equal(conv2d_forward(x, ConvLayer(w, np.zeros(2))), x)


def test_constant_input_interior():
    y = conv2d_forward(np.full((1, 9, 9), 1.5), ConvLayer(np.ones((1, 1, 5, 5)), np.zeros(1)))
    assert y[0, 4, 4] == pytest.approx(25 * 1.5)


@pytest.mark.parametrize("stride", [1, 2])
@pytest.mark.parametrize("padding", ["reflect", "zero"])
@pytest.mark.parametrize("hw", [(6, 6), (7, 5), (3, 4)])
def test_conv_matches_naive(rng, stride, padding, hw):
    layer = ConvLayer(rng.standard_normal((3, 2, 5, 5)), rng.standard_normal(3), stride, padding)
    x = rng.standard_normal((2, *hw))
    ref = naive_conv(x, layer.weight, layer.bias, stride, padding)
    np.testing.assert_allclose(conv2d_forward(x, layer), ref, atol=1e-12, rtol=0)


def test_conv_channel_mismatch(rng):
    with pytest.raises(ValueError):
        conv2d_forward(rng.standard_normal((3, 6, 6)), ConvLayer.init(2, 1, rng))


def test_stride_two_is_ceil_half():
    for n in range(3, 18):
        assert out_size(n, 2) == -(-n // 2)


@pytest.mark.parametrize("stride", [1, 2])
@pytest.mark.parametrize("padding", ["reflect", "zero"])
def test_conv_backward_fd(rng, stride, padding):
    layer = ConvLayer(rng.standard_normal((3, 2, 5, 5)), rng.standard_normal(3), stride, padding)
    x = rng.standard_normal((2, 6, 6))
    R = rng.standard_normal(conv2d_forward(x, layer).shape)
    gx, gw, gb = conv2d_backward(x, layer, R)
    terms = lambda: R * conv2d_forward(x, layer)  # noqa: E731
    assert rel_error(gx, numeric_grad(terms, x)) < 1e-5
    assert rel_error(gw, numeric_grad(terms, layer.weight)) < 1e-5
    assert rel_error(gb, numeric_grad(terms, layer.bias)) < 1e-5


def test_conv_backward_linear_facts(rng):
    layer = ConvLayer.init(2, 3, rng)
    x = rng.standard_normal((2, 6, 6))
    gx, gw, gb = conv2d_backward(x, layer, np.zeros((3, 6, 6)))
    assert not gx.any() and not gw.any() and not gb.any()
    g = rng.standard_normal((3, 6, 6))
    np.testing.assert_allclose(conv2d_backward(x, layer, g)[2], g.sum(axis=(1, 2)))


def test_swish():
    assert swish(np.array(0.0)) == 0
    assert swish_backward(np.array(0.0), np.array(1.0)) == 0.5
    assert swish(np.array(20.0)) == pytest.approx(20, abs=1e-7)
    x = np.linspace(-6, 6, 41)
    num = (swish(x + 1e-6) - swish(x - 1e-6)) / 2e-6
    assert np.max(np.abs(swish_backward(x, np.ones_like(x)) - num)) < 1e-7


def test_upsample_and_adjoint(rng):
    np.testing.assert_array_equal(upsample(np.full((1, 2, 2), 3.0)), np.full((1, 4, 4), 3.0))
    x, g = rng.standard_normal((2, 3, 4)), rng.standard_normal((2, 6, 8))
    assert np.sum(upsample(x) * g) == pytest.approx(np.sum(x * upsample_backward(g)))


def test_crop_adjoint(rng):
    x, g = rng.standard_normal((2, 6, 7)), rng.standard_normal((2, 5, 5))
    assert np.sum(center_crop(x, 5, 5) * g) == pytest.approx(np.sum(x * center_crop_backward(g, x.shape)))


@pytest.mark.parametrize("h", range(3, 18))
def test_down_up_crop_shapes(h):
    for w in (3, 8, 17):
        d = (out_size(h, 2), out_size(w, 2))
        up = (2 * d[0], 2 * d[1])
        assert up[0] >= h and up[1] >= w
        assert center_crop(np.zeros((1, *up)), h, w).shape == (1, h, w)
        if h % 2 == 0 and w % 2 == 0:
            assert up == (h, w)


def test_instance_norm_gradient(rng):
    x = rng.standard_normal((2, 5, 5))
    R = rng.standard_normal((2, 5, 5))
    y, cache = instance_norm(x)
    np.testing.assert_allclose(y.mean(axis=(1, 2)), 0, atol=1e-12)
    g = instance_norm_backward(cache, R)
    num = numeric_grad(lambda: R * instance_norm(x)[0], x)
    assert np.max(np.abs(g - num)) < 1e-7


def test_kernel_backends_agree(rng):
    if not K.NUMBA_AVAILABLE:
        pytest.skip("numba path unavailable")
    x = rng.standard_normal((3, 9, 7))
    for mode in ("reflect", "zero"):
        rm, cm = K.pad_index(9, 2, mode), K.pad_index(7, 2, mode)
        for s in (1, 2):
            oh, ow = out_size(9, s), out_size(7, s)
            a = K.im2col(x, rm, cm, s, oh, ow, 5, backend="numpy")
            b = K.im2col(x, rm, cm, s, oh, ow, 5, backend="numba")
            np.testing.assert_array_equal(a, b)
            np.testing.assert_allclose(K.col2im(a, rm, cm, s, 9, 7, 5, backend="numpy"),
                                       K.col2im(a, rm, cm, s, 9, 7, 5, backend="numba"), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 9])
def test_reflect_index_matches_numpy_pad(n):
    ref = np.pad(np.arange(n), 2, mode="reflect")
    np.testing.assert_array_equal(K.pad_index(n, 2, "reflect"), ref)


MINI = NetworkConfig(depth=6, channels=(4,) * 6, skip_channels=4, seed=3)


def test_skipnet_shape_and_zero_weights(rng):
    net = SkipNet(MINI, 3)
    z = rng.standard_normal((3, 12, 12))
    assert net.forward(z).shape == (1, 12, 12)
    for p in net.parameters().values():
        p[...] = 0
    assert not net.forward(z).any()


@pytest.mark.parametrize("hw", [(12, 12), (13, 10), (7, 9)])
def test_skipnet_odd_shapes(rng, hw):
    net = SkipNet(MINI, 2)
    assert net.forward(rng.standard_normal((2, *hw))).shape == (1, *hw)


def test_skipnet_deterministic_and_seeded(rng):
    z = rng.standard_normal((3, 8, 8))
    a, b = SkipNet(MINI, 3), SkipNet(MINI, 3)
    for k, v in a.parameters().items():
        np.testing.assert_array_equal(v, b.parameters()[k])
    np.testing.assert_array_equal(a.forward(z), a.forward(z))


def test_skipnet_backward_requires_forward(rng):
    net = SkipNet(MINI, 3)
    with pytest.raises(RuntimeError):
        net.backward(np.zeros((1, 8, 8)))
    net.forward(rng.standard_normal((3, 8, 8)))
    net.backward(np.zeros((1, 8, 8)))
    with pytest.raises(RuntimeError):
        net.backward(np.zeros((1, 8, 8)))


def test_skipnet_zero_grad(rng):
    net = SkipNet(MINI, 3)
    net.forward(rng.standard_normal((3, 8, 8)))
    assert all(not g.any() for g in net.backward(np.zeros((1, 8, 8))).values())


def test_skipnet_gradcheck_minimal(rng):
    cfg = NetworkConfig(depth=2, channels=(2, 2), skip_channels=1, seed=1)
    net = SkipNet(cfg, 1)
    assert skipnet_max_rel_error(net, rng.standard_normal((1, 6, 6)), rng.standard_normal((1, 6, 6))) < 1e-4


def test_skipnet_gradcheck_zero_padding(rng):
    cfg = NetworkConfig(depth=4, channels=(3, 3, 3, 3), skip_channels=2, seed=2, padding="zero")
    net = SkipNet(cfg, 2)
    assert skipnet_max_rel_error(net, rng.standard_normal((2, 9, 9)), rng.standard_normal((1, 9, 9))) < 1e-4


def test_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(depth=4, channels=(1, 2, 3))
    with pytest.raises(ValueError):
        NetworkConfig(depth=2, channels=(0, 2))
    with pytest.raises(ValueError):
        NetworkConfig(activation="relu")


def test_adam_first_step_is_sign():
    p = {"w": np.array([1.0, -2.0, 3.0])}
    g = {"w": np.array([0.5, -4.0, 1e-2])}
    st_ = AdamState(lr=1e-3)
    before = p["w"].copy()
    adam_step(p, g, st_)
    np.testing.assert_allclose(p["w"] - before, -1e-3 * np.sign(g["w"]), atol=1e-6)
    assert st_.t == 1


def test_adam_zero_grad_and_zero_lr():
    p = {"w": np.array([1.0, 2.0])}
    st_ = AdamState()
    adam_step(p, {"w": np.zeros(2)}, st_)
    np.testing.assert_array_equal(p["w"], [1.0, 2.0])
    assert st_.t == 1
    q = {"w": np.array([0.3, -0.7])}
    before = q["w"].copy()
    adam_step(q, {"w": np.array([5.0, 1.0])}, AdamState(lr=0.0))
    np.testing.assert_array_equal(q["w"], before)


def test_adam_two_steps_oracle():
    g = np.array([0.8])
    p = {"w": np.zeros(1)}
    st_ = AdamState(lr=1e-3)
    adam_step(p, {"w": g}, st_)
    mid = p["w"].copy()
    adam_step(p, {"w": -g}, st_)
    m = 0.9 * 0.1 * g - 0.1 * g
    v = 0.999 * 0.001 * g**2 + 0.001 * g**2
    upd = -1e-3 * (m / (1 - 0.9**2)) / (np.sqrt(v / (1 - 0.999**2)) + 1e-8)
    np.testing.assert_allclose(p["w"] - mid, upd, rtol=1e-12)
    assert st_.v["w"][0] > 0 and abs(upd[0]) < 1e-3


def test_adam_mismatch():
    with pytest.raises(ValueError):
        adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, AdamState())
    with pytest.raises(ValueError):
        adam_step({"w": np.zeros(2)}, {"v": np.zeros(2)}, AdamState())


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(3, 9), st.integers(3, 9), st.integers(0, 1000))
def test_conv_adjoint_property(c, h, w, seed):
    g = np.random.default_rng(seed)
    layer = ConvLayer.init(c, 2, g, stride=int(g.integers(1, 3)), padding="reflect")
    x = g.standard_normal((c, h, w))
    y = conv2d_forward(x, ConvLayer(layer.weight, np.zeros(2), layer.stride))
    r = g.standard_normal(y.shape)
    gx = conv2d_backward(x, layer, r)[0]
    # linear in x once the bias is dropped: <conv(x), r> == <x, conv^T r>
    assert np.sum(y * r) == pytest.approx(np.sum(x * gx), rel=1e-10, abs=1e-10)
