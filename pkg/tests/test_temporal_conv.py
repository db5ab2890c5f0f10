"""Gated causal convolution stack: field arithmetic, causality, oracle."""

import numpy as np
import pytest

from graphtcn import tensor as T
from graphtcn.errors import ShapeError
from graphtcn.temporal_conv import GatedConvLayer, TemporalConvNet, receptive_field
from graphtcn.tensor import ParameterStore, Tensor

from oracles import conv_stack_oracle


def make_tcn(in_dim=3, channels=4, layers=2, kernel=3, dilations=None, seed=0):
    store = ParameterStore()
    rng = np.random.default_rng(seed)
    dil = dilations or (1,) * layers
    net = TemporalConvNet(store, "tcn", in_dim, channels, layers, kernel, dil, rng)
    return net, store


class TestReceptiveField:
    def test_three_unit_layers_kernel3(self):
        assert receptive_field(3, (1, 1, 1)) == 7

    def test_single_layer_equals_kernel(self):
        for k in (1, 2, 3, 5):
            assert receptive_field(k, (1,)) == k

    def test_dilated_sum(self):
        assert receptive_field(3, (1, 2, 4)) == 15

    def test_default_stack_covers_eight_steps(self):
        assert receptive_field(3, (1, 1, 1, 1)) == 9

    def test_invalid_args(self):
        with pytest.raises(ShapeError):
            receptive_field(0, (1,))
        with pytest.raises(ShapeError):
            receptive_field(3, ())


class TestGatedLayer:
    def test_zero_input_zero_bias_gives_zero(self):
        store = ParameterStore()
        layer = GatedConvLayer(store, "l", 2, 3, 3, 1, np.random.default_rng(1))
        out = layer.forward(Tensor(np.zeros((2, 2, 5))))
        np.testing.assert_array_equal(out.data, np.zeros((2, 3, 5)))

    def test_closed_filter_suppresses_output(self):
        store = ParameterStore()
        layer = GatedConvLayer(store, "l", 1, 1, 2, 1, np.random.default_rng(2))
        store["l.filt.W"].data[...] = 0.0
        store["l.filt.b"].data[...] = -200.0
        out = layer.forward(Tensor(np.ones((1, 1, 4))))
        np.testing.assert_allclose(out.data, 0.0, atol=1e-80)

    def test_hand_scalar_evaluation(self):
        # Single channel, T=2, k=2: out[t] = tanh(g) * sigmoid(f) with
        # g = 0.5*x[t-1] + 1.0*x[t] + 0.1, f = -0.25*x[t-1] + 2.0*x[t].
        store = ParameterStore()
        layer = GatedConvLayer(store, "l", 1, 1, 2, 1, np.random.default_rng(3))
        store["l.gate.W"].data[...] = np.array([[[0.5, 1.0]]])
        store["l.gate.b"].data[...] = 0.1
        store["l.filt.W"].data[...] = np.array([[[-0.25, 2.0]]])
        store["l.filt.b"].data[...] = 0.0
        x = np.array([0.3, -0.7])
        out = layer.forward(Tensor(x.reshape(1, 1, 2))).data.reshape(2)
        g = np.array([1.0 * 0.3 + 0.1, 0.5 * 0.3 + 1.0 * (-0.7) + 0.1])
        f = np.array([2.0 * 0.3, -0.25 * 0.3 + 2.0 * (-0.7)])
        expected = np.tanh(g) / (1.0 + np.exp(-f))
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-15)


class TestStack:
    def test_matches_direct_summation_oracle(self):
        net, store = make_tcn(in_dim=3, channels=4, layers=3, kernel=3, seed=10)
        rng = np.random.default_rng(11)
        h = rng.normal(size=(2, 6, 3))
        out = net.forward(Tensor(h))
        for ped in range(2):
            expected = conv_stack_oracle(h[ped].T, store, "tcn", 3, 3, (1, 1, 1))
            np.testing.assert_allclose(out.data[ped], expected.T, rtol=0, atol=1e-12)

    def test_dilated_matches_oracle(self):
        net, store = make_tcn(in_dim=2, channels=3, layers=3, kernel=2,
                              dilations=(1, 2, 4), seed=12)
        rng = np.random.default_rng(13)
        h = rng.normal(size=(1, 10, 2))
        out = net.forward(Tensor(h))
        expected = conv_stack_oracle(h[0].T, store, "tcn", 3, 2, (1, 2, 4))
        np.testing.assert_allclose(out.data[0], expected.T, rtol=0, atol=1e-12)

    def test_identical_pedestrians_identical_outputs(self):
        net, _ = make_tcn(seed=14)
        row = np.random.default_rng(15).normal(size=(1, 6, 3))
        h = np.concatenate([row, row], axis=0)
        out = net.forward(Tensor(h))
        assert (out.data[0] == out.data[1]).all()

    def test_length_preserved(self):
        for t_len in (1, 2, 8):
            net, _ = make_tcn(seed=16)
            out = net.forward(Tensor(np.random.default_rng(17).normal(size=(2, t_len, 3))))
            assert out.shape == (2, t_len, 4)

    @pytest.mark.parametrize("kernel", [2, 3, 5])
    @pytest.mark.parametrize("layers", [1, 2, 3, 4])
    def test_causality_bit_exact(self, kernel, layers):
        net, _ = make_tcn(in_dim=2, channels=3, layers=layers, kernel=kernel,
                          seed=100 * kernel + layers)
        rng = np.random.default_rng(18)
        t_len = 12
        h = rng.normal(size=(1, t_len, 2))
        base = net.forward(Tensor(h)).data
        for t in (0, 5, t_len - 1):
            h2 = h.copy()
            h2[:, t:, :] = rng.normal(size=(1, t_len - t, 2))
            bumped = net.forward(Tensor(h2)).data
            assert (base[:, :t] == bumped[:, :t]).all()

    @pytest.mark.parametrize("kernel,layers", [(2, 1), (3, 2), (5, 3)])
    def test_receptive_field_exact_boundary(self, kernel, layers):
        net, _ = make_tcn(in_dim=1, channels=2, layers=layers, kernel=kernel,
                          seed=19 + kernel + layers)
        field = net.receptive_field()
        t_len = field + 4
        rng = np.random.default_rng(20)
        h = rng.normal(size=(1, t_len, 1))
        t_out = t_len - 1
        base = net.forward(Tensor(h)).data

        # A bump exactly receptive_field steps back must not reach t_out...
        h_far = h.copy()
        h_far[0, t_out - field, 0] += 1.0
        far = net.forward(Tensor(h_far)).data
        assert (far[0, t_out] == base[0, t_out]).all()

        # ...but one step closer must.
        h_near = h.copy()
        h_near[0, t_out - field + 1, 0] += 1.0
        near = net.forward(Tensor(h_near)).data
        assert (near[0, t_out] != base[0, t_out]).any()

    def test_gradients_flow(self):
        store = ParameterStore()
        rng = np.random.default_rng(21)
        net = TemporalConvNet(store, "tcn", 2, 3, 2, 3, (1, 1), rng)
        h = rng.normal(size=(2, 5, 2))

        def f(p):
            out = net.forward(Tensor(h))
            return T.reduce_mean(T.mul(out, out))

        assert T.finite_difference_check(f, store) < 1e-6

    def test_dilation_length_mismatch(self):
        with pytest.raises(ShapeError):
            make_tcn(layers=2, dilations=(1, 1, 1))
