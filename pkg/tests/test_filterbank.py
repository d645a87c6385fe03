import numpy as np
import pytest

from freqseg import tensor as tz
from freqseg.errors import ConfigError
from freqseg.filterbank import (
    FilterBankParams,
    apply_filter_bank,
    dynamic_weights,
    filter_bank_forward,
    filter_lengths,
    fuse,
    init_filter_bank,
)
from freqseg.spectral import SpectralFilter
from freqseg.tensor import Tensor

from oracles import rdft_direct


def small_bank(rng, m=2, r_max=8, channels=3, joints=4, pool_len=6, proj_dim=2):
    return init_filter_bank(m, r_max, channels, joints, pool_len, proj_dim, rng)


class TestFilterLengths:
    def test_paper_defaults(self):
        assert filter_lengths(4, 64) == [40, 48, 56, 64]

    def test_single_filter_is_rmax(self):
        for r_max in (2, 10, 64):
            assert filter_lengths(1, r_max) == [r_max]

    def test_two_filters(self):
        assert filter_lengths(2, 8) == [6, 8]

    def test_strictly_increasing_ending_at_rmax(self):
        for m, r_max in [(2, 8), (4, 64), (8, 32), (4, 16)]:
            ls = filter_lengths(m, r_max)
            assert all(a < b for a, b in zip(ls, ls[1:]))
            assert ls[-1] == r_max

    def test_non_integer_raises(self):
        with pytest.raises(ConfigError):
            filter_lengths(4, 62)
        with pytest.raises(ConfigError):
            filter_lengths(3, 8)


class TestApplyFilterBank:
    def test_identity_filter(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.standard_normal((3, 20, 2)))
        params = small_bank(rng, m=1, r_max=4, channels=3, joints=2)
        out = apply_filter_bank(x, params)[0]
        np.testing.assert_allclose(out.data, x.data, atol=1e-12)

    def test_zero_filter_zero_output(self):
        rng = np.random.default_rng(1)
        x = Tensor(rng.standard_normal((2, 16, 2)))
        filt = SpectralFilter(Tensor(np.zeros((1, 9, 2))))
        params = FilterBankParams(
            filters=[filt],
            w_static=Tensor(np.zeros((1, 2))),
            w_joint=Tensor(np.zeros((2, 2))),
            w_temporal=Tensor(np.zeros((4, 2))),
            w_mix=Tensor(np.zeros((4, 1))),
            pool_len=4,
        )
        out = apply_filter_bank(x, params)[0]
        np.testing.assert_allclose(out.data, 0.0, atol=1e-12)

    def test_notch_filter_kills_pure_tone(self):
        # DFT oracle confirms the tone occupies bin k; zeroing that bin
        # should null the signal
        t, k = 32, 5
        x1 = np.cos(2 * np.pi * k * np.arange(t) / t)
        assert np.argmax(np.abs(rdft_direct(x1))) == k
        weights = np.ones((1, t // 2 + 1, 1))
        weights[0, k, 0] = 0.0
        filt = SpectralFilter(Tensor(weights))
        params = FilterBankParams(
            filters=[filt], w_static=Tensor(np.zeros((1, 1))),
            w_joint=Tensor(np.zeros((1, 1))), w_temporal=Tensor(np.zeros((4, 1))),
            w_mix=Tensor(np.zeros((1, 1))), pool_len=4,
        )
        out = apply_filter_bank(Tensor(x1.reshape(1, t, 1)), params)[0]
        np.testing.assert_allclose(out.data, 0.0, atol=1e-9)

    def test_filter_shared_across_channels(self):
        rng = np.random.default_rng(2)
        base = rng.standard_normal((1, 12, 2))
        x = Tensor(np.concatenate([base, 2 * base], axis=0))
        params = small_bank(rng, m=1, r_max=7, channels=2, joints=2)
        params.filters[0].weights.data[:] = rng.standard_normal((1, 7, 2))
        out = apply_filter_bank(x, params)[0]
        np.testing.assert_allclose(out.data[1], 2 * out.data[0], atol=1e-12)


class TestDynamicWeights:
    def test_zero_projections_give_zero(self):
        rng = np.random.default_rng(3)
        params = small_bank(rng)
        params.w_mix.data[:] = 0.0
        x = Tensor(rng.standard_normal((3, 10, 4)))
        np.testing.assert_allclose(dynamic_weights(x, params).data, 0.0)

    def test_zero_input_gives_zero(self):
        rng = np.random.default_rng(4)
        params = small_bank(rng)
        x = Tensor(np.zeros((3, 10, 4)))
        np.testing.assert_allclose(dynamic_weights(x, params).data, 0.0)

    def test_paper_shape_chain(self):
        # C=64, V=25, T_d=64, D=4, M=4 must produce a 4 x 64 weight matrix
        rng = np.random.default_rng(5)
        params = init_filter_bank(4, 64, 64, 25, 64, 4, rng)
        assert params.w_mix.shape == (16, 4)
        x = Tensor(rng.standard_normal((64, 200, 25)))
        assert dynamic_weights(x, params).shape == (4, 64)


class TestFuse:
    def test_identity_filters_any_weights(self):
        rng = np.random.default_rng(6)
        x = Tensor(rng.standard_normal((3, 14, 2)))
        filtered = [x, x, x]
        w_st = Tensor(rng.standard_normal((3, 3)))
        w_dy = Tensor(rng.standard_normal((3, 3)))
        out = fuse(filtered, x, w_st, w_dy)
        np.testing.assert_allclose(out.data, x.data, atol=1e-12)

    def test_zero_weights_uniform_average(self):
        rng = np.random.default_rng(7)
        x = Tensor(np.zeros((2, 6, 1)))
        filtered = [Tensor(rng.standard_normal((2, 6, 1))) for _ in range(4)]
        out = fuse(filtered, x, Tensor(np.zeros((4, 2))), Tensor(np.zeros((4, 2))))
        uniform = sum(f.data for f in filtered) / 4.0
        np.testing.assert_allclose(out.data, 0.5 * uniform, atol=1e-12)

    def test_softmax_weights_sum_to_one(self):
        rng = np.random.default_rng(8)
        w = Tensor(rng.standard_normal((4, 6)))
        probs = tz.softmax(w, axis=0).data
        np.testing.assert_allclose(probs.sum(axis=0), 1.0, atol=1e-12)


class TestFullForward:
    def test_identity_at_initialization(self):
        rng = np.random.default_rng(9)
        params = init_filter_bank(4, 16, 5, 3, 8, 2, rng)
        x = Tensor(rng.standard_normal((5, 30, 3)))
        out = filter_bank_forward(x, params)
        np.testing.assert_allclose(out.data, x.data, atol=1e-9)

    def test_linear_when_dynamic_frozen(self):
        rng = np.random.default_rng(10)
        params = init_filter_bank(2, 8, 3, 2, 4, 2, rng)
        for f in params.filters:
            f.weights.data[:] = rng.standard_normal(f.weights.shape)
        params.w_static.data[:] = rng.standard_normal((2, 3))
        w_dy = Tensor(rng.standard_normal((2, 3)))
        x = rng.standard_normal((3, 12, 2))
        y = rng.standard_normal((3, 12, 2))
        a, b = 1.7, -0.4

        def run(v):
            return filter_bank_forward(Tensor(v), params, w_dynamic_override=w_dy).data

        np.testing.assert_allclose(
            run(a * x + b * y), a * run(x) + b * run(y), atol=1e-9
        )

    def test_grad_check_all_parameter_groups(self):
        rng = np.random.default_rng(11)
        params = init_filter_bank(2, 8, 3, 2, 4, 2, rng)
        x = Tensor(rng.standard_normal((3, 10, 2)), requires_grad=True)
        named = params.named_parameters() + [("input", x)]

        def f(_):
            out = filter_bank_forward(x, params)
            return (out * out).mean()

        rep = tz.grad_check(f, named, op_name="filter bank")
        assert rep.max_rel_error <= 1e-4
