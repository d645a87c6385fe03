import numpy as np
import pytest

from freqseg import tensor as tz
from freqseg.channel_mixer import (
    ChannelMixerParams,
    complex_equivalence_check,
    mix_channels,
)
from freqseg.tensor import Tensor


def random_params(rng, c):
    return ChannelMixerParams(
        w_c1=Tensor(rng.standard_normal((c, c)), requires_grad=True),
        w_c2=Tensor(rng.standard_normal((c, c)), requires_grad=True),
    )


class TestForward:
    def test_identity_weights_identity_map(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 30))
        out = mix_channels(Tensor(x), ChannelMixerParams.identity(4))
        np.testing.assert_allclose(out.data, x, atol=1e-9)

    def test_zero_weights_zero_output(self):
        rng = np.random.default_rng(1)
        params = ChannelMixerParams(
            w_c1=Tensor(np.zeros((3, 3))), w_c2=Tensor(np.zeros((3, 3)))
        )
        out = mix_channels(Tensor(rng.standard_normal((3, 17))), params)
        np.testing.assert_allclose(out.data, 0.0)

    def test_matches_complex_oracle(self):
        rng = np.random.default_rng(2)
        params = random_params(rng, 5)
        x = rng.standard_normal((5, 24))
        assert complex_equivalence_check(params, x) <= 1e-10

    def test_equivalence_random_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            c = int(rng.integers(1, 9))
            t = int(rng.integers(2, 65))
            params = random_params(rng, c)
            x = rng.standard_normal((c, t))
            assert complex_equivalence_check(params, x) <= 1e-10

    def test_homogeneity(self):
        rng = np.random.default_rng(4)
        params = random_params(rng, 4)
        x = rng.standard_normal((4, 20))
        base = mix_channels(Tensor(x), params).data
        scaled = mix_channels(Tensor(10.0 * x), params).data
        np.testing.assert_allclose(scaled, 10.0 * base, atol=1e-9 * np.abs(base).max())


class TestProperties:
    def test_linearity(self):
        rng = np.random.default_rng(5)
        params = random_params(rng, 3)
        x, y = rng.standard_normal((3, 18)), rng.standard_normal((3, 18))
        a, b = 0.6, -2.2
        lhs = mix_channels(Tensor(a * x + b * y), params).data
        rhs = (
            a * mix_channels(Tensor(x), params).data
            + b * mix_channels(Tensor(y), params).data
        )
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * max(1, np.abs(rhs).max()))

    def test_real_in_real_out(self):
        rng = np.random.default_rng(6)
        params = random_params(rng, 4)
        out = mix_channels(Tensor(rng.standard_normal((4, 21))), params)
        assert out.data.dtype == np.float64
        assert np.isrealobj(out.data)

    def test_grad_check(self):
        rng = np.random.default_rng(7)
        params = random_params(rng, 3)
        x = Tensor(rng.standard_normal((3, 12)), requires_grad=True)

        def f(_):
            out = mix_channels(x, params)
            return (out * out).mean()

        rep = tz.grad_check(
            f, params.named_parameters() + [("input", x)], op_name="channel mixer"
        )
        assert rep.max_rel_error <= 1e-4

    def test_separate_matrices_both_receive_gradient(self):
        rng = np.random.default_rng(8)
        params = random_params(rng, 3)
        x = Tensor(rng.standard_normal((3, 10)))
        loss = mix_channels(x, params).mean()
        loss.backward()
        assert params.w_c1.grad is not None and np.abs(params.w_c1.grad).max() > 0
        assert params.w_c2.grad is not None and np.abs(params.w_c2.grad).max() > 0
