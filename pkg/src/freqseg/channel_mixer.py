"""Frequency-domain channel mixing.

The temporal feature is transformed along time, its real and imaginary
spectral parts are mixed across channels by the same two point-wise linear
maps (no bias, no nonlinearity), and the result is transformed back.
Applying one real matrix to both parts is exactly a complex-linear map on
the spectrum, so the operation is linear, maps real signals to real
signals, and is the identity when both matrices are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tz
from .tensor import ComplexSpectrum, Tensor


@dataclass
class ChannelMixerParams:
    """Two C x C point-wise mixing matrices, initialized to identity so the
    mixer starts as a no-op."""

    w_c1: Tensor
    w_c2: Tensor

    @classmethod
    def identity(cls, channels: int) -> "ChannelMixerParams":
        return cls(
            w_c1=Tensor(np.eye(channels), requires_grad=True),
            w_c2=Tensor(np.eye(channels), requires_grad=True),
        )

    def named_parameters(self, prefix: str = "channel_mixer"):
        return [(f"{prefix}.w_c1", self.w_c1), (f"{prefix}.w_c2", self.w_c2)]


def mix_channels(f_t1: Tensor, params: ChannelMixerParams) -> Tensor:
    """FFT along time, shared-weight channel mixing of both spectral
    parts, inverse FFT back to C x T."""
    t = f_t1.shape[1]
    spec = tz.rfft(f_t1, axis=1)
    w = params.w_c2 @ params.w_c1
    mixed = ComplexSpectrum(
        re=w @ spec.re,
        im=w @ spec.im,
        origin_length=spec.origin_length,
        sample_rate=spec.sample_rate,
        axis=1,
    )
    return tz.irfft(mixed, t)


def complex_linear_oracle(x: np.ndarray, params: ChannelMixerParams) -> np.ndarray:
    """Reference path: one complex matrix-vector product on the spectrum."""
    t = x.shape[1]
    spec = np.fft.rfft(x, axis=1)
    w = (params.w_c2.data @ params.w_c1.data).astype(np.complex128)
    return np.fft.irfft(w @ spec, n=t, axis=1)


def complex_equivalence_check(params: ChannelMixerParams, x: np.ndarray) -> float:
    """Max absolute deviation between the shared-weight real/imaginary path
    and the complex-linear oracle; the contract is <= 1e-10."""
    with tz.no_grad():
        ours = mix_channels(Tensor(x), params).data
    ref = complex_linear_oracle(x, params)
    return float(np.abs(ours - ref).max())
