"""Spectrum-manipulation primitives: filter interpolation, spectrum
resampling, and amplitude extraction.

All functions act on the half-spectrum frequency axis and are
differentiable through the tensor engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tz
from .tensor import ComplexSpectrum, Tensor, amplitude  # noqa: F401  (re-export)


@dataclass
class SpectralFilter:
    """Learnable per-bin spectral weights of shape 1 x R x V.

    Weights are unconstrained reals: training may suppress (<1, even <0)
    or amplify (>1) individual bands.
    """

    weights: Tensor

    @property
    def scale_length(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def ones(cls, scale_length: int, joints: int, requires_grad: bool = True):
        w = Tensor(np.ones((1, scale_length, joints)), requires_grad=requires_grad)
        return cls(weights=w)


def nni_indices(source_len: int, target_len: int) -> np.ndarray:
    """Nearest-neighbour source index per target bin: floor(s*R/S)."""
    s = np.arange(target_len)
    return (s * source_len) // target_len


def nni_interpolate(filt: SpectralFilter, target_len: int) -> Tensor:
    """Stretch filter weights to the spectral resolution by bin replication.

    Uses the floor-of-scaled-index convention, which makes R == S an exact
    identity.  Gradients scatter back onto the source bins.
    """
    r = filt.scale_length
    if r == target_len:
        return filt.weights
    return tz.take(filt.weights, nni_indices(r, target_len), axis=1)


def linear_resample(spectrum: Tensor, target_len: int, axis: int = 1) -> Tensor:
    """Endpoint-aligned linear interpolation along the frequency axis.

    output[0] == input[0] and output[-1] == input[-1]; resampling to the
    input's own length is the identity.
    """
    spectrum = tz._as_tensor(spectrum)
    axis = axis % spectrum.ndim
    src = spectrum.shape[axis]
    if target_len == src:
        return spectrum
    if src == 1:
        return tz.take(spectrum, np.zeros(target_len, dtype=int), axis=axis)
    if target_len == 1:
        return tz.take(spectrum, [0], axis=axis)
    pos = np.arange(target_len) * (src - 1) / (target_len - 1)
    i0 = np.minimum(pos.astype(int), src - 2)
    frac = pos - i0
    shape = [1] * spectrum.ndim
    shape[axis] = target_len
    w1 = Tensor(frac.reshape(shape))
    w0 = Tensor((1.0 - frac).reshape(shape))
    lo = tz.take(spectrum, i0, axis=axis)
    hi = tz.take(spectrum, i0 + 1, axis=axis)
    return lo * w0 + hi * w1
