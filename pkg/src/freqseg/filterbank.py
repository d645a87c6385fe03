"""Multi-scale adaptive spectral filter bank.

A bank of M learnable filters at linearly spaced lengths is applied to the
temporal spectrum of the spatial feature by per-bin product, and the M
filtered signals are fused by channel-wise softmax weights from two
branches: a static learnable matrix and a dynamic projection of the input.
The fused result is blended half-and-half with the unfiltered input, so a
bank of all-ones filters is an exact identity map.

Dynamic-weight contraction order (the shapes force one of two readings;
this one is fixed here): the pooled feature C x T_d x V is right-multiplied
by the joint projection (V -> D), then the temporal projection contracts
T_d -> D from the left, giving C x D x D before flattening.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tz
from .errors import ConfigError
from .spectral import SpectralFilter, nni_interpolate
from .tensor import Tensor


def filter_lengths(m: int, r_max: int) -> list[int]:
    """Linearly spaced filter lengths (M + m) * R_max / (2M), m = 1..M."""
    if m < 1 or r_max < 1:
        raise ConfigError("filter count and maximum length must be positive")
    lengths = []
    for i in range(1, m + 1):
        num = (m + i) * r_max
        if num % (2 * m) != 0:
            raise ConfigError(
                f"maximum filter length {r_max} is not divisible by 2M={2 * m}"
            )
        lengths.append(num // (2 * m))
    return lengths


@dataclass
class FilterBankParams:
    """All trainable state of the filter bank.

    Filter i (1-based) has length (M+i)*R_max/(2M); every filter starts at
    ones and the static weights start at zeros, which makes the whole
    module an identity map at initialization.
    """

    filters: list[SpectralFilter]
    w_static: Tensor           # M x C
    w_joint: Tensor            # V x D
    w_temporal: Tensor         # T_d x D
    w_mix: Tensor              # (D*D) x M
    pool_len: int
    per_parameter: dict = field(default_factory=dict, repr=False)

    @property
    def num_filters(self) -> int:
        return len(self.filters)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = [(f"filterbank.filters.{i}", f.weights) for i, f in enumerate(self.filters)]
        out += [
            ("filterbank.w_static", self.w_static),
            ("filterbank.w_joint", self.w_joint),
            ("filterbank.w_temporal", self.w_temporal),
            ("filterbank.w_mix", self.w_mix),
        ]
        return out


def init_filter_bank(
    m: int, r_max: int, channels: int, joints: int, pool_len: int,
    proj_dim: int, rng: np.random.Generator,
) -> FilterBankParams:
    filters = [
        SpectralFilter.ones(r, joints) for r in filter_lengths(m, r_max)
    ]
    w_static = Tensor(np.zeros((m, channels)), requires_grad=True)

    def he(rows, cols, fan_in):
        limit = np.sqrt(6.0 / fan_in)
        return Tensor(rng.uniform(-limit, limit, size=(rows, cols)), requires_grad=True)

    return FilterBankParams(
        filters=filters,
        w_static=w_static,
        w_joint=he(joints, proj_dim, joints),
        w_temporal=he(pool_len, proj_dim, pool_len),
        w_mix=he(proj_dim * proj_dim, m, proj_dim * proj_dim),
        pool_len=pool_len,
    )


def apply_filter_bank(f_s: Tensor, params: FilterBankParams) -> list[Tensor]:
    """Filter the C x T x V feature with every bank member.

    Each filter is stretched to the spectral resolution S = T//2 + 1,
    multiplied bin-wise into the spectrum (shared across channels), and
    transformed back to the time domain.
    """
    t = f_s.shape[1]
    spec = tz.rfft(f_s, axis=1)
    s = spec.num_bins
    out = []
    for filt in params.filters:
        weights = nni_interpolate(filt, s)
        out.append(tz.irfft(spec.scale(weights), t))
    return out


def dynamic_weights(f_s: Tensor, params: FilterBankParams) -> Tensor:
    """Input-conditioned fusion weights, shape M x C.

    Pools time to a fixed length, projects joints and time down to D each,
    flattens the C x D x D block and mixes it down to M weights per channel.
    """
    pooled = tz.adaptive_avg_pool(f_s, axis=1, out_len=params.pool_len)
    joint_proj = tz.matmul(pooled, params.w_joint)                 # C x T_d x D
    block = tz.matmul(tz.transpose(params.w_temporal, (1, 0)), joint_proj)  # C x D x D
    c = block.shape[0]
    flat = tz.reshape(block, (c, -1))                              # C x DD
    return tz.transpose(tz.matmul(flat, params.w_mix), (1, 0))     # M x C


def fuse(
    filtered: list[Tensor], f_s: Tensor, w_static: Tensor, w_dynamic: Tensor
) -> Tensor:
    """Blend the filtered features with dual channel-wise softmax weights.

    Both weight matrices are softmax-normalized along the filter axis per
    channel; the two branch averages are themselves averaged and mixed
    half-and-half with the unfiltered input.
    """
    stacked = tz.stack(filtered, axis=0)          # M x C x T x V
    m, c = w_static.shape

    def branch(w):
        probs = tz.softmax(w, axis=0)             # M x C
        probs = tz.reshape(probs, (m, c, 1, 1))
        return tz.tsum(stacked * probs, axis=0)   # C x T x V

    fused = branch(w_static) * 0.5 + branch(w_dynamic) * 0.5
    return fused * 0.5 + f_s * 0.5


def filter_bank_forward(
    f_s: Tensor, params: FilterBankParams, w_dynamic_override: Tensor | None = None
) -> Tensor:
    """Full filter-bank pass: filter, weight, fuse.

    ``w_dynamic_override`` freezes the dynamic branch to a fixed weight
    matrix (used by linearity tests and the filter demo).
    """
    filtered = apply_filter_bank(f_s, params)
    w_dyn = (
        dynamic_weights(f_s, params) if w_dynamic_override is None
        else w_dynamic_override
    )
    return fuse(filtered, f_s, params.w_static, w_dyn)
