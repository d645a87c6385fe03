"""Spatio-temporal network around the spectral filter bank.

Pipeline per sequence: multi-scale GCN over the joint graph, dynamic GCNs
(per-frame and per-channel-group joint graphs built from pooled feature
differences), the spectral filter bank, spatial-channel fusion down to a
C x T temporal feature, a stack of temporal blocks (linear-attention
transformer, frequency-domain channel mixer, adaptive fusion), linear
class/boundary heads, and refinement branches (cross-attention stages for
classes, dilated temporal convolutions for boundaries).

Channel grouping: the per-channel dynamic graph has C1 slices; channel c
of the C-channel feature uses slice c // (C / C1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tz
from .channel_mixer import ChannelMixerParams, mix_channels
from .config import ExperimentConfig
from .errors import ShapeError
from .filterbank import FilterBankParams, filter_bank_forward, init_filter_bank
from .graph import SkeletonGraph, normalized_multiscale_adjacency
from .tensor import Tensor

BN_EPS = 1e-5


def _he(rng, *shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


def _zeros(*shape):
    return Tensor(np.zeros(shape), requires_grad=True)


def pointwise(w: Tensor, x: Tensor, bias: Tensor | None = None) -> Tensor:
    """1x1 convolution over the channel axis of C x T (x V) features."""
    c_in = x.shape[0]
    if w.shape[1] != c_in:
        raise ShapeError(f"pointwise weight {w.shape} vs input channels {c_in}")
    flat = tz.reshape(x, (c_in, -1))
    out = tz.matmul(w, flat)
    if bias is not None:
        out = out + bias
    return tz.reshape(out, (w.shape[0],) + x.shape[1:])


# -- parameter bundles -------------------------------------------------------


@dataclass
class SpatialChannelHead:
    reduce: Tensor    # C3 x C
    expand: Tensor    # C x (V*C3)

    def named(self, prefix):
        return [(f"{prefix}.reduce", self.reduce), (f"{prefix}.expand", self.expand)]


@dataclass
class AttentionParams:
    w_query: Tensor   # C x C2
    w_key: Tensor     # C x C2
    w_value: Tensor   # C x C2
    w_out: Tensor     # C2 x C

    def named(self, prefix):
        return [
            (f"{prefix}.w_query", self.w_query),
            (f"{prefix}.w_key", self.w_key),
            (f"{prefix}.w_value", self.w_value),
            (f"{prefix}.w_out", self.w_out),
        ]


@dataclass
class TemporalBlockParams:
    attn: AttentionParams
    mixer: ChannelMixerParams
    fuse_concat: Tensor   # C x 2C
    fuse_out: Tensor      # C x C
    sc_head: SpatialChannelHead

    def named(self, prefix):
        out = self.attn.named(f"{prefix}.attn")
        out += self.mixer.named_parameters(f"{prefix}.mixer")
        out += [
            (f"{prefix}.fuse_concat", self.fuse_concat),
            (f"{prefix}.fuse_out", self.fuse_out),
        ]
        out += self.sc_head.named(f"{prefix}.sc_head")
        return out


@dataclass
class ClassRefineStage:
    in_proj: Tensor    # C x Q
    in_bias: Tensor    # C x 1
    layers: list[AttentionParams]
    out_proj: Tensor   # Q x C
    out_bias: Tensor   # Q x 1

    def named(self, prefix):
        out = [(f"{prefix}.in_proj", self.in_proj), (f"{prefix}.in_bias", self.in_bias)]
        for i, layer in enumerate(self.layers):
            out += layer.named(f"{prefix}.layers.{i}")
        out += [(f"{prefix}.out_proj", self.out_proj), (f"{prefix}.out_bias", self.out_bias)]
        return out


@dataclass
class DilatedLayerParams:
    w_left: Tensor
    w_mid: Tensor
    w_right: Tensor
    conv_bias: Tensor
    pw: Tensor
    pw_bias: Tensor

    def named(self, prefix):
        return [
            (f"{prefix}.w_left", self.w_left),
            (f"{prefix}.w_mid", self.w_mid),
            (f"{prefix}.w_right", self.w_right),
            (f"{prefix}.conv_bias", self.conv_bias),
            (f"{prefix}.pw", self.pw),
            (f"{prefix}.pw_bias", self.pw_bias),
        ]


@dataclass
class BoundaryRefineStage:
    in_proj: Tensor    # C x 1
    in_bias: Tensor    # C x 1
    layers: list[DilatedLayerParams]
    out_proj: Tensor   # 1 x C
    out_bias: Tensor   # 1 x 1

    def named(self, prefix):
        out = [(f"{prefix}.in_proj", self.in_proj), (f"{prefix}.in_bias", self.in_bias)]
        for i, layer in enumerate(self.layers):
            out += layer.named(f"{prefix}.layers.{i}")
        out += [(f"{prefix}.out_proj", self.out_proj), (f"{prefix}.out_bias", self.out_bias)]
        return out


@dataclass
class BackboneParams:
    gcn_mask: Tensor          # V x KV, additive to the multi-scale adjacency
    gcn_w0: Tensor            # C x (K*C0)
    p_temporal: Tensor        # C1 x C  (difference head, per-frame graph)
    q_temporal: Tensor
    p_channel: Tensor         # C1 x C  (difference head, per-group graph)
    q_channel: Tensor
    fs1: Tensor               # C x C
    bn_gamma: Tensor          # C
    bn_beta: Tensor           # C
    sc_head0: SpatialChannelHead
    blocks: list[TemporalBlockParams]
    class_w: Tensor           # Q x C
    class_b: Tensor           # Q x 1
    bound_w: Tensor           # 1 x C
    bound_b: Tensor           # 1 x 1
    class_stages: list[ClassRefineStage]
    bound_stages: list[BoundaryRefineStage]
    contrast_proj: Tensor     # C_t x C

    def named_parameters(self):
        out = [
            ("backbone.gcn_mask", self.gcn_mask),
            ("backbone.gcn_w0", self.gcn_w0),
            ("backbone.p_temporal", self.p_temporal),
            ("backbone.q_temporal", self.q_temporal),
            ("backbone.p_channel", self.p_channel),
            ("backbone.q_channel", self.q_channel),
            ("backbone.fs1", self.fs1),
            ("backbone.bn_gamma", self.bn_gamma),
            ("backbone.bn_beta", self.bn_beta),
        ]
        out += self.sc_head0.named("backbone.sc_head0")
        for i, block in enumerate(self.blocks):
            out += block.named(f"backbone.blocks.{i}")
        out += [
            ("backbone.class_w", self.class_w),
            ("backbone.class_b", self.class_b),
            ("backbone.bound_w", self.bound_w),
            ("backbone.bound_b", self.bound_b),
        ]
        for i, stage in enumerate(self.class_stages):
            out += stage.named(f"backbone.class_stages.{i}")
        for i, stage in enumerate(self.bound_stages):
            out += stage.named(f"backbone.bound_stages.{i}")
        out.append(("backbone.contrast_proj", self.contrast_proj))
        return out


@dataclass
class ModelParams:
    backbone: BackboneParams
    filter_bank: FilterBankParams

    def named_parameters(self):
        return self.backbone.named_parameters() + self.filter_bank.named_parameters()

    def zero_grads(self):
        for _, p in self.named_parameters():
            p.zero_grad()


def init_backbone(cfg: ExperimentConfig, rng: np.random.Generator) -> BackboneParams:
    c, c0, v = cfg.channels, cfg.in_channels, cfg.joints
    k, c1, c2, c3 = cfg.gcn_scales, cfg.dyn_channels, cfg.attn_dim, cfg.fuse_channels
    q = cfg.num_classes

    def sc_head():
        return SpatialChannelHead(
            reduce=_he(rng, c3, c, fan_in=c),
            expand=_he(rng, c, v * c3, fan_in=v * c3),
        )

    def attention():
        return AttentionParams(
            w_query=_he(rng, c, c2, fan_in=c),
            w_key=_he(rng, c, c2, fan_in=c),
            w_value=_he(rng, c, c2, fan_in=c),
            w_out=_he(rng, c2, c, fan_in=c2),
        )

    blocks = []
    for _ in range(cfg.temporal_blocks):
        blocks.append(
            TemporalBlockParams(
                attn=attention(),
                mixer=ChannelMixerParams.identity(c),
                fuse_concat=_he(rng, c, 2 * c, fan_in=2 * c),
                fuse_out=_he(rng, c, c, fan_in=c),
                sc_head=sc_head(),
            )
        )

    class_stages = []
    for _ in range(cfg.class_stages):
        class_stages.append(
            ClassRefineStage(
                in_proj=_he(rng, c, q, fan_in=q),
                in_bias=_zeros(c, 1),
                layers=[attention() for _ in range(cfg.refine_layers)],
                out_proj=_he(rng, q, c, fan_in=c),
                out_bias=_zeros(q, 1),
            )
        )

    bound_stages = []
    for _ in range(cfg.boundary_stages):
        layers = [
            DilatedLayerParams(
                w_left=_he(rng, c, c, fan_in=3 * c),
                w_mid=_he(rng, c, c, fan_in=3 * c),
                w_right=_he(rng, c, c, fan_in=3 * c),
                conv_bias=_zeros(c, 1),
                pw=_he(rng, c, c, fan_in=c),
                pw_bias=_zeros(c, 1),
            )
            for _ in range(cfg.refine_layers)
        ]
        bound_stages.append(
            BoundaryRefineStage(
                in_proj=_he(rng, c, 1, fan_in=1),
                in_bias=_zeros(c, 1),
                layers=layers,
                out_proj=_he(rng, 1, c, fan_in=c),
                out_bias=_zeros(1, 1),
            )
        )

    return BackboneParams(
        gcn_mask=_he(rng, v, k * v, fan_in=v),
        gcn_w0=_he(rng, c, k * c0, fan_in=k * c0),
        p_temporal=_he(rng, c1, c, fan_in=c),
        q_temporal=_he(rng, c1, c, fan_in=c),
        p_channel=_he(rng, c1, c, fan_in=c),
        q_channel=_he(rng, c1, c, fan_in=c),
        fs1=_he(rng, c, c, fan_in=c),
        bn_gamma=Tensor(np.ones(c), requires_grad=True),
        bn_beta=_zeros(c),
        sc_head0=sc_head(),
        blocks=blocks,
        class_w=_he(rng, q, c, fan_in=c),
        class_b=_zeros(q, 1),
        bound_w=_he(rng, 1, c, fan_in=c),
        bound_b=_zeros(1, 1),
        class_stages=class_stages,
        bound_stages=bound_stages,
        contrast_proj=_he(rng, cfg.text_dim, c, fan_in=c),
    )


def init_model(cfg: ExperimentConfig, graph: SkeletonGraph, rng=None) -> ModelParams:
    """Build all trainable state; RNG consumption order is fixed so two
    configs differing only in ablation flags draw identical values."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    backbone = init_backbone(cfg, rng)
    bank = init_filter_bank(
        cfg.num_filters, cfg.max_filter_len, cfg.channels, cfg.joints,
        cfg.pool_len, cfg.proj_dim, rng,
    )
    return ModelParams(backbone=backbone, filter_bank=bank)


# -- spatial modeling --------------------------------------------------------


def multiscale_gcn(
    x: Tensor, adjacency: np.ndarray, params: BackboneParams, k: int
) -> Tensor:
    """ReLU(reshape[(A + B) . X] . W): joints mix across K hop scales, then
    a point-wise convolution folds the K*C0 stack down to C channels."""
    c0, t, v = x.shape
    if adjacency.shape != (v, k * v):
        raise ShapeError(f"adjacency {adjacency.shape} vs joints {v}, scales {k}")
    mixed = tz.matmul(x, Tensor(adjacency) + params.gcn_mask)     # C0 x T x KV
    stacked = tz.reshape(mixed, (c0, t, k, v))
    stacked = tz.transpose(stacked, (2, 0, 1, 3))                 # K x C0 x T x V
    stacked = tz.reshape(stacked, (k * c0, t, v))
    return tz.relu(pointwise(params.gcn_w0, stacked))


def batch_norm_channels(x: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
    """Per-channel normalization over (T, V) with current statistics."""
    c = x.shape[0]
    mean = tz.tmean(x, axis=(1, 2), keepdims=True)
    centered = x - mean
    var = tz.tmean(centered * centered, axis=(1, 2), keepdims=True)
    normed = centered / tz.sqrt(var + BN_EPS)
    return normed * tz.reshape(gamma, (c, 1, 1)) + tz.reshape(beta, (c, 1, 1))


def dynamic_gcn(
    f_s0: Tensor, params: BackboneParams, graph: SkeletonGraph
) -> Tensor:
    """Refine spatial features with per-frame and per-channel-group joint
    graphs built from cross-joint mean differences, plus the optional text
    prior; residual connection back to the input."""
    c, t, v = f_s0.shape
    c1 = params.p_temporal.shape[0]
    prior = Tensor(graph.text_prior())

    p_t = pointwise(params.p_temporal, f_s0)     # C1 x T x V
    q_t = pointwise(params.q_temporal, f_s0)
    p_c = pointwise(params.p_channel, f_s0)
    q_c = pointwise(params.q_channel, f_s0)

    # per-frame graph: channel-pooled difference P[t,i] - Q[t,j]
    pt = tz.tmean(p_t, axis=0)                   # T x V
    qt = tz.tmean(q_t, axis=0)
    g_temporal = tz.reshape(pt, (t, v, 1)) - tz.reshape(qt, (t, 1, v))
    g_temporal = g_temporal + prior

    # per-group graph: time-pooled difference P[c,i] - Q[c,j]
    pc = tz.tmean(p_c, axis=1)                   # C1 x V
    qc = tz.tmean(q_c, axis=1)
    g_channel = tz.reshape(pc, (c1, v, 1)) - tz.reshape(qc, (c1, 1, v))
    g_channel = g_channel + prior

    f_s1 = pointwise(params.fs1, f_s0)           # C x T x V

    # contract the joint axis against each graph
    lifted = tz.reshape(f_s1, (c, t, 1, v))
    by_frame = tz.reshape(tz.matmul(lifted, g_temporal), (c, t, v))
    group = np.repeat(np.arange(c1), c // c1)
    g_expanded = tz.take(g_channel, group, axis=0)      # C x V x V
    by_group = tz.matmul(f_s1, g_expanded)              # C x T x V

    body = batch_norm_channels(by_frame + by_group, params.bn_gamma, params.bn_beta)
    return tz.relu(body) + f_s0


# -- temporal modeling -------------------------------------------------------


def linear_transformer_block(
    f: Tensor, attn: AttentionParams, context: Tensor | None = None
) -> Tensor:
    """ReLU[sigmoid(Q) (sigmoid(K)^T V) W_out + F]: attention cost is
    linear in T because keys are contracted against values first.  With a
    context tensor the values come from it (cross-attention)."""
    src = f if context is None else context
    ft = tz.transpose(f, (1, 0))                 # T x C
    st = tz.transpose(src, (1, 0))
    q = tz.sigmoid(tz.matmul(ft, attn.w_query))  # T x C2
    k = tz.sigmoid(tz.matmul(ft, attn.w_key))
    val = tz.matmul(st, attn.w_value)            # T x C2
    kv = tz.matmul(tz.transpose(k, (1, 0)), val)  # C2 x C2
    out = tz.matmul(tz.matmul(q, kv), attn.w_out)  # T x C
    return tz.relu(tz.transpose(out, (1, 0)) + f)


def spatial_channel_fusion(f: Tensor, head: SpatialChannelHead) -> Tensor:
    """Fold C x T x V down to C x T: reduce channels to C3, merge the joint
    axis into the channel axis, then project back up to C."""
    reduced = pointwise(head.reduce, f)          # C3 x T x V
    c3, t, v = reduced.shape
    merged = tz.reshape(tz.transpose(reduced, (2, 0, 1)), (v * c3, t))
    return tz.matmul(head.expand, merged)        # C x T


def adaptive_fusion(f_t0: Tensor, f_t2: Tensor, block: TemporalBlockParams) -> Tensor:
    """GeLU[(concat) W_f W_l] + F_t2: re-inject an independent view of the
    filtered spatial feature into the temporally modeled one."""
    both = tz.concat([f_t0, f_t2], axis=0)       # 2C x T
    mixed = tz.matmul(block.fuse_out, tz.matmul(block.fuse_concat, both))
    return tz.gelu(mixed) + f_t2


def dilated_residual_layer(x: Tensor, layer: DilatedLayerParams, dilation: int) -> Tensor:
    """x + W_pw ReLU(dilated width-3 conv); zero padding keeps length."""
    t = x.shape[1]
    padded = tz.pad(x, 1, dilation, dilation)
    left = tz.narrow(padded, 1, 0, t)
    mid = tz.narrow(padded, 1, dilation, t)
    right = tz.narrow(padded, 1, 2 * dilation, t)
    conv = (
        tz.matmul(layer.w_left, left)
        + tz.matmul(layer.w_mid, mid)
        + tz.matmul(layer.w_right, right)
        + layer.conv_bias
    )
    out = tz.matmul(layer.pw, tz.relu(conv)) + layer.pw_bias
    return x + out


# -- full forward ------------------------------------------------------------


@dataclass
class ForwardResult:
    filtered: Tensor              # C x T x V, input to the discrepancy loss
    representation: Tensor        # C x T
    class_stages: list[Tensor]    # per-stage Q x T probabilities
    boundary_stages: list[Tensor]  # per-stage 1 x T probabilities

    @property
    def final_classes(self) -> Tensor:
        return self.class_stages[-1]

    @property
    def final_boundaries(self) -> Tensor:
        return self.boundary_stages[-1]


def forward(
    x, model: ModelParams, cfg: ExperimentConfig, graph: SkeletonGraph,
    adjacency: np.ndarray | None = None,
) -> ForwardResult:
    """Run the full network on one C0 x T x V sequence."""
    x = tz._as_tensor(x)
    if adjacency is None:
        adjacency = normalized_multiscale_adjacency(graph, cfg.gcn_scales)
    bb = model.backbone

    f_s0 = multiscale_gcn(x, adjacency, bb, cfg.gcn_scales)
    f_s = dynamic_gcn(f_s0, bb, graph)

    if cfg.use_filter_bank:
        f_f = filter_bank_forward(f_s, model.filter_bank)
    else:
        f_f = f_s

    f_t = spatial_channel_fusion(f_f, bb.sc_head0)
    for block in bb.blocks:
        f_t1 = linear_transformer_block(f_t, block.attn)
        f_t2 = mix_channels(f_t1, block.mixer) if cfg.use_channel_mixer else f_t1
        f_t0 = spatial_channel_fusion(f_f, block.sc_head)
        f_t = adaptive_fusion(f_t0, f_t2, block)
    f_r = f_t

    class_probs = tz.softmax(tz.matmul(bb.class_w, f_r) + bb.class_b, axis=0)
    class_stages = [class_probs]
    context = f_r
    for stage in bb.class_stages:
        feat = pointwise(stage.in_proj, class_stages[-1], stage.in_bias)
        for layer in stage.layers:
            feat = linear_transformer_block(feat, layer, context=context)
        logits = tz.matmul(stage.out_proj, feat) + stage.out_bias
        class_stages.append(tz.softmax(logits, axis=0))
        context = feat

    bound_probs = tz.sigmoid(tz.matmul(bb.bound_w, f_r) + bb.bound_b)
    boundary_stages = [bound_probs]
    for stage in bb.bound_stages:
        feat = tz.matmul(stage.in_proj, boundary_stages[-1]) + stage.in_bias
        for i, layer in enumerate(stage.layers):
            feat = dilated_residual_layer(feat, layer, 2 ** i)
        logits = tz.matmul(stage.out_proj, feat) + stage.out_bias
        boundary_stages.append(tz.sigmoid(logits))

    return ForwardResult(
        filtered=f_f,
        representation=f_r,
        class_stages=class_stages,
        boundary_stages=boundary_stages,
    )
