"""Experiment configuration with published defaults, JSON round-trip, and
validation of the cross-field invariants the model relies on."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class ExperimentConfig:
    # data geometry
    in_channels: int = 6
    joints: int = 25
    num_classes: int = 52
    sample_rate: float = 50.0

    # feature widths
    channels: int = 64           # C
    gcn_scales: int = 13         # K
    dyn_channels: int = 16       # C1
    attn_dim: int = 16           # C2
    fuse_channels: int = 8       # C3
    text_dim: int = 768          # C_t

    # spectral filter bank
    num_filters: int = 4         # M
    max_filter_len: int = 64     # R_max
    pool_len: int = 64           # T_d
    proj_dim: int = 4            # D

    # adjacent-segment discrepancy
    spectral_bins: int = 32      # S_f
    alpha: float = 100.0

    # temporal modeling / refinement
    temporal_blocks: int = 10    # L
    class_stages: int = 1        # S_c
    boundary_stages: int = 2     # S_b
    refine_layers: int = 10

    # losses
    lambda_boundary: float = 1.0
    lambda_contrastive: float = 0.8
    lambda_discrepancy: float = 1.0
    smooth_sigma: float = 1.0
    smooth_tau: float = 4.0

    # optimization
    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 8
    seed: int = 0
    eval_fraction: float = 0.2

    # inference
    boundary_threshold: float = 0.5
    boundary_halfwidth: int = 2
    min_boundary_gap: int = 1

    # ablation switches (parameters are created either way so random
    # initialization stays aligned between configurations)
    use_filter_bank: bool = True
    use_channel_mixer: bool = True

    # optional joint-prior matrix file (V x V JSON array); zeros when absent
    text_graph_path: str | None = None

    def validate(self) -> "ExperimentConfig":
        positive = [
            "in_channels", "joints", "num_classes", "channels", "gcn_scales",
            "dyn_channels", "attn_dim", "fuse_channels", "text_dim",
            "num_filters", "max_filter_len", "pool_len", "proj_dim",
            "spectral_bins", "temporal_blocks", "refine_layers",
        ]
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.class_stages < 0 or self.boundary_stages < 0:
            raise ConfigError("refinement stage counts must be >= 0")
        if self.max_filter_len % (2 * self.num_filters) != 0:
            raise ConfigError(
                f"max_filter_len={self.max_filter_len} must be divisible by "
                f"2*num_filters={2 * self.num_filters}"
            )
        if self.channels % self.dyn_channels != 0:
            raise ConfigError(
                "channels must be a multiple of dyn_channels (channel groups "
                "share one dynamic joint graph)"
            )
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not 0.0 < self.eval_fraction < 1.0:
            raise ConfigError("eval_fraction must lie in (0, 1)")
        return self

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw).validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())
