"""Skeleton topology: hop distances, exact-k adjacency matrices, and the
column-concatenated multi-scale adjacency used by the spatial GCN."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError

DEGREE_EPS = 1e-3


@dataclass
class SkeletonGraph:
    joints: int
    edges: list[tuple[int, int]]
    text_graph: np.ndarray | None = None
    _hops: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for a, b in self.edges:
            if not (0 <= a < self.joints and 0 <= b < self.joints):
                raise ConfigError(f"edge ({a}, {b}) outside joint range")
        if self.text_graph is not None:
            tg = np.asarray(self.text_graph, dtype=np.float64)
            if tg.shape != (self.joints, self.joints):
                raise ShapeError(
                    f"text graph must be {self.joints}x{self.joints}, got {tg.shape}"
                )
            self.text_graph = tg
        self._hops = self._bfs_hops()

    @classmethod
    def chain(cls, joints: int, text_graph=None) -> "SkeletonGraph":
        return cls(joints, [(i, i + 1) for i in range(joints - 1)], text_graph)

    def _bfs_hops(self) -> np.ndarray:
        """All-pairs shortest bone counts; unreachable pairs stay at -1."""
        v = self.joints
        adj = [[] for _ in range(v)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        hops = np.full((v, v), -1, dtype=int)
        for start in range(v):
            hops[start, start] = 0
            frontier = [start]
            d = 0
            while frontier:
                d += 1
                nxt = []
                for node in frontier:
                    for nb in adj[node]:
                        if hops[start, nb] < 0:
                            hops[start, nb] = d
                            nxt.append(nb)
                frontier = nxt
        return hops

    def hop_distance(self) -> np.ndarray:
        return self._hops.copy()

    def text_prior(self) -> np.ndarray:
        if self.text_graph is None:
            return np.zeros((self.joints, self.joints))
        return self.text_graph


def load_text_graph(path, joints: int) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        mat = np.asarray(json.load(fh), dtype=np.float64)
    if mat.shape != (joints, joints):
        raise ShapeError(f"text graph file has shape {mat.shape}, expected ({joints}, {joints})")
    return mat


def k_adjacency(graph: SkeletonGraph, k_max: int) -> list[np.ndarray]:
    """Binary matrices A^k with ones where hop distance equals k or i == j."""
    if k_max < 1:
        raise ConfigError("k_max must be >= 1")
    hops = graph._hops
    eye = np.eye(graph.joints)
    out = []
    for k in range(1, k_max + 1):
        a = ((hops == k).astype(np.float64) + eye).clip(max=1.0)
        out.append(a)
    return out


def normalized_multiscale_adjacency(graph: SkeletonGraph, k_max: int) -> np.ndarray:
    """Concatenate symmetric-normalized A^k along columns into V x K*V.

    Each block is D^{-1/2} A^k D^{-1/2} with D the row-degree plus a small
    epsilon guarding empty rows.
    """
    blocks = []
    for a in k_adjacency(graph, k_max):
        deg = a.sum(axis=1) + DEGREE_EPS
        inv_sqrt = 1.0 / np.sqrt(deg)
        blocks.append(a * np.outer(inv_sqrt, inv_sqrt))
    return np.concatenate(blocks, axis=1)
