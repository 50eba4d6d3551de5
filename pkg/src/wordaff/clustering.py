"""Line-level affinity voting, graph pruning, components, and 2-D projection.

Edges between contextual lines carry the mean pairwise word affinity
(a voting likelihood). Edges survive only between height-compatible lines
with likelihood at or above the threshold; the words inside each connected
component form one cluster.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .model import ContextualLine
from .union_find import UnionFind


@dataclass
class ClusterConfig:
    likelihood_min: float = 0.75
    height_ratio_max: float = 1.25

    def validate(self):
        if not (0 <= self.likelihood_min <= 1):
            raise ValueError("likelihood_min must be in [0, 1]")
        if self.height_ratio_max <= 1:
            raise ValueError("height_ratio_max must be > 1")


@dataclass
class LineAffinityGraph:
    nodes: list[int]
    edges: list[tuple[int, int, float]]  # (line_a, line_b, likelihood), surviving only
    likelihood_min: float = 0.75
    height_ratio_max: float = 1.25


@dataclass
class ClusterAssignment:
    word_to_cluster: dict[int, int]
    clusters: dict[int, list[int]]

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def to_payload(self) -> dict:
        return {
            "clusters": [
                {"id": cid, "word_ids": list(wids), "color": cluster_color(cid)}
                for cid, wids in sorted(self.clusters.items())
            ]
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ClusterAssignment":
        clusters = {int(c["id"]): [int(w) for w in c["word_ids"]] for c in payload["clusters"]}
        w2c = {wid: cid for cid, wids in clusters.items() for wid in wids}
        return cls(word_to_cluster=w2c, clusters=clusters)


def cluster_color(cluster_id: int) -> str:
    """Deterministic palette: golden-angle hue walk."""
    hue = (cluster_id * 137.508) % 360.0 / 360.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.55, 0.65)
    return "#{:02x}{:02x}{:02x}".format(int(r * 255), int(g * 255), int(b * 255))


def affinity_matrix(latents: np.ndarray) -> np.ndarray:
    """Pairwise exp(-||u_i - u_j||^2) over latent rows."""
    U = np.asarray(latents, dtype=float)
    sq = (U * U).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (U @ U.T)
    return np.exp(-np.maximum(d2, 0.0))


def line_pair_likelihood(
    latents: np.ndarray, rows_a: Sequence[int], rows_b: Sequence[int]
) -> float:
    """Mean affinity over all cross pairs of two (non-empty) lines."""
    if not len(rows_a) or not len(rows_b):
        raise ValueError("both lines must be non-empty")
    A = np.asarray(latents, dtype=float)[list(rows_a)]
    B = np.asarray(latents, dtype=float)[list(rows_b)]
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return float(np.exp(-d2).mean())


def build_line_graph(
    lines: Sequence[ContextualLine],
    latents: np.ndarray,
    rows_by_line: dict[int, list[int]],
    cfg: ClusterConfig,
) -> LineAffinityGraph:
    """Keep an edge per line pair iff heights are compatible and the vote passes.

    ``rows_by_line`` maps each line id to the latent row indices of its words.
    """
    cfg.validate()
    aff = affinity_matrix(latents) if len(latents) else np.zeros((0, 0))
    by_id = {ln.id: ln for ln in lines}
    edges = []
    for la, lb in combinations(sorted(by_id), 2):
        ha, hb = by_id[la].bbox.h, by_id[lb].bbox.h
        if max(ha, hb) / min(ha, hb) >= cfg.height_ratio_max:
            continue
        likelihood = float(aff[np.ix_(rows_by_line[la], rows_by_line[lb])].mean())
        if likelihood >= cfg.likelihood_min:
            edges.append((la, lb, likelihood))
    return LineAffinityGraph(
        nodes=sorted(ln.id for ln in lines),
        edges=edges,
        likelihood_min=cfg.likelihood_min,
        height_ratio_max=cfg.height_ratio_max,
    )


def connected_components(
    graph: LineAffinityGraph, lines: Sequence[ContextualLine]
) -> ClusterAssignment:
    """Union surviving edges; words inherit their line's component.

    Clusters are numbered by ascending smallest member word id.
    """
    index = {lid: i for i, lid in enumerate(graph.nodes)}
    uf = UnionFind(len(graph.nodes))
    for a, b, _ in graph.edges:
        uf.union(index[a], index[b])
    words_of = {ln.id: list(ln.word_ids) for ln in lines}
    groups: dict[int, list[int]] = {}
    for lid in graph.nodes:
        groups.setdefault(uf.find(index[lid]), []).extend(words_of[lid])
    ordered = sorted((sorted(wids) for wids in groups.values()), key=lambda w: w[0])
    clusters = {cid: wids for cid, wids in enumerate(ordered)}
    w2c = {wid: cid for cid, wids in clusters.items() for wid in wids}
    return ClusterAssignment(word_to_cluster=w2c, clusters=clusters)


def project_2d(latents: np.ndarray) -> np.ndarray:
    """Top-2 principal components of the mean-centered latents.

    Sign convention: each component's largest-magnitude loading is positive.
    Inputs with fewer than 2 usable directions are zero-padded.
    """
    X = np.asarray(latents, dtype=float)
    if X.ndim != 2:
        raise ValueError("latents must be a 2-D array")
    n = X.shape[0]
    if n == 0:
        return np.zeros((0, 2))
    C = X - X.mean(axis=0)
    if X.shape[1] == 0:
        return np.zeros((n, 2))
    _, _, vt = np.linalg.svd(C, full_matrices=False)
    comps = vt[:2]
    flipped = []
    for comp in comps:
        j = int(np.argmax(np.abs(comp)))
        flipped.append(-comp if comp[j] < 0 else comp)
    proj = C @ np.vstack(flipped).T
    if proj.shape[1] < 2:
        proj = np.hstack([proj, np.zeros((n, 2 - proj.shape[1]))])
    return proj
