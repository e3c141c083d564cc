"""Synthetic corpora with known ground truth, for tests and demos."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import BANDS, Dataset, quartile_bins
from .features import FEATURE_NAMES
from .graph import Graph

# hard iff all three bands hold; mirrors the three-feature rule shape reported for MCP
PLANTED_RULE = (
    ("num_nodes", "Q4"),
    ("smallest_nonzero_adjacency_eig", "Q1"),
    ("second_smallest_adjacency_eig", "Q1"),
)


@dataclass
class PlantedCorpus:
    dataset: Dataset
    rule: tuple[tuple[str, str], ...]
    rule_mask: np.ndarray  # instances satisfying the rule before label noise
    flipped: np.ndarray  # instances whose label noise flipped


def _feature_columns(rng: np.random.Generator, n: int, coupling: float) -> dict[str, np.ndarray]:
    """Plausible-looking feature columns; the three rule features share a latent factor."""
    z = rng.standard_normal(n)

    def mix():
        return coupling * z + np.sqrt(1 - coupling ** 2) * rng.standard_normal(n)

    nodes = np.round(np.exp(3.2 + 0.55 * mix()))
    nodes = np.maximum(nodes, 4)
    density = rng.beta(2.0, 3.0, n)
    edges = np.round(density * nodes * (nodes - 1) / 2)
    cols = {
        "num_nodes": nodes,
        "num_edges": edges,
        "density": density,
        "radius": rng.integers(1, 4, n).astype(float),
        "diameter": rng.integers(2, 7, n).astype(float),
        "median_degree_centrality": rng.beta(2, 4, n),
        "median_betweenness_centrality": rng.exponential(0.02, n),
        "median_closeness_centrality": rng.beta(5, 3, n),
        "global_clustering_coefficient": rng.beta(4, 2, n),
        "median_eccentricity": rng.uniform(1, 5, n),
        "algebraic_connectivity": rng.gamma(2.0, 1.5, n),
        "median_neighbor_median_degree": rng.gamma(3.0, 4.0, n),
        "spectral_radius": rng.gamma(4.0, 3.0, n),
        "laplacian_spectral_radius": rng.gamma(5.0, 4.0, n),
        "median_geodesic_distance": rng.uniform(1, 3, n),
        "smallest_nonzero_laplacian_eig": rng.gamma(2.0, 1.0, n),
        "second_smallest_nonzero_laplacian_eig": rng.gamma(2.5, 1.0, n),
        "second_largest_laplacian_eig": rng.gamma(5.0, 3.0, n),
        "smallest_nonzero_adjacency_eig": -np.exp(1.2 + 0.4 * mix()),
        "second_smallest_adjacency_eig": -np.exp(0.9 + 0.4 * mix()),
        "second_largest_adjacency_eig": rng.gamma(2.0, 1.0, n),
        "adjacency_spectral_gap": rng.gamma(3.0, 2.0, n),
        "laplacian_spectral_spread": rng.gamma(5.0, 4.0, n),
    }
    assert tuple(cols) == FEATURE_NAMES
    return cols


def rule_mask(d: Dataset, rule, bins=None) -> np.ndarray:
    bins = bins or quartile_bins(d)
    mask = np.ones(len(d), dtype=bool)
    for feature, band in rule:
        col = d.column(feature)
        idx = np.array([bins.band(feature, v) for v in col])
        mask &= idx == BANDS.index(band)
    return mask


def planted_rule_corpus(n: int = 2400, seed: int = 0, noise: float = 0.02,
                        coupling: float = 0.3, rule=PLANTED_RULE) -> PlantedCorpus:
    """Instances labelled hard by a three-feature quartile rule, then label noise.

    Noise is prior-preserving: each rule-positive instance is flipped to not
    hard with probability ``noise``, and rule-negative instances are flipped
    to hard at the rate that keeps the expected hard count unchanged. So
    ``noise`` is the fraction of hard labels that disagree with the rule.
    """
    rng = np.random.default_rng(seed)
    cols = _feature_columns(rng, n, coupling)
    X = np.column_stack([cols[name] for name in FEATURE_NAMES])
    ids = [f"synthetic-{i:05d}" for i in range(n)]
    d = Dataset(X, np.zeros(n, dtype=np.int64), ids)
    mask = rule_mask(d, rule)
    pos = mask.sum()
    down = mask & (rng.random(n) < noise)
    up_rate = noise * pos / max(n - pos, 1)
    up = ~mask & (rng.random(n) < up_rate)
    labels = (mask & ~down) | up
    d = Dataset(X, labels.astype(np.int64), ids)
    return PlantedCorpus(d, tuple(rule), mask, down | up)


RUNTIME_FEATURES = ("num_nodes", "density", "spectral_radius")


def runtime_corpus(n: int = 2000, seed: int = 0, noise: float = 0.05,
                   solver: str = "synthetic") -> Dataset:
    """Runtimes that are a smooth function of three features times (1 + noise * N(0,1))."""
    rng = np.random.default_rng(seed)
    cols = _feature_columns(rng, n, 0.0)
    X = np.column_stack([cols[name] for name in FEATURE_NAMES])

    def unit(x):
        return (x - x.min()) / (x.max() - x.min())

    nodes = unit(np.log(cols["num_nodes"]))
    dens = cols["density"]
    rad = unit(cols["spectral_radius"])
    clean = 0.5 + 6.0 * nodes ** 2 + 3.0 * dens ** 2 + np.sin(3.0 * rad) + 4.0 * nodes * dens
    runtime = clean * (1.0 + noise * rng.standard_normal(n))
    labels = np.zeros(n, dtype=np.int64)
    ids = [f"runtime-{i:05d}" for i in range(n)]
    return Dataset(X, labels, ids, FEATURE_NAMES, {solver: runtime})


def turan_graph(n: int, r: int) -> Graph:
    """Complete r-partite graph with near-equal parts; clique number r."""
    part = [v % r for v in range(n)]
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n) if part[u] != part[v]])


def adversarial_clique_graph(decoy_size: int = 16, clique_size: int = 5) -> Graph:
    """A hidden ``clique_size``-clique as its own low-degree component next to a
    dense Turán decoy with clique number ``clique_size - 1``.

    Greedy starts in the decoy (higher degrees) and stops one short; a
    random-restart search finds the optimum only if it starts inside the
    hidden clique.
    """
    decoy = turan_graph(decoy_size, clique_size - 1)
    edges = decoy.edges()
    base = decoy_size
    edges += [(base + i, base + j) for i in range(clique_size) for j in range(i + 1, clique_size)]
    return Graph.from_edges(decoy_size + clique_size, edges)


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(k: int) -> Graph:
    """K_{1,k}: vertex 0 joined to ``k`` leaves."""
    return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])


def gnp_graph(n: int, p: float, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph.from_edges(n, zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
