"""Graph-level structural and spectral features.

All centrality conventions match the usual network-analysis defaults:
degree centrality ``deg/(n-1)``, closeness ``(n-1)/sum(d)``, betweenness
scaled by ``2/((n-1)(n-2))`` and transitivity ``3*triangles/triads``.
Distance-based and spectral quantities are taken on the largest connected
component; counts, density, degree centrality, clustering and the
neighbour-degree feature always use the full graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, fields

import numpy as np

from .graph import Graph, GraphValidationError, adjacency_matrix, laplacian_matrix, largest_connected_component

DEFAULT_TOL = 1e-8

FEATURE_NAMES = (
    "num_nodes",
    "num_edges",
    "density",
    "radius",
    "diameter",
    "median_degree_centrality",
    "median_betweenness_centrality",
    "median_closeness_centrality",
    "global_clustering_coefficient",
    "median_eccentricity",
    "algebraic_connectivity",
    "median_neighbor_median_degree",
    "spectral_radius",
    "laplacian_spectral_radius",
    "median_geodesic_distance",
    "smallest_nonzero_laplacian_eig",
    "second_smallest_nonzero_laplacian_eig",
    "second_largest_laplacian_eig",
    "smallest_nonzero_adjacency_eig",
    "second_smallest_adjacency_eig",
    "second_largest_adjacency_eig",
    "adjacency_spectral_gap",
    "laplacian_spectral_spread",
)


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    tolerance: float

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def zero_mask(self) -> np.ndarray:
        return np.abs(self.eigenvalues) <= self.tolerance * max(1.0, self.radius)

    def nonzero(self) -> np.ndarray:
        return self.eigenvalues[~self.zero_mask()]


def symmetric_eigenvalues(m: np.ndarray, tol: float = DEFAULT_TOL) -> Spectrum:
    """Ascending eigenvalues of a dense real symmetric matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if not np.array_equal(m, m.T):
        raise ValueError("matrix is not symmetric")
    return Spectrum(np.linalg.eigvalsh(m), tol)


def _bfs(g: Graph, source: int) -> np.ndarray:
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in g.adjacency[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def all_pairs_distances(g: Graph) -> np.ndarray:
    """``n x n`` hop-distance table of a connected graph."""
    table = np.empty((g.n, g.n), dtype=np.int64)
    for s in range(g.n):
        table[s] = _bfs(g, s)
    if g.n and table.min() < 0:
        raise DisconnectedGraphError("distance table requested for a disconnected graph")
    return table


def betweenness_centralities(g: Graph) -> np.ndarray:
    """Normalized betweenness (Brandes accumulation over BFS trees).

    Graphs with fewer than three vertices have no interior vertices and
    get all zeros.
    """
    n = g.n
    bc = np.zeros(n)
    if n < 3:
        return bc
    if (_bfs(g, 0) < 0).any():
        raise DisconnectedGraphError("betweenness requested for a disconnected graph")
    for s in range(n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in g.adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    # every unordered pair was counted from both ends
    return bc / 2.0 * (2.0 / ((n - 1) * (n - 2)))


def transitivity(g: Graph) -> float:
    triangles = 0
    triads = 0
    nbr_sets = [set(a) for a in g.adjacency]
    for v in range(g.n):
        d = len(g.adjacency[v])
        triads += d * (d - 1) // 2
        for u in g.adjacency[v]:
            if u > v:
                triangles += len(nbr_sets[v].intersection(g.adjacency[u]))
    # each triangle is seen once per edge
    triangles //= 3
    return 3.0 * triangles / triads if triads else 0.0


def _median(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.median(values)) if values.size else 0.0


def _pick(values: np.ndarray, index: int) -> float:
    return float(values[index]) if -len(values) <= index < len(values) else 0.0


@dataclass(frozen=True)
class FeatureVector:
    """The 23 graph-level features, in export order, plus the LCC flag.

    Features that are undefined on tiny graphs (a second eigenvalue of a
    1x1 matrix, a distance on one vertex) are reported as 0.0.
    """

    num_nodes: float
    num_edges: float
    density: float
    radius: float
    diameter: float
    median_degree_centrality: float
    median_betweenness_centrality: float
    median_closeness_centrality: float
    global_clustering_coefficient: float
    median_eccentricity: float
    algebraic_connectivity: float
    median_neighbor_median_degree: float
    spectral_radius: float
    laplacian_spectral_radius: float
    median_geodesic_distance: float
    smallest_nonzero_laplacian_eig: float
    second_smallest_nonzero_laplacian_eig: float
    second_largest_laplacian_eig: float
    smallest_nonzero_adjacency_eig: float
    second_smallest_adjacency_eig: float
    second_largest_adjacency_eig: float
    adjacency_spectral_gap: float
    laplacian_spectral_spread: float
    used_largest_component: bool = False

    def values(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)

    def as_dict(self) -> dict:
        return asdict(self)


assert tuple(f.name for f in fields(FeatureVector))[:-1] == FEATURE_NAMES


def extract_features(g: Graph, tol: float = DEFAULT_TOL) -> FeatureVector:
    n = g.n
    if n == 0:
        raise GraphValidationError("features are undefined for the empty graph")
    deg = g.degrees()
    density = 2.0 * g.m / (n * (n - 1)) if n > 1 else 0.0
    degree_centrality = deg / (n - 1) if n > 1 else np.ones(1)

    neighbor_medians = [np.median(deg[list(a)]) if a else 0.0 for a in g.adjacency]

    core = largest_connected_component(g)
    k = core.n
    dist = all_pairs_distances(core)
    ecc = dist.max(axis=1)
    pair_dist = dist[np.triu_indices(k, 1)]
    dist_sums = dist.sum(axis=1)
    closeness = np.where(dist_sums > 0, (k - 1) / np.maximum(dist_sums, 1), 0.0)

    adj = symmetric_eigenvalues(adjacency_matrix(core), tol)
    lap = symmetric_eigenvalues(laplacian_matrix(core), tol)
    a_all = adj.eigenvalues
    l_all = lap.eigenvalues
    a_nz = adj.nonzero()
    l_nz = lap.nonzero()

    return FeatureVector(
        num_nodes=float(n),
        num_edges=float(g.m),
        density=density,
        radius=float(ecc.min()),
        diameter=float(ecc.max()),
        median_degree_centrality=_median(degree_centrality),
        median_betweenness_centrality=_median(betweenness_centralities(core)),
        median_closeness_centrality=_median(closeness),
        global_clustering_coefficient=transitivity(g),
        median_eccentricity=_median(ecc),
        algebraic_connectivity=_pick(l_all, 1),
        median_neighbor_median_degree=_median(neighbor_medians),
        spectral_radius=float(a_all[-1]),
        laplacian_spectral_radius=float(l_all[-1]),
        median_geodesic_distance=_median(pair_dist),
        smallest_nonzero_laplacian_eig=_pick(l_nz, 0),
        second_smallest_nonzero_laplacian_eig=_pick(l_nz, 1),
        second_largest_laplacian_eig=_pick(l_all, -2),
        smallest_nonzero_adjacency_eig=_pick(a_nz, 0),
        second_smallest_adjacency_eig=_pick(a_all, 1),
        second_largest_adjacency_eig=_pick(a_all, -2),
        adjacency_spectral_gap=float(a_all[-1] - a_all[-2]) if k > 1 else 0.0,
        laplacian_spectral_spread=float(l_all[-1] - l_all[0]),
        used_largest_component=k < n,
    )
