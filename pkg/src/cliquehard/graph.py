"""Simple undirected graphs, text-format parsers and matrix views."""

from __future__ import annotations

import logging
import re
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed input text. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphValidationError(ValueError):
    """Structurally invalid graph (self-loop, asymmetric adjacency, ...)."""


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on vertices ``0..n-1``.

    ``adjacency[v]`` is the ascending tuple of neighbours of ``v``.
    ``original_ids`` maps each dense id back to the id used in the source
    file (identity when the graph was built in memory).
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    m: int
    original_ids: tuple[int, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.original_ids:
            object.__setattr__(self, "original_ids", tuple(range(self.n)))
        validate(self)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   original_ids: Sequence[int] | None = None) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise GraphValidationError(f"self-loop on vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphValidationError(f"edge ({u}, {v}) outside 0..{n - 1}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        adjacency = tuple(tuple(sorted(s)) for s in nbrs)
        m = sum(len(a) for a in adjacency) // 2
        return cls(n, adjacency, m, tuple(original_ids) if original_ids is not None else ())

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def has_edge(self, u: int, v: int) -> bool:
        a = self.adjacency[u]
        i = bisect_left(a, v)
        return i < len(a) and a[i] == v

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def neighbor_bitsets(self) -> list[int]:
        """Neighbourhoods as Python-int bitsets (bit ``v`` set iff adjacent)."""
        out = []
        for a in self.adjacency:
            bits = 0
            for v in a:
                bits |= 1 << v
            out.append(bits)
        return out

    def induced_subgraph(self, vertices: Iterable[int]) -> "Graph":
        keep = sorted(set(vertices))
        index = {v: i for i, v in enumerate(keep)}
        edges = [(index[u], index[v]) for u in keep for v in self.adjacency[u]
                 if v in index and u < v]
        return Graph.from_edges(len(keep), edges, [self.original_ids[v] for v in keep])

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph.from_edges(self.n, [(perm[u], perm[v]) for u, v in self.edges()])


def validate(g: Graph) -> None:
    """Raise GraphValidationError unless every Graph invariant holds."""
    if g.n < 0 or len(g.adjacency) != g.n:
        raise GraphValidationError("adjacency length does not match n")
    if len(g.original_ids) != g.n:
        raise GraphValidationError("original_ids length does not match n")
    total = 0
    for v, nbrs in enumerate(g.adjacency):
        total += len(nbrs)
        prev = -1
        for u in nbrs:
            if u <= prev:
                raise GraphValidationError(f"neighbours of {v} not strictly ascending")
            if u == v:
                raise GraphValidationError(f"self-loop on vertex {v}")
            if not 0 <= u < g.n:
                raise GraphValidationError(f"neighbour {u} of {v} out of range")
            prev = u
    for v, nbrs in enumerate(g.adjacency):
        for u in nbrs:
            if not g.has_edge(u, v):
                raise GraphValidationError(f"edge ({v}, {u}) is not symmetric")
    if total != 2 * g.m:
        raise GraphValidationError(f"m={g.m} but adjacency lists hold {total} entries")


@dataclass
class ParseDiagnostics:
    duplicate_edges: int = 0
    warnings: list[str] = field(default_factory=list)


def _lines(text) -> Iterable[tuple[int, str]]:
    if isinstance(text, str):
        text = text.splitlines()
    for i, line in enumerate(text, start=1):
        yield i, line.strip()


def parse_edge_list(text, diagnostics: ParseDiagnostics | None = None) -> Graph:
    """Parse whitespace-separated ``u v`` lines; ``#`` starts a comment line.

    Ids are remapped to ``0..n-1`` in ascending order of the original ids.
    """
    diag = diagnostics if diagnostics is not None else ParseDiagnostics()
    pairs: set[tuple[int, int]] = set()
    ids: set[int] = set()
    for lineno, line in _lines(text):
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 2 tokens, got {len(tokens)}", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphFormatError(f"non-integer vertex id in {line!r}", lineno) from None
        if u == v:
            raise GraphValidationError(f"line {lineno}: self-loop on vertex {u}")
        key = (min(u, v), max(u, v))
        if key in pairs:
            diag.duplicate_edges += 1
        pairs.add(key)
        ids.update(key)
    order = sorted(ids)
    index = {v: i for i, v in enumerate(order)}
    return Graph.from_edges(len(order), [(index[u], index[v]) for u, v in pairs], order)


def write_edge_list(g: Graph) -> str:
    """Inverse of parse_edge_list for graphs without isolated vertices."""
    return "".join(f"{u} {v}\n" for u, v in g.edges())


def parse_dimacs(text, diagnostics: ParseDiagnostics | None = None) -> Graph:
    """Parse the DIMACS clique format (``p edge N M`` header, 1-based ``e u v`` lines)."""
    diag = diagnostics if diagnostics is not None else ParseDiagnostics()
    n = declared_m = None
    pairs: set[tuple[int, int]] = set()
    for lineno, line in _lines(text):
        if not line or line[0] == "c":
            continue
        tokens = line.split()
        if tokens[0] == "p":
            if n is not None:
                raise GraphFormatError("duplicate problem line", lineno)
            if len(tokens) != 4:
                raise GraphFormatError("problem line must be 'p edge N M'", lineno)
            try:
                n, declared_m = int(tokens[2]), int(tokens[3])
            except ValueError:
                raise GraphFormatError("non-integer N or M in problem line", lineno) from None
        elif tokens[0] == "e":
            if n is None:
                raise GraphFormatError("edge line before problem line", lineno)
            if len(tokens) != 3:
                raise GraphFormatError("edge line must be 'e u v'", lineno)
            try:
                u, v = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise GraphFormatError(f"non-integer vertex id in {line!r}", lineno) from None
            for x in (u, v):
                if not 1 <= x <= n:
                    raise GraphFormatError(f"vertex id {x} out of range 1..{n}", lineno)
            if u == v:
                raise GraphValidationError(f"line {lineno}: self-loop on vertex {u}")
            key = (min(u, v) - 1, max(u, v) - 1)
            if key in pairs:
                diag.duplicate_edges += 1
            pairs.add(key)
        else:
            raise GraphFormatError(f"unknown line type {tokens[0]!r}", lineno)
    if n is None:
        raise GraphFormatError("missing 'p edge N M' header")
    if declared_m != len(pairs):
        msg = f"header declares {declared_m} edges, found {len(pairs)}"
        diag.warnings.append(msg)
        log.warning(msg)
    return Graph.from_edges(n, sorted(pairs), range(1, n + 1))


def write_dimacs(g: Graph) -> str:
    lines = [f"p edge {g.n} {g.m}"]
    lines += [f"e {u + 1} {v + 1}" for u, v in g.edges()]
    return "\n".join(lines) + "\n"


_TU_SPLIT = re.compile(r"\s*,\s*|\s+")


def parse_tudataset(adjacency_text, indicator_text) -> list[Graph]:
    """Split a TU-style bundle (``DS_A.txt`` + ``DS_graph_indicator.txt``) into graphs.

    Node ids in the adjacency file are global and 1-based; line ``i`` of the
    indicator file holds the graph id of global node ``i``. Graph ids must
    form the contiguous range ``1..G``.
    """
    owner: list[int] = []
    for lineno, line in _lines(indicator_text):
        if not line:
            continue
        try:
            owner.append(int(line))
        except ValueError:
            raise GraphFormatError(f"non-integer graph id {line!r}", lineno) from None
    if not owner:
        return []
    graph_ids = sorted(set(owner))
    if graph_ids != list(range(1, graph_ids[-1] + 1)):
        missing = sorted(set(range(1, graph_ids[-1] + 1)) - set(graph_ids))
        raise GraphFormatError(f"graph indicator has gaps, missing ids {missing[:5]}")

    members: dict[int, list[int]] = {gid: [] for gid in graph_ids}
    for node, gid in enumerate(owner, start=1):
        members[gid].append(node)
    local = {}
    for gid, nodes in members.items():
        for i, node in enumerate(nodes):
            local[node] = i

    edges: dict[int, set[tuple[int, int]]] = {gid: set() for gid in graph_ids}
    for lineno, line in _lines(adjacency_text):
        if not line:
            continue
        tokens = [t for t in _TU_SPLIT.split(line) if t]
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 'u, v', got {line!r}", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphFormatError(f"non-integer node id in {line!r}", lineno) from None
        for x in (u, v):
            if not 1 <= x <= len(owner):
                raise GraphFormatError(f"node {x} missing from graph indicator", lineno)
        if owner[u - 1] != owner[v - 1]:
            raise GraphFormatError(
                f"edge ({u}, {v}) joins graph {owner[u - 1]} and graph {owner[v - 1]}", lineno)
        if u == v:
            raise GraphValidationError(f"line {lineno}: self-loop on node {u}")
        a, b = local[u], local[v]
        edges[owner[u - 1]].add((min(a, b), max(a, b)))

    return [Graph.from_edges(len(members[gid]), sorted(edges[gid]), members[gid])
            for gid in graph_ids]


def load_tudataset(directory: str | Path, name: str | None = None) -> list[Graph]:
    """Read ``<name>_A.txt`` and ``<name>_graph_indicator.txt`` from ``directory``."""
    directory = Path(directory)
    if name is None:
        found = sorted(directory.glob("*_graph_indicator.txt"))
        if len(found) != 1:
            raise GraphFormatError(f"expected one *_graph_indicator.txt in {directory}, found {len(found)}")
        name = found[0].name[: -len("_graph_indicator.txt")]
    adjacency = (directory / f"{name}_A.txt").read_text(encoding="utf-8")
    indicator = (directory / f"{name}_graph_indicator.txt").read_text(encoding="utf-8")
    return parse_tudataset(adjacency, indicator)


def adjacency_matrix(g: Graph) -> np.ndarray:
    if g.n < 1:
        raise GraphValidationError("adjacency matrix of the empty graph")
    a = np.zeros((g.n, g.n))
    for u, v in g.edges():
        a[u, v] = a[v, u] = 1.0
    return a


def laplacian_matrix(g: Graph) -> np.ndarray:
    a = adjacency_matrix(g)
    return np.diag(a.sum(axis=1)) - a


def connected_components(g: Graph) -> list[list[int]]:
    """Components as ascending vertex lists, ordered by their smallest vertex."""
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in g.adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def largest_connected_component(g: Graph) -> Graph:
    """Induced subgraph on the largest component.

    Ties go to the component holding the smallest vertex id. A connected
    graph is returned unchanged.
    """
    comps = connected_components(g)
    if len(comps) <= 1:
        return g
    best = max(comps, key=lambda c: (len(c), -c[0]))
    return g.induced_subgraph(best)


def is_clique(g: Graph, vertices: Iterable[int]) -> bool:
    vs = list(vertices)
    if len(set(vs)) != len(vs):
        return False
    return all(g.has_edge(u, v) for i, u in enumerate(vs) for v in vs[i + 1:])
