"""Maximum clique solvers, hardness labelling and the solver portfolio.

The exact branch-and-bound plays the reference role: it proves optimality
(every non-adjacent pair excluded from the clique, i.e. ``x_i + x_j <= 1``)
unless the time limit runs out. The greedy and local-search heuristics are
the fallible alternates whose failure defines a hard instance.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable

from .features import DEFAULT_TOL, FeatureVector, extract_features
from .graph import Graph, is_clique


class InvariantViolation(RuntimeError):
    """A result contradicts a proven fact (e.g. a heuristic beat the optimum)."""


@dataclass(frozen=True)
class CliqueResult:
    vertices: frozenset[int]
    solver_name: str
    proven_optimal: bool = False
    timed_out: bool = False
    elapsed: float = 0.0
    work: int = 0  # deterministic effort counter (search nodes / moves)

    @property
    def size(self) -> int:
        return len(self.vertices)

    def __post_init__(self):
        if self.proven_optimal and self.timed_out:
            raise InvariantViolation("a timed-out result cannot be proven optimal")


@dataclass(frozen=True)
class HardnessLabel:
    hard: bool
    reference_size: int
    alternate_sizes: tuple[int, ...]

    @property
    def value(self) -> str:
        return "hard" if self.hard else "not_hard"


def verify_clique(g: Graph, result: CliqueResult) -> CliqueResult:
    if not is_clique(g, sorted(result.vertices)):
        raise InvariantViolation(f"{result.solver_name} returned a non-clique {sorted(result.vertices)}")
    return result


BRUTE_FORCE_LIMIT = 22


def brute_force_omega(g: Graph) -> int:
    """Clique number by plain include/exclude enumeration (test oracle)."""
    if g.n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_LIMIT}, got {g.n}")
    adj = [set(a) for a in g.adjacency]
    best = 0

    def grow(size: int, candidates: list[int]):
        nonlocal best
        best = max(best, size)
        for i, v in enumerate(candidates):
            grow(size + 1, [u for u in candidates[i + 1:] if u in adj[v]])

    grow(0, list(range(g.n)))
    return best


def _color_sort(candidates: int, adj: list[int]) -> tuple[list[int], list[int]]:
    """Greedy sequential colouring of a bitset; vertices returned by colour."""
    order, colors = [], []
    uncolored = candidates
    color = 0
    while uncolored:
        color += 1
        avail = uncolored
        while avail:
            low = avail & -avail
            v = low.bit_length() - 1
            avail &= ~adj[v] & ~low
            uncolored &= ~low
            order.append(v)
            colors.append(color)
    return order, colors


class _Timeout(Exception):
    pass


def solve_exact_bnb(g: Graph, time_limit: float = 60.0) -> CliqueResult:
    """Branch and bound with greedy-colouring upper bounds (MCQ-style).

    Vertices are renumbered by non-increasing degree so the colouring sees
    high-degree vertices first. Returns the incumbent with ``timed_out``
    set when the limit is hit.
    """
    start = time.monotonic()
    deadline = start + time_limit
    if g.n == 0:
        return CliqueResult(frozenset(), "exact_bnb", proven_optimal=True)

    order = sorted(range(g.n), key=lambda v: (-g.degree(v), v))
    pos = {v: i for i, v in enumerate(order)}
    adj = [0] * g.n
    for v in range(g.n):
        bits = 0
        for u in g.adjacency[v]:
            bits |= 1 << pos[u]
        adj[pos[v]] = bits

    best: list[int] = []
    current: list[int] = []
    nodes = 0

    def expand(candidates: int):
        nonlocal best, nodes
        nodes += 1
        if nodes & 1023 == 0 and time.monotonic() > deadline:
            raise _Timeout
        verts, colors = _color_sort(candidates, adj)
        for i in range(len(verts) - 1, -1, -1):
            if len(current) + colors[i] <= len(best):
                return
            v = verts[i]
            current.append(v)
            sub = candidates & adj[v]
            if sub:
                expand(sub)
            elif len(current) > len(best):
                best = list(current)
            current.pop()
            candidates &= ~(1 << v)

    timed_out = False
    try:
        expand((1 << g.n) - 1)
    except _Timeout:
        timed_out = True
    elapsed = time.monotonic() - start
    return CliqueResult(frozenset(order[i] for i in best), "exact_bnb",
                        proven_optimal=not timed_out, timed_out=timed_out,
                        elapsed=elapsed, work=nodes)


def solve_greedy(g: Graph) -> CliqueResult:
    """Add the vertex with most neighbours inside the candidate set (ties: smallest id)."""
    start = time.monotonic()
    adj = g.neighbor_bitsets()
    candidates = (1 << g.n) - 1
    clique = []
    steps = 0
    while candidates:
        best_v, best_d = -1, -1
        rest = candidates
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            rest ^= low
            d = (adj[v] & candidates).bit_count()
            if d > best_d:
                best_v, best_d = v, d
            steps += 1
        clique.append(best_v)
        candidates &= adj[best_v]
    return CliqueResult(frozenset(clique), "greedy", elapsed=time.monotonic() - start, work=steps)


def _improve(clique: set[int], adj: list[int], n: int) -> tuple[set[int], int]:
    """Hill-climb with add moves and (1,2)-swaps until neither applies."""
    moves = 0
    while True:
        moves += 1
        cbits = 0
        for v in clique:
            cbits |= 1 << v
        size = len(clique)
        missing_one: dict[int, list[int]] = {}
        added = False
        for v in range(n):
            if cbits >> v & 1:
                continue
            miss = size - (adj[v] & cbits).bit_count()
            if miss == 0:
                clique.add(v)
                added = True
                break
            if miss == 1:
                u = (cbits & ~adj[v]).bit_length() - 1
                missing_one.setdefault(u, []).append(v)
        if added:
            continue
        swapped = False
        for u in sorted(missing_one):
            cands = missing_one[u]
            for i, a in enumerate(cands):
                for b in cands[i + 1:]:
                    if adj[a] >> b & 1:
                        clique.discard(u)
                        clique.update((a, b))
                        swapped = True
                        break
                if swapped:
                    break
            if swapped:
                break
        if not swapped:
            return clique, moves


def solve_local_search(g: Graph, iterations: int = 50, seed: int = 0) -> CliqueResult:
    """Multi-restart randomized greedy construction followed by (1,2)-swap ascent."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    start = time.monotonic()
    rng = random.Random(seed)
    adj = g.neighbor_bitsets()
    best: set[int] = set()
    work = 0
    for _ in range(iterations):
        if g.n == 0:
            break
        candidates = (1 << g.n) - 1
        clique = set()
        while candidates:
            pool = [v for v in range(g.n) if candidates >> v & 1]
            v = rng.choice(pool)
            clique.add(v)
            candidates &= adj[v]
            work += 1
        clique, moves = _improve(clique, adj, g.n)
        work += moves
        if len(clique) > len(best):
            best = set(clique)
    return CliqueResult(frozenset(best), "local_search", elapsed=time.monotonic() - start, work=work)


def label_hardness(reference: CliqueResult, alternates: list[CliqueResult]) -> HardnessLabel:
    """Hard iff no alternate reaches the proven optimum (gap size is ignored)."""
    if not reference.proven_optimal:
        raise ValueError("hardness needs a proven-optimal reference result")
    if not alternates:
        raise ValueError("at least one alternate result is required")
    sizes = tuple(r.size for r in alternates)
    if max(sizes) > reference.size:
        raise InvariantViolation(
            f"alternate size {max(sizes)} exceeds proven optimum {reference.size}")
    return HardnessLabel(max(sizes) < reference.size, reference.size, sizes)


@dataclass
class PortfolioConfig:
    time_limit: float = 60.0
    local_search_iterations: int = 50
    repeats: int = 6
    seed: int = 0
    alternates: tuple[str, ...] = ("greedy", "local_search")
    runtime_measure: str = "wall"  # "wall" seconds or deterministic "work" counts
    tol: float = DEFAULT_TOL


@dataclass
class InstanceRecord:
    graph_id: str
    features: FeatureVector
    results: dict[str, CliqueResult]
    runtimes: dict[str, float]
    label: HardnessLabel | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def resolved(self) -> bool:
        return self.label is not None


def _alternate(name: str, config: PortfolioConfig) -> Callable[[Graph], CliqueResult]:
    if name == "greedy":
        return solve_greedy
    if name == "local_search":
        return lambda g: solve_local_search(g, config.local_search_iterations, config.seed)
    raise ValueError(f"unknown alternate solver {name!r}")


def _timed(solve: Callable[[Graph], CliqueResult], g: Graph, config: PortfolioConfig):
    first = verify_clique(g, solve(g))
    runs = [first]
    # a timed-out exact run is not repeated; its label is discarded anyway
    while len(runs) < config.repeats and not first.timed_out:
        runs.append(verify_clique(g, solve(g)))
    if config.runtime_measure == "work":
        runtime = float(first.work)
    elif config.runtime_measure == "wall":
        runtime = statistics.median(r.elapsed for r in runs)
    else:
        raise ValueError(f"unknown runtime measure {config.runtime_measure!r}")
    return first, runtime


def run_portfolio(g: Graph, config: PortfolioConfig | None = None, graph_id: str = "") -> InstanceRecord:
    """Solve one instance with every solver, time them and attach features and label.

    An exact-solver timeout leaves ``label`` unset (the instance is unresolved).
    """
    config = config or PortfolioConfig()
    features = extract_features(g, config.tol)
    results: dict[str, CliqueResult] = {}
    runtimes: dict[str, float] = {}

    reference, runtimes["exact_bnb"] = _timed(
        lambda h: solve_exact_bnb(h, config.time_limit), g, config)
    results["exact_bnb"] = reference
    for name in config.alternates:
        results[name], runtimes[name] = _timed(_alternate(name, config), g, config)

    record = InstanceRecord(graph_id, features, results, runtimes)
    if reference.timed_out:
        record.notes.append(f"exact solver timed out after {config.time_limit}s")
    else:
        record.label = label_hardness(reference, [results[a] for a in config.alternates])
    return record
