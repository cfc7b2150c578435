"""Hardware graphs, minor embedding, chain couplings and unembedding.

Chimera indexing follows the usual linear layout: qubit
``((row * m + col) * 2 + u) * 4 + k`` sits in cell ``(row, col)`` on side
``u`` (0 vertical, 1 horizontal) at position ``k``. Inside a cell every
vertical qubit couples to every horizontal one; vertical qubits also couple
to the same ``k`` in the cell below, horizontal qubits to the cell on the
right.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .ising import IsingModel
from .rng import make_rng
from .samplers import Sampleset

__all__ = [
    "HardwareGraph",
    "Embedding",
    "EmbeddingError",
    "EmbeddingImpossibleError",
    "EmbeddingNotFoundError",
    "chimera_graph",
    "find_embedding",
    "embed_model",
    "unembed",
    "chain_breaks",
    "validate_embedding",
    "intra_chain_edges",
    "format_embedding",
    "parse_embedding",
    "save_embedding",
    "load_embedding",
    "format_edge_list",
    "parse_edge_list",
]


class EmbeddingError(ValueError):
    pass


class EmbeddingImpossibleError(EmbeddingError):
    """The problem provably cannot fit (more variables than qubits)."""


class EmbeddingNotFoundError(EmbeddingError):
    """The heuristic gave up; an embedding may still exist."""


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class HardwareGraph:
    nodes: frozenset
    edges: frozenset
    family: str = "custom"
    size: int = 0
    adjacency: Mapping = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = frozenset(int(n) for n in self.nodes)
        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on qubit {u}")
            if u not in nodes or v not in nodes:
                raise ValueError(f"edge ({u}, {v}) references a missing qubit")
            edges.add(_edge(u, v))
        adj: dict[int, set[int]] = {n: set() for n in nodes}
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "adjacency", {n: frozenset(s) for n, s in adj.items()})

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency.get(u, ())


def chimera_graph(m: int) -> HardwareGraph:
    """``m x m`` grid of K_{4,4} cells, ``8 m^2`` qubits."""
    if m < 1:
        raise ValueError("m must be >= 1")

    def q(row, col, u, k):
        return ((row * m + col) * 2 + u) * 4 + k

    nodes = range(8 * m * m)
    edges = []
    for row in range(m):
        for col in range(m):
            for a in range(4):
                for b in range(4):
                    edges.append((q(row, col, 0, a), q(row, col, 1, b)))
            for k in range(4):
                if row + 1 < m:
                    edges.append((q(row, col, 0, k), q(row + 1, col, 0, k)))
                if col + 1 < m:
                    edges.append((q(row, col, 1, k), q(row, col + 1, 1, k)))
    return HardwareGraph(frozenset(nodes), frozenset(edges), "chimera", m)


@dataclass(frozen=True)
class Embedding:
    """Logical variable -> chain of hardware qubits, plus the chain strength."""

    chains: Mapping
    chain_strength: float = 1.0

    def __post_init__(self):
        if not self.chain_strength > 0:
            raise ValueError("chain_strength must be > 0")
        chains = {}
        for v, chain in sorted(self.chains.items()):
            chain = tuple(sorted(int(q) for q in chain))
            if not chain:
                raise ValueError(f"chain for variable {v} is empty")
            chains[int(v)] = chain
        object.__setattr__(self, "chains", chains)

    def with_chain_strength(self, gamma: float) -> "Embedding":
        return replace(self, chain_strength=gamma)

    @property
    def num_variables(self) -> int:
        return len(self.chains)

    def qubits(self) -> list[int]:
        return sorted(q for chain in self.chains.values() for q in chain)

    def max_chain_length(self) -> int:
        return max(len(c) for c in self.chains.values())


def _problem_edges(problem, num_variables: int | None) -> tuple[int, list[tuple[int, int]]]:
    if isinstance(problem, IsingModel):
        return problem.num_spins, list(problem.J)
    edges = [_edge(int(u), int(v)) for u, v in problem]
    if any(u == v for u, v in edges):
        raise ValueError("problem graph has a self-loop")
    n = num_variables
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return n, sorted(set(edges))


def validate_embedding(emb: Embedding, hardware: HardwareGraph, problem, num_variables: int | None = None) -> list[str]:
    """Return the list of violated embedding invariants (empty when valid).

    Checks: every variable has a chain of existing qubits, chains are pairwise
    disjoint, each chain is connected in ``hardware``, and every problem edge
    is realized by at least one hardware edge between the two chains.
    """
    n, edges = _problem_edges(problem, num_variables)
    problems = []
    owner: dict[int, int] = {}
    for v in range(n):
        if v not in emb.chains:
            problems.append(f"variable {v} has no chain")
    for v, chain in emb.chains.items():
        for q in chain:
            if q not in hardware.nodes:
                problems.append(f"chain {v} uses unknown qubit {q}")
            elif q in owner:
                problems.append(f"qubit {q} shared by chains {owner[q]} and {v}")
            else:
                owner[q] = v
        if not _connected(chain, hardware):
            problems.append(f"chain {v} is not connected")
    for u, v in edges:
        if u not in emb.chains or v not in emb.chains:
            continue
        if _chain_coupler(emb.chains[u], emb.chains[v], hardware) is None:
            problems.append(f"problem edge ({u}, {v}) has no coupler between its chains")
    return problems


def _connected(chain, hardware: HardwareGraph) -> bool:
    members = set(chain)
    if not members <= hardware.nodes:
        return False
    start = next(iter(members))
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in hardware.adjacency[x]:
            if y in members and y not in seen:
                seen.add(y)
                queue.append(y)
    return seen == members


def _chain_coupler(chain_a, chain_b, hardware: HardwareGraph) -> tuple[int, int] | None:
    """Lowest-id hardware edge joining the two chains."""
    best = None
    for a in chain_a:
        nbrs = hardware.adjacency.get(a, ())
        for b in chain_b:
            if b in nbrs:
                e = _edge(a, b)
                if best is None or e < best:
                    best = e
    return best


def intra_chain_edges(emb: Embedding, hardware: HardwareGraph) -> list[tuple[int, int]]:
    out = []
    for chain in emb.chains.values():
        members = set(chain)
        for a in chain:
            for b in hardware.adjacency[a]:
                if a < b and b in members:
                    out.append((a, b))
    return sorted(out)


def _routes_from_chain(chain, hardware: HardwareGraph, weight: dict) -> tuple[dict, dict]:
    """Weighted shortest paths from ``chain`` to every qubit.

    ``dist[q]`` sums node weights along the path, endpoint included and the
    chain's own qubits excluded; ``parent`` walks back toward the chain.
    """
    dist = {q: 0.0 for q in chain}
    parent = {q: None for q in chain}
    heap = [(0.0, q) for q in sorted(chain)]
    done = set()
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y in hardware.adjacency[x]:
            nd = d + weight[y]
            if nd < dist.get(y, math.inf):
                dist[y] = nd
                parent[y] = x
                heapq.heappush(heap, (nd, y))
    return dist, parent


def _placement_order(n: int, nbrs: list[set], rng: np.random.Generator) -> list[int]:
    """BFS order over the problem graph from random starts, so most variables
    are placed next to an already placed neighbour."""
    order, seen = [], set()
    for start in rng.permutation(n):
        start = int(start)
        if start in seen:
            continue
        seen.add(start)
        queue = deque([start])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in rng.permutation(sorted(nbrs[v])):
                w = int(w)
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    return order


def _route_chain(v, nbrs, chains, usage, hardware, base, rng) -> set:
    # a qubit held by c other chains costs base**c
    weight = {q: base ** usage[q] for q in hardware.nodes}
    placed = sorted(u for u in nbrs[v] if u in chains)
    nodes = sorted(hardware.nodes)
    if not placed:
        w = np.array([weight[q] for q in nodes])
        best = [q for q, x in zip(nodes, w) if x == w.min()]
        return {best[int(rng.integers(len(best)))]}

    routes = [(_routes_from_chain(chains[u], hardware, weight), set(chains[u])) for u in placed]
    cost = {}
    for q in nodes:
        total = weight[q]
        for (dist, _), members in routes:
            if q not in dist:
                total = math.inf
                break
            if q not in members:
                total += dist[q] - weight[q]
        cost[q] = total
    low = min(cost.values())
    if math.isinf(low):
        return set()
    best = [q for q in nodes if cost[q] == low]
    root = best[int(rng.integers(len(best)))]
    chain = {root}
    for (_, parent), members in routes:
        x = root
        while x is not None and x not in members:
            chain.add(x)
            x = parent[x]
    return chain


def _try_embed(n, nbrs, hardware, rng, max_passes: int = 16) -> dict | None:
    base = float(len(hardware.nodes))
    usage = {q: 0 for q in hardware.nodes}
    chains: dict[int, set] = {}

    def place(v) -> bool:
        chain = _route_chain(v, nbrs, chains, usage, hardware, base, rng)
        if not chain:
            return False
        chains[v] = chain
        for q in chain:
            usage[q] += 1
        return True

    def release(v):
        for q in chains.pop(v):
            usage[q] -= 1

    for v in _placement_order(n, nbrs, rng):
        if not place(v):
            return None

    for _ in range(max_passes):
        shared = {q for q, c in usage.items() if c > 1}
        if not shared:
            _tighten(chains, usage, place, release, n, rng)
            return chains
        # rerouting one chain at a time cannot free a chain walled in by its
        # neighbours, so tear out every chain near the overlap and re-place
        # the whole group
        zone = set().union(*(c for c in chains.values() if c & shared))
        ring = zone | {y for x in zone for y in hardware.adjacency[x]}
        group = sorted(v for v, c in chains.items() if c & ring)
        for v in group:
            release(v)
        pending = set(group)
        while pending:
            # most already-placed neighbours first keeps the group compact
            score = {v: sum(u in chains for u in nbrs[v]) for v in pending}
            top = max(score.values())
            ready = sorted(v for v in pending if score[v] == top)
            v = ready[int(rng.integers(len(ready)))]
            pending.discard(v)
            if not place(v):
                return None
    if any(c > 1 for c in usage.values()):
        return None
    _tighten(chains, usage, place, release, n, rng)
    return chains


def _tighten(chains, usage, place, release, n, rng, passes: int = 16):
    """Reroute chains one at a time, keeping a new chain only when it is
    overlap-free and no longer than the old one."""
    for _ in range(passes):
        improved = False
        for v in (int(x) for x in rng.permutation(n)):
            old = chains[v]
            release(v)
            if place(v) and len(chains[v]) <= len(old) and all(usage[q] == 1 for q in chains[v]):
                improved |= len(chains[v]) < len(old)
                continue
            if v in chains:
                release(v)
            chains[v] = old
            for q in old:
                usage[q] += 1
        if not improved:
            return


def find_embedding(
    problem,
    hardware: HardwareGraph,
    seed: int = 0,
    chain_strength: float = 1.0,
    max_restarts: int = 64,
    num_variables: int | None = None,
) -> Embedding:
    """Randomized greedy minor embedding with restarts.

    ``problem`` is an :class:`IsingModel` (its nonzero couplings define the
    graph) or an iterable of ``(u, v)`` edges. Each variable is placed in
    problem-BFS order: the root qubit minimizes the total weighted path
    length to the chains of its placed neighbours, and the chain grows along
    those shortest paths. Qubits already used by other chains are allowed at
    a steep cost; repair passes then tear out every chain around a shared
    qubit and re-place the group. A failed attempt restarts with a fresh
    random order; restart
    ``r`` always uses the same sub-stream, so results are deterministic per
    seed and the lowest successful restart wins.

    Raises :class:`EmbeddingImpossibleError` when there are more variables
    than qubits and :class:`EmbeddingNotFoundError` after ``max_restarts``
    failed passes.
    """
    n, edges = _problem_edges(problem, num_variables)
    if n < 1:
        raise ValueError("problem has no variables")
    if n > len(hardware.nodes):
        raise EmbeddingImpossibleError(
            f"provably impossible: {n} variables but only {len(hardware.nodes)} qubits"
        )
    nbrs = [set() for _ in range(n)]
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    root_ss = np.random.SeedSequence(int(seed))
    for restart, ss in enumerate(root_ss.spawn(max_restarts)):
        chains = _try_embed(n, nbrs, hardware, make_rng(ss))
        if chains is None:
            continue
        emb = Embedding(chains, chain_strength)
        if not validate_embedding(emb, hardware, edges, n):
            return emb
    raise EmbeddingNotFoundError(f"no embedding found after {max_restarts} restarts")


def embed_model(model: IsingModel, emb: Embedding, hardware: HardwareGraph) -> IsingModel:
    """Hardware-indexed model realizing ``model`` through ``emb``.

    Each field ``h_i`` is split equally over chain ``i``; each coupling
    ``J_ij`` goes on the lowest-id coupler between the two chains; every
    coupler inside a chain gets ``-chain_strength`` so aligned chains are
    favoured. The offset is carried over unchanged, so on unbroken states the
    hardware energy is the logical energy minus ``chain_strength`` times the
    number of intra-chain couplers.
    """
    problems = validate_embedding(emb, hardware, model)
    if problems:
        raise EmbeddingError("invalid embedding: " + "; ".join(problems))
    size = 1 + max(hardware.nodes)
    h = np.zeros(size)
    for v, chain in emb.chains.items():
        if v < model.num_spins:
            h[list(chain)] += model.h[v] / len(chain)
    J = {}
    for (u, v), value in model.J.items():
        J[_chain_coupler(emb.chains[u], emb.chains[v], hardware)] = value
    for e in intra_chain_edges(emb, hardware):
        J[e] = -emb.chain_strength
    return IsingModel(size, h, J, model.offset)


def chain_breaks(states: np.ndarray, emb: Embedding) -> np.ndarray:
    """Boolean ``(reads, variables)`` mask of non-unanimous chains."""
    states = np.asarray(states)
    cols = []
    for v in sorted(emb.chains):
        block = states[:, list(emb.chains[v])]
        cols.append(np.any(block != block[:, :1], axis=1))
    return np.stack(cols, axis=1) if cols else np.zeros((states.shape[0], 0), dtype=bool)


def unembed(
    sampleset: Sampleset,
    emb: Embedding,
    model: IsingModel,
    policy: str = "majority",
    seed: int = 0,
) -> tuple[Sampleset, float]:
    """Collapse hardware reads to logical reads.

    ``majority`` takes each chain's majority sign, settling ties with a seeded
    coin; ``discard`` drops reads with any broken chain. Returns the logical
    sampleset (energies recomputed on ``model``) and the occurrence-weighted
    fraction of reads with at least one broken chain.
    """
    if policy not in ("majority", "discard"):
        raise ValueError(f"unknown policy {policy!r}")
    variables = sorted(emb.chains)
    if variables != list(range(model.num_spins)):
        raise EmbeddingError("embedding variables do not match the logical model")
    states = sampleset.states
    if len(sampleset) == 0:
        empty = np.empty((0, model.num_spins), dtype=np.int8)
        return Sampleset(empty, [], [], model.fingerprint()), 0.0

    broken = chain_breaks(states, emb).any(axis=1)
    occ = sampleset.occurrences
    break_fraction = float(occ[broken].sum() / occ.sum())

    coins = 2 * make_rng(seed).integers(0, 2, size=(len(sampleset), len(variables))) - 1
    logical = np.empty((len(sampleset), len(variables)), dtype=np.int8)
    for col, v in enumerate(variables):
        total = states[:, list(emb.chains[v])].sum(axis=1, dtype=np.int64)
        logical[:, col] = np.where(total > 0, 1, np.where(total < 0, -1, coins[:, col]))

    keep = ~broken if policy == "discard" else np.ones(len(sampleset), dtype=bool)
    logical = logical[keep]
    return (
        Sampleset(logical, model.energies(logical), occ[keep], model.fingerprint()),
        break_fraction,
    )


def format_embedding(emb: Embedding) -> str:
    lines = [f"# chain_strength={emb.chain_strength!r}"]
    for v, chain in emb.chains.items():
        lines.append(f"{v}: " + " ".join(str(q) for q in chain))
    return "\n".join(lines) + "\n"


def parse_embedding(text: str, chain_strength: float | None = None) -> Embedding:
    gamma = 1.0
    chains = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("chain_strength="):
                    gamma = float(tok.split("=", 1)[1])
            continue
        head, sep, tail = line.partition(":")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'logical_index: qubit ...'")
        v = int(head)
        if v in chains:
            raise ValueError(f"line {lineno}: duplicate chain for variable {v}")
        chains[v] = [int(q) for q in tail.split()]
    return Embedding(chains, gamma if chain_strength is None else chain_strength)


def save_embedding(emb: Embedding, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_embedding(emb))


def load_embedding(path, chain_strength: float | None = None) -> Embedding:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read embedding {path}: {exc.strerror}") from exc
    return parse_embedding(text, chain_strength)


def format_edge_list(hardware: HardwareGraph) -> str:
    lines = [f"# {hardware.family} size={hardware.size} nodes={len(hardware.nodes)} edges={len(hardware.edges)}"]
    lines.extend(f"{u} {v}" for u, v in sorted(hardware.edges))
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> HardwareGraph:
    edges, nodes = [], set()
    family, size = "custom", 0
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            toks = line[1:].split()
            if toks and "=" not in toks[0]:
                family = toks[0]
            for tok in toks:
                if tok.startswith("size="):
                    size = int(tok[5:])
                elif tok.startswith("nodes="):
                    nodes.update(range(int(tok[6:])))
            continue
        u, v = (int(x) for x in line.split())
        edges.append((u, v))
        nodes.update((u, v))
    return HardwareGraph(frozenset(nodes), frozenset(edges), family, size)

