"""Graph generators, random id assignment, and edge-list file io.

All generators return port-numbered `engine.Graph` objects with ports
assigned by ascending neighbor index, and are pure functions of their
parameters and seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .engine import Graph


def build_graph(n: int, edge_pairs) -> Graph:
    """Assemble a Graph from undirected (u, v) pairs; ports follow sorted
    neighbor order."""
    if n <= 0:
        raise ValueError("graph must have at least one node")
    adj = [set() for _ in range(n)]
    for u, v in edge_pairs:
        if u == v:
            raise ValueError(f"self-loop at {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u},{v}) outside node range")
        adj[u].add(v)
        adj[v].add(u)
    nbrs = [sorted(s) for s in adj]
    port_of = [{v: a + 1 for a, v in enumerate(lst)} for lst in nbrs]
    ports = [
        [(v, port_of[v][u]) for v in nbrs[u]]
        for u in range(n)
    ]
    return Graph(n=n, ports=ports)


def gen_gnp(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p) with geometric skip sampling over pair indices."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    rng = random.Random(seed)
    edges = []
    total = n * (n - 1) // 2
    if p >= 1.0:
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    elif p > 0.0:
        log_q = math.log1p(-p)
        idx = -1
        while True:
            idx += 1 + int(math.log(1.0 - rng.random()) / log_q)
            if idx >= total:
                break
            u = int((1 + math.isqrt(1 + 8 * idx)) // 2)
            v = idx - u * (u - 1) // 2
            edges.append((v, u))
    return build_graph(n, edges)


STRUCTURED_KINDS = ("path", "cycle", "star", "complete", "balanced_binary_tree")


def gen_structured(kind: str, n: int, seed: int = 0) -> Graph:
    """Named topology with canonical port numbering; seed is accepted for a
    uniform call signature but the shapes are deterministic."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "cycle":
        if n < 3:
            raise ValueError("cycle needs n >= 3")
        edges = [(i, (i + 1) % n) for i in range(n)]
    elif kind == "star":
        edges = [(0, i) for i in range(1, n)]
    elif kind == "complete":
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    elif kind == "balanced_binary_tree":
        edges = []
        for child in range(1, n):
            edges.append(((child - 1) // 2, child))
    else:
        raise ValueError(f"unknown structured kind {kind!r}")
    return build_graph(n, edges)


def random_connected(n: int, extra_p: float, seed: int) -> Graph:
    """Uniform random labeled tree (Prufer) plus independent extra edges."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    edges = set()
    if n >= 2:
        prufer = [rng.randrange(n) for _ in range(n - 2)]
        degree = [1] * n
        for x in prufer:
            degree[x] += 1
        import heapq

        leaves = [v for v in range(n) if degree[v] == 1]
        heapq.heapify(leaves)
        for x in prufer:
            leaf = heapq.heappop(leaves)
            edges.add((min(leaf, x), max(leaf, x)))
            degree[x] -= 1
            if degree[x] == 1:
                heapq.heappush(leaves, x)
        u = heapq.heappop(leaves)
        v = heapq.heappop(leaves)
        edges.add((min(u, v), max(u, v)))
    if extra_p > 0:
        for u in range(n):
            for v in range(u + 1, n):
                if (u, v) not in edges and rng.random() < extra_p:
                    edges.add((u, v))
    return build_graph(n, sorted(edges))


@dataclass
class IdAssignment:
    """Unique node ids drawn uniformly from [1, bound]."""

    ids: list
    bound: int

    def __post_init__(self) -> None:
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("ids must be unique")
        if self.ids and not all(1 <= x <= self.bound for x in self.ids):
            raise ValueError(f"ids must lie in [1, {self.bound}]")


def default_id_bound(N: int) -> int:
    """Id space N**3: unique w.h.p. while ids stay Theta(log N) bits."""
    return N ** 3


def assign_random_ids(n: int, bound: int, seed: int) -> IdAssignment:
    """Uniform unique ids in [1, bound]; resamples whole vectors on collision."""
    if bound < n:
        raise ValueError(f"cannot place {n} unique ids in [1, {bound}]")
    rng = random.Random(seed)
    while True:
        ids = [rng.randint(1, bound) for _ in range(n)]
        if len(set(ids)) == n:
            return IdAssignment(ids=ids, bound=bound)


def write_edge_list(graph: Graph, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# nodes {graph.n}\n")
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")


def parse_edge_list(text: str, n: int | None = None) -> Graph:
    """Edge list: one '(u, v)' pair per line, 0-indexed, '#' comments.

    A '# nodes K' comment pins the node count, letting isolated trailing
    nodes survive a round trip; otherwise max index + 1 is used.
    """
    edges = []
    pinned = None
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                pinned = int(parts[1])
            continue
        if not line:
            continue
        u, v = map(int, line.split()[:2])
        edges.append((u, v))
    if n is None:
        n = pinned if pinned is not None else (max(max(e) for e in edges) + 1 if edges else 1)
    return build_graph(n, edges)


def read_edge_list(path: str, n: int | None = None) -> Graph:
    with open(path) as fh:
        return parse_edge_list(fh.read(), n=n)


def connected_components(graph: Graph, subset=None) -> list:
    """Connected components (as sorted node lists) of the induced subgraph."""
    if subset is None:
        nodes = set(range(graph.n))
    else:
        nodes = set(subset)
    seen = set()
    comps = []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            u = stack.pop()
            for v, _ in graph.ports[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    comp.append(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def induced_subgraph(graph: Graph, nodes) -> tuple[Graph, list]:
    """Subgraph on `nodes`; returns (subgraph, original labels per new index)."""
    labels = sorted(nodes)
    index = {v: i for i, v in enumerate(labels)}
    edges = [
        (index[u], index[v])
        for u, v in graph.edges()
        if u in index and v in index
    ]
    return build_graph(len(labels), edges), labels
