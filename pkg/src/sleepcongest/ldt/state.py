"""Per-node record of a labeled distance tree."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class LdtState:
    """What one node knows about its tree: the root's id, its own depth, and
    the ids of its parent and children.  children_ids are kept in ascending
    order, the canonical child order used by ranking."""

    root_id: int
    depth: int
    parent_id: Optional[int]
    children_ids: list = field(default_factory=list)
    n_bound: int = 0

    @property
    def is_root(self) -> bool:
        return self.parent_id is None

    def to_dict(self) -> dict:
        return {
            "root_id": self.root_id,
            "depth": self.depth,
            "parent_id": self.parent_id,
            "children_ids": list(self.children_ids),
            "n_bound": self.n_bound,
        }


def bfs_ldt(graph, ids, root: int, n_bound: int | None = None) -> dict:
    """Reference tree builder: BFS from `root` over one component, children
    in ascending id order.  Returns node index -> LdtState."""
    from collections import deque

    nb = n_bound or graph.n
    depth = {root: 0}
    parent = {root: None}
    children: dict = {root: []}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted((w for w, _ in graph.ports[u]), key=lambda w: ids[w]):
            if v not in depth:
                depth[v] = depth[u] + 1
                parent[v] = u
                children[v] = []
                children[u].append(v)
                queue.append(v)
    return {
        v: LdtState(
            root_id=ids[root],
            depth=depth[v],
            parent_id=None if parent[v] is None else ids[parent[v]],
            children_ids=sorted(ids[c] for c in children[v]),
            n_bound=nb,
        )
        for v in depth
    }
