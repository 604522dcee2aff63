"""Central validity checks and the in-order ranking oracle.

These run outside the simulation and see everything, so they can certify
what the distributed procedures claim: that the parent/child records form a
spanning tree of the component, that depths equal tree distance to the root,
and that ranking matches a generalized in-order traversal.
"""

from __future__ import annotations

from collections import deque

from ..engine import Graph
from .state import LdtState


def validate_ldt(graph: Graph, states: dict, ids: list) -> list:
    """Check LdtStates (keyed by node index) over `graph`; return a list of
    problem strings, empty when the forest is valid.

    `ids` maps node index -> node id; states reference ids, as nodes do.
    """
    problems = []
    id_to_node = {ids[v]: v for v in states}
    for v, st in states.items():
        if st.parent_id is not None and st.parent_id not in id_to_node:
            problems.append(f"node {v}: parent id {st.parent_id} unknown")
        for c in st.children_ids:
            if c not in id_to_node:
                problems.append(f"node {v}: child id {c} unknown")
    if problems:
        return problems

    # mutual parent/child consistency and tree-edge existence
    for v, st in states.items():
        nbr_ids = {ids[u] for u, _ in graph.ports[v]}
        if st.parent_id is not None:
            if st.parent_id not in nbr_ids:
                problems.append(f"node {v}: parent {st.parent_id} is not a neighbor")
            else:
                p = id_to_node[st.parent_id]
                if ids[v] not in states[p].children_ids:
                    problems.append(f"node {v}: parent {st.parent_id} does not list it")
        if st.children_ids != sorted(st.children_ids):
            problems.append(f"node {v}: children not in ascending id order")
        for c in st.children_ids:
            u = id_to_node[c]
            if states[u].parent_id != ids[v]:
                problems.append(f"node {v}: child {c} has parent {states[u].parent_id}")

    # group by claimed root and verify each group is a spanning tree of a
    # connected piece with correct depths
    by_root: dict = {}
    for v, st in states.items():
        by_root.setdefault(st.root_id, []).append(v)
    for root_id, members in by_root.items():
        if root_id not in id_to_node:
            problems.append(f"root id {root_id} is not a member node")
            continue
        root = id_to_node[root_id]
        if states[root].root_id != root_id or states[root].parent_id is not None:
            problems.append(f"root {root_id}: root node record inconsistent")
            continue
        if states[root].depth != 0:
            problems.append(f"root {root_id}: depth {states[root].depth} != 0")
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for cid in states[u].children_ids:
                c = id_to_node[cid]
                if c in seen:
                    problems.append(f"root {root_id}: node {c} reached twice")
                    continue
                if states[c].depth != states[u].depth + 1:
                    problems.append(
                        f"node {c}: depth {states[c].depth} != parent depth + 1"
                    )
                seen.add(c)
                queue.append(c)
        if seen != set(members):
            problems.append(
                f"root {root_id}: tree reaches {len(seen)} of {len(members)} members"
            )
    return problems


def spans_component(graph: Graph, states: dict, ids: list) -> bool:
    """True when every state shares one root and the tree covers the whole
    connected component of the root (for connected graphs: all nodes)."""
    roots = {st.root_id for st in states.values()}
    return len(roots) == 1 and len(states) == graph.n and not validate_ldt(graph, states, ids)


def inorder_ranks(states: dict, ids: list) -> dict:
    """Oracle ranks: visit the first child's subtree, the node, then the
    remaining subtrees, children taken in their recorded order.  Returns
    node index -> 1-based rank."""
    id_to_node = {ids[v]: v for v in states}
    roots = [v for v, st in states.items() if st.parent_id is None]
    ranks = {}
    counter = [0]

    def visit(v: int) -> None:
        kids = [id_to_node[c] for c in states[v].children_ids]
        if kids:
            visit(kids[0])
        counter[0] += 1
        ranks[v] = counter[0]
        for c in kids[1:]:
            visit(c)

    for root in sorted(roots):
        visit(root)
    return ranks
