"""Virtual binary trees and the communication sets that schedule awake rounds.

A full binary tree over the id space ``[1, i]`` has depth ``d = ceil(log2 i)``
and ``2**(d+1) - 1`` nodes, labeled by an in-order traversal.  Relabeling with
``g(x) = x//2 + 1`` maps the leaves, left to right, onto ``1..2**d``.  The
communication set ``S_k([1, i])`` is the set of relabeled values of the proper
ancestors of leaf ``k``; two nodes with ids ``k < k'`` always share a set
element ``r`` with ``k < r <= k'``, so waking only during one's own set is
enough to pass information "upward" through the id order.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def tree_depth(i: int) -> int:
    """ceil(log2 i) for i >= 1; the depth of the virtual tree over [1, i]."""
    if i < 1:
        raise ValueError(f"id space bound must be >= 1, got {i}")
    return (i - 1).bit_length()


def communication_set(k: int, i: int) -> set[int]:
    """Ancestor labels of leaf k in the relabeled tree over [1, i].

    The ancestor at height h spans the aligned block of 2**h leaves
    containing k, and its relabeled value is the first leaf of that block's
    right half.  Labels may exceed i when i is not a power of two; callers
    that use set elements as round numbers ignore values above i.
    """
    if not 1 <= k <= i:
        raise ValueError(f"need 1 <= k <= i, got k={k}, i={i}")
    km1 = k - 1
    return {(km1 >> h << h) + (1 << (h - 1)) + 1 for h in range(1, tree_depth(i) + 1)}


def common_round(k: int, kp: int, i: int) -> int:
    """The shared element r of S_k and S_kp with k < r <= kp (k < kp).

    Realized as the relabeled value of the lowest common ancestor of the two
    leaves.
    """
    if not (1 <= k < kp <= i):
        raise ValueError(f"need 1 <= k < k' <= i, got k={k}, k'={kp}, i={i}")
    h = ((k - 1) ^ (kp - 1)).bit_length()
    return ((k - 1) >> h << h) + (1 << (h - 1)) + 1


def wake_schedule(k: int, i: int) -> list[int]:
    """Sorted rounds in [1, i] during which the node with id k is awake.

    The node's own round k is always included; ancestor labels beyond i are
    dropped because a schedule over [1, i] only has i rounds.
    """
    rounds = {r for r in communication_set(k, i) if r <= i}
    rounds.add(k)
    return sorted(rounds)


@dataclass
class CommTree:
    """Materialized virtual tree; a slow reference for the arithmetic above.

    Nodes are stored heap-style (root at index 1, children of x at 2x and
    2x+1) so ancestor walks are integer halving.
    """

    i: int
    depth: int = field(init=False)
    in_order_labels: list[int] = field(init=False)
    star_labels: list[int] = field(init=False)

    def __post_init__(self) -> None:
        self.depth = tree_depth(self.i)
        size = 2 ** (self.depth + 1) - 1
        labels = [0] * (size + 1)
        counter = [0]

        def visit(x: int) -> None:
            if 2 * x <= size:
                visit(2 * x)
            counter[0] += 1
            labels[x] = counter[0]
            if 2 * x + 1 <= size:
                visit(2 * x + 1)

        visit(1)
        self.in_order_labels = labels
        self.star_labels = [x // 2 + 1 for x in labels]

    def leaf_index(self, k: int) -> int:
        """Heap index of the k-th leaf (leaves are star-labeled 1..2**depth)."""
        return 2 ** self.depth + (k - 1)

    def ancestors_set(self, k: int) -> set[int]:
        """S_k via an explicit ancestor walk (proper ancestors only)."""
        if not 1 <= k <= self.i:
            raise ValueError(f"leaf {k} outside [1, {self.i}]")
        out = set()
        x = self.leaf_index(k) // 2
        while x >= 1:
            out.add(self.star_labels[x])
            x //= 2
        return out

    def lca_star(self, k: int, kp: int) -> int:
        """Star label of the lowest common ancestor of leaves k and kp."""
        a, b = self.leaf_index(k), self.leaf_index(kp)
        while a != b:
            a, b = a // 2, b // 2
        return self.star_labels[a]
