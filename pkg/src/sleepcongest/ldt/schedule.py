"""The five named rounds a tree node attends within a 2n+1 round block.

A node at depth i in a tree with size bound n, in a block starting at round
r, owns the rounds

    Down-Receive     r - 1 + i
    Down-Send        r - 1 + i + 1
    Side-Send-Receive r - 1 + n + 1
    Up-Receive       r - 1 + 2n - i + 1
    Up-Send          r - 1 + 2n - i + 2

while the root (depth 0) only has Down-Send = r, Side = r - 1 + n + 1 and
Up-Receive = r - 1 + 2n + 1.  A parent's Down-Send coincides with each
child's Down-Receive and a child's Up-Send with its parent's Up-Receive, so
waves can ripple down or up the tree while every node is awake O(1) rounds.
The Side round is depth-independent, which lets nodes of different trees
meet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class TransmissionSchedule:
    down_receive: Optional[int]
    down_send: int
    side: int
    up_receive: int
    up_send: Optional[int]

    def rounds(self) -> set:
        out = {self.down_send, self.side, self.up_receive}
        if self.down_receive is not None:
            out.add(self.down_receive)
        if self.up_send is not None:
            out.add(self.up_send)
        return out


def transmission_schedule(
    depth: int, n_bound: int, is_root: bool, start_round: int
) -> TransmissionSchedule:
    """Named rounds for a node of the given depth; block is [start, start+2n]."""
    if depth < 0 or depth > n_bound:
        raise ValueError(f"depth {depth} outside [0, {n_bound}]")
    base = start_round - 1
    if is_root:
        return TransmissionSchedule(
            down_receive=None,
            down_send=start_round,
            side=base + n_bound + 1,
            up_receive=base + 2 * n_bound + 1,
            up_send=None,
        )
    return TransmissionSchedule(
        down_receive=base + depth,
        down_send=base + depth + 1,
        side=base + n_bound + 1,
        up_receive=base + 2 * n_bound - depth + 1,
        up_send=base + 2 * n_bound - depth + 2,
    )


def block_length(n_bound: int) -> int:
    return 2 * n_bound + 1
