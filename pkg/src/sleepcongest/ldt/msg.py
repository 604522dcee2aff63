"""Message tags shared by the tree procedures and the MIS programs.

Tags are IntEnum values and cost a fixed TAG_BITS in the engine's size
accounting; everything after the tag is width-by-context fields.
"""

from enum import IntEnum


class T(IntEnum):
    HELLO = 0         # discovery: sender's node id
    LDT_ANN = 1       # phase start: sender's current tree id
    EDGE_UP = 2       # upcast of minimum outgoing edge (a, b)
    CHOSEN_DN = 3     # broadcast of the chosen edge (a, b)
    NONE_DN = 4       # broadcast: no outgoing edge, the tree spans its piece
    CHO = 5           # notify across the chosen edge: we picked (a, b)
    ROLE_UP = 6       # upcast of mutual-pair role flag
    ROLE_DN = 7       # broadcast of the tree's role
    COL_TA = 8        # side round: our tree's current color
    COL_UP = 9        # upcast of the parent tree's color
    COL_DN = 10       # broadcast of the recomputed color
    M_UP = 11         # matching upcast: got-matched flag / candidate edge
    M_DN = 12         # matching broadcast: status / chosen child edge
    M_NOTIFY = 13     # across an edge: you are matched to us
    M_STATUS = 14     # side round: our tree's matched flag
    F_UP = 15         # unmatched-root child pick upcast
    F_DN = 16         # unmatched-root child pick broadcast
    F_TA = 17         # across an edge: this edge joins the merge forest
    S3_BEST = 18      # side round: best (smallest) tree id known so far
    S3_UP = 19        # upcast of best id
    S3_DN = 20        # broadcast of best id
    FIN = 21          # across a forest edge: (merged id, my merged depth)
    REOR_UP = 22      # up the old branch: flip parent/child, take depth
    REOR_DN = 23      # down the old subtrees: new root id and depth
    CLAIM = 24        # across the attach edge: sender is now your child
    RANK_UP = 25      # subtree size
    RANK_DN = 26      # (rank offset, exact tree size)
    PERM = 27         # permutation chunk bits
    STATE = 28        # MIS state {0 undecided, 1 in, 2 out}
    VAL_UP = 29       # standalone upcast-min value
    ADJ = 30          # standalone transmit-adjacent payload
    BCAST = 31        # broadcast payload
