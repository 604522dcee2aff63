"""Deterministic tree construction and the random-order MIS pipeline.

The construction merges single-node trees into one labeled distance tree per
connected component, in phases over a public round layout.  Per phase:

  stage 1  every tree picks its minimum outgoing edge (edge ids are the two
           endpoint ids in increasing order) and notifies both endpoints;
  stage 2  the two trees that picked each other become the root pair of
           their supergraph component, smaller id on top; component trees
           are 6-colored by iterated color halving seeded with tree ids,
           then matched color class by color class; leftover unmatched
           trees hook onto their parent (an unmatched top onto one child);
  stage 3  the smallest tree id in each merge group is flooded group-wide,
           then the group re-orients around that core tree in waves, the
           root-ward branch flipping on Up rounds and the remaining
           subtrees refreshing depths on Down rounds.

Every exchange rides a transmission-schedule instance, so a node is awake
O(1) rounds per instance and O(log n' * log* I) over the construction.

With the epilogue enabled the pipeline continues into ranking, a
permutation broadcast (the root draws a uniform permutation of [1, n''] and
ships it in budget-sized chunks), and a greedy MIS pass over the renamed
ids, computing the lexicographically first MIS of a uniformly random order
of each component.

Message timing convention used throughout: a message sent in round t is
readable at the receiver's next step after t.  Waves therefore use pairs of
adjacent named rounds (Down-Receive then Down-Send, Up-Receive then
Up-Send), and verdicts broadcast in round t are acted on one round later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..engine import Bits, TAG_BITS
from ..vtree import wake_schedule
from .msg import T
from .schedule import block_length
from .state import LdtState

K_A1_TA, K_A2_UM, K_A3_FB, K_A4_TA, K_A5_UM, K_A6_FB = range(6)
K_CV_TA, K_CV_UM, K_CV_FB = 6, 7, 8
K_M_UM, K_M_FB, K_M_TA = 9, 10, 11
K_F_UM, K_F_FB, K_F_TA = 12, 13, 14
K_S3A_TA, K_S3A_UM, K_S3A_FB = 15, 16, 17
K_S3B_TA, K_S3B_UP, K_S3B_DOWN = 18, 19, 20
K_CLAIM_TA = 21
K_RANK_UP, K_RANK_DOWN, K_PERM = 22, 23, 24

_TA_KINDS = {K_A1_TA, K_A4_TA, K_CV_TA, K_M_TA, K_F_TA, K_S3A_TA, K_S3B_TA, K_CLAIM_TA}
_UM_KINDS = {K_A2_UM, K_A5_UM, K_CV_UM, K_M_UM, K_F_UM, K_S3A_UM, K_RANK_UP}
_FB_KINDS = {K_A3_FB, K_A6_FB, K_CV_FB, K_M_FB, K_F_FB, K_S3A_FB, K_RANK_DOWN}

ROLE_PLAIN, ROLE_TI_ROOT, ROLE_PAIR_CHILD = 0, 1, 2

# merge groups span at most 4 tree-graph hops; one extra pass absorbs the
# one-step lag between hearing a side-round message and acting on it
S3A_ITERS = 5
S3B_ROUNDS = 5

UNDECIDED, IN_MIS, NOT_IN_MIS, FAILED = 0, 1, 2, 3
STATE_NAMES = {UNDECIDED: "undecided", IN_MIS: "inMIS", NOT_IN_MIS: "notinMIS", FAILED: "failed"}


def log_star(x: float) -> int:
    """Iterations of log2 until the value drops to 1 or below."""
    count = 0
    while x > 1.0:
        x = math.log2(x)
        count += 1
    return count


def cv_iterations(id_bits: int) -> int:
    """Color-halving steps taking id_bits-bit colors into [0, 5].

    One step turns L-bit colors into values at most 2L - 1; once colors fit
    in 3 bits, a final step lands in [0, 5].
    """
    L = max(4, id_bits)
    steps = 0
    while L > 3:
        L = (2 * L - 1).bit_length()
        steps += 1
    return steps + 1


def cv_step(own: int, parent: int) -> int:
    """One halving step: lowest differing bit index, then own bit there."""
    diff = own ^ parent
    k = (diff & -diff).bit_length() - 1
    return 2 * k + ((own >> k) & 1)


@dataclass
class PipelinePlan:
    """Public round layout, identical at every node.

    Offsets are relative to the discovery round (offset 0); each instance
    occupies a block of B = 2 * n_bound + 1 rounds.
    """

    n_bound: int
    id_bound: int
    bit_budget: int
    with_epilogue: bool = True

    B: int = field(init=False)
    t_cv: int = field(init=False)
    phases: int = field(init=False)
    instances: list = field(init=False)
    rank_up_idx: int = field(init=False)
    perm_slots: int = field(init=False)
    perm_payload_bits: int = field(init=False)
    perm0: int = field(init=False)
    vt_start: int = field(init=False)
    total_rounds: int = field(init=False)

    def __post_init__(self):
        nb = self.n_bound
        self.B = block_length(nb)
        self.t_cv = cv_iterations(self.id_bound.bit_length())
        self.phases = (max(1, (nb - 1).bit_length()) + 1) if nb > 1 else 1
        self.perm_payload_bits = max(1, self.bit_budget - TAG_BITS)
        w_pub = max(1, (nb - 1).bit_length())
        self.perm_slots = -(-(nb * w_pub) // self.perm_payload_bits)

        per_phase = [
            (K_A1_TA, 0), (K_A2_UM, 0), (K_A3_FB, 0),
            (K_A4_TA, 0), (K_A5_UM, 0), (K_A6_FB, 0),
        ]
        for t in range(self.t_cv):
            per_phase += [(K_CV_TA, t), (K_CV_UM, t), (K_CV_FB, t)]
        for c in range(7):  # colors 0..5 plus one settle pass
            per_phase += [(K_M_UM, c), (K_M_FB, c), (K_M_TA, c)]
        per_phase += [(K_F_UM, 0), (K_F_FB, 0), (K_F_TA, 0)]
        for t in range(S3A_ITERS):
            per_phase += [(K_S3A_TA, t), (K_S3A_UM, t), (K_S3A_FB, t)]
        for r in range(S3B_ROUNDS):
            per_phase += [(K_S3B_TA, r), (K_S3B_UP, r), (K_S3B_DOWN, r)]
        per_phase.append((K_CLAIM_TA, 0))

        self.instances = []
        off = 1
        for ph in range(self.phases):
            for kind, param in per_phase:
                self.instances.append((kind, param, off, ph))
                off += self.B
        self.rank_up_idx = len(self.instances)
        self.perm0 = 0
        if self.with_epilogue:
            ph = self.phases
            self.instances.append((K_RANK_UP, 0, off, ph))
            off += self.B
            self.instances.append((K_RANK_DOWN, 0, off, ph))
            off += self.B
            self.perm0 = off
            for k in range(self.perm_slots):
                self.instances.append((K_PERM, k, off, ph))
                off += self.B
        self.vt_start = off
        if self.with_epilogue:
            off += nb
        self.total_rounds = off


class LdtMisPipeline:
    """Node-side state machine for one pipeline participant.

    The owning node program calls start(base) before the discovery round,
    feeds every delivery through hear(), calls settle() after draining, and
    drives on_step(rnd, sends); on_step returns the next round to attend or
    None when this node's part is over.
    """

    def __init__(self, plan: PipelinePlan, my_id: int, n_ports: int, rng,
                 construct_only: bool = False):
        self.plan = plan
        self.my_id = my_id
        self.n_ports = n_ports
        self.rng = rng
        self.construct_only = construct_only or not plan.with_epilogue

        self.base = 0
        self.live = {}      # port -> neighbor id (participants only)
        self.port_ldt = {}  # port -> neighbor's tree id, refreshed each phase
        self.root = my_id
        self.depth = 0
        self.parent_port = None
        self.children = []  # ports, kept in ascending neighbor-id order
        self.pos = 0
        self._phase = -1
        self.done = False
        self.failed = False
        self.mis = UNDECIDED
        self.decided_round = None
        self.join_pending = False

        # epilogue
        self.csize = {}
        self.rank = None
        self.rank_x = None
        self.n_size = None
        self.perm_acc = 0
        self.perm_ready = False
        self.vt_id = None
        self.vt_rounds = None
        self.vt_ptr = 0

        self._reset_phase_state()

    # ------------------------------------------------------------------ state

    def _reset_phase_state(self):
        self.chosen = None          # this tree's chosen outgoing edge (a, b)
        self.chosen_known = False   # verdict (edge or none) has arrived
        self.chosen_port = None     # set on the inside endpoint only
        self.role = ROLE_PLAIN
        self.child_cho = {}         # port -> edge chosen into us by a child tree
        self.nstat = {}             # port -> neighbor tree matched?
        self.parent_color = None
        self.matched = False
        self.pending_match = False  # heard "matched to us"; not yet upcast
        self.notify_port = None
        self.fnotify_port = None
        self.f_ports = set()
        self.best = None
        self.fin = False
        self.up_duty = False
        self.down_duty = False
        self.reup_from = None
        self.attach_port = None
        self.claim_pending = False
        self.n_root = None
        self.n_depth = None
        self.n_parent_port = None
        self.n_children = None
        self.claims = []
        self.mdn_relay = None
        self.fdn_relay = None
        self.agg = {}
        self.color = None

    def _commit_phase(self):
        if self.n_root is not None:
            self.root = self.n_root
            self.depth = self.n_depth
            self.parent_port = self.n_parent_port
            self.children = list(self.n_children)
        merged = set(self.children) | set(self.claims)
        self.children = sorted(merged, key=lambda p: self.live[p])
        self._reset_phase_state()
        self.color = self.root - 1
        if self.depth >= self.plan.n_bound:
            self.failed = True  # oversized component; schedule no longer fits

    # --------------------------------------------------------------- plumbing

    def _eid(self, port):
        a, b = self.my_id, self.live[port]
        return (a, b) if a < b else (b, a)

    def _external(self):
        return [p for p in self.live if self.port_ldt.get(p, self.live[p]) != self.root]

    def _named(self, start):
        nb, d = self.plan.n_bound, self.depth
        base = self.base + start - 1
        if self.parent_port is None:
            return (None, base + 1, base + nb + 1, base + 2 * nb + 1, None)
        return (base + d, base + d + 1, base + nb + 1,
                base + 2 * nb - d + 1, base + 2 * nb - d + 2)

    def _ordered_children(self):
        return sorted(self.children, key=lambda p: self.live[p])

    # ----------------------------------------------------------------- hear

    def hear(self, rnd, port, payload):
        tag = payload[0]
        if tag == T.HELLO:
            self.live[port] = payload[1] + 1
        elif tag == T.LDT_ANN:
            self.port_ldt[port] = payload[1] + 1
        elif tag == T.EDGE_UP:
            val = (payload[1] + 1, payload[2] + 1)
            cur = self.agg.get("edge")
            if cur is None or val < cur:
                self.agg["edge"] = val
        elif tag == T.CHOSEN_DN:
            self._set_chosen((payload[1] + 1, payload[2] + 1))
        elif tag == T.NONE_DN:
            self.chosen = None
            self.chosen_known = True
        elif tag == T.CHO:
            if port == self.chosen_port:
                their = self.port_ldt.get(port, self.live[port])
                self.role = ROLE_TI_ROOT if self.root < their else ROLE_PAIR_CHILD
            else:
                self.child_cho[port] = (payload[1] + 1, payload[2] + 1)
                self.nstat.setdefault(port, False)
        elif tag == T.ROLE_UP:
            self.agg["role"] = max(self.agg.get("role", 0), payload[1])
        elif tag == T.ROLE_DN:
            self.role = payload[1]
        elif tag == T.COL_TA:
            if port == self.chosen_port and self.role != ROLE_TI_ROOT:
                self.parent_color = payload[1]
        elif tag == T.COL_UP:
            self.agg["pcol"] = payload[1]
        elif tag == T.COL_DN:
            self.color = payload[1]
        elif tag == T.M_UP:
            if payload[1]:
                self.agg["got"] = True
            else:
                val = (payload[2] + 1, payload[3] + 1)
                cur = self.agg.get("cand")
                if cur is None or val < cur:
                    self.agg["cand"] = val
        elif tag == T.M_DN:
            self.mdn_relay = payload
            self.matched = True
            if payload[1] == 0:
                self._mark_chosen_child((payload[2] + 1, payload[3] + 1))
        elif tag == T.M_STATUS:
            self.nstat[port] = bool(payload[1])
            if payload[2]:
                self.pending_match = True
                self.f_ports.add(port)
        elif tag == T.F_UP:
            val = (payload[1] + 1, payload[2] + 1)
            cur = self.agg.get("fcand")
            if cur is None or val < cur:
                self.agg["fcand"] = val
        elif tag == T.F_DN:
            self.fdn_relay = payload
            edge = (payload[1] + 1, payload[2] + 1)
            for q, e in self.child_cho.items():
                if e == edge:
                    self.fnotify_port = q
                    self.f_ports.add(q)
        elif tag == T.F_TA:
            self.f_ports.add(port)
        elif tag == T.S3_BEST:
            v = payload[1] + 1
            if self.best is None or v < self.best:
                self.best = v
        elif tag == T.S3_UP:
            v = payload[1] + 1
            if "s3" not in self.agg or v < self.agg["s3"]:
                self.agg["s3"] = v
        elif tag == T.S3_DN:
            self.best = payload[1] + 1
        elif tag == T.FIN:
            if not self.fin:
                self.fin = True
                self.attach_port = port
                self.claim_pending = True
                self.up_duty = self.parent_port is not None
                self.down_duty = True
                self.n_root = payload[1] + 1
                self.n_depth = payload[2] + 1
                self.n_parent_port = port
                self.n_children = list(self.children)
                if self.parent_port is not None:
                    self.n_children.append(self.parent_port)
        elif tag == T.REOR_UP:
            if not self.fin:
                self.fin = True
                self.reup_from = port
                self.up_duty = self.parent_port is not None
                self.down_duty = True
                self.n_root = payload[1] + 1
                self.n_depth = payload[2] + 1
                self.n_parent_port = port
                self.n_children = [q for q in self.children if q != port]
                if self.parent_port is not None:
                    self.n_children.append(self.parent_port)
        elif tag == T.REOR_DN:
            if not self.fin:
                self.fin = True
                self.down_duty = True
                self.n_root = payload[1] + 1
                self.n_depth = payload[2] + 1
                self.n_parent_port = self.parent_port
                self.n_children = list(self.children)
        elif tag == T.CLAIM:
            self.claims.append(port)
        elif tag == T.RANK_UP:
            self.csize[port] = payload[1]
        elif tag == T.RANK_DN:
            self._take_rank(payload[1], payload[2])
        elif tag == T.PERM:
            k = (rnd - self.base - self.plan.perm0) // self.plan.B
            self.perm_acc |= payload[1].value << (k * self.plan.perm_payload_bits)
        elif tag == T.STATE:
            if payload[1] == IN_MIS and self.mis == UNDECIDED:
                self.mis = NOT_IN_MIS
                self.decided_round = rnd

    def _set_chosen(self, edge):
        self.chosen = edge
        self.chosen_known = True
        a, b = edge
        if self.my_id in (a, b):
            other = b if self.my_id == a else a
            for p, nid in self.live.items():
                if nid == other and self.port_ldt.get(p, nid) != self.root:
                    self.chosen_port = p
                    return

    def _mark_chosen_child(self, edge):
        for q, e in self.child_cho.items():
            if e == edge:
                self.notify_port = q
                self.f_ports.add(q)
                self.nstat[q] = True
                return

    def _take_rank(self, x, n_size):
        self.n_size = n_size
        self.rank_x = x
        kids = self._ordered_children()
        first = self.csize[kids[0]] if kids else 0
        self.rank = x + first + 1
        if n_size > self.plan.n_bound:
            self.failed = True

    def settle(self, rnd):
        """Resolve a pending greedy-pass join after the owner drained."""
        if self.join_pending:
            if self.mis == UNDECIDED:
                self.mis = IN_MIS
                self.decided_round = rnd
            self.join_pending = False

    # --------------------------------------------------------------- schedule

    def _wake_offsets(self, kind, param, start):
        dr, ds, side, ur, us = self._named(start)
        is_root = self.parent_port is None
        out = []
        if kind in _TA_KINDS:
            if kind == K_A1_TA:
                if self.live:
                    out.append(side)
            elif kind in (K_S3A_TA, K_S3B_TA):
                if self.f_ports or (kind == K_S3B_TA and self.claim_pending):
                    out.append(side)
            elif kind == K_CLAIM_TA:
                if self.claim_pending or self._external():
                    out.append(side)
            else:
                if self._external():
                    out.append(side)
        elif kind in _UM_KINDS:
            if self.children:
                out.append(ur)
            if not is_root:
                out.append(us)
        elif kind in _FB_KINDS:
            if is_root or self.children:
                out.append(ds)
            if not is_root:
                out.append(dr)
                if kind == K_A3_FB:
                    out.append(dr + 1)  # read the verdict; maybe stop here
        elif kind == K_S3B_UP:
            if self.children:
                out.append(ur)
            if not is_root:
                out.append(us)
        elif kind == K_S3B_DOWN:
            if is_root or self.children:
                out.append(ds)
            if not is_root:
                out.append(dr)
        elif kind == K_PERM:
            if self._perm_attends(param):
                if is_root:
                    out.append(ds)
                else:
                    out.append(dr)
                    if self.children:
                        out.append(ds)
                    elif param == self._my_slot_range()[1]:
                        out.append(dr + 1)  # read the final chunk
        return out

    def _real_slots(self):
        if self.n_size is None:
            return None
        w = max(1, (self.n_size - 1).bit_length())
        return -(-(self.n_size * w) // self.plan.perm_payload_bits)

    def _my_slot_range(self):
        if self.n_size is None or self.rank is None:
            return (0, 0)
        w = max(1, (self.n_size - 1).bit_length())
        b = self.plan.perm_payload_bits
        return ((self.rank - 1) * w // b, (self.rank * w - 1) // b)

    def _perm_attends(self, k):
        real = self._real_slots()
        if real is None:
            return k == 0  # size still unknown: attend the first slot to learn
        if k >= real:
            return False
        if self.parent_port is None or self.children:
            return True  # the root and relays carry every chunk
        lo, hi = self._my_slot_range()
        return lo <= k <= hi

    # ----------------------------------------------------------------- drive

    def start(self, base):
        self.base = base
        self.color = self.my_id - 1

    def on_step(self, rnd, sends):
        off = rnd - self.base
        if off == 0:
            for p in range(1, self.n_ports + 1):
                sends.append((p, (T.HELLO, self.my_id - 1)))
            if self.plan.instances:
                # everyone meets at the first side round to learn who is here
                return self.base + self.plan.instances[0][2] + self.plan.n_bound
            self.done = True
            return None
        if self.failed or self.done:
            self.done = True
            return None

        if self.plan.with_epilogue and not self.construct_only and off >= self.plan.vt_start:
            self._vt_step(rnd, sends)
        else:
            idx = self._locate(off)
            if idx is not None:
                kind, param, start, ph = self.plan.instances[idx]
                if ph != self._phase:
                    if self._phase >= 0:
                        self._commit_phase()
                    else:
                        self.color = self.root - 1
                    self._phase = ph
                    if self.failed:
                        self.mis = FAILED
                        return None
                if kind >= K_RANK_UP:
                    self._epilogue_step(kind, param, start, rnd, sends)
                else:
                    self._construct_step(kind, param, start, rnd, sends)
        if self.failed:
            self.mis = FAILED
            return None
        if self.done:
            return None
        return self._next_wake(rnd)

    def _locate(self, off):
        plan = self.plan
        idx = self.pos
        while idx < len(plan.instances):
            start = plan.instances[idx][2]
            if off < start:
                return None
            if off < start + plan.B:
                self.pos = idx
                return idx
            idx += 1
        self.pos = len(plan.instances)
        return None

    def _next_wake(self, rnd):
        plan = self.plan
        off = rnd - self.base
        idx = self.pos
        while idx < len(plan.instances):
            kind, param, start, ph = plan.instances[idx]
            if start + plan.B <= off and idx == self.pos:
                self.pos += 1  # block fully behind us; never rescan it
            cand = [self.base + o for o in self._wake_offsets(kind, param, start)]
            cand = [c for c in cand if c > rnd]
            if cand:
                return min(cand)
            idx += 1
        if plan.with_epilogue and not self.construct_only:
            nxt = self._vt_next(rnd)
            if nxt is not None:
                return nxt
        self.done = True
        return None

    def _finish_construction(self):
        """This tree spans its whole component; skip to the epilogue."""
        if self.construct_only:
            self.done = True
        else:
            self.pos = self.plan.rank_up_idx

    # ------------------------------------------------------ construction step

    def _construct_step(self, kind, param, start, rnd, sends):
        dr, ds, side, ur, us = self._named(start)
        is_root = self.parent_port is None

        if kind == K_A1_TA:
            if rnd != side:
                return
            if not self.live:
                # nobody answered the discovery: a component of one
                if not self.construct_only:
                    self.mis = IN_MIS
                    self.decided_round = rnd
                self.done = True
                return
            for p in self.live:
                sends.append((p, (T.LDT_ANN, self.root - 1)))

        elif kind == K_A2_UM:
            if rnd == us and not is_root:
                val = self.agg.pop("edge", None)
                own = self._local_min_edge()
                if own is not None and (val is None or own < val):
                    val = own
                if val is not None:
                    sends.append((self.parent_port, (T.EDGE_UP, val[0] - 1, val[1] - 1)))

        elif kind == K_A3_FB:
            if rnd == ds and (is_root or self.children):
                if is_root and not self.chosen_known:
                    val = self.agg.pop("edge", None)
                    own = self._local_min_edge()
                    if own is not None and (val is None or own < val):
                        val = own
                    if val is None:
                        self.chosen = None
                    else:
                        self._set_chosen(val)
                    self.chosen_known = True
                if self.chosen_known:
                    if self.chosen is None:
                        for q in self.children:
                            sends.append((q, (T.NONE_DN,)))
                        self._finish_construction()
                    else:
                        a, b = self.chosen
                        for q in self.children:
                            sends.append((q, (T.CHOSEN_DN, a - 1, b - 1)))
            elif rnd == dr + 1 and not is_root and not self.children:
                if self.chosen_known and self.chosen is None:
                    self._finish_construction()

        elif kind == K_A4_TA:
            if rnd != side:
                return
            if self.chosen_known and self.chosen is None:
                self._finish_construction()
                return
            if self.chosen_port is not None:
                a, b = self.chosen
                sends.append((self.chosen_port, (T.CHO, a - 1, b - 1)))

        elif kind == K_A5_UM:
            if rnd == us and not is_root:
                flag = self.agg.pop("role", 0)
                if self.chosen_port is not None:
                    flag = max(flag, self.role)
                if flag:
                    sends.append((self.parent_port, (T.ROLE_UP, flag)))

        elif kind == K_A6_FB:
            if rnd == ds and (is_root or self.children):
                if is_root:
                    flag = self.agg.pop("role", 0)
                    if self.chosen_port is not None:
                        flag = max(flag, self.role)
                    self.role = flag
                for q in self.children:
                    sends.append((q, (T.ROLE_DN, self.role)))

        elif kind == K_CV_TA:
            if rnd == side:
                for p in self._external():
                    sends.append((p, (T.COL_TA, self.color)))

        elif kind == K_CV_UM:
            if rnd == us and not is_root:
                val = self.agg.pop("pcol", None)
                if self.chosen_port is not None and self.role != ROLE_TI_ROOT:
                    val = self.parent_color
                if val is not None:
                    sends.append((self.parent_port, (T.COL_UP, val)))

        elif kind == K_CV_FB:
            if rnd == ds and (is_root or self.children):
                if is_root:
                    pc = self.agg.pop("pcol", None)
                    if self.chosen_port is not None and self.role != ROLE_TI_ROOT:
                        pc = self.parent_color
                    if pc is None or pc == self.color:
                        self.color = self.color & 1
                    else:
                        self.color = cv_step(self.color, pc)
                for q in self.children:
                    sends.append((q, (T.COL_DN, self.color)))

        elif kind == K_M_UM:
            if rnd == us and not is_root:
                got = self.agg.pop("got", False) or self.pending_match
                self.pending_match = False
                cand = self.agg.pop("cand", None)
                own = self._local_match_candidate(param)
                if own is not None and (cand is None or own < cand):
                    cand = own
                if got:
                    sends.append((self.parent_port, (T.M_UP, 1)))
                elif cand is not None:
                    sends.append((self.parent_port, (T.M_UP, 0, cand[0] - 1, cand[1] - 1)))

        elif kind == K_M_FB:
            if rnd == ds and (is_root or self.children):
                if is_root:
                    msg = self._root_match_decision(param)
                else:
                    msg = self.mdn_relay
                    self.mdn_relay = None
                if msg is not None:
                    self.matched = True
                    for q in self.children:
                        sends.append((q, msg))
                    if msg[1] == 0:
                        self._mark_chosen_child((msg[2] + 1, msg[3] + 1))

        elif kind == K_M_TA:
            if rnd == side:
                for p in self._external():
                    notify = 1 if p == self.notify_port else 0
                    sends.append((p, (T.M_STATUS, 1 if self.matched else 0, notify)))
                self.notify_port = None

        elif kind == K_F_UM:
            if rnd == us and not is_root:
                cand = self.agg.pop("fcand", None)
                own = self._local_f_candidate()
                if own is not None and (cand is None or own < cand):
                    cand = own
                if cand is not None:
                    sends.append((self.parent_port, (T.F_UP, cand[0] - 1, cand[1] - 1)))

        elif kind == K_F_FB:
            if rnd == ds and (is_root or self.children):
                if is_root:
                    msg = None
                    if self.role == ROLE_TI_ROOT and not self.matched:
                        cand = self.agg.pop("fcand", None)
                        own = self._local_f_candidate()
                        if own is not None and (cand is None or own < cand):
                            cand = own
                        if cand is not None:
                            msg = (T.F_DN, cand[0] - 1, cand[1] - 1)
                else:
                    msg = self.fdn_relay
                    self.fdn_relay = None
                if msg is not None:
                    for q in self.children:
                        sends.append((q, msg))
                    edge = (msg[1] + 1, msg[2] + 1)
                    for q, e in self.child_cho.items():
                        if e == edge:
                            self.fnotify_port = q
                            self.f_ports.add(q)

        elif kind == K_F_TA:
            if rnd == side:
                if (not self.matched and self.role != ROLE_TI_ROOT
                        and self.chosen_port is not None):
                    self.f_ports.add(self.chosen_port)
                    sends.append((self.chosen_port, (T.F_TA,)))
                if self.fnotify_port is not None:
                    sends.append((self.fnotify_port, (T.F_TA,)))
                    self.fnotify_port = None

        elif kind == K_S3A_TA:
            if rnd == side:
                if self.best is None:
                    self.best = self.root
                for p in self.f_ports:
                    sends.append((p, (T.S3_BEST, self.best - 1)))

        elif kind == K_S3A_UM:
            if rnd == us and not is_root:
                if self.best is None:
                    self.best = self.root
                val = min(self.best, self.agg.pop("s3", self.best))
                sends.append((self.parent_port, (T.S3_UP, val - 1)))

        elif kind == K_S3A_FB:
            if rnd == ds and (is_root or self.children):
                if is_root:
                    if self.best is None:
                        self.best = self.root
                    self.best = min(self.best, self.agg.pop("s3", self.best))
                for q in self.children:
                    sends.append((q, (T.S3_DN, self.best - 1)))

        elif kind == K_S3B_TA:
            if rnd == side:
                if self.best is None:
                    self.best = self.root
                if not self.fin and self.best == self.root:
                    # this tree is the merge group's core: orientation stands
                    self.fin = True
                    self.n_root = self.root
                    self.n_depth = self.depth
                    self.n_parent_port = self.parent_port
                    self.n_children = list(self.children)
                if self.fin:
                    for p in self.f_ports:
                        sends.append((p, (T.FIN, self.n_root - 1, self.n_depth)))

        elif kind == K_S3B_UP:
            if rnd == us and self.up_duty and self.parent_port is not None:
                sends.append((self.parent_port, (T.REOR_UP, self.n_root - 1, self.n_depth)))
                self.up_duty = False

        elif kind == K_S3B_DOWN:
            if rnd == ds and self.down_duty and self.children:
                for q in self.children:
                    if q != self.reup_from:
                        sends.append((q, (T.REOR_DN, self.n_root - 1, self.n_depth)))
                self.down_duty = False
                self.reup_from = None

        elif kind == K_CLAIM_TA:
            if rnd == side and self.claim_pending:
                sends.append((self.attach_port, (T.CLAIM, self.my_id - 1)))
                self.claim_pending = False

    def _local_min_edge(self):
        best = None
        for p in self._external():
            e = self._eid(p)
            if best is None or e < best:
                best = e
        return best

    def _local_match_candidate(self, c):
        if self.matched or c >= 6 or self.color != c:
            return None
        cands = [self.child_cho[q] for q in self.child_cho if not self.nstat.get(q, False)]
        return min(cands) if cands else None

    def _local_f_candidate(self):
        if self.role != ROLE_TI_ROOT or self.matched:
            return None
        return min(self.child_cho.values()) if self.child_cho else None

    def _root_match_decision(self, c):
        got = self.agg.pop("got", False) or self.pending_match
        self.pending_match = False
        if got:
            already = self.matched
            self.matched = True
            return None if already else (T.M_DN, 1)
        cand = self.agg.pop("cand", None)
        own = self._local_match_candidate(c)
        if own is not None and (cand is None or own < cand):
            cand = own
        if cand is not None:
            self.matched = True
            self._mark_chosen_child(cand)
            return (T.M_DN, 0, cand[0] - 1, cand[1] - 1)
        return None

    # --------------------------------------------------------- epilogue step

    def _epilogue_step(self, kind, param, start, rnd, sends):
        dr, ds, side, ur, us = self._named(start)
        is_root = self.parent_port is None

        if kind == K_RANK_UP:
            if rnd == us and not is_root:
                sends.append((self.parent_port, (T.RANK_UP, 1 + sum(self.csize.values()))))

        elif kind == K_RANK_DOWN:
            if rnd == ds and (is_root or self.children):
                if is_root:
                    size = 1 + sum(self.csize.values())
                    self._take_rank(0, size)
                    if self.failed:
                        return
                kids = self._ordered_children()
                for i, q in enumerate(kids):
                    if i == 0:
                        x = self.rank_x
                    else:
                        x = self.rank_x + 1 + sum(self.csize[p] for p in kids[:i])
                    sends.append((q, (T.RANK_DN, x, self.n_size)))

        elif kind == K_PERM:
            b = self.plan.perm_payload_bits
            real = self._real_slots()
            if real is None:
                return
            if rnd == ds and (is_root or self.children) and param < real:
                if is_root and not self.perm_ready:
                    self._draw_permutation()
                chunk = (self.perm_acc >> (param * b)) & ((1 << b) - 1)
                for q in self.children:
                    sends.append((q, (T.PERM, Bits(chunk, b))))
            if is_root or self.children:
                if param == real - 1 and rnd == ds:
                    self._finish_perm()
            elif param == self._my_slot_range()[1] and rnd == dr + 1:
                self._finish_perm()

    def _draw_permutation(self):
        perm = list(range(1, self.n_size + 1))
        self.rng.shuffle(perm)
        w = max(1, (self.n_size - 1).bit_length())
        stream = 0
        for i, e in enumerate(perm):
            stream |= (e - 1) << (i * w)
        self.perm_acc = stream
        self.perm_ready = True

    def _finish_perm(self):
        if self.vt_id is not None or self.n_size is None or self.rank is None:
            return
        w = max(1, (self.n_size - 1).bit_length())
        self.vt_id = ((self.perm_acc >> ((self.rank - 1) * w)) & ((1 << w) - 1)) + 1
        self.vt_rounds = [
            self.base + self.plan.vt_start + r - 1
            for r in wake_schedule(self.vt_id, self.n_size)
        ]
        self.vt_ptr = 0

    # ------------------------------------------------------- renamed greedy

    def _vt_next(self, rnd):
        if self.vt_rounds is None:
            return None
        for r in self.vt_rounds[self.vt_ptr:]:
            if r > rnd:
                return r
        return None

    def _vt_step(self, rnd, sends):
        for p in self.live:
            sends.append((p, (T.STATE, self.mis)))
        vt_round = rnd - self.base - self.plan.vt_start + 1
        if vt_round == self.vt_id and self.mis == UNDECIDED:
            self.join_pending = True
        while self.vt_ptr < len(self.vt_rounds) and self.vt_rounds[self.vt_ptr] <= rnd:
            self.vt_ptr += 1

    # ----------------------------------------------------------------- output

    def resolve(self, late_inbox, rnd):
        """Fold the halting round's deliveries and settle a pending join."""
        for r, port, payload in late_inbox:
            self.hear(r, port, payload)
        self.settle(rnd)
        if self.failed or (self.mis == UNDECIDED and not self.construct_only):
            self.mis = FAILED
        return STATE_NAMES[self.mis]

    def mis_state(self):
        if self.failed:
            return "failed"
        return STATE_NAMES[self.mis]

    def ldt_state(self) -> LdtState:
        return LdtState(
            root_id=self.root,
            depth=self.depth,
            parent_id=None if self.parent_port is None else self.live[self.parent_port],
            children_ids=sorted(self.live[q] for q in self.children),
            n_bound=self.plan.n_bound,
        )


class PipelineProgram:
    """Engine adapter: drives one LdtMisPipeline as a standalone node
    program, halting when the pipeline finishes."""

    def __init__(self, pipeline: LdtMisPipeline):
        self.p = pipeline

    def setup(self, ctx):
        self.ctx = ctx

    def step(self, rnd, inbox):
        from ..engine import Action

        for r, port, payload in inbox:
            self.p.hear(r, port, payload)
        self.p.settle(rnd)
        if rnd == 0:
            self.p.start(0)
        sends = []
        nxt = self.p.on_step(rnd, sends)
        if nxt is None:
            if self.p.join_pending:
                return Action.halt_then(
                    lambda late: self._output(late, rnd), sends=sends
                )
            return Action.halt(output=self._output([], rnd), sends=sends)
        return Action.wake_at(nxt, sends=sends)

    def _output(self, late, rnd):
        p = self.p
        if late or p.join_pending:
            p.resolve(late, rnd)
        out = {"ldt": p.ldt_state().to_dict(), "failed": p.failed}
        if not p.construct_only:
            out.update(
                state=p.mis_state(),
                rank=p.rank,
                size=p.n_size,
                new_id=p.vt_id,
                decided_round=p.decided_round,
            )
        return out


def construction_rounds(n_bound: int, id_bound: int, bit_budget: int,
                        with_epilogue: bool = True) -> int:
    """Length of the public pipeline layout, in rounds."""
    return PipelinePlan(n_bound, id_bound, bit_budget, with_epilogue).total_rounds


def ldt_construct_round(graph, ids, n_bound, config, with_mis=False):
    """Build one labeled distance tree per connected component.

    Returns (states, outputs, trace): states maps node index -> LdtState;
    outputs carries the raw per-node dicts (with MIS fields when with_mis).
    """
    from ..engine import node_rng, run_simulation

    plan = PipelinePlan(
        n_bound=n_bound,
        id_bound=ids.bound,
        bit_budget=config.bit_budget,
        with_epilogue=with_mis,
    )
    programs = [
        PipelineProgram(
            LdtMisPipeline(
                plan,
                ids.ids[v],
                graph.degree(v),
                node_rng(config.seed, v),
                construct_only=not with_mis,
            )
        )
        for v in range(graph.n)
    ]
    trace = run_simulation(graph, programs, config)
    states = {}
    for v in range(graph.n):
        out = trace.outputs[v]
        if isinstance(out, dict) and "ldt" in out:
            d = out["ldt"]
            states[v] = LdtState(
                root_id=d["root_id"],
                depth=d["depth"],
                parent_id=d["parent_id"],
                children_ids=d["children_ids"],
                n_bound=d["n_bound"],
            )
    return states, trace.outputs, trace
