"""Standalone tree procedures run as node programs on the engine.

Each runner takes a graph, the node ids, and a prebuilt labeled distance
tree (one LdtState per node), wires up per-node programs, and executes one
transmission-schedule block starting at round 1 (round 0 is the all-awake
bootstrap).  Every procedure keeps each node awake for at most its named
rounds, so worst-case awake counts stay O(1) per invocation.
"""

from __future__ import annotations

from ..engine import Action, Graph, NodeProgram, RunConfig, run_simulation
from .msg import T
from .schedule import block_length, transmission_schedule
from .state import LdtState


class _TreeProgram(NodeProgram):
    """Shared plumbing: id/port maps and the node's named rounds."""

    def __init__(self, my_id: int, port_ids: list, st: LdtState, n_bound: int):
        self.my_id = my_id
        self.port_ids = port_ids  # port a holds neighbor id port_ids[a-1]
        self.st = st
        self.n_bound = n_bound
        self.sched = transmission_schedule(st.depth, n_bound, st.is_root, 1)
        id_to_port = {pid: a + 1 for a, pid in enumerate(port_ids)}
        self.parent_port = None if st.parent_id is None else id_to_port[st.parent_id]
        self.child_ports = [id_to_port[c] for c in st.children_ids]

    def _plan(self, rounds: list) -> list:
        return sorted(set(r for r in rounds if r is not None))

    def _advance(self, rnd: int, plan: list, final: Action) -> Action:
        nxt = [r for r in plan if r > rnd]
        if nxt:
            return Action.wake_at(nxt[0], sends=final.sends)
        return final


class _BroadcastProgram(_TreeProgram):
    def __init__(self, my_id, port_ids, st, n_bound, message):
        super().__init__(my_id, port_ids, st, n_bound)
        self.message = message if st.is_root else None
        rounds = []
        if not st.is_root:
            rounds.append(self.sched.down_receive)
        if self.child_ports:
            rounds.append(self.sched.down_send)
        self.plan = self._plan(rounds)

    def _drain(self, inbox):
        for _, _, payload in inbox:
            if payload[0] == T.BCAST:
                self.message = payload[1]

    def step(self, rnd, inbox):
        self._drain(inbox)
        if rnd == 0:
            if not self.plan:  # lone root holds its own message
                return Action.halt(output=self.message)
            return Action.wake_at(self.plan[0])
        sends = []
        if rnd == self.sched.down_send and self.child_ports:
            sends = [(p, (T.BCAST, self.message)) for p in self.child_ports]
        act = Action.halt(output=self.message, sends=sends)
        if rnd == self.plan[-1] and rnd == self.sched.down_receive:
            # the message lands at the end of this round; read it while halting
            return Action.halt_then(
                lambda late: next(
                    (pl[1] for _, _, pl in late if pl[0] == T.BCAST), self.message
                ),
                sends=sends,
            )
        return self._advance(rnd, self.plan, act)


class _UpcastMinProgram(_TreeProgram):
    def __init__(self, my_id, port_ids, st, n_bound, value):
        super().__init__(my_id, port_ids, st, n_bound)
        self.value = value
        rounds = []
        if self.child_ports:
            rounds.append(self.sched.up_receive)
        if not st.is_root:
            rounds.append(self.sched.up_send)
        self.plan = self._plan(rounds)

    def _fold(self, inbox):
        for _, _, payload in inbox:
            if payload[0] == T.VAL_UP and payload[1] < self.value:
                self.value = payload[1]

    def step(self, rnd, inbox):
        self._fold(inbox)
        if rnd == 0:
            if not self.plan:
                return Action.halt(output=self.value)
            return Action.wake_at(self.plan[0])
        sends = []
        if rnd == self.sched.up_send and not self.st.is_root:
            sends = [(self.parent_port, (T.VAL_UP, self.value))]
        if rnd == self.plan[-1]:
            if self.st.is_root:
                # children's values land at the end of the Up-Receive round
                def fin(late, _self=self):
                    _self._fold(late)
                    return _self.value

                return Action.halt_then(fin, sends=sends)
            return Action.halt(output=None, sends=sends)
        return self._advance(rnd, self.plan, Action.halt(output=None, sends=sends))


class _TransmitAdjacentProgram(_TreeProgram):
    def __init__(self, my_id, port_ids, st, n_bound, message):
        super().__init__(my_id, port_ids, st, n_bound)
        self.message = message

    def step(self, rnd, inbox):
        if rnd == 0:
            return Action.wake_at(self.sched.side)
        sends = []
        if self.message is not None:
            sends = [
                (a + 1, (T.ADJ, self.st.root_id, self.message))
                for a in range(len(self.port_ids))
            ]

        def fin(late, _self=self):
            return sorted(
                (port, pl[1], pl[2])
                for _, port, pl in late
                if pl[0] == T.ADJ and pl[1] != _self.st.root_id
            )

        return Action.halt_then(fin, sends=sends)


class _RankingProgram(_TreeProgram):
    def __init__(self, my_id, port_ids, st, n_bound):
        super().__init__(my_id, port_ids, st, n_bound)
        B = block_length(n_bound)
        self.up = transmission_schedule(st.depth, n_bound, st.is_root, 1)
        self.down = transmission_schedule(st.depth, n_bound, st.is_root, 1 + B)
        self.csize: dict = {}
        self.x = 0 if st.is_root else None
        self.size = None
        rounds = []
        if self.child_ports:
            rounds += [self.up.up_receive, self.down.down_send]
        if not st.is_root:
            rounds += [self.up.up_send, self.down.down_receive]
        else:
            rounds.append(self.down.down_send)
        self.plan = self._plan(rounds)

    def _drain(self, inbox):
        for _, port, payload in inbox:
            if payload[0] == T.RANK_UP:
                self.csize[port] = payload[1]
            elif payload[0] == T.RANK_DN:
                self.x, self.size = payload[1], payload[2]

    def _ordered_children(self):
        return sorted(self.child_ports, key=lambda p: self.port_ids[p - 1])

    def _rank(self):
        kids = self._ordered_children()
        first = self.csize[kids[0]] if kids else 0
        return self.x + first + 1

    def _down_sends(self):
        kids = self._ordered_children()
        sends = []
        offset = self.x
        for i, p in enumerate(kids):
            val = offset if i == 0 else None
            if i > 0:
                val = self.x + 1 + sum(self.csize[q] for q in kids[:i])
            sends.append((p, (T.RANK_DN, val, self.size)))
        return sends

    def step(self, rnd, inbox):
        self._drain(inbox)
        if rnd == 0:
            if not self.plan:
                return Action.halt(output={"rank": 1, "size": 1})
            return Action.wake_at(self.plan[0])
        sends = []
        if rnd == self.up.up_send and not self.st.is_root:
            total = 1 + sum(self.csize.values())
            sends = [(self.parent_port, (T.RANK_UP, total))]
        elif rnd == self.down.down_send:
            if self.st.is_root:
                self.size = 1 + sum(self.csize.values())
            sends = self._down_sends()
        if rnd == self.plan[-1]:
            if rnd == self.down.down_receive:
                # leaf: offset arrives at the end of this round
                def fin(late, _self=self):
                    _self._drain(late)
                    return {"rank": _self._rank(), "size": _self.size}

                return Action.halt_then(fin, sends=sends)
            return Action.halt(
                output={"rank": self._rank(), "size": self.size}, sends=sends
            )
        return self._advance(rnd, self.plan, Action.halt(output=None, sends=sends))


def _port_ids(graph: Graph, ids: list, v: int) -> list:
    return [ids[u] for u, _ in graph.ports[v]]


def _run(graph: Graph, ids: list, make_program, config: RunConfig):
    programs = [make_program(v) for v in range(graph.n)]
    trace = run_simulation(graph, programs, config)
    return trace.outputs, trace


def fragment_broadcast(graph, ids, states, message, config, n_bound=None):
    """Root's message to every tree node; returns (per-node message, trace)."""
    nb = n_bound or max(st.n_bound for st in states.values()) or graph.n
    return _run(
        graph,
        ids,
        lambda v: _BroadcastProgram(
            ids[v],
            _port_ids(graph, ids, v),
            states[v],
            nb,
            message if states[v].is_root else None,
        ),
        config,
    )


def ldt_broadcast(graph, ids, states, message, config, n_bound=None):
    """Broadcast over a labeled distance tree; same wave as
    fragment_broadcast."""
    return fragment_broadcast(graph, ids, states, message, config, n_bound)


def upcast_min(graph, ids, states, values, config, n_bound=None):
    """Minimum of per-node integer values, delivered to the root; returns
    (per-node output with the min at the root, trace)."""
    nb = n_bound or max(st.n_bound for st in states.values()) or graph.n
    return _run(
        graph,
        ids,
        lambda v: _UpcastMinProgram(
            ids[v], _port_ids(graph, ids, v), states[v], nb, values[v]
        ),
        config,
    )


def transmit_adjacent(graph, ids, states, messages, config, n_bound=None):
    """Each node's message (if any) to all neighbors in other trees of the
    forest; returns (per-node list of (port, sender_root, message), trace)."""
    nb = n_bound or max(st.n_bound for st in states.values()) or graph.n
    return _run(
        graph,
        ids,
        lambda v: _TransmitAdjacentProgram(
            ids[v], _port_ids(graph, ids, v), states[v], nb, messages[v]
        ),
        config,
    )


def ldt_ranking(graph, ids, states, config, n_bound=None):
    """Each node's rank in the generalized in-order traversal plus the exact
    tree size; returns (per-node {'rank', 'size'}, trace)."""
    nb = n_bound or max(st.n_bound for st in states.values()) or graph.n
    return _run(
        graph,
        ids,
        lambda v: _RankingProgram(ids[v], _port_ids(graph, ids, v), states[v], nb),
        config,
    )
