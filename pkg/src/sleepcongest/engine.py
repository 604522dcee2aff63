"""Synchronous-round simulator for the sleeping model with CONGEST budgets.

Execution semantics per round:

1. every node whose scheduled wake round equals the current round is stepped;
2. outbound messages from stepped nodes are collected and length-checked;
3. a message from u's port a is delivered to the peer (v, b) in the same
   round if and only if v was also stepped this round, otherwise it is lost.

A step sees the messages that arrived while the node was awake *before* this
step (compute happens before receive within a round), so deliveries of round
t become visible at the node's next step after t.  A node that halts may
instead hand back a finalizer, which the engine evaluates on the halting
round's deliveries; this models a node that terminates at the end of a round,
after its final receive.

Round 0 is special: all nodes are awake (and stepped) regardless of any
schedule, matching the model's all-awake start.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Callable, Iterable, Optional

TAG_BITS = 5  # fixed width charged for an IntEnum message tag


class Bits:
    """An explicit bit string payload: `width` bits holding integer `value`."""

    __slots__ = ("value", "width")

    def __init__(self, value: int, width: int):
        if width < 0 or value < 0 or value.bit_length() > width:
            raise ValueError(f"value {value} does not fit in {width} bits")
        self.value = value
        self.width = width

    def __repr__(self) -> str:
        return f"Bits({self.value}, width={self.width})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Bits) and (self.value, self.width) == (other.value, other.width)


def message_bits(payload: Any) -> int:
    """Serialized length of a payload in bits.

    Convention: enum tags cost TAG_BITS; plain non-negative ints cost their
    bit length (fields are width-by-context, framing-free, as in standard
    CONGEST accounting); strings and bytes cost 8 bits per unit; tuples and
    lists cost the sum of their parts.
    """
    if isinstance(payload, Bits):
        return payload.width
    if isinstance(payload, IntEnum):
        return TAG_BITS
    if isinstance(payload, bool):
        return 1
    if isinstance(payload, int):
        if payload < 0:
            raise ValueError("negative ints have no canonical encoding; use Bits")
        return max(1, payload.bit_length())
    if isinstance(payload, str):
        return 8 * len(payload)
    if isinstance(payload, (bytes, bytearray)):
        return 8 * len(payload)
    if isinstance(payload, (tuple, list)):
        return sum(message_bits(x) for x in payload)
    raise TypeError(f"unsupported message payload type: {type(payload)!r}")


@dataclass
class Graph:
    """Undirected port-numbered network.

    ports[u][a-1] == (v, b) means u's port a is wired to v's port b; port
    numbers at each node are 1..degree.
    """

    n: int
    ports: list  # list[list[tuple[int, int]]]

    def degree(self, u: int) -> int:
        return len(self.ports[u])

    def peer(self, u: int, port: int) -> tuple[int, int]:
        return self.ports[u][port - 1]

    def neighbors(self, u: int) -> list:
        return [v for v, _ in self.ports[u]]

    def edges(self) -> list:
        out = []
        for u in range(self.n):
            for v, _ in self.ports[u]:
                if u < v:
                    out.append((u, v))
        return out

    def validate(self) -> None:
        if self.n <= 0:
            raise ValueError("graph must have at least one node")
        if len(self.ports) != self.n:
            raise ValueError("ports table length differs from node count")
        for u in range(self.n):
            nbrs = []
            for a, (v, b) in enumerate(self.ports[u], start=1):
                if v == u:
                    raise ValueError(f"self-loop at node {u}")
                if not 0 <= v < self.n:
                    raise ValueError(f"port {a} of node {u} points outside the graph")
                if not 1 <= b <= len(self.ports[v]) or self.ports[v][b - 1] != (u, a):
                    raise ValueError(
                        f"port map is not an involution at ({u},{a}) -> ({v},{b})"
                    )
                nbrs.append(v)
            if len(set(nbrs)) != len(nbrs):
                raise ValueError(f"duplicate edges at node {u}")


@dataclass
class RunConfig:
    """Public run parameters every node knows.

    N is the shared polynomial upper bound on the node count; bit_budget is
    the maximum message size in bits; awake_cap, when set, force-halts any
    node that tries to stay awake beyond the budget.
    """

    N: int
    bit_budget: int
    max_rounds: int
    seed: int = 0
    awake_cap: Optional[int] = None

    def validate(self, graph: Graph) -> None:
        if self.N < graph.n:
            raise ValueError(f"N={self.N} below node count {graph.n}")
        congest_min = max(1, (self.N - 1).bit_length())
        if self.bit_budget < congest_min:
            raise ValueError(
                f"bit_budget={self.bit_budget} below CONGEST minimum {congest_min}"
            )
        if self.max_rounds <= 0:
            raise ValueError("max_rounds must be positive")


def default_bit_budget(N: int) -> int:
    """The budget used throughout: ceil(8 * log2 N) bits per message."""
    import math

    return max(8, int(-(-8 * math.log2(N) // 1)))


class Action:
    """What a step decided: messages to send plus a wake/halt directive."""

    __slots__ = ("sends", "wake", "halted", "output", "finalize")

    def __init__(self, sends=(), wake=None, halted=False, output=None, finalize=None):
        self.sends = sends
        self.wake = wake
        self.halted = halted
        self.output = output
        self.finalize = finalize

    @classmethod
    def wake_at(cls, rnd: int, sends=()) -> "Action":
        return cls(sends=sends, wake=rnd)

    @classmethod
    def next_round(cls, sends=()) -> "Action":
        return cls(sends=sends)  # engine default: awake again next round

    @classmethod
    def halt(cls, output=None, sends=()) -> "Action":
        return cls(sends=sends, halted=True, output=output)

    @classmethod
    def halt_then(cls, finalize: Callable, sends=()) -> "Action":
        """Halt, with the output computed from this round's deliveries."""
        return cls(sends=sends, halted=True, finalize=finalize)


@dataclass
class NodeContext:
    """Per-node view handed to a program before round 0."""

    node: int
    degree: int
    rng: random.Random
    config: RunConfig


class NodeProgram:
    """Base class for node programs.

    Subclasses implement step(rnd, inbox) -> Action.  inbox is a list of
    (arrival_round, port, payload) covering everything delivered since the
    previous step.
    """

    def setup(self, ctx: NodeContext) -> None:
        self.ctx = ctx

    def step(self, rnd: int, inbox: list) -> Action:
        raise NotImplementedError


def node_rng(seed: int, node: int) -> random.Random:
    """Deterministic per-node stream derived from (run seed, node index)."""
    return random.Random(((seed & 0xFFFFFFFFFFFFFFFF) << 48) | (node & 0xFFFFFFFFFFFF))


@dataclass
class ExecutionTrace:
    """Per-run record of awake rounds, traffic, outputs and violations."""

    n: int
    awake_rounds: list  # list[list[int]]
    halt_round: list  # list[Optional[int]]
    outputs: list
    sent: list
    received: list
    max_message_bits: int
    total_rounds: int
    violations: list = field(default_factory=list)
    complete: bool = True

    def awake_counts(self) -> list:
        return [len(r) for r in self.awake_rounds]

    def max_awake(self) -> int:
        return max(len(r) for r in self.awake_rounds)

    def avg_awake(self) -> float:
        return sum(len(r) for r in self.awake_rounds) / self.n

    def to_json(self) -> str:
        doc = {
            "nodes": [
                {
                    "awake_rounds": self.awake_rounds[v],
                    "halt_round": self.halt_round[v],
                    "output": _jsonable(self.outputs[v]),
                    "sent": self.sent[v],
                    "received": self.received[v],
                }
                for v in range(self.n)
            ],
            "total_rounds": self.total_rounds,
            "max_message_bits": self.max_message_bits,
            "violations": self.violations,
            "complete": self.complete,
        }
        return json.dumps(doc, indent=2)


def _jsonable(x):
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    if isinstance(x, (list, tuple)):
        return [_jsonable(e) for e in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, set):
        return sorted(_jsonable(e) for e in x)
    return repr(x)


def run_simulation(graph: Graph, programs: list, config: RunConfig) -> ExecutionTrace:
    """Run node programs over the graph until all halt or max_rounds elapse.

    Deterministic given (graph, programs, config): nodes are stepped in index
    order, per-node randomness comes from node_rng(config.seed, v), and
    message delivery follows the sleeping rule exactly.
    """
    n = graph.n
    if len(programs) != n:
        raise ValueError(f"need {n} programs, got {len(programs)}")
    config.validate(graph)

    for v in range(n):
        programs[v].setup(
            NodeContext(
                node=v,
                degree=graph.degree(v),
                rng=node_rng(config.seed, v),
                config=config,
            )
        )

    ports = graph.ports
    budget = config.bit_budget
    cap = config.awake_cap

    pending: list = [[] for _ in range(n)]
    awake_rounds: list = [[] for _ in range(n)]
    halt_round: list = [None] * n
    outputs: list = [None] * n
    sent = [0] * n
    received = [0] * n
    violations: list = []
    max_bits = 0

    halted = [False] * n
    in_step = [False] * n
    heap = list(range(n))  # round 0: all nodes, already index-sorted
    heap = [(0, v) for v in heap]
    live = n
    total_rounds = 0
    complete = True

    while heap:
        rnd = heap[0][0]
        if rnd >= config.max_rounds:
            complete = False
            break
        stepped = []
        while heap and heap[0][0] == rnd:
            stepped.append(heapq.heappop(heap)[1])
        stepped.sort()
        for v in stepped:
            in_step[v] = True

        actions = []
        for v in stepped:
            inbox = pending[v]
            pending[v] = []
            awake_rounds[v].append(rnd)
            actions.append(programs[v].step(rnd, inbox))

        # deliveries: only stepped peers receive; oversize messages drop
        for idx, v in enumerate(stepped):
            for port, payload in actions[idx].sends:
                bits = message_bits(payload)
                if bits > budget:
                    violations.append(
                        {"kind": "bit_budget", "node": v, "round": rnd, "bits": bits}
                    )
                    continue
                if bits > max_bits:
                    max_bits = bits
                sent[v] += 1
                u, uport = ports[v][port - 1]
                if in_step[u]:
                    pending[u].append((rnd, uport, payload))
                    received[u] += 1

        for idx, v in enumerate(stepped):
            in_step[v] = False
            act = actions[idx]
            if act.halted:
                halted[v] = True
                halt_round[v] = rnd
                if act.finalize is not None:
                    outputs[v] = act.finalize(pending[v])
                    pending[v] = []
                else:
                    outputs[v] = act.output
                live -= 1
                continue
            wake = rnd + 1 if act.wake is None else act.wake
            if wake <= rnd:
                raise ValueError(
                    f"node {v} scheduled wake round {wake} not after round {rnd}"
                )
            if cap is not None and len(awake_rounds[v]) >= cap:
                # awake budget exhausted: the node may not wake again
                violations.append(
                    {"kind": "awake_cap", "node": v, "round": rnd, "awake": len(awake_rounds[v])}
                )
                halted[v] = True
                halt_round[v] = rnd
                outputs[v] = "failed"
                live -= 1
                continue
            heapq.heappush(heap, (wake, v))
        total_rounds = rnd + 1

    if live > 0:
        complete = False

    return ExecutionTrace(
        n=n,
        awake_rounds=awake_rounds,
        halt_round=halt_round,
        outputs=outputs,
        sent=sent,
        received=received,
        max_message_bits=max_bits,
        total_rounds=total_rounds,
        violations=violations,
        complete=complete,
    )


def worst_case_awake(trace: ExecutionTrace) -> int:
    """max over nodes of the number of awake rounds; requires a complete run."""
    if not trace.complete:
        raise ValueError("trace is incomplete; worst-case awake is undefined")
    return trace.max_awake()
