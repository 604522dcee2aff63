"""MIS node programs: greedy over ids, greedy over a random order within
each component, the batched sub-logarithmic-awake algorithm, and an
always-awake randomized baseline.

States are {undecided, inMIS, notinMIS}; `failed` is an artifact extension
reached only when a node aborts (awake budget exhausted, or a component
outgrew its public bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

from .engine import (
    Action,
    Graph,
    NodeProgram,
    RunConfig,
    TAG_BITS,
    default_bit_budget,
    run_simulation,
)
from .graphs import IdAssignment, default_id_bound
from .ldt.construct import (
    FAILED,
    IN_MIS,
    NOT_IN_MIS,
    STATE_NAMES,
    UNDECIDED,
    LdtMisPipeline,
    PipelinePlan,
    log_star,
)
from .ldt.msg import T
from .vtree import wake_schedule

MIS_STATES = ("undecided", "inMIS", "notinMIS", "failed")


# --------------------------------------------------------------------- VT-MIS


class VtMisProgram(NodeProgram):
    """Greedy MIS over unique ids in [1, I], one id per round, with wake
    rounds chosen by the virtual-tree communication sets.

    Round r of the schedule is engine round r - 1, so the mandatory
    all-awake round 0 doubles as schedule round 1 and every node is awake
    at most ceil(log2 I) + 1 times.
    """

    def __init__(self, my_id: int, id_bound: int):
        self.my_id = my_id
        self.id_bound = id_bound
        self.state = UNDECIDED
        self.join_pending = False
        self.rounds = [r - 1 for r in wake_schedule(my_id, id_bound)]
        self.attend = set(self.rounds)
        self.ptr = 0

    def step(self, rnd, inbox):
        for _, _, payload in inbox:
            if payload[0] == T.STATE and payload[1] == IN_MIS and self.state == UNDECIDED:
                self.state = NOT_IN_MIS
        if self.join_pending:
            if self.state == UNDECIDED:
                self.state = IN_MIS
            self.join_pending = False

        sends = []
        if rnd in self.attend:
            sends = [(p, (T.STATE, self.state)) for p in range(1, self.ctx.degree + 1)]
            if rnd == self.my_id - 1 and self.state == UNDECIDED:
                self.join_pending = True

        while self.ptr < len(self.rounds) and self.rounds[self.ptr] <= rnd:
            self.ptr += 1
        if self.ptr < len(self.rounds):
            return Action.wake_at(self.rounds[self.ptr], sends=sends)
        if self.join_pending:
            return Action.halt_then(self._finalize, sends=sends)
        return Action.halt(output=STATE_NAMES[self.state], sends=sends)

    def _finalize(self, late):
        for _, _, payload in late:
            if payload[0] == T.STATE and payload[1] == IN_MIS and self.state == UNDECIDED:
                self.state = NOT_IN_MIS
        if self.state == UNDECIDED:
            self.state = IN_MIS
        return STATE_NAMES[self.state]


def vt_mis(graph: Graph, ids: IdAssignment, config: RunConfig):
    """Run the id-ordered greedy MIS; returns (per-node state names, trace)."""
    programs = [VtMisProgram(ids.ids[v], ids.bound) for v in range(graph.n)]
    trace = run_simulation(graph, programs, config)
    return list(trace.outputs), trace


# --------------------------------------------------------- LDT-MIS (round-eff)


def ldt_mis_round(graph: Graph, ids: IdAssignment, n_bound: int, config: RunConfig):
    """Greedy MIS over a uniformly random order of each connected component:
    tree construction, ranking, permutation broadcast, then the id-ordered
    pass over the renamed ids.  Returns (per-node state names, trace)."""
    from .ldt.construct import ldt_construct_round

    _, outputs, trace = ldt_construct_round(graph, ids, n_bound, config, with_mis=True)
    states = [
        out["state"] if isinstance(out, dict) else "failed" for out in outputs
    ]
    return states, trace


# ------------------------------------------------------------------ Awake-MIS

# pinned constants: the phase length and awake budget formulas scale the
# measured pipeline layout; asserted sufficient at parameter-derivation time
PHASE_LEN_FACTOR = 48
AWAKE_CAP_FACTOR = 96


@dataclass
class AwakeMisParams:
    """Shared parameters of the batched algorithm, all derived from N."""

    N: int
    ell: int
    delta_p: int
    probs: list
    component_bound: int
    phase_len: int
    awake_cap: int
    id_bound: int
    bit_budget: int
    plan: PipelinePlan = field(repr=False, default=None)

    @property
    def num_batches(self) -> int:
        return 2 * self.ell * self.delta_p

    @classmethod
    def derive(cls, N: int) -> "AwakeMisParams":
        if N < 8:
            raise ValueError("need N >= 8 so id pairs fit the message budget")
        delta_p = math.ceil(9 * math.log(N ** 4))
        log2N = math.log2(N)

        def raw(i):
            return 10.0 * (2 ** i) * log2N / N

        ell, acc = 1, 0.0
        while acc + raw(ell) <= 0.5:
            acc += raw(ell)
            ell += 1
        probs = [raw(i) for i in range(1, ell)] + [1.0 - acc]

        component_bound = math.ceil(24 * math.log(N))
        id_bound = default_id_bound(N)
        bit_budget = default_bit_budget(N)
        plan = PipelinePlan(component_bound, id_bound, bit_budget, with_epilogue=True)
        phase_len = math.ceil(
            PHASE_LEN_FACTOR
            * component_bound
            * max(1, (component_bound - 1).bit_length())
            * log_star(id_bound)
        )
        if phase_len < plan.total_rounds:
            raise ValueError(
                f"phase length factor too small: {phase_len} < {plan.total_rounds}"
            )
        awake_cap = math.ceil(
            AWAKE_CAP_FACTOR * math.log2(math.log2(N)) * log_star(N)
        )
        return cls(
            N=N,
            ell=ell,
            delta_p=delta_p,
            probs=probs,
            component_bound=component_bound,
            phase_len=phase_len,
            awake_cap=awake_cap,
            id_bound=id_bound,
            bit_budget=bit_budget,
            plan=plan,
        )


@dataclass(frozen=True)
class BatchAssignment:
    """A node's batch pair and its order-preserving linearization."""

    i: int
    j: int
    g: int


def sample_batch(params: AwakeMisParams, rng) -> BatchAssignment:
    """Draw (i, j): i from the doubling distribution, j uniform."""
    u = rng.random()
    acc = 0.0
    i = params.ell
    for idx, p in enumerate(params.probs, start=1):
        acc += p
        if u < acc:
            i = idx
            break
    j = rng.randint(1, 2 * params.delta_p)
    g = (i - 1) * 2 * params.delta_p + j
    return BatchAssignment(i=i, j=j, g=g)


class AwakeMisProgram(NodeProgram):
    """One node of the batched algorithm.

    Every phase starts with one communication round attended per the
    virtual-tree sets over batch numbers; the rest of the phase belongs to
    the batch whose turn it is, which runs the random-order MIS pipeline on
    its still-undecided members.
    """

    def __init__(self, my_id: int, params: AwakeMisParams):
        self.my_id = my_id
        self.params = params
        self.state = UNDECIDED
        self.decided_round = None
        self.pl = None
        self.pl_done = False
        self.batch = None
        self.comm_rounds = []
        self.comm_ptr = 0
        self.discovery = None

    def setup(self, ctx):
        self.ctx = ctx
        params = self.params
        self.block = 1 + params.phase_len
        self.batch = sample_batch(params, ctx.rng)
        G = params.num_batches
        self.comm_rounds = [
            1 + (p - 1) * self.block for p in wake_schedule(self.batch.g, G)
        ]
        self.discovery = 1 + (self.batch.g - 1) * self.block + 1
        self.pl = LdtMisPipeline(
            params.plan, self.my_id, ctx.degree, ctx.rng, construct_only=False
        )

    def _is_comm(self, rnd):
        return rnd >= 1 and (rnd - 1) % self.block == 0

    def step(self, rnd, inbox):
        for r, port, payload in inbox:
            if self._is_comm(r):
                if payload[0] == T.STATE and payload[1] == IN_MIS and self.state == UNDECIDED:
                    self.state = NOT_IN_MIS
                    self.decided_round = r
            else:
                self.pl.hear(r, port, payload)
        self.pl.settle(rnd)
        self._sync_from_pipeline()

        sends = []
        nxt_pl = None
        if rnd == 0:
            pass
        elif self._is_comm(rnd):
            if self.state != UNDECIDED:
                sends = [
                    (p, (T.STATE, self.state))
                    for p in range(1, self.ctx.degree + 1)
                ]
        elif rnd == self.discovery and not self.pl_done:
            if self.state == UNDECIDED:
                self.pl.start(self.discovery)
                nxt_pl = self.pl.on_step(rnd, sends)
                self._sync_from_pipeline()
            else:
                self.pl_done = True
        elif not self.pl_done and rnd > self.discovery:
            nxt_pl = self.pl.on_step(rnd, sends)
            self._sync_from_pipeline()

        if nxt_pl is None and rnd >= self.discovery:
            self.pl_done = True

        while self.comm_ptr < len(self.comm_rounds) and self.comm_rounds[self.comm_ptr] <= rnd:
            self.comm_ptr += 1
        cands = []
        if self.comm_ptr < len(self.comm_rounds):
            cands.append(self.comm_rounds[self.comm_ptr])
        if nxt_pl is not None:
            cands.append(nxt_pl)
        elif not self.pl_done and rnd < self.discovery:
            cands.append(self.discovery)
        if cands:
            return Action.wake_at(min(cands), sends=sends)
        if self.pl.join_pending:
            return Action.halt_then(self._finalize_factory(rnd), sends=sends)
        return Action.halt(output=self._output(), sends=sends)

    def _sync_from_pipeline(self):
        if self.pl.mis != UNDECIDED and self.state == UNDECIDED:
            self.state = self.pl.mis
            self.decided_round = self.pl.decided_round

    def _finalize_factory(self, rnd):
        def fin(late):
            self.pl.resolve(late, rnd)
            self._sync_from_pipeline()
            return self._output()

        return fin

    def _output(self):
        if self.state == UNDECIDED:
            self.state = FAILED
        return {
            "state": STATE_NAMES[self.state],
            "batch": (self.batch.i, self.batch.j),
            "g": self.batch.g,
            "decided_round": self.decided_round,
            "comm_rounds": self.comm_rounds,
        }


def awake_mis(graph: Graph, ids: IdAssignment, params: AwakeMisParams,
              config: RunConfig):
    """Run the batched algorithm; returns (per-node state names, trace)."""
    programs = [AwakeMisProgram(ids.ids[v], params) for v in range(graph.n)]
    trace = run_simulation(graph, programs, config)
    states = [
        out["state"] if isinstance(out, dict) else str(out) for out in trace.outputs
    ]
    return states, trace


def awake_mis_config(graph: Graph, params: AwakeMisParams, seed: int) -> RunConfig:
    """RunConfig sized for a full batched run with the derived budgets."""
    total = 1 + params.num_batches * (1 + params.phase_len) + 2
    return RunConfig(
        N=params.N,
        bit_budget=params.bit_budget,
        max_rounds=total,
        seed=seed,
        awake_cap=params.awake_cap,
    )


# ----------------------------------------------------------------- baseline


class LubyTag(IntEnum):
    PRIO = 0
    JOINED = 1


class LubyProgram(NodeProgram):
    """Classic synchronized randomized MIS; undecided nodes stay awake every
    round.  Odd rounds exchange fresh priorities, even rounds let strict
    local minima join and announce; retirements happen on hearing a join."""

    def __init__(self):
        self.state = UNDECIDED
        self.my_prio = None

    def setup(self, ctx):
        self.ctx = ctx
        self.prio_bits = ctx.config.bit_budget - TAG_BITS

    def step(self, rnd, inbox):
        prios = []
        joined = False
        for _, _, payload in inbox:
            if payload[0] == LubyTag.PRIO:
                prios.append(payload[1])
            elif payload[0] == LubyTag.JOINED:
                joined = True
        if rnd == 0:
            return Action.wake_at(1)
        if rnd % 2 == 1:
            if joined:
                return Action.halt(output="notinMIS")
            self.my_prio = self.ctx.rng.getrandbits(self.prio_bits)
            sends = [
                (p, (LubyTag.PRIO, self.my_prio))
                for p in range(1, self.ctx.degree + 1)
            ]
            return Action.wake_at(rnd + 1, sends=sends)
        # even round: decide on the priorities sent last round
        if all(self.my_prio < v for v in prios):
            sends = [(p, (LubyTag.JOINED,)) for p in range(1, self.ctx.degree + 1)]
            return Action.halt(output="inMIS", sends=sends)
        return Action.wake_at(rnd + 1)


def luby_baseline(graph: Graph, ids: IdAssignment | None, config: RunConfig):
    """Run the baseline; returns (per-node state names, trace).  Ids are
    accepted for signature parity but unused."""
    programs = [LubyProgram() for _ in range(graph.n)]
    trace = run_simulation(graph, programs, config)
    return list(trace.outputs), trace
