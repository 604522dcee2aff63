"""Oracles, validity checking, statistical experiments and run metrics.

The oracles here are sequential and central; they never touch the
simulator, which is what makes them usable as independent ground truth for
the distributed programs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import statistics
from dataclasses import dataclass, field, asdict

from .engine import Graph, RunConfig, default_bit_budget
from .graphs import (
    IdAssignment,
    assign_random_ids,
    connected_components,
    default_id_bound,
    gen_gnp,
    gen_structured,
    random_connected,
)
from . import mis as mis_mod


# ------------------------------------------------------------------- oracles


def sequential_lfmis(graph: Graph, ordering) -> set:
    """Greedy scan: add a node iff no earlier-added neighbor.

    The result is the lexicographically first MIS of the given ordering.
    """
    ordering = list(ordering)
    if sorted(ordering) != list(range(graph.n)):
        raise ValueError("ordering must be a permutation of the nodes")
    out = set()
    for v in ordering:
        if not any(u in out for u, _ in graph.ports[v]):
            out.add(v)
    return out


@dataclass
class MisCheck:
    valid: bool
    undecided: list = field(default_factory=list)
    failed: list = field(default_factory=list)
    independence_violations: list = field(default_factory=list)
    maximality_violations: list = field(default_factory=list)

    def summary(self) -> str:
        if self.valid:
            return "valid"
        return (
            f"invalid: undecided={self.undecided} failed={self.failed} "
            f"independence={self.independence_violations} "
            f"maximality={self.maximality_violations}"
        )


def check_mis(graph: Graph, states) -> MisCheck:
    """Validity per the MIS definition: the inMIS set is independent and
    every notinMIS node has an inMIS neighbor; undecided/failed nodes make
    the outcome invalid."""
    undecided = [v for v in range(graph.n) if states[v] == "undecided"]
    failed = [v for v in range(graph.n) if states[v] == "failed"]
    in_set = {v for v in range(graph.n) if states[v] == "inMIS"}
    indep = []
    for v in in_set:
        for u, _ in graph.ports[v]:
            if u in in_set and v < u:
                indep.append((v, u))
    maxim = []
    for v in range(graph.n):
        if states[v] == "notinMIS" and not any(u in in_set for u, _ in graph.ports[v]):
            maxim.append(v)
    ok = not (undecided or failed or indep or maxim)
    return MisCheck(ok, undecided, failed, indep, maxim)


def component_sizes(graph: Graph, subset) -> list:
    """Multiset (sorted list) of connected component sizes of the induced
    subgraph."""
    return sorted(len(c) for c in connected_components(graph, subset))


# -------------------------------------------------------------- experiments


@dataclass
class ExperimentResult:
    name: str
    trials: int
    passes: int
    threshold: float
    worst: float
    seed: int

    @property
    def pass_rate(self) -> float:
        return self.passes / self.trials if self.trials else 1.0


def residual_sparsity_experiment(graph: Graph, t: int, t_prime: int,
                                 eps: float, trials: int, seed: int = 0) -> ExperimentResult:
    """Empirical check of the residual-degree bound.

    Per trial: draw a uniform node order, greedily solve the first t nodes,
    then measure the maximum degree of the subgraph induced by the first
    t' nodes that are neither chosen nor dominated.  A trial passes when
    that degree is at most (t'/t) * ln(n/eps).
    """
    n = graph.n
    if not 1 <= t < t_prime <= n:
        raise ValueError("need 1 <= t < t' <= n")
    nbrs = [set(graph.neighbors(v)) for v in range(n)]
    bound = (t_prime / t) * math.log(n / eps)
    rng = random.Random(seed)
    passes = 0
    worst = 0
    for _ in range(trials):
        order = list(range(n))
        rng.shuffle(order)
        chosen = set()
        for v in order[:t]:
            if not nbrs[v] & chosen:
                chosen.add(v)
        dominated = set(chosen)
        for v in chosen:
            dominated |= nbrs[v]
        resid = [v for v in order[:t_prime] if v not in dominated]
        rset = set(resid)
        deg = max((len(nbrs[v] & rset) for v in resid), default=0)
        worst = max(worst, deg)
        if deg <= bound:
            passes += 1
    return ExperimentResult("residual_sparsity", trials, passes, bound, worst, seed)


def shattering_experiment(graph: Graph, eps: float, trials: int,
                          seed: int = 0) -> ExperimentResult:
    """Empirical check of the shattering bound.

    Per trial: assign each node one of 2*Delta classes uniformly and
    measure the largest connected component of the designated class
    (class 1); a trial passes when it is at most 6 * ln(n/eps).
    """
    n = graph.n
    delta = max((graph.degree(v) for v in range(n)), default=0)
    if delta < 1:
        raise ValueError("graph needs maximum degree >= 1")
    classes = 2 * delta
    bound = 6 * math.log(n / eps)
    rng = random.Random(seed)
    passes = 0
    worst = 0
    for _ in range(trials):
        chosen = [v for v in range(n) if rng.randrange(classes) == 0]
        sizes = component_sizes(graph, chosen)
        big = sizes[-1] if sizes else 0
        worst = max(worst, big)
        if big <= bound:
            passes += 1
    return ExperimentResult("shattering", trials, passes, bound, worst, seed)


# ------------------------------------------------------------------ metrics


CSV_COLUMNS = [
    "algorithm", "graph", "n", "seed", "valid", "failed_count",
    "max_awake", "avg_awake", "total_rounds", "max_message_bits",
]


@dataclass
class RunMetrics:
    algorithm: str
    graph: str
    n: int
    seed: int
    valid: bool
    failed_count: int
    max_awake: int
    avg_awake: float
    total_rounds: int
    max_message_bits: int

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def metrics_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for m in rows:
        writer.writerow(m.row())
    return buf.getvalue()


def metrics_to_json(rows) -> str:
    return json.dumps([asdict(m) for m in rows], indent=2)


# --------------------------------------------------------------- run driver


ALGORITHMS = ("vt_mis", "ldt_mis_round", "awake_mis", "luby")


def make_graph(kind: str, n: int, p: float, seed: int) -> Graph:
    if kind == "gnp":
        return gen_gnp(n, p, seed)
    if kind == "connected":
        return random_connected(n, p, seed)
    return gen_structured(kind, n, seed)


def run_algorithm(algo: str, graph: Graph, seed: int, graph_desc: str = "",
                  id_bound: int | None = None, n_bound: int | None = None):
    """Run one algorithm end to end; returns (states, trace, RunMetrics)."""
    n = graph.n
    N = max(n, 8)
    budget = default_bit_budget(N)
    if algo == "vt_mis":
        bound = id_bound or default_id_bound(N)
        ids = assign_random_ids(n, bound, seed ^ 0x5EED)
        config = RunConfig(N=N, bit_budget=budget, max_rounds=bound + 2, seed=seed)
        states, trace = mis_mod.vt_mis(graph, ids, config)
    elif algo == "ldt_mis_round":
        bound = id_bound or default_id_bound(N)
        nb = n_bound or n
        ids = assign_random_ids(n, bound, seed ^ 0x5EED)
        from .ldt.construct import PipelinePlan

        plan = PipelinePlan(nb, bound, budget, with_epilogue=True)
        config = RunConfig(
            N=N, bit_budget=budget, max_rounds=plan.total_rounds + 2, seed=seed
        )
        states, trace = mis_mod.ldt_mis_round(graph, ids, nb, config)
    elif algo == "awake_mis":
        params = mis_mod.AwakeMisParams.derive(N)
        ids = assign_random_ids(n, params.id_bound, seed ^ 0x5EED)
        config = mis_mod.awake_mis_config(graph, params, seed)
        states, trace = mis_mod.awake_mis(graph, ids, params, config)
    elif algo == "luby":
        config = RunConfig(
            N=N, bit_budget=budget,
            max_rounds=max(64, 40 * max(1, math.ceil(math.log2(max(2, n))))),
            seed=seed,
        )
        states, trace = mis_mod.luby_baseline(graph, None, config)
    else:
        raise ValueError(f"unknown algorithm {algo!r}; pick from {ALGORITHMS}")

    check = check_mis(graph, states)
    metrics = RunMetrics(
        algorithm=algo,
        graph=graph_desc or "custom",
        n=n,
        seed=seed,
        valid=check.valid,
        failed_count=len(check.failed),
        max_awake=trace.max_awake(),
        avg_awake=round(trace.avg_awake(), 3),
        total_rounds=trace.total_rounds,
        max_message_bits=trace.max_message_bits,
    )
    return states, trace, metrics


def scaling_study(algo: str, kind: str, p_of_n, sizes, seeds_per_size: int,
                  base_seed: int = 0, workers: int = 1):
    """Medians and maxima of awake/round metrics across sizes.

    p_of_n maps n to the edge probability for gnp-style families.  Returns
    a list of row dicts, one per size, plus the per-run metrics.
    """
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    jobs = []
    for n in sizes:
        for s in range(seeds_per_size):
            jobs.append((algo, kind, n, p_of_n(n), base_seed + s))
    if workers > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=workers) as ex:
            all_metrics = list(ex.map(_scaling_job, jobs, chunksize=4))
    else:
        all_metrics = [_scaling_job(j) for j in jobs]

    rows = []
    for n in sizes:
        ms = [m for m in all_metrics if m.n == n]
        rows.append({
            "n": n,
            "runs": len(ms),
            "valid": sum(1 for m in ms if m.valid),
            "median_max_awake": statistics.median(m.max_awake for m in ms),
            "max_max_awake": max(m.max_awake for m in ms),
            "median_rounds": statistics.median(m.total_rounds for m in ms),
            "max_message_bits": max(m.max_message_bits for m in ms),
        })
    return rows, all_metrics


def _scaling_job(job):
    algo, kind, n, p, seed = job
    graph = make_graph(kind, n, p, seed * 7919 + 13)
    desc = f"{kind}(n={n},p={p:.5g})" if kind in ("gnp", "connected") else f"{kind}(n={n})"
    _, _, metrics = run_algorithm(algo, graph, seed, graph_desc=desc)
    return metrics
