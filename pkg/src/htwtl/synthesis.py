"""Witness path synthesis for existential hyper objectives.

The search is a breadth-first sweep over time layers of the lazily built
product of unit-unrolled copies.  Each node pairs a product state with the
residual of the objective; the first layer in which a residual becomes TRUE
gives the earliest time at which the objective is settled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .driver import CheckOptions, choose_bound, zip_traces
from .evaluate import eval_twtl
from .formula import FragmentKind, HyperFormula, classify, horizon, is_synchronous, pretty
from .modelcheck import _Clock
from .progression import FALSE, TRUE, Progressor
from .tks import TKS, GridSpec, TimedTrace, cell_of, check_product_size, unit_unroll
from .translate import UnsupportedFragment, async_to_sync, flatten_exists_forall, index_atoms


class Infeasible(RuntimeError):
    pass


@dataclass
class WitnessPlan:
    objective: HyperFormula
    total_time: int
    bound: int
    assignments: Dict[str, Tuple[Tuple[Tuple[str, int], ...], TimedTrace]]
    runs: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    stages: List[str] = field(default_factory=list)
    nodes_expanded: int = 0

    def path(self, var: str) -> List[str]:
        return [s for s, _ in self.assignments[var][0]]

    def to_json(self) -> dict:
        return {
            "objective": pretty(self.objective),
            "total_time": self.total_time,
            "bound": self.bound,
            "assignments": {
                v: {"path": [[s, t] for s, t in steps], "trace": trace.to_json()}
                for v, (steps, trace) in self.assignments.items()
            },
            "nodes_expanded": self.nodes_expanded,
        }


def _objective(m: TKS, f: HyperFormula, stages: List[str]) -> HyperFormula:
    if not is_synchronous(f):
        stages.append("async->sync")
        f = async_to_sync(f)
    kind = classify(f).kind
    if kind is FragmentKind.EXISTS_FORALL:
        stages.append("flatten-exists-forall")
        return flatten_exists_forall(f, m.families)
    if kind is not FragmentKind.ALTERNATION_FREE_EXISTS:
        raise UnsupportedFragment(f"synthesis needs an existential prefix, got {classify(f)}")
    return f


def synthesize(m: TKS, f: HyperFormula, opts: Optional[CheckOptions] = None) -> WitnessPlan:
    """Earliest-settling runs, one per existential variable, satisfying ``f``."""
    opts = opts or CheckOptions()
    stages: List[str] = []
    g = _objective(m, f, stages)
    twtl = index_atoms(g.body, g.trace_vars, m.families)
    stages.append("hyper->twtl")
    bound = choose_bound(horizon(twtl), opts)
    n = len(g.trace_vars)
    u = unit_unroll(m)
    check_product_size(u, n, opts.state_cap)
    prog = Progressor(twtl)
    clock = _Clock(opts.time_cap_ms)

    # projected letter contribution of state s when it sits in copy k
    part = {(k, s): frozenset(p for p in (f"{q}^{k}" for q in (u.observation(s) or ())) if p in prog.props)
            for k in range(1, n + 1) for s in u.states}
    succ = {s: [dst for _, dst in u.successors(s)] for s in u.states}
    letter_cache: Dict[Tuple[str, ...], frozenset] = {}

    def letter(tup: Tuple[str, ...]) -> frozenset:
        out = letter_cache.get(tup)
        if out is None:
            out = frozenset().union(*(part[(k, s)] for k, s in enumerate(tup, 1)))
            letter_cache[tup] = out
        return out

    stages.append(f"search x{n}")
    term0 = prog.initial(bound)
    parents: List[Dict[Tuple, Optional[Tuple]]] = []
    seen = set()
    layer: Dict[Tuple, Optional[Tuple]] = {}
    expanded = 0
    goal = None
    for tup in itertools.product(u.init, repeat=n):
        node = (tup, prog.step(term0, letter(tup)))
        if node[1] != FALSE and node not in seen:
            seen.add(node)
            layer[node] = None
    parents.append(layer)
    for t in range(bound + 1):
        goal = next((node for node in layer if node[1] == TRUE), None)
        if goal is not None or t == bound:
            break
        nxt: Dict[Tuple, Optional[Tuple]] = {}
        for node in layer:
            clock.poll()
            expanded += 1
            tup, term = node
            for tup2 in itertools.product(*(succ[s] for s in tup)):
                node2 = (tup2, prog.step(term, letter(tup2)))
                if node2[1] == FALSE or node2 in seen:
                    continue
                seen.add(node2)
                nxt[node2] = node
        layer = nxt
        parents.append(layer)
        if not layer:
            break
    if goal is None:
        raise Infeasible(f"no runs satisfy {pretty(f)} within {bound} time units")

    settle = len(parents) - 1
    chain = [goal]
    for t in range(settle, 0, -1):
        chain.append(parents[t][chain[-1]])
    chain.reverse()
    runs = [list(node[0]) for node in chain]
    while len(runs) < bound + 1:
        # after settling, dwell where possible
        runs.append([s if s in succ[s] else succ[s][0] for s in runs[-1]])

    traces = []
    plan_runs, assignments = {}, {}
    real = set(m.states)
    for k, var in enumerate(g.trace_vars):
        seq = [tup[k] for tup in runs]
        traces.append(TimedTrace(tuple((tick, u.observation(s)) for tick, s in enumerate(seq))))
        steps = tuple((s, tick) for tick, s in enumerate(seq) if s in real)
        assignments[var] = (steps, TimedTrace(tuple((tick, m.observation(s)) for s, tick in steps)))
        plan_runs[var] = tuple(seq)
    if not eval_twtl(twtl, zip_traces(traces), 0, bound):
        raise AssertionError("synthesized runs fail re-verification")
    stages.append("re-verified")
    return WitnessPlan(f, settle, bound, assignments, plan_runs, stages, expanded)


def render_ascii(g: GridSpec, plan: WitnessPlan, var: Optional[str] = None) -> str:
    """Grid rows with ``*`` on cells visited by the plan (all variables by default)."""
    cells = set()
    for v in ([var] if var else plan.assignments):
        for s in plan.path(v):
            cells.add(cell_of(s))
    rows = []
    for r, line in enumerate(g.rows()):
        rows.append("".join("*" if (r, c) in cells else ch for c, ch in enumerate(line)))
    return "\n".join(rows)
