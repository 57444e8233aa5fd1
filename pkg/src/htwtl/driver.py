"""End-to-end model checking of hyper formulas against a timed Kripke structure."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .evaluate import eval_twtl
from .formula import FragmentKind, HyperFormula, Quantifier, classify, horizon, is_synchronous
from .modelcheck import (Mode, Stats, Status, Verdict, check_twtl_model, refuting_run,
                         search_exists_forall)
from .tks import DEFAULT_STATE_CAP, TKS, TimedTrace, generate_traces, hold_fill, self_compose
from .translate import (UnsupportedFragment, async_to_sync, flatten_exists_forall,
                        hyper_to_twtl, index_atoms, inv_trace)


class InstanceTooLarge(RuntimeError):
    pass


ENUMERATION_CAP = 10 ** 6


@dataclass
class CheckOptions:
    k_lim: Optional[int] = None
    time_cap_ms: Optional[int] = None
    state_cap: int = DEFAULT_STATE_CAP
    mode: Optional[Mode] = None
    threads: int = 1
    bound: Optional[int] = None
    # "model": universal variables range over all runs of the model.
    # "witnesses": universal variables are substituted by the existential ones.
    forall_scope: str = "model"

    def __post_init__(self):
        if self.k_lim is not None and self.k_lim < 1:
            raise ValueError("k_lim must be at least 1")
        if self.forall_scope not in ("model", "witnesses"):
            raise ValueError("forall_scope must be 'model' or 'witnesses'")


def choose_bound(h: int, opts: CheckOptions) -> int:
    if opts.bound is not None:
        return opts.bound
    if opts.k_lim is not None:
        return min(h, opts.k_lim - 1)
    return h


def project_run(m: TKS, product: TKS, run: Sequence[str], copies: Sequence[int]
                ) -> Dict[int, Tuple[Tuple[str, ...], TimedTrace]]:
    """Split a product run into per-copy paths of original states and timed traces."""
    out, real = {}, set(m.states)
    for pos, copy in enumerate(copies):
        path, events = [], []
        for tick, sid in enumerate(run):
            s = product.components[sid][pos]
            if s in real:
                if not path or path[-1] != s or events[-1][0] != tick - 1:
                    path.append(s)
                events.append((tick, m.observation(s)))
        out[copy] = (tuple(path), TimedTrace(tuple(events)))
    return out


def _prepare(f: HyperFormula, stages: List[str]) -> Tuple[HyperFormula, bool]:
    if is_synchronous(f):
        return f, False
    stages.append("async->sync")
    return async_to_sync(f), True


def check(m: TKS, f: HyperFormula, opts: Optional[CheckOptions] = None) -> Verdict:
    """Model check ``f`` on ``m`` through self-composition and TWTL checking."""
    opts = opts or CheckOptions()
    start = time.monotonic()
    stages: List[str] = []
    g, padded = _prepare(f, stages)
    kind = classify(g).kind
    if kind is FragmentKind.OTHER:
        raise UnsupportedFragment(f"quantifier prefix {classify(g)} is not supported")
    if kind is FragmentKind.EXISTS_FORALL and opts.forall_scope == "witnesses":
        stages.append("flatten-exists-forall")
        g = flatten_exists_forall(g, m.families)
        kind = classify(g).kind
    if kind is FragmentKind.EXISTS_FORALL:
        verdict = _check_exists_forall(m, g, opts, stages, padded)
    else:
        verdict = _check_alternation_free(m, g, opts, stages, padded)
    verdict.stages = stages
    verdict.stats.time_ms = int((time.monotonic() - start) * 1000)
    return verdict


def _check_alternation_free(m, g, opts, stages, padded) -> Verdict:
    tr = hyper_to_twtl(g, m.families)
    stages.append("hyper->twtl")
    bound = choose_bound(horizon(tr.twtl), opts)
    product = self_compose(m, tr.n_copies, opts.state_cap, silent=padded)
    stages.append(f"self-compose x{tr.n_copies}")
    universal = g.trace_prefix[0][0] is Quantifier.FORALL
    mode = opts.mode or (Mode.ALL_RUNS if universal else Mode.EXISTS_RUN)
    stages.append(f"verify {mode.value}")
    v = check_twtl_model(product, tr.twtl, mode, bound, opts.time_cap_ms, opts.threads)
    run = v.runs.pop("run", None)
    if run is not None:
        proj = project_run(m, product, run, range(1, tr.n_copies + 1))
        named = [(var, proj[k][1]) for k, var in enumerate(tr.trace_vars, 1)]
        v.runs = {var: proj[k][0] for k, var in enumerate(tr.trace_vars, 1)}
        if v.witness is not None:
            v.witness = named
        else:
            v.counterexample = named
    return v


def _check_exists_forall(m, g, opts, stages, padded) -> Verdict:
    exists = [v for q, v in g.trace_prefix if q is Quantifier.EXISTS]
    forall = [v for q, v in g.trace_prefix if q is Quantifier.FORALL]
    twtl = index_atoms(g.body, g.trace_vars, m.families)
    stages.append("hyper->twtl")
    bound = choose_bound(horizon(twtl), opts)
    ex = self_compose(m, len(exists), opts.state_cap, silent=padded)
    fa = self_compose(m, len(forall), opts.state_cap, silent=padded, first_copy=len(exists) + 1)
    stages.append(f"self-compose x{len(exists)}+{len(forall)}")
    stages.append("verify exists-forall")
    stats = Stats()
    run = search_exists_forall(ex, fa, twtl, bound, opts.time_cap_ms, stats)
    v = Verdict(Status.SAT if run else Status.UNSAT, stats=stats, bound=bound)
    if run is not None:
        proj = project_run(m, ex, run, range(1, len(exists) + 1))
        v.witness = [(var, proj[k][1]) for k, var in enumerate(exists, 1)]
        v.runs = {var: proj[k][0] for k, var in enumerate(exists, 1)}
        return v
    # Report the first existential choice together with a universal run refuting it.
    ex_run = [ex.init[0]]
    while len(ex_run) < bound + 1:
        ex_run.append(ex.successors(ex_run[-1])[0][1])
    fa_run = refuting_run(ex_run, ex, fa, twtl, bound, opts.time_cap_ms)
    named, runs = [], {}
    proj = project_run(m, ex, ex_run, range(1, len(exists) + 1))
    for k, var in enumerate(exists, 1):
        named.append((var, proj[k][1]))
        runs[var] = proj[k][0]
    if fa_run is not None:
        proj = project_run(m, fa, fa_run, range(len(exists) + 1, len(exists) + len(forall) + 1))
        for k, var in enumerate(forall, len(exists) + 1):
            named.append((var, proj[k][1]))
            runs[var] = proj[k][0]
    v.counterexample = named
    v.runs = runs
    return v


# ------------------------------------------------------- direct semantics

def aligned_traces(m: TKS, bound: int, padded: bool = False) -> List[TimedTrace]:
    """Distinct runs of ``m`` as tick-aligned traces over ticks ``0..bound``."""
    out, seen = [], set()
    for t in generate_traces(m, bound):
        a = inv_trace(t, bound) if padded else hold_fill(t, bound)
        if a not in seen:
            seen.add(a)
            out.append(a)
    return out


def zip_traces(traces: Sequence[TimedTrace]) -> TimedTrace:
    """Joint trace whose tick n carries ``p^k`` for every p observed by trace k at n."""
    events = []
    for n in range(len(traces[0])):
        lab = set()
        for k, t in enumerate(traces, 1):
            e = t[n][1]
            if e is not None:
                lab.update(f"{p}^{k}" for p in e)
        events.append((n, frozenset(lab)))
    return TimedTrace(tuple(events))


def evaluate_assignment(m: TKS, f: HyperFormula, assignment: Mapping[str, TimedTrace],
                        bound: Optional[int] = None) -> bool:
    """Truth of the body of ``f`` when each trace variable is bound to a tick-aligned trace."""
    g, _ = _prepare(f, [])
    twtl = index_atoms(g.body, g.trace_vars, m.families)
    bound = horizon(twtl) if bound is None else bound
    joint = zip_traces([assignment[v] for v in g.trace_vars])
    return eval_twtl(twtl, joint, 0, bound)


def path_trace(m: TKS, path: Sequence[str], bound: int, padded: bool = False) -> TimedTrace:
    """Tick-aligned trace of an explicit state path, taking the shortest edge between
    consecutive states and dwelling in the last state up to ``bound``."""
    events, tau = [(0, m.observation(path[0]))], 0
    for a, b in zip(path, path[1:]):
        ds = [d for d, dst in m.successors(a) if dst == b]
        if not ds:
            raise ValueError(f"no transition {a} -> {b}")
        tau += min(ds)
        events.append((tau, m.observation(b)))
    t = TimedTrace(tuple(events))
    if tau > bound:
        raise ValueError(f"path takes {tau} time units, beyond bound {bound}")
    if padded:
        return inv_trace(t, bound)
    return hold_fill(t, bound)


def refutes(m: TKS, f: HyperFormula, paths: Mapping[str, Sequence[str]],
            bound: Optional[int] = None) -> bool:
    """Does the given path assignment falsify the body of ``f``?"""
    g, padded = _prepare(f, [])
    twtl = index_atoms(g.body, g.trace_vars, m.families)
    bound = horizon(twtl) if bound is None else bound
    traces = {v: path_trace(m, p, bound, padded) for v, p in paths.items()}
    joint = zip_traces([traces[v] for v in g.trace_vars])
    return not eval_twtl(twtl, joint, 0, bound)


def enumerate_assignments(m: TKS, f: HyperFormula, bound: int) -> Verdict:
    """Reference checker: iterate the quantifier prefix over explicit traces."""
    if not is_synchronous(f):
        raise UnsupportedFragment("enumerate_assignments handles synchronous formulas only")
    start = time.monotonic()
    traces = aligned_traces(m, bound)
    n = len(f.trace_prefix)
    if len(traces) ** n > ENUMERATION_CAP:
        raise InstanceTooLarge(f"{len(traces)}^{n} assignments exceed {ENUMERATION_CAP}")
    twtl = index_atoms(f.body, f.trace_vars, m.families)
    stats = Stats()
    first_var_exists = f.trace_prefix[0][0] is Quantifier.EXISTS

    def body_holds(choice: Tuple[int, ...]) -> bool:
        stats.traces_examined += 1
        return eval_twtl(twtl, zip_traces([traces[c] for c in choice]), 0, bound)

    def rec(k: int, choice: Tuple[int, ...]) -> Tuple[bool, Optional[Tuple[int, ...]]]:
        if k == n:
            return body_holds(choice), choice
        want_any = f.trace_prefix[k][0] is Quantifier.EXISTS
        for c in range(len(traces)):
            ok, found = rec(k + 1, choice + (c,))
            if ok == want_any:
                return ok, found
        return (not want_any), None

    ok, found = rec(0, ())
    v = Verdict(Status.SAT if ok else Status.UNSAT, stats=stats, bound=bound)
    alternation_free = classify(f).kind is not FragmentKind.EXISTS_FORALL
    if found is not None and alternation_free:
        named = [(var, traces[c]) for var, c in zip(f.trace_vars, found)]
        if ok and first_var_exists:
            v.witness = named
        elif not ok and not first_var_exists:
            v.counterexample = named
    v.stats.time_ms = int((time.monotonic() - start) * 1000)
    return v
