"""Bounded TWTL model checking over runs of a timed Kripke structure.

Runs are explored depth-first in lexicographic state order while a residual
formula is progressed along the run.  A (state, residual) pair that already
failed is never explored again, so shared suffixes are checked once.
"""

from __future__ import annotations

import enum
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .formula import Body, horizon
from .progression import FALSE, TRUE, Progressor
from .tks import TKS, TimedTrace, unit_unroll

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))


class Timeout(RuntimeError):
    pass


class Mode(enum.Enum):
    ALL_RUNS = "AllRuns"
    EXISTS_RUN = "ExistsRun"


class Status(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"


@dataclass
class Stats:
    traces_examined: int = 0
    time_ms: int = 0


@dataclass
class Verdict:
    status: Status
    witness: Optional[List[Tuple[str, TimedTrace]]] = None
    counterexample: Optional[List[Tuple[str, TimedTrace]]] = None
    stats: Stats = field(default_factory=Stats)
    runs: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    stages: List[str] = field(default_factory=list)
    bound: Optional[int] = None

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    def to_json(self) -> dict:
        def named(xs):
            if xs is None:
                return None
            return [{"var": v, "trace": t.to_json(), "path": list(self.runs.get(v, ()))} for v, t in xs]

        return {
            "status": self.status.value,
            "bound": self.bound,
            "witness": named(self.witness),
            "counterexample": named(self.counterexample),
            "stats": {"traces_examined": self.stats.traces_examined},
        }


class _Clock:
    def __init__(self, cap_ms: Optional[int]):
        self.deadline = None if not cap_ms else time.monotonic() + cap_ms / 1000.0
        self.ticks = 0

    def poll(self) -> None:
        self.ticks += 1
        if self.deadline is not None and self.ticks % 512 == 0 and time.monotonic() > self.deadline:
            raise Timeout("time cap exceeded")


class _System:
    """Unit-step view of a TKS with letters projected onto formula props."""

    def __init__(self, m: TKS, prog: Progressor):
        self.m = m if m.unit_duration else unit_unroll(m)
        self.init = list(self.m.init)
        self.letters = {s: prog.letter(self.m.observation(s)) for s in self.m.states}
        self.succ = {s: [dst for _, dst in self.m.successors(s)] for s in self.m.states}


def _first_completion(sys_: _System, path: List[str], length: int) -> List[str]:
    path = list(path)
    while len(path) < length:
        path.append(sys_.succ[path[-1]][0])
    return path


def _exists_run(sys_: _System, prog: Progressor, term0: int, bound: int, starts: Sequence[str],
                clock: _Clock, stats: Stats) -> Optional[List[str]]:
    failed = set()
    length = bound + 1

    def dfs(state: str, term: int, path: List[str]) -> Optional[List[str]]:
        clock.poll()
        term = prog.step(term, sys_.letters[state])
        path.append(state)
        try:
            if term == TRUE:
                stats.traces_examined += 1
                return _first_completion(sys_, path, length)
            if term == FALSE or len(path) == length:
                stats.traces_examined += 1
                return None
            if (state, term) in failed:
                return None
            for nxt in sys_.succ[state]:
                found = dfs(nxt, term, path)
                if found is not None:
                    return found
            failed.add((state, term))
            return None
        finally:
            path.pop()

    for s in starts:
        found = dfs(s, term0, [])
        if found is not None:
            return found
    return None


def _run_to_trace(m: TKS, run: Sequence[str]) -> TimedTrace:
    return TimedTrace(tuple((n, m.observation(s)) for n, s in enumerate(run)))


def _partition(items: Sequence[str], parts: int) -> List[List[str]]:
    parts = max(1, min(parts, len(items)))
    chunk = -(-len(items) // parts)
    return [list(items[k:k + chunk]) for k in range(0, len(items), chunk)]


def search_run(m: TKS, f: Body, bound: int, want: bool = True, time_cap_ms: Optional[int] = None,
               threads: int = 1, stats: Optional[Stats] = None) -> Optional[List[str]]:
    """First run (lexicographic) of length ``bound + 1`` on which ``f`` is ``want``."""
    stats = stats if stats is not None else Stats()
    clock = _Clock(time_cap_ms)

    def job(starts):
        prog = Progressor(f)
        sys_ = _System(m, prog)
        term0 = prog.initial(bound)
        if not want:
            term0 = prog.neg(term0)
        local = Stats()
        found = _exists_run(sys_, prog, term0, bound, starts, clock, local)
        return found, local

    probe = _System(m, Progressor(f))
    if threads <= 1 or len(probe.init) < 2:
        found, local = job(probe.init)
        stats.traces_examined += local.traces_examined
        return found
    old = threading.stack_size()
    threading.stack_size(256 * 1024 * 1024)
    try:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, _partition(probe.init, threads)))
    finally:
        threading.stack_size(old)
    for _, local in results:
        stats.traces_examined += local.traces_examined
    for found, _ in results:
        if found is not None:
            return found
    return None


def check_twtl_model(m: TKS, f: Body, mode: Mode = Mode.ALL_RUNS, bound: Optional[int] = None,
                     time_cap_ms: Optional[int] = None, threads: int = 1) -> Verdict:
    """Check ``f`` on every (AllRuns) or some (ExistsRun) run of ``m``.

    Runs are tick-aligned and cover ticks ``0..bound``; the bound defaults
    to the formula horizon.
    """
    start = time.monotonic()
    bound = horizon(f) if bound is None else bound
    stats = Stats()
    unit = m if m.unit_duration else unit_unroll(m)
    if mode is Mode.EXISTS_RUN:
        run = search_run(unit, f, bound, True, time_cap_ms, threads, stats)
        v = Verdict(Status.SAT if run else Status.UNSAT, stats=stats, bound=bound)
        if run:
            v.witness = [("run", _run_to_trace(unit, run))]
            v.runs["run"] = tuple(run)
    else:
        run = search_run(unit, f, bound, False, time_cap_ms, threads, stats)
        v = Verdict(Status.UNSAT if run else Status.SAT, stats=stats, bound=bound)
        if run:
            v.counterexample = [("run", _run_to_trace(unit, run))]
            v.runs["run"] = tuple(run)
    stats.time_ms = int((time.monotonic() - start) * 1000)
    return v


# ------------------------------------------------------ exists-forall search

def _union(a: Optional[FrozenSet[str]], b: Optional[FrozenSet[str]]) -> FrozenSet[str]:
    if a is None:
        return b or frozenset()
    if b is None:
        return a
    return a | b


def search_exists_forall(ex: TKS, fa: TKS, f: Body, bound: int, time_cap_ms: Optional[int] = None,
                         stats: Optional[Stats] = None) -> Optional[List[str]]:
    """Find a run of ``ex`` such that every run of ``fa`` satisfies ``f`` jointly.

    The runs of ``fa`` are tracked as a set of (state, residual) pairs that
    advances in lock step with the ``ex`` run; the ``ex`` prefix dies as soon
    as one residual becomes FALSE and succeeds once the set is empty.
    """
    stats = stats if stats is not None else Stats()
    clock = _Clock(time_cap_ms)
    prog = Progressor(f)
    E, A = _System(ex, prog), _System(fa, prog)
    length = bound + 1
    failed = set()
    cache: Dict[Tuple, int] = {}

    def advance(e: str, configs, first: bool):
        le = E.letters[e]
        out = set()
        for a, term in configs:
            targets = [a] if first else A.succ[a]
            for a2 in targets:
                key = (term, le, A.letters[a2])
                nt = cache.get(key)
                if nt is None:
                    nt = prog.step(term, _union(le, A.letters[a2]))
                    cache[key] = nt
                if nt == FALSE:
                    return None
                if nt != TRUE:
                    out.add((a2, nt))
        return frozenset(out)

    def dfs(e: str, configs, path: List[str], first: bool) -> Optional[List[str]]:
        clock.poll()
        nxt_configs = advance(e, configs, first)
        path.append(e)
        try:
            if nxt_configs is None:
                stats.traces_examined += 1
                return None
            if not nxt_configs:
                stats.traces_examined += 1
                return _first_completion(E, path, length)
            if len(path) == length:
                raise AssertionError("residual left undecided at the end of the bound")
            key = (e, nxt_configs)
            if key in failed:
                return None
            for e2 in E.succ[e]:
                found = dfs(e2, nxt_configs, path, False)
                if found is not None:
                    return found
            failed.add(key)
            return None
        finally:
            path.pop()

    term0 = prog.initial(bound)
    start_configs = frozenset((a, term0) for a in A.init)
    for e0 in E.init:
        found = dfs(e0, start_configs, [], True)
        if found is not None:
            return found
    return None


def refuting_run(ex_run: Sequence[str], ex: TKS, fa: TKS, f: Body, bound: int,
                 time_cap_ms: Optional[int] = None) -> Optional[List[str]]:
    """A run of ``fa`` that, paired with the fixed ``ex_run``, falsifies ``f``."""
    clock = _Clock(time_cap_ms)
    prog = Progressor(f)
    E, A = _System(ex, prog), _System(fa, prog)
    letters = [E.letters[s] for s in ex_run]
    length = bound + 1
    failed = set()

    def dfs(a: str, term: int, path: List[str]):
        clock.poll()
        pos = len(path)
        term = prog.step(term, _union(letters[pos], A.letters[a]))
        path.append(a)
        try:
            if term == FALSE:
                return _first_completion(A, path, length)
            if term == TRUE or len(path) == length:
                return None
            if (a, term, pos) in failed:
                return None
            for a2 in A.succ[a]:
                found = dfs(a2, term, path)
                if found is not None:
                    return found
            failed.add((a, term, pos))
            return None
        finally:
            path.pop()

    term0 = prog.initial(bound)
    for a0 in A.init:
        found = dfs(a0, term0, [])
        if found is not None:
            return found
    return None
