"""Formula and trace transformations.

* ``inv_trace`` pads a timed trace with silent ticks.
* ``async_to_sync`` rewrites trajectory windows into plain windows.
* ``flatten_exists_forall`` removes one quantifier alternation by substitution.
* ``hyper_to_twtl`` drops the trace prefix in favour of copy-indexed propositions.
* ``eval_async`` evaluates an asynchronous body directly under explicit trajectories.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .formula import (TRUE_PROP, And, AtomRef, Body, Concat, EqAtom, FormulaError,
                      FragmentKind, Hold, HyperFormula, Not, Quantifier, Within, WithinAsync,
                      classify, conjunction, expand_equalities, is_synchronous, map_atoms,
                      preorder, pretty, transform)
from .tks import TimedTrace


class UnsupportedFragment(FormulaError):
    pass


class AlternationPresent(UnsupportedFragment):
    pass


class NotExistsForall(UnsupportedFragment):
    pass


# ------------------------------------------------------------------ traces

def inv_trace(t: TimedTrace, bound: Optional[int] = None) -> TimedTrace:
    """Tick-aligned copy of ``t`` with silent events on unoccupied ticks."""
    last = t.last_time
    bound = last if bound is None else bound
    if bound < last:
        raise ValueError(f"bound {bound} is before the last timestamp {last}")
    at = dict(t.events)
    return TimedTrace(tuple((tau, at.get(tau)) for tau in range(bound + 1)))


def delete_silent(t: TimedTrace) -> TimedTrace:
    return TimedTrace(tuple((tau, e) for tau, e in t.events if e is not None))


def bound_variability(traces: Iterable[TimedTrace], k_lim: int) -> Set[TimedTrace]:
    """Keep the traces whose timestamps all lie below ``k_lim``."""
    if k_lim < 1:
        raise ValueError("k_lim must be at least 1")
    return {t for t in traces if all(tau < k_lim for tau, _ in t.events)}


# ---------------------------------------------------------------- formulas

def _drop_trajectory(atom):
    return replace(atom, traj_var=None) if isinstance(atom, AtomRef) else atom


def async_to_sync(f: HyperFormula) -> HyperFormula:
    """Synchronous formula for evaluation over silent-padded traces.

    Each ``[psi][lo,hi][lag_lo,lag_hi]`` becomes ``[psi][lo,hi+lag_hi]``.
    """
    if is_synchronous(f):
        raise UnsupportedFragment("formula is already synchronous")

    def visit(n: Body) -> Body:
        if isinstance(n, WithinAsync):
            return Within(n.body, n.lo, n.hi + n.lag_hi)
        if isinstance(n, Hold):
            return replace(n, atom=_drop_trajectory(n.atom))
        if isinstance(n, EqAtom):
            return EqAtom(replace(n.lhs, atom=_drop_trajectory(n.lhs.atom)),
                          replace(n.rhs, atom=_drop_trajectory(n.rhs.atom)), n.family, n.equal)
        return n

    return HyperFormula(f.trace_prefix, (), transform(f.body, visit))


def substitute(body: Body, mapping: Mapping[str, str]) -> Body:
    def fn(atom):
        if isinstance(atom, AtomRef) and atom.trace_var in mapping:
            return replace(atom, trace_var=mapping[atom.trace_var])
        return atom

    def visit(n: Body) -> Body:
        if isinstance(n, EqAtom):
            return EqAtom(replace(n.lhs, atom=fn(n.lhs.atom)), replace(n.rhs, atom=fn(n.rhs.atom)),
                          n.family, n.equal)
        return n

    return transform(map_atoms(body, fn), visit)


def flatten_exists_forall(f: HyperFormula, families: Optional[Mapping[str, Sequence[str]]] = None) -> HyperFormula:
    """Replace each universal variable by every existential one, conjunctively."""
    if classify(f).kind is not FragmentKind.EXISTS_FORALL:
        raise NotExistsForall(f"expected an exists-forall prefix, got {classify(f)}")
    exists = [v for q, v in f.trace_prefix if q is Quantifier.EXISTS]
    forall = [v for q, v in f.trace_prefix if q is Quantifier.FORALL]
    body = expand_equalities(f.body, families)
    parts = [substitute(body, dict(zip(forall, choice)))
             for choice in itertools.product(exists, repeat=len(forall))]
    prefix = tuple((Quantifier.EXISTS, v) for v in exists)
    return HyperFormula(prefix, f.traj_prefix, conjunction(parts))


@dataclass
class FreshPropTable:
    """Names for subformulas that relate several traces, keyed by (preorder index, copy)."""

    entries: Dict[Tuple[int, int], str] = field(default_factory=dict)
    subformulas: Dict[int, str] = field(default_factory=dict)

    def add(self, kind: str, index: int, copy: int, text: str) -> str:
        name = f"{kind}_{index}_{copy}"
        self.entries[(index, copy)] = name
        self.subformulas[index] = text
        return name

    def rows(self) -> List[Tuple[str, int, int, str]]:
        return [(name, i, j, self.subformulas[i]) for (i, j), name in sorted(self.entries.items())]

    def to_json(self) -> list:
        return [{"name": n, "subformula": i, "copy": j, "text": s} for n, i, j, s in self.rows()]


@dataclass
class Translation:
    twtl: Body
    table: FreshPropTable
    n_copies: int
    trace_vars: Tuple[str, ...]


def copy_prop(prop: str, copy: int) -> str:
    return f"{prop}^{copy}"


def _register_fresh(body: Body, copy_of: Mapping[str, int]) -> FreshPropTable:
    table = FreshPropTable()
    for index, n in enumerate(preorder(body)):
        if isinstance(n, EqAtom):
            copies = sorted({copy_of[n.lhs.atom.trace_var], copy_of[n.rhs.atom.trace_var]})
            for j in copies:
                table.add("B", index, j, pretty(n))
        elif isinstance(n, And) and isinstance(n.left, Hold) and isinstance(n.right, Hold):
            a, b = n.left.atom, n.right.atom
            if (isinstance(a, AtomRef) and isinstance(b, AtomRef) and a.prop == b.prop
                    and a.trace_var != b.trace_var and n.left.duration == n.right.duration
                    and n.left.negated == n.right.negated):
                for j in sorted({copy_of[a.trace_var], copy_of[b.trace_var]}):
                    table.add("M", index, j, pretty(n))
    return table


def hyper_to_twtl(f: HyperFormula, families: Optional[Mapping[str, Sequence[str]]] = None) -> Translation:
    """Plain TWTL over copy-indexed propositions ``p^k`` (k = prefix position)."""
    if not is_synchronous(f):
        raise UnsupportedFragment("translate asynchronous formulas with async_to_sync first")
    kind = classify(f).kind
    if kind not in (FragmentKind.ALTERNATION_FREE_EXISTS, FragmentKind.ALTERNATION_FREE_FORALL):
        raise AlternationPresent(f"quantifier prefix {classify(f)} is not alternation-free")
    copy_of = {v: k for k, v in enumerate(f.trace_vars, 1)}
    table = _register_fresh(f.body, copy_of)
    return Translation(index_atoms(f.body, f.trace_vars, families), table, len(copy_of), f.trace_vars)


def index_atoms(body: Body, trace_vars: Sequence[str],
                families: Optional[Mapping[str, Sequence[str]]] = None) -> Body:
    """Expand comparisons and rename ``p@v`` to ``p^k`` where v is the k-th variable."""
    copy_of = {v: k for k, v in enumerate(trace_vars, 1)}
    body = expand_equalities(body, families)
    return map_atoms(body, lambda a: copy_prop(a.prop, copy_of[a.trace_var]) if isinstance(a, AtomRef) else a)


# --------------------------------------------------- direct async semantics

def trajectories(variables: Sequence[str], length: int, fairness_horizon: Optional[int] = None
                 ) -> Iterator[Tuple[FrozenSet, ...]]:
    """All step sequences of nonempty variable subsets in which every variable moves
    at least once within the first ``fairness_horizon`` steps."""
    fairness_horizon = length if fairness_horizon is None else min(fairness_horizon, length)
    subsets = [frozenset(c) for r in range(1, len(variables) + 1)
               for c in itertools.combinations(variables, r)]
    for steps in itertools.product(subsets, repeat=length):
        if fairness_horizon and length:
            moved = set().union(*steps[:fairness_horizon])
            if len(moved) < len(variables):
                continue
        yield steps


def pointers(steps: Sequence[frozenset], variables: Sequence[str]) -> Dict[str, List[int]]:
    """``ptr[v][n]`` = how far trace ``v`` has advanced before global step ``n``."""
    ptr = {v: [0] for v in variables}
    for step in steps:
        for v in variables:
            ptr[v].append(ptr[v][-1] + (1 if v in step else 0))
    return ptr


class AsyncContext:
    """Evaluate an asynchronous body for fixed traces and trajectories."""

    def __init__(self, traces: Mapping[str, TimedTrace], traj: Mapping[str, Sequence[frozenset]]):
        self.traces = traces
        self.ptr = {r: pointers(steps, list(traces)) for r, steps in traj.items()}
        self.memo: Dict[Tuple[int, int, int], bool] = {}
        self._keep = []

    def _pos(self, atom: AtomRef, n: int) -> Optional[int]:
        ptr = self.ptr[atom.traj_var][atom.trace_var]
        if n >= len(ptr):
            return None
        return ptr[n]

    def _lit(self, h: Hold, n: int) -> bool:
        if h.atom == TRUE_PROP:
            return not h.negated
        pos = self._pos(h.atom, n)
        trace = self.traces[h.atom.trace_var]
        if pos is None or pos >= len(trace):
            return False
        ev = trace[pos][1]
        return (ev is not None and h.atom.prop in ev) != h.negated

    def sat(self, f: Body, i: int, j: int) -> bool:
        key = (id(f), i, j)
        if key not in self.memo:
            self._keep.append(f)
            self.memo[key] = self._sat(f, i, j)
        return self.memo[key]

    def _sat(self, f: Body, i: int, j: int) -> bool:
        if isinstance(f, Hold):
            if j - i < f.duration:
                return False
            return all(n <= j and self._lit(f, n) for n in range(i, i + f.duration + 1))
        if isinstance(f, And):
            return self.sat(f.left, i, j) and self.sat(f.right, i, j)
        if isinstance(f, Not):
            return not self.sat(f.operand, i, j)
        if isinstance(f, Concat):
            for k in range(i, j):
                if self.sat(f.left, i, k):
                    return self.sat(f.right, k + 1, j)
            return False
        if isinstance(f, Within):
            end = i + f.hi
            return end <= j and any(self.sat(f.body, k, end) for k in range(i + f.lo, end + 1))
        if isinstance(f, WithinAsync):
            end = i + f.hi
            if end > j:
                return False
            if not self._lags_ok(f, i, end):
                return False
            return any(self.sat(f.body, k, end) for k in range(i + f.lo, end + 1))
        raise TypeError(f"{type(f).__name__} must be expanded before evaluation")

    def _lags_ok(self, f: WithinAsync, i: int, end: int) -> bool:
        """Pairwise differences of progress over the window lie in the lag interval."""
        refs = {(a.trace_var, a.traj_var) for a in _atom_refs(f.body)}
        advance = []
        for v, r in sorted(refs):
            ptr = self.ptr[r][v]
            if end >= len(ptr):
                return False
            advance.append(ptr[end] - ptr[i])
        return all(f.lag_lo <= abs(a - b) <= f.lag_hi for a, b in itertools.combinations(advance, 2))


def _atom_refs(body: Body) -> Iterator[AtomRef]:
    for n in preorder(body):
        if isinstance(n, Hold) and isinstance(n.atom, AtomRef):
            yield n.atom
        elif isinstance(n, EqAtom):
            yield n.lhs.atom
            yield n.rhs.atom


def eval_async(f: HyperFormula, traces: Sequence[TimedTrace], steps: int,
               families: Optional[Mapping[str, Sequence[str]]] = None,
               fairness_horizon: Optional[int] = None) -> bool:
    """Direct bounded evaluation of an asynchronous formula over a trace set.

    Trace variables range over ``traces``; trajectory variables range over
    all fair trajectories with ``steps`` steps.  The body is checked on the
    global window ``[0, steps]``.
    """
    body = expand_equalities(f.body, families)
    tvars = list(f.trace_vars)
    traj_choices = list(trajectories(tvars, steps, fairness_horizon))

    def over_traj(k: int, assign: Dict[str, TimedTrace], chosen: Dict[str, Sequence[frozenset]]) -> bool:
        if k == len(f.traj_prefix):
            return AsyncContext(assign, chosen).sat(body, 0, steps)
        q, r = f.traj_prefix[k]
        results = (over_traj(k + 1, assign, {**chosen, r: v}) for v in traj_choices)
        return any(results) if q is Quantifier.TRAJ_EXISTS else all(results)

    def over_traces(k: int, assign: Dict[str, TimedTrace]) -> bool:
        if k == len(f.trace_prefix):
            return over_traj(0, assign, {})
        q, v = f.trace_prefix[k]
        results = (over_traces(k + 1, {**assign, v: t}) for t in traces)
        return any(results) if q is Quantifier.EXISTS else all(results)

    return over_traces(0, {})
