"""Finite-trace TWTL satisfaction.

``oracle_eval`` is a literal recursive reading of the satisfaction clauses
and exists to cross-check ``eval_twtl``, which memoizes subresults and uses
precomputed hold run lengths.

Silent events satisfy no proposition, so a positive hold fails on them and
a negated hold succeeds.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .formula import (TRUE_PROP, And, Body, Concat, EqAtom, Hold, Not, Within,
                      WithinAsync)
from .tks import TimedTrace


class IndexOutOfRange(IndexError):
    pass


def _check_range(t: TimedTrace, i: int, j: int) -> None:
    if not (0 <= i <= j < len(t)):
        raise IndexOutOfRange(f"need 0 <= i <= j < {len(t)}, got i={i}, j={j}")


def _letter_ok(node: Hold, event) -> bool:
    if node.atom == TRUE_PROP:
        return not node.negated
    present = event is not None and node.atom in event
    return present != node.negated


def oracle_eval(f: Body, t: TimedTrace, i: int, j: int) -> bool:
    _check_range(t, i, j)
    return _oracle(f, t, i, j)


def _oracle(f: Body, t: TimedTrace, i: int, j: int) -> bool:
    if isinstance(f, Hold):
        for n in range(i, i + f.duration + 1):
            if n > j or not _letter_ok(f, t[n][1]):
                return False
        return t[j][0] - t[i][0] >= f.duration
    if isinstance(f, And):
        return _oracle(f.left, t, i, j) and _oracle(f.right, t, i, j)
    if isinstance(f, Not):
        return not _oracle(f.operand, t, i, j)
    if isinstance(f, Concat):
        for k in range(i, j):
            if _oracle(f.left, t, i, k):
                return _oracle(f.right, t, k + 1, j)
        return False
    if isinstance(f, Within):
        end = i + f.hi
        if end > j or t[j][0] - t[i][0] < f.hi:
            return False
        return any(_oracle(f.body, t, k, end) for k in range(i + f.lo, end + 1))
    if isinstance(f, (EqAtom, WithinAsync)):
        raise TypeError(f"{type(f).__name__} must be rewritten before evaluation")
    raise TypeError(f"not a formula node: {f!r}")


class EvalContext:
    """Memo tables for repeated evaluation of formulas over one trace."""

    def __init__(self, trace: TimedTrace):
        self.trace = trace
        self.memo: Dict[Tuple[int, int, int], bool] = {}
        self.split: Dict[Tuple[int, int, int], Optional[int]] = {}
        self._runs: Dict[Tuple[str, bool], List[int]] = {}
        self._keep: Dict[int, Body] = {}

    def run_lengths(self, atom: str, negated: bool) -> List[int]:
        """``runs[n]`` = number of consecutive positions from n where the literal holds."""
        key = (atom, negated)
        runs = self._runs.get(key)
        if runs is None:
            probe = Hold(0, atom, negated)
            runs = [0] * (len(self.trace) + 1)
            for n in range(len(self.trace) - 1, -1, -1):
                runs[n] = runs[n + 1] + 1 if _letter_ok(probe, self.trace[n][1]) else 0
            self._runs[key] = runs
        return runs

    def sat(self, f: Body, i: int, j: int) -> bool:
        key = (id(f), i, j)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self._keep[id(f)] = f
        value = self._compute(f, i, j)
        self.memo[key] = value
        return value

    def _compute(self, f: Body, i: int, j: int) -> bool:
        t = self.trace
        if isinstance(f, Hold):
            d = f.duration
            if i + d > j or t[j][0] - t[i][0] < d:
                return False
            return self.run_lengths(f.atom, f.negated)[i] > d
        if isinstance(f, And):
            return self.sat(f.left, i, j) and self.sat(f.right, i, j)
        if isinstance(f, Not):
            return not self.sat(f.operand, i, j)
        if isinstance(f, Concat):
            k = self.first_split(f, i, j)
            return k is not None and self.sat(f.right, k + 1, j)
        if isinstance(f, Within):
            end = i + f.hi
            if end > j or t[j][0] - t[i][0] < f.hi:
                return False
            for k in range(i + f.lo, end + 1):
                if self.sat(f.body, k, end):
                    return True
            return False
        raise TypeError(f"{type(f).__name__} must be rewritten before evaluation")

    def first_split(self, f: Concat, i: int, j: int) -> Optional[int]:
        """Smallest k in [i, j) with the left operand true on [i, k], if any."""
        key = (id(f), i, j)
        if key in self.split:
            return self.split[key]
        found = None
        for k in range(i, j):
            if self.sat(f.left, i, k):
                found = k
                break
        self.split[key] = found
        return found


def eval_twtl(f: Body, t: TimedTrace, i: int = 0, j: Optional[int] = None,
              ctx: Optional[EvalContext] = None) -> bool:
    """Does ``t[i, j]`` satisfy ``f``?  ``j`` defaults to the last index."""
    if j is None:
        j = len(t) - 1
    _check_range(t, i, j)
    if ctx is None or ctx.trace is not t:
        ctx = EvalContext(t)
    return ctx.sat(f, i, j)


def concat_split(f: Concat, t: TimedTrace, i: int = 0, j: Optional[int] = None) -> Optional[int]:
    if j is None:
        j = len(t) - 1
    _check_range(t, i, j)
    return EvalContext(t).first_split(f, i, j)
