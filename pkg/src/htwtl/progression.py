"""Letter-by-letter progression of TWTL formulas over tick-aligned traces.

A residual term ``sat(node, i, j)`` stands for "node holds on the window
``[now+i, now+j]``".  Consuming the letter at ``now`` shifts windows that
start later and unfolds the ones that start now.  Every term built from a
window ending at ``j`` resolves to TRUE or FALSE after ``j + 1`` letters, so
a residual at the end of a bounded run is always decided.

Terms are interned to small integers, which keeps memo keys cheap.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .formula import TRUE_PROP, And, Body, Concat, Hold, Not, Within, atoms, preorder

FALSE, TRUE = 0, 1

_SAT, _AND, _OR, _NOT, _ITE = "s", "&", "|", "!", "?"


def formula_props(f: Body) -> FrozenSet[str]:
    return frozenset(a for a in atoms(f) if isinstance(a, str))


class Progressor:
    """Interned residual terms for one formula, with a progression memo."""

    def __init__(self, formula: Body):
        self.formula = formula
        self.props = formula_props(formula)
        self._terms: List[tuple] = [("F",), ("T",)]
        self._ids: Dict[tuple, int] = {("F",): FALSE, ("T",): TRUE}
        self._nodes: List[Body] = []
        self._node_ids: Dict[int, int] = {}
        self._holds: Dict[Tuple[str, bool, int], int] = {}
        self._memo: Dict[Tuple[int, Optional[FrozenSet[str]]], int] = {}
        for n in preorder(formula):
            self._node(n)
        self.root = self._node(formula)

    # ---------------------------------------------------------- interning
    def _node(self, n: Body) -> int:
        idx = self._node_ids.get(id(n))
        if idx is None:
            if isinstance(n, Hold):
                key = (n.atom, n.negated, n.duration)
                idx = self._holds.get(key)
                if idx is not None:
                    self._node_ids[id(n)] = idx
                    return idx
            idx = len(self._nodes)
            self._nodes.append(n)
            self._node_ids[id(n)] = idx
            if isinstance(n, Hold):
                self._holds[(n.atom, n.negated, n.duration)] = idx
        return idx

    def _hold(self, atom: str, negated: bool, d: int) -> int:
        idx = self._holds.get((atom, negated, d))
        if idx is None:
            idx = self._node(Hold(d, atom, negated))
        return idx

    def _mk(self, key: tuple) -> int:
        tid = self._ids.get(key)
        if tid is None:
            tid = len(self._terms)
            self._terms.append(key)
            self._ids[key] = tid
        return tid

    def sat(self, node: int, i: int, j: int) -> int:
        return self._mk((_SAT, node, i, j))

    def conj(self, a: int, b: int) -> int:
        if a == FALSE or b == FALSE:
            return FALSE
        if a == TRUE:
            return b
        if b == TRUE or a == b:
            return a
        return self._mk((_AND, min(a, b), max(a, b)))

    def disj(self, a: int, b: int) -> int:
        if a == TRUE or b == TRUE:
            return TRUE
        if a == FALSE:
            return b
        if b == FALSE or a == b:
            return a
        return self._mk((_OR, min(a, b), max(a, b)))

    def neg(self, a: int) -> int:
        if a <= TRUE:
            return 1 - a
        key = self._terms[a]
        if key[0] == _NOT:
            return key[1]
        return self._mk((_NOT, a))

    def ite(self, c: int, t: int, e: int) -> int:
        if c == TRUE:
            return t
        if c == FALSE or t == e:
            return e
        return self._mk((_ITE, c, t, e))

    # -------------------------------------------------------- progression
    def initial(self, bound: int) -> int:
        """Residual for "the formula holds on ticks 0..bound"."""
        return self.sat(self.root, 0, bound)

    def letter(self, event: Optional[Iterable[str]]) -> Optional[FrozenSet[str]]:
        if event is None:
            return None
        return frozenset(self.props.intersection(event))

    def step(self, term: int, letter: Optional[FrozenSet[str]]) -> int:
        if term <= TRUE:
            return term
        key = (term, letter)
        out = self._memo.get(key)
        if out is None:
            out = self._step(term, letter)
            self._memo[key] = out
        return out

    def _step(self, term: int, letter) -> int:
        t = self._terms[term]
        kind = t[0]
        if kind == _SAT:
            _, node, i, j = t
            if i > 0:
                return self.sat(node, i - 1, j - 1)
            return self._unfold(node, j, letter)
        if kind == _AND:
            a = self.step(t[1], letter)
            return FALSE if a == FALSE else self.conj(a, self.step(t[2], letter))
        if kind == _OR:
            a = self.step(t[1], letter)
            return TRUE if a == TRUE else self.disj(a, self.step(t[2], letter))
        if kind == _NOT:
            return self.neg(self.step(t[1], letter))
        if kind == _ITE:
            c = self.step(t[1], letter)
            if c == TRUE:
                return self.step(t[2], letter)
            if c == FALSE:
                return self.step(t[3], letter)
            return self.ite(c, self.step(t[2], letter), self.step(t[3], letter))
        raise AssertionError(f"unknown term {t!r}")

    def _unfold(self, node: int, j: int, letter) -> int:
        n = self._nodes[node]
        if isinstance(n, Hold):
            if j < n.duration:
                return FALSE
            if n.atom == TRUE_PROP:
                ok = not n.negated
            else:
                ok = (letter is not None and n.atom in letter) != n.negated
            if not ok:
                return FALSE
            if n.duration == 0:
                return TRUE
            return self.sat(self._hold(n.atom, n.negated, n.duration - 1), 0, j - 1)
        if isinstance(n, And):
            a = self.step(self.sat(self._node(n.left), 0, j), letter)
            if a == FALSE:
                return FALSE
            return self.conj(a, self.step(self.sat(self._node(n.right), 0, j), letter))
        if isinstance(n, Not):
            return self.neg(self.step(self.sat(self._node(n.operand), 0, j), letter))
        if isinstance(n, Within):
            if j < n.hi:
                return FALSE
            body = self._node(n.body)
            acc = FALSE
            for k in range(n.lo, n.hi + 1):
                acc = self.disj(acc, self.step(self.sat(body, k, n.hi), letter))
                if acc == TRUE:
                    break
            return acc
        if isinstance(n, Concat):
            left, right = self._node(n.left), self._node(n.right)
            chain = FALSE
            for k in range(j - 1, -1, -1):
                chain = self.ite(self.sat(left, 0, k), self.sat(right, k + 1, j), chain)
            return self.step(chain, letter)
        raise TypeError(f"{type(n).__name__} must be rewritten before progression")

    def run(self, letters: Iterable, bound: Optional[int] = None) -> int:
        """Progress the root over a whole sequence of letters."""
        letters = list(letters)
        term = self.initial(len(letters) - 1 if bound is None else bound)
        for ev in letters:
            term = self.step(term, self.letter(ev))
        return term

    @property
    def size(self) -> int:
        return len(self._terms)
