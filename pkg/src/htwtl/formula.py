"""Formula ASTs, concrete syntax, pretty printer and structural measures.

Hyper formulas carry a trace prefix (``forall``/``exists``), an optional
trajectory prefix (``A``/``E``) and a body.  Plain TWTL formulas reuse the
same node classes, with atoms stored as bare proposition strings such as
``"A^1"``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Mapping, Optional, Sequence, Tuple, Union

TRUE_PROP = "true"


class FormulaError(ValueError):
    """Base class for formula construction and parsing errors."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, text: str, pos: int, expected: str = ""):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.pos, self.line, self.col, self.expected = pos, line, col, expected
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"line {line}, column {col}: {message}{detail}")


class UnboundVariable(FormulaError):
    pass


class DuplicateQuantifier(FormulaError):
    pass


class MalformedInterval(FormulaError):
    pass


class IllFormed(FormulaError):
    pass


@dataclass(frozen=True)
class Span:
    start: int
    end: int


@dataclass(frozen=True)
class AtomRef:
    prop: str
    trace_var: str
    traj_var: Optional[str] = None


Atom = Union[AtomRef, str]


@dataclass(frozen=True)
class Hold:
    duration: int
    atom: Atom
    negated: bool = False
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And:
    left: "Body"
    right: "Body"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    operand: "Body"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Concat:
    left: "Body"
    right: "Body"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Within:
    body: "Body"
    lo: int
    hi: int
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class WithinAsync:
    body: "Body"
    lo: int
    hi: int
    lag_lo: int
    lag_hi: int
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class EqAtom:
    """``H^d F@p == H^d F@q`` (or ``!=`` when ``equal`` is false) over family F."""

    lhs: Hold
    rhs: Hold
    family: str
    equal: bool = True
    span: Optional[Span] = field(default=None, compare=False, repr=False)


Body = Union[Hold, And, Not, Concat, Within, WithinAsync, EqAtom]
TwtlFormula = Body


class Quantifier(enum.Enum):
    EXISTS = "exists"
    FORALL = "forall"
    TRAJ_EXISTS = "E"
    TRAJ_FORALL = "A"


@dataclass(frozen=True)
class HyperFormula:
    trace_prefix: Tuple[Tuple[Quantifier, str], ...]
    traj_prefix: Tuple[Tuple[Quantifier, str], ...]
    body: Body

    @property
    def trace_vars(self) -> Tuple[str, ...]:
        return tuple(v for _, v in self.trace_prefix)

    @property
    def traj_vars(self) -> Tuple[str, ...]:
        return tuple(v for _, v in self.traj_prefix)


TOP = Hold(0, TRUE_PROP)
BOTTOM = Not(TOP)


def is_top(node: Body) -> bool:
    return isinstance(node, Hold) and node.atom == TRUE_PROP


def make_or(a: Body, b: Body) -> Body:
    return Not(And(Not(a), Not(b)))


def make_implies(a: Body, b: Body) -> Body:
    return Not(And(a, Not(b)))


def disjunction(items: Sequence[Body]) -> Body:
    if not items:
        return BOTTOM
    acc = items[0]
    for item in items[1:]:
        acc = make_or(acc, item)
    return acc


def conjunction(items: Sequence[Body]) -> Body:
    if not items:
        return TOP
    acc = items[0]
    for item in items[1:]:
        acc = And(acc, item)
    return acc


# ---------------------------------------------------------------- traversal

def children(node: Body) -> Tuple[Body, ...]:
    if isinstance(node, (And, Concat)):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.operand,)
    if isinstance(node, (Within, WithinAsync)):
        return (node.body,)
    if isinstance(node, EqAtom):
        return (node.lhs, node.rhs)
    return ()


def with_children(node: Body, kids: Sequence[Body]) -> Body:
    if isinstance(node, And):
        return And(kids[0], kids[1], span=node.span)
    if isinstance(node, Concat):
        return Concat(kids[0], kids[1], span=node.span)
    if isinstance(node, Not):
        return Not(kids[0], span=node.span)
    if isinstance(node, Within):
        return Within(kids[0], node.lo, node.hi, span=node.span)
    if isinstance(node, WithinAsync):
        return WithinAsync(kids[0], node.lo, node.hi, node.lag_lo, node.lag_hi, span=node.span)
    if isinstance(node, EqAtom):
        return EqAtom(kids[0], kids[1], node.family, node.equal, span=node.span)
    return node


def preorder(node: Body) -> Iterator[Body]:
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(children(cur)))


def transform(node: Body, fn: Callable[[Body], Body]) -> Body:
    """Bottom-up rebuild: children first, then ``fn`` on the rebuilt node."""
    kids = children(node)
    if kids:
        node = with_children(node, [transform(k, fn) for k in kids])
    return fn(node)


def map_atoms(node: Body, fn: Callable[[Atom], Atom]) -> Body:
    def visit(n: Body) -> Body:
        if isinstance(n, Hold) and n.atom != TRUE_PROP:
            return replace(n, atom=fn(n.atom))
        return n

    return transform(node, visit)


def atoms(node: Body) -> Iterator[Atom]:
    for n in preorder(node):
        if isinstance(n, Hold) and n.atom != TRUE_PROP:
            yield n.atom


def size(node: Body) -> int:
    return sum(1 for _ in preorder(node))


def strip_spans(node: Body) -> Body:
    def visit(n: Body) -> Body:
        return replace(n, span=None)

    return transform(node, visit)


def expand_equalities(node: Body, families: Optional[Mapping[str, Sequence[str]]] = None) -> Body:
    """Replace every EqAtom by its disjunction over the family members.

    ``==`` pairs matching members, ``!=`` pairs distinct members.  A name with
    no declared family is treated as a one-member family.
    """
    families = families or {}

    def visit(n: Body) -> Body:
        if not isinstance(n, EqAtom):
            return n
        members = list(families.get(n.family, [n.family]))
        lhs, rhs = n.lhs, n.rhs

        def side(h: Hold, member: str) -> Hold:
            a = h.atom
            atom = replace(a, prop=member) if isinstance(a, AtomRef) else member
            return Hold(h.duration, atom, h.negated)

        if n.equal:
            pairs = [(m, m) for m in members]
        else:
            pairs = [(a, b) for a in members for b in members if a != b]
        return disjunction([And(side(lhs, a), side(rhs, b)) for a, b in pairs])

    return transform(node, visit)


# ------------------------------------------------------------------ parsing

_IDENT_START = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_"
_IDENT_CHARS = _IDENT_START + "0123456789"


class _Parser:
    def __init__(self, text: str, twtl: bool):
        self.text = text
        self.pos = 0
        self.twtl = twtl

    # low level
    def error(self, message: str, expected: str = "", pos: Optional[int] = None):
        raise FormulaSyntaxError(message, self.text, self.pos if pos is None else pos, expected)

    def skip(self) -> None:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self.pos += 1
            elif ch == "#":
                nl = text.find("\n", self.pos)
                self.pos = len(text) if nl < 0 else nl + 1
            else:
                break

    def at(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def eat(self, s: str) -> bool:
        if self.at(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str) -> None:
        if not self.eat(s):
            found = self.text[self.pos:self.pos + 8] or "end of input"
            self.error(f"unexpected {found!r}", repr(s))

    def peek_ident(self) -> Optional[str]:
        self.skip()
        p = self.pos
        if p < len(self.text) and self.text[p] in _IDENT_START:
            q = p + 1
            while q < len(self.text) and self.text[q] in _IDENT_CHARS:
                q += 1
            return self.text[p:q]
        return None

    def ident(self, what: str = "identifier") -> str:
        name = self.peek_ident()
        if name is None:
            self.error("unexpected " + (repr(self.text[self.pos]) if self.pos < len(self.text) else "end of input"), what)
        self.pos += len(name)
        return name

    def nat(self) -> int:
        self.skip()
        p = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if p == self.pos:
            self.error("missing number", "natural number")
        return int(self.text[p:self.pos])

    # grammar
    def prefix(self):
        trace, traj, seen = [], [], set()
        while True:
            start = self.pos
            word = self.peek_ident()
            if word in ("forall", "exists"):
                if traj:
                    self.error("trace quantifier after trajectory quantifier", "formula body")
                self.pos += len(word)
                self.skip()
                var_pos = self.pos
                var = self.ident("trace variable")
                self.expect(".")
                if var in seen:
                    raise DuplicateQuantifier(f"variable {var!r} quantified twice (column {var_pos + 1})")
                seen.add(var)
                trace.append((Quantifier.FORALL if word == "forall" else Quantifier.EXISTS, var))
                continue
            if word in ("A", "E"):
                self.pos += 1
                var = self.peek_ident()
                if var is not None:
                    self.pos += len(var)
                    if self.eat("."):
                        if var in seen:
                            raise DuplicateQuantifier(f"variable {var!r} quantified twice")
                        seen.add(var)
                        traj.append((Quantifier.TRAJ_FORALL if word == "A" else Quantifier.TRAJ_EXISTS, var))
                        continue
                self.pos = start
            break
        return tuple(trace), tuple(traj)

    def body(self) -> Body:
        start = self.pos
        left = self.disj()
        if self.eat("->"):
            right = self.body()
            return Not(And(left, Not(right)), span=Span(start, self.pos))
        return left

    def disj(self) -> Body:
        start = self.pos
        left = self.conj()
        while True:
            if self.at("||"):
                self.error("unexpected '||'", "'|'")
            if not self.eat("|"):
                return left
            right = self.conj()
            left = Not(And(Not(left), Not(right)), span=Span(start, self.pos))

    def conj(self) -> Body:
        start = self.pos
        left = self.seq()
        while self.eat("&"):
            right = self.seq()
            left = And(left, right, span=Span(start, self.pos))
        return left

    def seq(self) -> Body:
        start = self.pos
        left = self.prim()
        while self.eat(";"):
            right = self.prim()
            left = Concat(left, right, span=Span(start, self.pos))
        return left

    def interval(self):
        self.expect("[")
        at = self.pos
        lo = self.nat()
        self.expect(",")
        hi = self.nat()
        self.expect("]")
        if hi < lo:
            raise MalformedInterval(f"interval [{lo},{hi}] has upper bound below lower bound (column {at + 1})")
        return lo, hi

    def prim(self) -> Body:
        self.skip()
        start = self.pos
        if self.at("!") and not self.at("!="):
            self.pos += 1
            return Not(self.prim(), span=Span(start, self.pos))
        if self.eat("("):
            inner = self.body()
            self.expect(")")
            return inner
        if self.eat("["):
            inner = self.body()
            self.expect("]")
            lo, hi = self.interval()
            if self.at("["):
                lag_lo, lag_hi = self.interval()
                return WithinAsync(inner, lo, hi, lag_lo, lag_hi, span=Span(start, self.pos))
            return Within(inner, lo, hi, span=Span(start, self.pos))
        if self.at("H^"):
            return self.holdform()
        word = self.peek_ident()
        if word == TRUE_PROP:
            self.pos += len(word)
            return Hold(0, TRUE_PROP, span=Span(start, self.pos))
        self.error("unexpected " + (repr(self.text[self.pos]) if self.pos < len(self.text) else "end of input"),
                   "'H^', '!', '(', '[' or 'true'")

    def hold(self, allow_neg: bool) -> Hold:
        self.skip()
        start = self.pos
        self.expect("H^")
        d = self.nat()
        self.skip()
        neg = False
        if allow_neg and self.at("!") and not self.at("!="):
            self.pos += 1
            neg = True
        atom = self.atom()
        return Hold(d, atom, neg, span=Span(start, self.pos))

    def atom(self) -> Atom:
        prop = self.ident("proposition")
        if prop == TRUE_PROP:
            self.error("'true' is reserved", "proposition", pos=self.pos - len(prop))
        if self.twtl:
            if self.text.startswith("^", self.pos):
                self.pos += 1
                q = self.pos
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self.pos += 1
                if q == self.pos:
                    self.error("missing copy index", "natural number")
                prop = prop + "^" + self.text[q:self.pos]
            return prop
        self.expect("@")
        trace = self.ident("trace variable")
        traj = None
        if self.eat(":"):
            traj = self.ident("trajectory variable")
        return AtomRef(prop, trace, traj)

    def holdform(self) -> Body:
        start = self.pos
        lhs = self.hold(allow_neg=True)
        for op, equal in (("==", True), ("!=", False)):
            if self.at(op):
                if lhs.negated:
                    self.error("negated hold cannot be compared", "proposition")
                self.pos += 2
                rhs = self.hold(allow_neg=False)
                lp = lhs.atom.prop if isinstance(lhs.atom, AtomRef) else lhs.atom
                rp = rhs.atom.prop if isinstance(rhs.atom, AtomRef) else rhs.atom
                if lp != rp:
                    self.error(f"comparison mixes {lp!r} and {rp!r}", f"H^d {lp}", pos=rhs.span.start)
                return EqAtom(lhs, rhs, lp, equal, span=Span(start, self.pos))
        return lhs

    def finish(self) -> None:
        self.skip()
        if self.pos != len(self.text):
            self.error(f"unexpected {self.text[self.pos]!r}", "end of input")


def _validate(f: HyperFormula) -> None:
    if not f.trace_prefix:
        raise IllFormed("formula has no trace quantifier")
    trace_vars, traj_vars = set(f.trace_vars), set(f.traj_vars)
    for node in preorder(f.body):
        if isinstance(node, WithinAsync) and not traj_vars:
            raise IllFormed("asynchronous within needs a trajectory quantifier")
        if isinstance(node, Hold) and isinstance(node.atom, AtomRef):
            a = node.atom
            if a.trace_var not in trace_vars:
                raise UnboundVariable(f"trace variable {a.trace_var!r} is not quantified")
            if a.traj_var is not None and a.traj_var not in traj_vars:
                raise UnboundVariable(f"trajectory variable {a.traj_var!r} is not quantified")
            if traj_vars and a.traj_var is None:
                raise IllFormed(f"atom {a.prop}@{a.trace_var} lacks a trajectory in an asynchronous formula")


def parse_hyper(text: str) -> HyperFormula:
    p = _Parser(text, twtl=False)
    trace, traj = p.prefix()
    if not trace:
        p.error("formula must start with a trace quantifier", "'forall' or 'exists'")
    body = p.body()
    p.finish()
    f = HyperFormula(trace, traj, body)
    _validate(f)
    return f


def parse_twtl(text: str) -> TwtlFormula:
    p = _Parser(text, twtl=True)
    body = p.body()
    p.finish()
    return body


# ----------------------------------------------------------------- printing

def _atom_text(atom: Atom) -> str:
    if isinstance(atom, AtomRef):
        s = f"{atom.prop}@{atom.trace_var}"
        return s + (f":{atom.traj_var}" if atom.traj_var else "")
    return atom


def _pretty_body(n: Body) -> str:
    if isinstance(n, Hold):
        if n.atom == TRUE_PROP:
            return TRUE_PROP
        return f"H^{n.duration} {'!' if n.negated else ''}{_atom_text(n.atom)}"
    if isinstance(n, And):
        return f"({_pretty_body(n.left)} & {_pretty_body(n.right)})"
    if isinstance(n, Concat):
        return f"({_pretty_body(n.left)} ; {_pretty_body(n.right)})"
    if isinstance(n, Not):
        return "!" + _pretty_body(n.operand)
    if isinstance(n, Within):
        return f"[{_pretty_body(n.body)}][{n.lo},{n.hi}]"
    if isinstance(n, WithinAsync):
        return f"[{_pretty_body(n.body)}][{n.lo},{n.hi}][{n.lag_lo},{n.lag_hi}]"
    if isinstance(n, EqAtom):
        op = "==" if n.equal else "!="
        return f"{_pretty_body(n.lhs)} {op} {_pretty_body(n.rhs)}"
    raise TypeError(f"not a formula node: {n!r}")


def pretty(f: Union[HyperFormula, Body]) -> str:
    if isinstance(f, HyperFormula):
        parts = [f"{q.value} {v}." for q, v in f.trace_prefix + f.traj_prefix]
        return " ".join(parts + [_pretty_body(f.body)])
    return _pretty_body(f)


# ------------------------------------------------------------------ metrics

def _body_of(f):
    return f.body if isinstance(f, HyperFormula) else f


def beta(f: Union[HyperFormula, Body]) -> int:
    """Projected time needed to satisfy a bounded formula."""
    n = _body_of(f)
    if isinstance(n, Hold):
        return n.duration
    if isinstance(n, EqAtom):
        return max(n.lhs.duration, n.rhs.duration)
    if isinstance(n, And):
        return max(beta(n.left), beta(n.right))
    if isinstance(n, Not):
        return beta(n.operand)
    if isinstance(n, Concat):
        return beta(n.left) + beta(n.right) + 1
    if isinstance(n, Within):
        return n.hi
    if isinstance(n, WithinAsync):
        return n.hi + n.lag_hi
    raise TypeError(f"not a formula node: {n!r}")


def horizon(f: Union[HyperFormula, Body]) -> int:
    """Last time point needed to decide satisfaction from position 0."""
    n = _body_of(f)
    if isinstance(n, Hold):
        return n.duration
    if isinstance(n, EqAtom):
        return max(n.lhs.duration, n.rhs.duration)
    if isinstance(n, And):
        return max(horizon(n.left), horizon(n.right))
    if isinstance(n, Not):
        return horizon(n.operand)
    if isinstance(n, Concat):
        return horizon(n.left) + horizon(n.right) + 1
    if isinstance(n, Within):
        return n.hi
    if isinstance(n, WithinAsync):
        # evaluated after the async rewrite, which widens the window by the lag bound
        return n.hi + n.lag_hi
    raise TypeError(f"not a formula node: {n!r}")


class FragmentKind(enum.Enum):
    ALTERNATION_FREE_EXISTS = "alternation-free-exists"
    ALTERNATION_FREE_FORALL = "alternation-free-forall"
    EXISTS_FORALL = "exists-forall"
    OTHER = "other"


@dataclass(frozen=True)
class Fragment:
    kind: FragmentKind
    alternations: int = 0

    def __str__(self) -> str:
        if self.kind is FragmentKind.OTHER:
            return f"other({self.alternations})"
        return self.kind.value


AlternationFreeExists = Fragment(FragmentKind.ALTERNATION_FREE_EXISTS)
AlternationFreeForall = Fragment(FragmentKind.ALTERNATION_FREE_FORALL)
ExistsForall = Fragment(FragmentKind.EXISTS_FORALL, 1)


def classify(f: HyperFormula) -> Fragment:
    quants = [q for q, _ in f.trace_prefix]
    switches = sum(1 for a, b in zip(quants, quants[1:]) if a != b)
    if switches == 0:
        return AlternationFreeExists if quants[0] is Quantifier.EXISTS else AlternationFreeForall
    if switches == 1 and quants[0] is Quantifier.EXISTS:
        return ExistsForall
    return Fragment(FragmentKind.OTHER, switches)


def is_synchronous(f: HyperFormula) -> bool:
    if f.traj_prefix:
        return False
    for n in preorder(f.body):
        if isinstance(n, WithinAsync):
            return False
        if isinstance(n, Hold) and isinstance(n.atom, AtomRef) and n.atom.traj_var is not None:
            return False
    return True
