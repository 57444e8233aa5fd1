"""Timed Kripke structures, timed traces, self-composition and grid worlds."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

Event = Optional[FrozenSet[str]]  # None is the silent event
SILENT_SYMBOL = "ε"
DEFAULT_STATE_CAP = 10 ** 7


class ModelError(ValueError):
    """Raised for malformed model or grid input."""


class UnknownState(ModelError):
    pass


class ZeroDuration(ModelError):
    pass


class EmptyInit(ModelError):
    pass


class NoInitial(ModelError):
    pass


class NoGoal(ModelError):
    pass


class ProductTooLarge(RuntimeError):
    pass


# ------------------------------------------------------------------ traces

def format_event(e: Event) -> str:
    if e is None:
        return SILENT_SYMBOL
    if len(e) == 1:
        return next(iter(e))
    return "{" + ",".join(sorted(e)) + "}"


@dataclass(frozen=True)
class TimedTrace:
    """Finite sequence of ``(timestamp, event)`` pairs."""

    events: Tuple[Tuple[int, Event], ...]

    def __post_init__(self):
        stamps = [tau for tau, _ in self.events]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError(f"timestamps must strictly increase: {stamps}")

    @classmethod
    def of(cls, pairs: Iterable[Tuple[int, Optional[Iterable[str]]]]) -> "TimedTrace":
        return cls(tuple((int(t), None if e is None else frozenset(e)) for t, e in pairs))

    @classmethod
    def unit(cls, events: Iterable[Optional[Iterable[str]]]) -> "TimedTrace":
        return cls.of(enumerate(events))

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, n):
        return self.events[n]

    @property
    def last_time(self) -> int:
        return self.events[-1][0] if self.events else -1

    def symbols(self) -> str:
        """Space separated event symbols, ``ε`` for silent ticks."""
        return " ".join(format_event(e) for _, e in self.events)

    def __str__(self) -> str:
        return "".join(
            f"({tau},{SILENT_SYMBOL if e is None else '{' + ','.join(sorted(e)) + '}'})"
            for tau, e in self.events
        )

    def to_json(self) -> list:
        return [[tau, None if e is None else sorted(e)] for tau, e in self.events]


def hold_fill(t: TimedTrace, bound: int) -> TimedTrace:
    """Tick-align a trace by repeating each event until the next timestamp."""
    out: List[Tuple[int, Event]] = []
    for n, (tau, e) in enumerate(t.events):
        nxt = t.events[n + 1][0] if n + 1 < len(t.events) else bound + 1
        for k in range(tau, min(nxt, bound + 1)):
            out.append((k, e))
    return TimedTrace(tuple(out))


# ------------------------------------------------------------------- model

@dataclass(frozen=True)
class TKS:
    states: Tuple[str, ...]
    init: Tuple[str, ...]
    trans: Tuple[Tuple[str, int, str], ...]
    props: Tuple[str, ...]
    label: Mapping[str, FrozenSet[str]]
    families: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    silent: FrozenSet[str] = frozenset()
    origin: Mapping[str, str] = field(default_factory=dict)
    components: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.states)
        for s in self.init:
            if s not in known:
                raise UnknownState(f"initial state {s!r} is not declared")
        for src, d, dst in self.trans:
            for s in (src, dst):
                if s not in known:
                    raise UnknownState(f"transition endpoint {s!r} is not declared")
            if d < 1:
                raise ZeroDuration(f"transition {src} -{d}-> {dst} must take at least one time unit")
        for s in self.label:
            if s not in known:
                raise UnknownState(f"label for undeclared state {s!r}")
        if not self.init:
            raise EmptyInit("model has no initial state")
        succ: Dict[str, List[Tuple[int, str]]] = {s: [] for s in self.states}
        for src, d, dst in self.trans:
            succ[src].append((d, dst))
        order = {s: n for n, s in enumerate(self.states)}
        for s in succ:
            succ[s].sort(key=lambda e: (order[e[1]], e[0]))
        object.__setattr__(self, "_succ", succ)
        obs = {}
        for s in self.states:
            if s in self.silent:
                obs[s] = None
                continue
            lab = set(self.label.get(s, ()))
            for fam, members in self.families.items():
                if lab.intersection(members):
                    lab.add(fam)
            obs[s] = frozenset(lab)
        object.__setattr__(self, "_obs", obs)

    def successors(self, s: str) -> List[Tuple[int, str]]:
        """Outgoing ``(duration, target)`` pairs in declaration order of targets."""
        return self._succ[s]

    def observation(self, s: str) -> Event:
        """Label of ``s`` closed under family names; ``None`` for silent states."""
        return self._obs[s]

    @property
    def unit_duration(self) -> bool:
        return all(d == 1 for _, d, _ in self.trans)

    @property
    def max_duration(self) -> int:
        return max((d for _, d, _ in self.trans), default=1)

    def stats(self) -> dict:
        return {
            "states": len(self.states),
            "initial": len(self.init),
            "transitions": len(self.trans),
            "propositions": len(self.props),
            "families": {k: list(v) for k, v in self.families.items()},
            "max_duration": self.max_duration,
        }


def make_tks(states, init, trans, label=None, families=None, props=None, **extra) -> TKS:
    """Build a TKS, adding unit self-loops to states without successors."""
    states = tuple(states)
    trans = list(trans)
    has_out = {src for src, _, _ in trans}
    trans.extend((s, 1, s) for s in states if s not in has_out)
    label = {s: frozenset(v) for s, v in (label or {}).items()}
    families = {k: tuple(v) for k, v in (families or {}).items()}
    if props is None:
        seen = []
        for s in states:
            for p in sorted(label.get(s, ())):
                if p not in seen:
                    seen.append(p)
        props = seen
    return TKS(states, tuple(init), tuple(trans), tuple(props), label, families, **extra)


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_model(text: str) -> TKS:
    states: List[str] = []
    init: List[str] = []
    trans: List[Tuple[str, int, str]] = []
    label: Dict[str, set] = {}
    families: Dict[str, Tuple[str, ...]] = {}
    props: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise ModelError(f"line {lineno}: expected 'keyword: ...'")
        key, rest = key.strip(), rest.strip()
        if key == "states":
            states.extend(rest.split())
        elif key == "init":
            init.extend(rest.split())
        elif key == "props":
            props.extend(rest.split())
        elif key in ("family", "label"):
            name, eq, members = rest.partition("=")
            if not eq:
                raise ModelError(f"line {lineno}: expected '{key}: NAME = ...'")
            name, members = name.strip(), members.split()
            if key == "family":
                families[name] = tuple(members)
            else:
                label.setdefault(name, set()).update(members)
        elif key == "trans":
            parts = rest.replace("->", " ").split()
            if len(parts) != 3 or not parts[1].startswith("-"):
                raise ModelError(f"line {lineno}: expected 'trans: SRC -D-> DST'")
            try:
                d = int(parts[1][1:])
            except ValueError:
                raise ModelError(f"line {lineno}: bad duration {parts[1]!r}") from None
            if d < 1:
                raise ZeroDuration(f"line {lineno}: transition duration must be at least 1")
            trans.append((parts[0], d, parts[2]))
        else:
            raise ModelError(f"line {lineno}: unknown keyword {key!r}")
    known = set(states)
    for s in list(init) + [x for t in trans for x in (t[0], t[2])] + list(label):
        if s not in known:
            raise UnknownState(f"state {s!r} is not declared")
    if not init:
        raise EmptyInit("model has no initial state")
    for s, labs in label.items():
        for p in sorted(labs):
            if p not in props:
                props.append(p)
    return make_tks(states, init, trans, label, families, props)


def format_model(m: TKS) -> str:
    lines = ["states: " + " ".join(m.states), "init: " + " ".join(m.init)]
    if m.props:
        lines.append("props: " + " ".join(m.props))
    for name, members in m.families.items():
        lines.append(f"family: {name} = " + " ".join(members))
    for s in m.states:
        if m.label.get(s):
            lines.append(f"label: {s} = " + " ".join(sorted(m.label[s])))
    for src, d, dst in m.trans:
        lines.append(f"trans: {src} -{d}-> {dst}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------- trace generation

def generate_traces(m: TKS, time_bound: int) -> Iterator[TimedTrace]:
    """Yield every maximal timed trace of ``m`` up to ``time_bound``.

    Runs start at each initial state at time 0.  A run stops when some
    outgoing transition would overshoot the bound; that truncated trace is
    yielded once.  Order is lexicographic in state order and duplicates
    (equal observation sequences) are suppressed.
    """
    seen = set()

    def walk(state: str, tau: int, events: List[Tuple[int, Event]]):
        stopped = False
        for d, nxt in m.successors(state):
            if tau + d > time_bound:
                if not stopped:
                    stopped = True
                    trace = TimedTrace(tuple(events))
                    if trace not in seen:
                        seen.add(trace)
                        yield trace
                continue
            events.append((tau + d, m.observation(nxt)))
            yield from walk(nxt, tau + d, events)
            events.pop()

    for s in m.init:
        yield from walk(s, 0, [(0, m.observation(s))])


def generate_runs(m: TKS, time_bound: int) -> Iterator[Tuple[Tuple[str, int], ...]]:
    """Like :func:`generate_traces` but yields ``(state, time)`` paths."""

    def walk(state, tau, path):
        stopped = False
        for d, nxt in m.successors(state):
            if tau + d > time_bound:
                if not stopped:
                    stopped = True
                    yield tuple(path)
                continue
            path.append((nxt, tau + d))
            yield from walk(nxt, tau + d, path)
            path.pop()

    for s in m.init:
        yield from walk(s, 0, [(s, 0)])


def run_to_trace(m: TKS, run: Sequence[Tuple[str, int]]) -> TimedTrace:
    return TimedTrace(tuple((tau, m.observation(s)) for s, tau in run))


# --------------------------------------------------- unrolling / products

def intermediate_name(src: str, dst: str, duration: int, k: int) -> str:
    return f"{src}>{dst}#{duration}.{k}"


def unit_unroll(m: TKS, silent: bool = False) -> TKS:
    """Split every duration-d edge into d unit edges.

    Fresh intermediate states carry the source label, or are silent when
    ``silent`` is set (the tick-padded view used by the asynchronous pipeline).
    """
    if m.unit_duration and not silent:
        return m
    states = list(m.states)
    trans = []
    label = dict(m.label)
    origin = dict(m.origin) if m.origin else {s: s for s in m.states}
    quiet = set(m.silent)
    for src, d, dst in m.trans:
        prev = src
        for k in range(1, d):
            mid = intermediate_name(src, dst, d, k)
            if mid not in label:
                states.append(mid)
                label[mid] = m.label.get(src, frozenset())
                origin[mid] = origin.get(src, src)
                if silent:
                    quiet.add(mid)
            trans.append((prev, 1, mid))
            prev = mid
        trans.append((prev, 1, dst))
    return TKS(tuple(states), m.init, tuple(trans), m.props, label, m.families,
               frozenset(quiet), origin)


def indexed(prop: str, copy: int) -> str:
    return f"{prop}^{copy}"


def check_product_size(m: TKS, n: int, state_cap: int = DEFAULT_STATE_CAP) -> None:
    if n < 1:
        raise ValueError("need at least one copy")
    if len(m.states) ** n > state_cap:
        raise ProductTooLarge(f"{len(m.states)}^{n} product states exceed cap {state_cap}")


def self_compose(m: TKS, n: int, state_cap: int = DEFAULT_STATE_CAP,
                 silent: bool = False, first_copy: int = 1) -> TKS:
    """n-fold synchronous product of the unit-unrolled model.

    Product states are ``|``-joined component ids; the component tuple of
    each product state is kept in ``components``.  Copy ``j`` contributes the
    propositions ``p^j`` for its observation (families included).
    """
    u = unit_unroll(m, silent=silent)
    check_product_size(u, n, state_cap)
    copies = range(first_copy, first_copy + n)
    states, label, comps = [], {}, {}
    for tup in itertools.product(u.states, repeat=n):
        sid = "|".join(tup)
        states.append(sid)
        comps[sid] = tup
        lab = set()
        for j, s in zip(copies, tup):
            obs = u.observation(s)
            if obs is not None:
                lab.update(indexed(p, j) for p in obs)
        label[sid] = frozenset(lab)
    init = ["|".join(t) for t in itertools.product(u.init, repeat=n)]
    trans = []
    for tup in itertools.product(u.states, repeat=n):
        sid = "|".join(tup)
        for nxt in itertools.product(*[[dst for _, dst in u.successors(s)] for s in tup]):
            trans.append((sid, 1, "|".join(nxt)))
    base = list(u.props) + [f for f in u.families if f not in u.props]
    props = [indexed(p, j) for j in copies for p in base]
    return TKS(tuple(states), tuple(init), tuple(trans), tuple(props), label, {},
               frozenset(), {}, comps)


# ------------------------------------------------------------------- grids

GRID_ROLES = {"I": "initial", "G": "goal", "R": "region", "X": "obstacle", ".": "free"}


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    cells: Mapping[Tuple[int, int], str]

    def role(self, r: int, c: int) -> str:
        return self.cells[(r, c)]

    def rows(self) -> List[str]:
        inv = {v: k for k, v in GRID_ROLES.items()}
        return ["".join(inv[self.cells[(r, c)]] for c in range(self.width)) for r in range(self.height)]


def parse_grid(text: str) -> GridSpec:
    lines = [l.strip() for l in text.splitlines() if _strip(l)]
    if not lines:
        raise ModelError("empty grid file")
    try:
        width, height = (int(x) for x in lines[0].split())
    except ValueError:
        raise ModelError("first grid line must be 'WIDTH HEIGHT'") from None
    rows = lines[1:]
    if len(rows) != height:
        raise ModelError(f"expected {height} grid rows, found {len(rows)}")
    cells = {}
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ModelError(f"grid row {r} has {len(row)} cells, expected {width}")
        for c, ch in enumerate(row):
            if ch not in GRID_ROLES:
                raise ModelError(f"unknown grid cell {ch!r} at row {r}, column {c}")
            cells[(r, c)] = GRID_ROLES[ch]
    return GridSpec(width, height, cells)


def cell_id(r: int, c: int) -> str:
    return f"c{r}_{c}"


def cell_of(state: str) -> Tuple[int, int]:
    r, c = state[1:].split("_")
    return int(r), int(c)


def grid_to_tks(g: GridSpec) -> TKS:
    roles = g.cells
    free = [(r, c) for r in range(g.height) for c in range(g.width) if roles[(r, c)] != "obstacle"]
    initial = [rc for rc in free if roles[rc] == "initial"]
    if not initial:
        raise NoInitial("grid has no initial cell")
    if not any(roles[rc] == "goal" for rc in free):
        raise NoGoal("grid has no goal cell")
    label, init_props = {}, []
    for n, rc in enumerate(initial, 1):
        label[cell_id(*rc)] = {f"s0_{n}"}
        init_props.append(f"s0_{n}")
    for rc in free:
        if roles[rc] == "goal":
            label[cell_id(*rc)] = {"g"}
        elif roles[rc] == "region":
            label[cell_id(*rc)] = {"r"}
    freeset = set(free)
    trans = []
    for r, c in free:
        src = cell_id(r, c)
        trans.append((src, 1, src))
        for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            nb = (r + dr, c + dc)
            if nb in freeset:
                trans.append((src, 1, cell_id(*nb)))
    props = init_props + ["g", "r"]
    return make_tks([cell_id(*rc) for rc in free], [cell_id(*rc) for rc in initial], trans,
                    label, {"s0": init_props}, props)
